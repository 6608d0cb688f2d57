/* Copyright 2026 The vitslim Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "vitslim/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "vitslim/error.hpp"

namespace vitslim {
namespace {

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  template <typename U>
  void le(U v) {
    unsigned char buf[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    bytes(buf, sizeof(U));
  }
  void u8(std::uint8_t v) { le(v); }
  void u32(std::uint64_t v) { le(static_cast<std::uint32_t>(v)); }
  void u64(std::uint64_t v) { le(v); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void bytes(void* p, std::size_t n, const char* what) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw FormatError(std::string("truncated checkpoint while reading ") + what, offset_);
    offset_ += n;
  }
  template <typename U>
  U le(const char* what) {
    unsigned char buf[sizeof(U)];
    bytes(buf, sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(buf[i]) << (8 * i));
    return v;
  }
  std::uint8_t u8(const char* what) { return le<std::uint8_t>(what); }
  std::uint32_t u32(const char* what) { return le<std::uint32_t>(what); }
  std::uint64_t u64(const char* what) { return le<std::uint64_t>(what); }
  double f64(const char* what) { return std::bit_cast<double>(le<std::uint64_t>(what)); }
  float f32(const char* what) { return std::bit_cast<float>(le<std::uint32_t>(what)); }
  std::uint64_t offset() const { return offset_; }

 private:
  std::istream& in_;
  std::uint64_t offset_ = 0;
};

}  // namespace

template <Scalar T>
void write_checkpoint(std::ostream& out, const ModelConfig& config, const ParamSet<T>& params) {
  Writer w(out);
  w.bytes(kCheckpointMagic, 4);
  w.u32(kCheckpointVersion);
  for (std::size_t v : {config.image_size, config.patch_size, config.in_channels, config.embed_dim,
                        config.depth, config.num_heads, config.mlp_hidden, config.num_classes}) {
    w.u32(v);
  }
  w.f64(config.drop_path_rate);
  w.u8(static_cast<std::uint8_t>(config.variant.index()));
  const auto* grouped = std::get_if<Grouped>(&config.variant);
  const auto* shallow = std::get_if<Shallow>(&config.variant);
  w.u32(grouped ? grouped->group_size : 0);
  w.u32(shallow ? shallow->width_ratio.num : 1);
  w.u32(shallow ? shallow->width_ratio.den : 1);
  w.u8(static_cast<std::uint8_t>(params.layout()));
  w.u32(params.depth());
  for (std::size_t s : params.sharing_map()) w.u32(s);
  w.u32(params.entries().size());
  for (const auto& e : params.entries()) {
    w.u32(e.path.size());
    w.bytes(e.path.data(), e.path.size());
    w.u8(static_cast<std::uint8_t>(dtype_of<T>()));
    w.u32(e.tensor.rank());
    for (std::size_t ext : e.tensor.shape()) w.u64(ext);
    for (T v : e.tensor.data()) {
      if constexpr (std::same_as<T, float>) {
        w.f32(v);
      } else {
        w.f64(v);
      }
    }
  }
  if (!out) throw Error("failed writing checkpoint");
}

template <Scalar T>
void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config,
                     const ParamSet<T>& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open checkpoint for writing: " + path.string());
  write_checkpoint(out, config, params);
}

template <Scalar T>
Checkpoint<T> read_checkpoint(std::istream& in) {
  Reader r(in);
  char magic[4];
  r.bytes(magic, 4, "magic");
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0) throw FormatError("not a checkpoint (bad magic)", 0);
  const std::uint64_t version_at = r.offset();
  if (const std::uint32_t version = r.u32("version"); version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version), version_at);
  }
  Checkpoint<T> ck;
  ModelConfig& c = ck.config;
  c.image_size = r.u32("config");
  c.patch_size = r.u32("config");
  c.in_channels = r.u32("config");
  c.embed_dim = r.u32("config");
  c.depth = r.u32("config");
  c.num_heads = r.u32("config");
  c.mlp_hidden = r.u32("config");
  c.num_classes = r.u32("config");
  c.drop_path_rate = r.f64("config");
  const std::uint64_t tag_at = r.offset();
  const std::uint8_t tag = r.u8("variant");
  const std::uint32_t group = r.u32("variant");
  const std::uint32_t num = r.u32("variant");
  const std::uint32_t den = r.u32("variant");
  switch (tag) {
    case 0: c.variant = Baseline{}; break;
    case 1: c.variant = Grouped{group}; break;
    case 2: c.variant = Shallow{Ratio{num, den}}; break;
    default: throw FormatError("unknown variant tag " + std::to_string(tag), tag_at);
  }
  try {
    validate(c);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint holds an invalid config: ") + e.what(), tag_at);
  }
  const std::uint64_t layout_at = r.offset();
  const std::uint8_t layout = r.u8("layout");
  if (layout > 2) throw FormatError("unknown parameter layout", layout_at);
  const std::uint32_t depth = r.u32("sharing map");
  std::vector<std::size_t> map(depth);
  for (auto& s : map) s = r.u32("sharing map");

  const std::uint32_t count = r.u32("record count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint64_t record_at = r.offset();
    const std::uint32_t len = r.u32("path length");
    if (len > 4096) throw FormatError("implausible path length", record_at);
    std::string path(len, '\0');
    r.bytes(path.data(), len, "path");
    const std::uint8_t dtype = r.u8("dtype");
    if (dtype > 1) throw FormatError("unknown dtype tag in '" + path + "'", record_at);
    const std::uint32_t rank = r.u32("rank");
    if (rank == 0 || rank > 8) throw FormatError("bad rank in '" + path + "'", record_at);
    Shape shape(rank);
    for (auto& e : shape) {
      e = r.u64("extent");
      if (e == 0 || e > (1ULL << 32)) throw FormatError("bad extent in '" + path + "'", record_at);
    }
    std::vector<T> values(numel(shape));
    for (T& v : values) {
      v = dtype == 0 ? static_cast<T>(r.f32("payload")) : static_cast<T>(r.f64("payload"));
    }
    ck.params.insert(std::move(path), Tensor<T>(std::move(shape), std::move(values)));
  }
  ck.params.set_sharing_map(std::move(map));
  ck.params.set_layout(static_cast<ParamLayout>(layout));
  return ck;
}

template <Scalar T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path.string());
  return read_checkpoint<T>(in);
}

#define VITSLIM_INSTANTIATE_CKPT(T)                                                            \
  template void write_checkpoint(std::ostream&, const ModelConfig&, const ParamSet<T>&);        \
  template void save_checkpoint(const std::filesystem::path&, const ModelConfig&,               \
                                const ParamSet<T>&);                                            \
  template Checkpoint<T> read_checkpoint<T>(std::istream&);                                     \
  template Checkpoint<T> load_checkpoint<T>(const std::filesystem::path&);

VITSLIM_INSTANTIATE_CKPT(float)
VITSLIM_INSTANTIATE_CKPT(double)

}  // namespace vitslim
