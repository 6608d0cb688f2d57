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

#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vitslim/tensor.hpp"

namespace vitslim {

enum class MlpPart : std::uint8_t { kFc1Weight, kFc1Bias, kFc2Weight, kFc2Bias };
inline constexpr std::array<MlpPart, 4> kMlpParts = {MlpPart::kFc1Weight, MlpPart::kFc1Bias,
                                                     MlpPart::kFc2Weight, MlpPart::kFc2Bias};
std::string_view mlp_part_name(MlpPart part);  // "fc1.weight", ...

// Which variant transform, if any, has been applied.
enum class ParamLayout : std::uint8_t { kFull = 0, kGrouped = 1, kShallow = 2 };

// "mlps.<storage>.<part>"
std::string mlp_storage_path(std::size_t storage, MlpPart part);
// "blocks.<block>.<leaf>"
std::string block_path(std::size_t block, std::string_view leaf);

// Named parameter store. Each entry is one storage; MLP storages are
// addressed from blocks through the sharing map, so two blocks mapped to the
// same storage read and write the very same Tensor.
template <Scalar T>
class ParamSet {
 public:
  struct Entry {
    std::string path;
    Tensor<T> tensor;
  };

  void insert(std::string path, Tensor<T> tensor);
  void erase(std::string_view path);
  void replace(std::string_view path, Tensor<T> tensor);
  bool contains(std::string_view path) const;

  // Accepts canonical storage paths and block-relative MLP paths such as
  // "blocks.3.mlp.fc1.weight", which resolve through the sharing map.
  Tensor<T> at(std::string_view path) const;
  std::string resolve(std::string_view path) const;

  Tensor<T> mlp(std::size_t block, MlpPart part) const;

  const std::vector<Entry>& entries() const noexcept { return entries_; }

  const std::vector<std::size_t>& sharing_map() const noexcept { return sharing_; }
  void set_sharing_map(std::vector<std::size_t> map) { sharing_ = std::move(map); }
  std::size_t depth() const noexcept { return sharing_.size(); }
  std::size_t unique_mlp_count() const;

  ParamLayout layout() const noexcept { return layout_; }
  void set_layout(ParamLayout layout) noexcept { layout_ = layout; }

  // Number of scalars across unique storages.
  std::size_t unique_param_count() const;
  // Number of scalars counted once per block reference (shared MLPs counted
  // once for every block that reads them).
  std::size_t referenced_param_count() const;

  // Deep copy that preserves the aliasing structure.
  ParamSet clone() const;
  // Gives `block` a private copy of its MLP storage. Used to split a shared
  // MLP's gradient into per-block contributions.
  void untie(std::size_t block);

  void set_requires_grad(bool on);
  void zero_grad();
  void clear_grad();

 private:
  std::size_t index_of(std::string_view path) const;

  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::size_t> sharing_;
  ParamLayout layout_ = ParamLayout::kFull;
};

extern template class ParamSet<float>;
extern template class ParamSet<double>;

template <Scalar T>
ParamSet<T> convert_params(const ParamSet<double>& params);

}  // namespace vitslim
