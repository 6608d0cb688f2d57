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

#include "vitslim/param_set.hpp"

#include <algorithm>
#include <set>

#include "vitslim/error.hpp"

namespace vitslim {

std::string_view mlp_part_name(MlpPart part) {
  switch (part) {
    case MlpPart::kFc1Weight: return "fc1.weight";
    case MlpPart::kFc1Bias: return "fc1.bias";
    case MlpPart::kFc2Weight: return "fc2.weight";
    case MlpPart::kFc2Bias: return "fc2.bias";
  }
  return "";
}

std::string mlp_storage_path(std::size_t storage, MlpPart part) {
  return "mlps." + std::to_string(storage) + "." + std::string(mlp_part_name(part));
}

std::string block_path(std::size_t block, std::string_view leaf) {
  return "blocks." + std::to_string(block) + "." + std::string(leaf);
}

template <Scalar T>
void ParamSet<T>::insert(std::string path, Tensor<T> tensor) {
  if (index_.contains(path)) throw ContractError("duplicate parameter path '" + path + "'");
  index_.emplace(path, entries_.size());
  entries_.push_back(Entry{std::move(path), std::move(tensor)});
}

template <Scalar T>
void ParamSet<T>::erase(std::string_view path) {
  const std::size_t i = index_of(path);
  entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(i));
  index_.clear();
  for (std::size_t j = 0; j < entries_.size(); ++j) index_.emplace(entries_[j].path, j);
}

template <Scalar T>
void ParamSet<T>::replace(std::string_view path, Tensor<T> tensor) {
  entries_[index_of(path)].tensor = std::move(tensor);
}

template <Scalar T>
bool ParamSet<T>::contains(std::string_view path) const {
  return index_.contains(std::string(path));
}

template <Scalar T>
std::size_t ParamSet<T>::index_of(std::string_view path) const {
  auto it = index_.find(std::string(path));
  if (it == index_.end()) throw ContractError("unknown parameter '" + std::string(path) + "'");
  return it->second;
}

template <Scalar T>
std::string ParamSet<T>::resolve(std::string_view path) const {
  constexpr std::string_view kBlocks = "blocks.";
  constexpr std::string_view kMlp = ".mlp.";
  if (path.starts_with(kBlocks)) {
    const auto mlp_pos = path.find(kMlp);
    if (mlp_pos != std::string_view::npos) {
      const std::size_t block = std::stoul(std::string(path.substr(kBlocks.size(), mlp_pos - kBlocks.size())));
      if (block >= sharing_.size()) throw ContractError("block index out of range in '" + std::string(path) + "'");
      return "mlps." + std::to_string(sharing_[block]) + "." +
             std::string(path.substr(mlp_pos + kMlp.size()));
    }
  }
  return std::string(path);
}

template <Scalar T>
Tensor<T> ParamSet<T>::at(std::string_view path) const {
  return entries_[index_of(resolve(path))].tensor;
}

template <Scalar T>
Tensor<T> ParamSet<T>::mlp(std::size_t block, MlpPart part) const {
  if (block >= sharing_.size()) throw ContractError("block " + std::to_string(block) + " out of range");
  return entries_[index_of(mlp_storage_path(sharing_[block], part))].tensor;
}

template <Scalar T>
std::size_t ParamSet<T>::unique_mlp_count() const {
  return std::set<std::size_t>(sharing_.begin(), sharing_.end()).size();
}

template <Scalar T>
std::size_t ParamSet<T>::unique_param_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.numel();
  return n;
}

template <Scalar T>
std::size_t ParamSet<T>::referenced_param_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) {
    if (!e.path.starts_with("mlps.")) n += e.tensor.numel();
  }
  for (std::size_t b = 0; b < sharing_.size(); ++b) {
    for (MlpPart part : kMlpParts) n += mlp(b, part).numel();
  }
  return n;
}

template <Scalar T>
ParamSet<T> ParamSet<T>::clone() const {
  ParamSet out;
  for (const auto& e : entries_) out.insert(e.path, e.tensor.clone());
  out.sharing_ = sharing_;
  out.layout_ = layout_;
  return out;
}

template <Scalar T>
void ParamSet<T>::untie(std::size_t block) {
  if (block >= sharing_.size()) throw ContractError("untie: block out of range");
  std::size_t fresh = 0;
  for (std::size_t s : sharing_) fresh = std::max(fresh, s + 1);
  while (contains(mlp_storage_path(fresh, MlpPart::kFc1Weight))) ++fresh;
  for (MlpPart part : kMlpParts) {
    Tensor<T> copy = mlp(block, part).clone();
    insert(mlp_storage_path(fresh, part), std::move(copy));
  }
  sharing_[block] = fresh;
}

template <Scalar T>
void ParamSet<T>::set_requires_grad(bool on) {
  for (auto& e : entries_) e.tensor.set_requires_grad(on);
}

template <Scalar T>
void ParamSet<T>::zero_grad() {
  for (auto& e : entries_) e.tensor.zero_grad();
}

template <Scalar T>
void ParamSet<T>::clear_grad() {
  for (auto& e : entries_) e.tensor.clear_grad();
}

template class ParamSet<float>;
template class ParamSet<double>;

template <Scalar T>
ParamSet<T> convert_params(const ParamSet<double>& params) {
  ParamSet<T> out;
  for (const auto& e : params.entries()) out.insert(e.path, from_double<T>(e.tensor));
  out.set_sharing_map(params.sharing_map());
  out.set_layout(params.layout());
  return out;
}

template ParamSet<float> convert_params(const ParamSet<double>&);
template ParamSet<double> convert_params(const ParamSet<double>&);

}  // namespace vitslim
