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

#include "vitslim/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace vitslim {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

namespace {

void check_extents(const Shape& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must have rank >= 1");
  for (std::size_t e : shape) {
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_string(shape));
  }
}

}  // namespace

template <Scalar T>
Tensor<T>::Tensor(Shape shape, bool requires_grad)
    : storage_(std::make_shared<Storage>()) {
  check_extents(shape);
  storage_->data.assign(vitslim::numel(shape), T{0});
  shape_ = std::move(shape);
  storage_->requires_grad = requires_grad;
}

template <Scalar T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values, bool requires_grad)
    : storage_(std::make_shared<Storage>()) {
  check_extents(shape);
  if (vitslim::numel(shape) != values.size()) {
    throw DimensionError("buffer of " + std::to_string(values.size()) +
                         " values does not match shape " + shape_string(shape));
  }
  shape_ = std::move(shape);
  storage_->data.assign(values.begin(), values.end());
  storage_->requires_grad = requires_grad;
}

template <Scalar T>
Tensor<T> Tensor<T>::uninitialized(Shape shape) {
  check_extents(shape);
  Tensor t;
  t.storage_ = std::make_shared<Storage>();
  t.storage_->data.resize(vitslim::numel(shape));
  t.shape_ = std::move(shape);
  return t;
}

template <Scalar T>
Tensor<T> Tensor<T>::view(Shape shape) const {
  check_extents(shape);
  if (vitslim::numel(shape) != numel()) {
    throw DimensionError("cannot view " + shape_string(shape_) + " as " + shape_string(shape));
  }
  Tensor t;
  t.storage_ = storage_;
  t.shape_ = std::move(shape);
  return t;
}

template <Scalar T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  Tensor t(std::move(shape), requires_grad);
  std::fill(t.data().begin(), t.data().end(), value);
  return t;
}

template <Scalar T>
void Tensor<T>::throw_undefined() {
  throw ContractError("use of an undefined tensor");
}

template <Scalar T>
std::size_t Tensor<T>::extent(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                         shape_string(s));
  }
  return s[axis];
}

template <Scalar T>
T Tensor<T>::item() const {
  if (numel() != 1) {
    throw DimensionError("item() on tensor of shape " + shape_string(shape()));
  }
  return checked().data[0];
}

template <Scalar T>
std::span<T> Tensor<T>::ensure_grad() const {
  Storage& s = checked();
  if (s.grad.empty()) s.grad.assign(s.data.size(), T{0});
  return s.grad;
}

template <Scalar T>
void Tensor<T>::zero_grad() {
  Storage& s = checked();
  s.grad.assign(s.data.size(), T{0});
}

template <Scalar T>
void Tensor<T>::clear_grad() {
  Storage& s = checked();
  s.grad.clear();
  s.grad.shrink_to_fit();
}

template <Scalar T>
Tensor<T> Tensor<T>::clone() const {
  const Storage& s = checked();
  Tensor t = uninitialized(shape_);
  t.storage_->data = s.data;
  t.storage_->requires_grad = s.requires_grad;
  return t;
}

template <Scalar T>
void Tensor<T>::assign(const Tensor& other) {
  if (other.shape() != shape()) {
    throw DimensionError("assign: shape " + shape_string(other.shape()) + " into " +
                         shape_string(shape()));
  }
  std::copy(other.data().begin(), other.data().end(), data().begin());
}

template <Scalar T>
bool Tensor<T>::all_finite() const {
  const auto& d = checked().data;
  return std::all_of(d.begin(), d.end(), [](T v) { return std::isfinite(v); });
}

template <Scalar T>
bool equal(const Tensor<T>& a, const Tensor<T>& b) {
  return a.shape() == b.shape() &&
         std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

template <Scalar T>
Tensor<double> to_double(const Tensor<T>& t) {
  std::vector<double> v(t.data().begin(), t.data().end());
  return Tensor<double>(t.shape(), std::move(v), t.requires_grad());
}

template <Scalar T>
Tensor<T> from_double(const Tensor<double>& t) {
  std::vector<T> v(t.numel());
  std::transform(t.data().begin(), t.data().end(), v.begin(),
                 [](double x) { return static_cast<T>(x); });
  return Tensor<T>(t.shape(), std::move(v), t.requires_grad());
}

template class Tensor<float>;
template class Tensor<double>;
template bool equal(const Tensor<float>&, const Tensor<float>&);
template bool equal(const Tensor<double>&, const Tensor<double>&);
template Tensor<double> to_double(const Tensor<float>&);
template Tensor<double> to_double(const Tensor<double>&);
template Tensor<float> from_double(const Tensor<double>&);
template Tensor<double> from_double(const Tensor<double>&);

}  // namespace vitslim
