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

#include <concepts>
#include <cstddef>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vitslim/error.hpp"

namespace vitslim {

using Shape = std::vector<std::size_t>;

// Tensor buffer allocator. Every buffer starts on a 64-byte boundary, so
// vectorized kernels take the same code path (and summation order) on every
// run regardless of where the heap places it. Value-less construct() leaves
// scalars uninitialized so resize() does not write memory about to be
// overwritten.
template <typename T>
struct BufferAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  BufferAllocator() noexcept = default;
  template <typename U>
  BufferAllocator(const BufferAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), kAlignment));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

  template <typename U>
  void construct(U* p) noexcept {
    ::new (static_cast<void*>(p)) U;
  }
  template <typename U, typename... Args>
  void construct(U* p, Args&&... args) {
    ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }
  template <typename U>
  friend bool operator==(const BufferAllocator&, const BufferAllocator<U>&) noexcept {
    return true;
  }
};

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

enum class DType : std::uint8_t { kFloat32 = 0, kFloat64 = 1 };

template <typename T>
concept Scalar = std::same_as<T, float> || std::same_as<T, double>;

template <Scalar T>
constexpr DType dtype_of() {
  return std::same_as<T, float> ? DType::kFloat32 : DType::kFloat64;
}

// Dense row-major tensor with an optional gradient buffer.
//
// Tensor is a handle: copies share storage. Two handles to the same storage
// are how parameter sharing is expressed, so a write through one (including
// gradient accumulation) is visible through the other. Use clone() for an
// independent copy.
template <Scalar T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);

  static Tensor scalar(T value, bool requires_grad = false) {
    return Tensor(Shape{1}, std::vector<T>{value}, requires_grad);
  }
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  // Values are unspecified until written.
  static Tensor uninitialized(Shape shape);

  bool defined() const noexcept { return storage_ != nullptr; }
  const Shape& shape() const {
    checked();
    return shape_;
  }
  std::size_t rank() const { return shape().size(); }
  std::size_t extent(std::size_t axis) const;
  std::size_t numel() const { return checked().data.size(); }

  std::span<T> data() { return checked().data; }
  std::span<const T> data() const { return checked().data; }
  T& operator[](std::size_t i) { return checked().data[i]; }
  const T& operator[](std::size_t i) const { return checked().data[i]; }
  // Scalar value of a one-element tensor.
  T item() const;

  bool requires_grad() const { return checked().requires_grad; }
  void set_requires_grad(bool on) { checked().requires_grad = on; }

  bool has_grad() const { return !checked().grad.empty(); }
  std::span<T> grad() { return checked().grad; }
  std::span<const T> grad() const { return checked().grad; }
  // Allocates a zero gradient buffer if none exists yet.
  // Handle semantics: gradients live in the shared storage, so this is const.
  std::span<T> ensure_grad() const;
  void zero_grad();
  void clear_grad();

  // Deep copy of values and shape; the gradient is not copied.
  Tensor clone() const;
  // Copies values from `other` (same shape required) into this storage.
  void assign(const Tensor& other);

  // Same storage (values and gradient) under a new shape with the same
  // element count.
  Tensor view(Shape shape) const;

  bool same_storage(const Tensor& other) const noexcept {
    return storage_ == other.storage_;
  }
  bool all_finite() const;

 private:
  using Buffer = std::vector<T, BufferAllocator<T>>;
  struct Storage {
    Buffer data;
    Buffer grad;
    bool requires_grad = false;
  };

  Storage& checked() const {
    if (!storage_) [[unlikely]] throw_undefined();
    return *storage_;
  }
  [[noreturn]] static void throw_undefined();

  std::shared_ptr<Storage> storage_;
  Shape shape_;
};

// Element-wise equality of shape and values (bitwise for finite values).
template <Scalar T>
bool equal(const Tensor<T>& a, const Tensor<T>& b);

template <Scalar T>
Tensor<double> to_double(const Tensor<T>& t);

template <Scalar T>
Tensor<T> from_double(const Tensor<double>& t);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace vitslim
