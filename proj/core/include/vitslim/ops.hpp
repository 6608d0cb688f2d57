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

#include <cstddef>
#include <span>
#include <vector>

#include "vitslim/graph.hpp"
#include "vitslim/tensor.hpp"

// Differentiable tensor operations. Each op computes its output eagerly and,
// when `g` is enabled and an input requires grad, records a backward rule.
namespace vitslim::ops {

// a[m,k] . b[k,n] -> [m,n]
template <Scalar T>
Tensor<T> matmul(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b);

// x[..., in] . w[out, in]^T + bias[out] -> [..., out]. `bias` may be undefined.
template <Scalar T>
Tensor<T> linear(Graph<T>& g, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias);

// a[n,m,k] . b[n,k,p] -> [n,m,p]; with transpose_b, b is [n,p,k].
template <Scalar T>
Tensor<T> batched_matmul(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b,
                         bool transpose_b = false);

// a + b where b's shape equals a trailing suffix of a's shape (b is broadcast
// over the leading axes of a).
template <Scalar T>
Tensor<T> add(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b);

// Element-wise product of equally shaped tensors.
template <Scalar T>
Tensor<T> mul(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b);

template <Scalar T>
Tensor<T> scale(Graph<T>& g, const Tensor<T>& a, T factor);

// Exact GELU: 0.5 x (1 + erf(x / sqrt 2)).
template <Scalar T>
Tensor<T> gelu(Graph<T>& g, const Tensor<T>& x);

// Normalizes over the last axis with population variance; eps sits inside
// the square root.
template <Scalar T>
Tensor<T> layer_norm(Graph<T>& g, const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, T eps = T(1e-6));

// Softmax over the last axis (max-subtracted).
template <Scalar T>
Tensor<T> softmax(Graph<T>& g, const Tensor<T>& x);

// Zero-copy: the result shares values and gradient with x.
template <Scalar T>
Tensor<T> reshape(Graph<T>& g, const Tensor<T>& x, Shape shape);

// out.shape[i] = x.shape[perm[i]]
template <Scalar T>
Tensor<T> permute(Graph<T>& g, const Tensor<T>& x, std::span<const std::size_t> perm);

// Picks `index` along `axis` and drops that axis.
template <Scalar T>
Tensor<T> select(Graph<T>& g, const Tensor<T>& x, std::size_t axis, std::size_t index);

// x[B,N,d], token with d elements -> [B,N+1,d] with the token at position 0.
template <Scalar T>
Tensor<T> prepend_token(Graph<T>& g, const Tensor<T>& x, const Tensor<T>& token);

// Multiplies sample b (leading axis) by factors[b]. The factors are
// constants; no gradient flows to them.
template <Scalar T>
Tensor<T> scale_samples(Graph<T>& g, const Tensor<T>& x, std::span<const T> factors);

template <Scalar T>
Tensor<T> sum(Graph<T>& g, const Tensor<T>& x);

template <Scalar T>
Tensor<T> mean(Graph<T>& g, const Tensor<T>& x);

// Mean over the batch of -sum_c targets[b,c] * log softmax(logits)[b,c].
// Rows of `targets` are probability vectors (constant).
template <Scalar T>
Tensor<T> soft_cross_entropy(Graph<T>& g, const Tensor<T>& logits, const Tensor<T>& targets);

}  // namespace vitslim::ops
