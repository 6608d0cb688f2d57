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

#include "vitslim/ops.hpp"

#include <Eigen/Core>
#include <unsupported/Eigen/SpecialFunctions>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace vitslim::ops {
namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Map = Eigen::Map<MatR<T>>;
template <typename T>
using CMap = Eigen::Map<const MatR<T>>;

template <typename T>
using Arr = Eigen::Array<T, Eigen::Dynamic, 1>;
template <typename T>
Eigen::Map<const Arr<T>> carr(std::span<const T> s) {
  return Eigen::Map<const Arr<T>>(s.data(), static_cast<Eigen::Index>(s.size()));
}
template <typename T>
Eigen::Map<Arr<T>> arr(std::span<T> s) {
  return Eigen::Map<Arr<T>>(s.data(), static_cast<Eigen::Index>(s.size()));
}

template <typename T>
CMap<T> cmat(std::span<const T> s, std::size_t rows, std::size_t cols) {
  return CMap<T>(s.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
template <typename T>
Map<T> mat(std::span<T> s, std::size_t rows, std::size_t cols) {
  return Map<T>(s.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

template <Scalar T>
bool wants_grad(const Tensor<T>& t) {
  return t.defined() && t.requires_grad();
}

template <Scalar T>
void accumulate(Tensor<T> target, std::span<const T> contribution) {
  std::span<T> g = target.ensure_grad();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += contribution[i];
}

std::vector<std::size_t> strides_of(const Shape& s) {
  std::vector<std::size_t> st(s.size(), 1);
  for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
  return st;
}

}  // namespace

template <Scalar T>
Tensor<T> matmul(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b) {
  require(a.rank() == 2 && b.rank() == 2 && a.extent(1) == b.extent(0),
          "matmul: incompatible shapes " + shape_string(a.shape()) + " x " +
              shape_string(b.shape()));
  const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
  Tensor<T> out = Tensor<T>::uninitialized(Shape{m, n});
  mat(out.data(), m, n).noalias() = cmat(a.data(), m, k) * cmat(b.data(), k, n);
  if (g.tracks({&a, &b})) {
    g.record("matmul", {a, b}, out, [a, b, out, m, k, n]() mutable {
      auto gout = cmat<T>(out.grad(), m, n);
      if (wants_grad(a)) mat(a.ensure_grad(), m, k).noalias() += gout * cmat<T>(b.data(), k, n).transpose();
      if (wants_grad(b)) mat(b.ensure_grad(), k, n).noalias() += cmat<T>(a.data(), m, k).transpose() * gout;
    });
  }
  return out;
}

template <Scalar T>
Tensor<T> linear(Graph<T>& g, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias) {
  require(w.rank() == 2 && x.extent(x.rank() - 1) == w.extent(1),
          "linear: input " + shape_string(x.shape()) + " incompatible with weight " +
              shape_string(w.shape()));
  const std::size_t in = w.extent(1), outf = w.extent(0), rows = x.numel() / in;
  if (bias.defined()) {
    require(bias.numel() == outf, "linear: bias " + shape_string(bias.shape()) +
                                      " does not match weight " + shape_string(w.shape()));
  }
  Shape out_shape = x.shape();
  out_shape.back() = outf;
  Tensor<T> out = Tensor<T>::uninitialized(out_shape);
  auto y = mat(out.data(), rows, outf);
  y.noalias() = cmat(x.data(), rows, in) * cmat(w.data(), outf, in).transpose();
  if (bias.defined()) {
    y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(
        bias.data().data(), static_cast<Eigen::Index>(outf));
  }
  if (g.tracks({&x, &w, &bias})) {
    g.record("linear", {x, w, bias}, out, [x, w, bias, out, in, outf, rows]() mutable {
      auto gy = cmat<T>(out.grad(), rows, outf);
      if (wants_grad(x)) mat(x.ensure_grad(), rows, in).noalias() += gy * cmat<T>(w.data(), outf, in);
      if (wants_grad(w)) mat(w.ensure_grad(), outf, in).noalias() += gy.transpose() * cmat<T>(x.data(), rows, in);
      if (wants_grad(bias)) {
        Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias.ensure_grad().data(),
                                                        static_cast<Eigen::Index>(outf)) +=
            gy.colwise().sum();
      }
    });
  }
  return out;
}

template <Scalar T>
Tensor<T> batched_matmul(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b, bool transpose_b) {
  require(a.rank() == 3 && b.rank() == 3 && a.extent(0) == b.extent(0),
          "batched_matmul: incompatible shapes " + shape_string(a.shape()) + " x " +
              shape_string(b.shape()));
  const std::size_t n = a.extent(0), m = a.extent(1), k = a.extent(2);
  const std::size_t p = transpose_b ? b.extent(1) : b.extent(2);
  require((transpose_b ? b.extent(2) : b.extent(1)) == k,
          "batched_matmul: inner extents differ for " + shape_string(a.shape()) + " x " +
              shape_string(b.shape()) + (transpose_b ? " (b transposed)" : ""));
  Tensor<T> out = Tensor<T>::uninitialized(Shape{n, m, p});
  const std::size_t sa = m * k, sb = k * p, so = m * p;
  for (std::size_t i = 0; i < n; ++i) {
    auto A = cmat(a.data().subspan(i * sa, sa), m, k);
    auto O = mat(out.data().subspan(i * so, so), m, p);
    if (transpose_b) {
      O.noalias() = A * cmat(b.data().subspan(i * sb, sb), p, k).transpose();
    } else {
      O.noalias() = A * cmat(b.data().subspan(i * sb, sb), k, p);
    }
  }
  if (g.tracks({&a, &b})) {
    g.record("batched_matmul", {a, b}, out, [a, b, out, n, m, k, p, transpose_b]() mutable {
      const std::size_t sa = m * k, sb = k * p, so = m * p;
      std::span<T> ga = wants_grad(a) ? a.ensure_grad() : std::span<T>{};
      std::span<T> gb = wants_grad(b) ? b.ensure_grad() : std::span<T>{};
      for (std::size_t i = 0; i < n; ++i) {
        auto G = cmat<T>(std::span<const T>(out.grad()).subspan(i * so, so), m, p);
        auto A = cmat<T>(std::span<const T>(a.data()).subspan(i * sa, sa), m, k);
        if (transpose_b) {
          auto B = cmat<T>(std::span<const T>(b.data()).subspan(i * sb, sb), p, k);
          if (!ga.empty()) mat(ga.subspan(i * sa, sa), m, k).noalias() += G * B;
          if (!gb.empty()) mat(gb.subspan(i * sb, sb), p, k).noalias() += G.transpose() * A;
        } else {
          auto B = cmat<T>(std::span<const T>(b.data()).subspan(i * sb, sb), k, p);
          if (!ga.empty()) mat(ga.subspan(i * sa, sa), m, k).noalias() += G * B.transpose();
          if (!gb.empty()) mat(gb.subspan(i * sb, sb), k, p).noalias() += A.transpose() * G;
        }
      }
    });
  }
  return out;
}

template <Scalar T>
Tensor<T> add(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b) {
  const Shape& sa = a.shape();
  // Leading unit extents of b are ignored: [1,T,d] broadcasts onto [B,T,d].
  Shape sb = b.shape();
  while (sb.size() > 1 && sb.front() == 1 && sb.size() >= sa.size()) sb.erase(sb.begin());
  require(sb.size() <= sa.size() && std::equal(sb.rbegin(), sb.rend(), sa.rbegin()),
          "add: " + shape_string(b.shape()) + " does not broadcast onto " + shape_string(sa));
  const std::size_t inner = b.numel(), outer = a.numel() / inner;
  Tensor<T> out = Tensor<T>::uninitialized(sa);
  auto o = out.data();
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t r = 0; r < outer; ++r) {
    for (std::size_t i = 0; i < inner; ++i) o[r * inner + i] = ad[r * inner + i] + bd[i];
  }
  if (g.tracks({&a, &b})) {
    g.record("add", {a, b}, out, [a, b, out, inner, outer]() mutable {
      auto go = out.grad();
      if (wants_grad(a)) accumulate<T>(a, go);
      if (wants_grad(b)) {
        auto gb = b.ensure_grad();
        for (std::size_t r = 0; r < outer; ++r) {
          for (std::size_t i = 0; i < inner; ++i) gb[i] += go[r * inner + i];
        }
      }
    });
  }
  return out;
}

template <Scalar T>
Tensor<T> mul(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b) {
  require(a.shape() == b.shape(),
          "mul: shapes differ " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  Tensor<T> out = Tensor<T>::uninitialized(a.shape());
  {
    const T* pa = a.data().data();
    const T* pb = b.data().data();
    T* po = out.data().data();
    for (std::size_t i = 0; i < out.numel(); ++i) po[i] = pa[i] * pb[i];
  }
  if (g.tracks({&a, &b})) {
    g.record("mul", {a, b}, out, [a, b, out]() mutable {
      auto go = out.grad();
      const T* pa = a.data().data();
      const T* pb = b.data().data();
      // Read both operands before writing: a and b may be the same storage.
      std::vector<T> ga(go.size()), gb(go.size());
      for (std::size_t i = 0; i < go.size(); ++i) {
        ga[i] = go[i] * pb[i];
        gb[i] = go[i] * pa[i];
      }
      if (wants_grad(a)) accumulate<T>(a, ga);
      if (wants_grad(b)) accumulate<T>(b, gb);
    });
  }
  return out;
}

template <Scalar T>
Tensor<T> scale(Graph<T>& g, const Tensor<T>& a, T factor) {
  Tensor<T> out = Tensor<T>::uninitialized(a.shape());
  {
    const T* pa = a.data().data();
    T* po = out.data().data();
    for (std::size_t i = 0; i < out.numel(); ++i) po[i] = pa[i] * factor;
  }
  if (g.tracks({&a})) {
    g.record("scale", {a}, out, [a, out, factor]() mutable {
      auto go = out.grad();
      auto ga = a.ensure_grad();
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * factor;
    });
  }
  return out;
}

template <Scalar T>
Tensor<T> gelu(Graph<T>& g, const Tensor<T>& x) {
  constexpr T kInvSqrt2 = T(0.70710678118654752440);
  Tensor<T> out = Tensor<T>::uninitialized(x.shape());
  auto v = carr<T>(x.data());
  Arr<T> cdf = T(0.5) * (T(1) + (v * kInvSqrt2).erf());
  arr(out.data()) = v * cdf;
  if (g.tracks({&x})) {
    g.record("gelu", {x}, out, [x, out, cdf = std::move(cdf)]() mutable {
      constexpr T kInvSqrt2Pi = T(0.39894228040143267794);
      auto v = carr<T>(x.data());
      arr(x.ensure_grad()) +=
          carr<T>(out.grad()) * (cdf + v * kInvSqrt2Pi * (T(-0.5) * v.square()).exp());
    });
  }
  return out;
}

template <Scalar T>
Tensor<T> layer_norm(Graph<T>& g, const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, T eps) {
  const std::size_t d = x.extent(x.rank() - 1);
  require(gamma.numel() == d && beta.numel() == d,
          "layer_norm: affine parameters must have " + std::to_string(d) + " elements");
  if (!(eps > T(0))) throw ConfigError("layer_norm: eps must be positive");
  const std::size_t rows = x.numel() / d;
  Tensor<T> out = Tensor<T>::uninitialized(x.shape());
  std::vector<T> xhat(x.numel());
  std::vector<T> rstd(rows);
  auto xd = x.data();
  const T* pg = gamma.data().data();
  const T* pb = beta.data().data();
  T* po = out.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = xd.data() + r * d;
    T mu = 0;
    for (std::size_t i = 0; i < d; ++i) mu += row[i];
    mu /= static_cast<T>(d);
    T var = 0;
    for (std::size_t i = 0; i < d; ++i) var += (row[i] - mu) * (row[i] - mu);
    var /= static_cast<T>(d);
    const T rs = T(1) / std::sqrt(var + eps);
    rstd[r] = rs;
    for (std::size_t i = 0; i < d; ++i) {
      const T h = (row[i] - mu) * rs;
      xhat[r * d + i] = h;
      po[r * d + i] = h * pg[i] + pb[i];
    }
  }
  if (g.tracks({&x, &gamma, &beta})) {
    g.record("layer_norm", {x, gamma, beta}, out,
             [x, gamma, beta, out, xhat = std::move(xhat), rstd = std::move(rstd), d,
              rows]() mutable {
               auto go = out.grad();
               const T* pg = gamma.data().data();
               std::span<T> gg = wants_grad(gamma) ? gamma.ensure_grad() : std::span<T>{};
               std::span<T> gb = wants_grad(beta) ? beta.ensure_grad() : std::span<T>{};
               std::span<T> gx = wants_grad(x) ? x.ensure_grad() : std::span<T>{};
               for (std::size_t r = 0; r < rows; ++r) {
                 const T* grow = go.data() + r * d;
                 const T* hrow = xhat.data() + r * d;
                 T mean_dh = 0, mean_dh_h = 0;
                 for (std::size_t i = 0; i < d; ++i) {
                   if (!gg.empty()) gg[i] += grow[i] * hrow[i];
                   if (!gb.empty()) gb[i] += grow[i];
                   const T dh = grow[i] * pg[i];
                   mean_dh += dh;
                   mean_dh_h += dh * hrow[i];
                 }
                 if (gx.empty()) continue;
                 mean_dh /= static_cast<T>(d);
                 mean_dh_h /= static_cast<T>(d);
                 for (std::size_t i = 0; i < d; ++i) {
                   const T dh = grow[i] * pg[i];
                   gx[r * d + i] += rstd[r] * (dh - mean_dh - hrow[i] * mean_dh_h);
                 }
               }
             });
  }
  return out;
}

template <Scalar T>
Tensor<T> softmax(Graph<T>& g, const Tensor<T>& x) {
  const std::size_t n = x.extent(x.rank() - 1);
  const std::size_t rows = x.numel() / n;
  Tensor<T> out = Tensor<T>::uninitialized(x.shape());
  auto in = cmat(x.data(), rows, n);
  auto o = mat(out.data(), rows, n);
  const Eigen::Matrix<T, Eigen::Dynamic, 1> mx = in.rowwise().maxCoeff();
  o = in.colwise() - mx;
  arr(out.data()) = arr(out.data()).exp();
  const Eigen::Array<T, Eigen::Dynamic, 1> total = o.rowwise().sum().array();
  o.array().colwise() /= total;
  if (g.tracks({&x})) {
    g.record("softmax", {x}, out, [x, out, n, rows]() mutable {
      auto go = cmat<T>(out.grad(), rows, n);
      auto y = cmat<T>(out.data(), rows, n);
      const Eigen::Matrix<T, Eigen::Dynamic, 1> dot = go.cwiseProduct(y).rowwise().sum();
      mat(x.ensure_grad(), rows, n).array() += y.array() * (go.colwise() - dot).array();
    });
  }
  return out;
}

template <Scalar T>
Tensor<T> reshape(Graph<T>& g, const Tensor<T>& x, Shape shape) {
  (void)g;
  require(numel(shape) == x.numel(),
          "reshape: cannot view " + shape_string(x.shape()) + " as " + shape_string(shape));
  // A view shares the gradient buffer too, so no backward node is needed.
  return x.view(std::move(shape));
}

template <Scalar T>
Tensor<T> permute(Graph<T>& g, const Tensor<T>& x, std::span<const std::size_t> perm) {
  const Shape& in_shape = x.shape();
  const std::size_t r = in_shape.size();
  require(perm.size() == r, "permute: permutation rank differs from tensor rank");
  std::vector<bool> seen(r, false);
  Shape out_shape(r);
  for (std::size_t i = 0; i < r; ++i) {
    require(perm[i] < r && !seen[perm[i]], "permute: invalid permutation");
    seen[perm[i]] = true;
    out_shape[i] = in_shape[perm[i]];
  }
  // Trailing axes that stay in place move as contiguous runs.
  std::size_t kept = 0, run = 1;
  while (kept < r && perm[r - 1 - kept] == r - 1 - kept) run *= in_shape[r - 1 - kept++];
  const std::size_t outer_rank = r - kept;
  // src_stride[i]: stride in x of output axis i.
  const auto in_strides = strides_of(in_shape);
  std::vector<std::size_t> src_stride(outer_rank);
  for (std::size_t i = 0; i < outer_rank; ++i) src_stride[i] = in_strides[perm[i]];
  std::vector<std::size_t> run_map(x.numel() / run);
  {
    std::vector<std::size_t> idx(outer_rank, 0);
    std::size_t src = 0;
    for (std::size_t o = 0; o < run_map.size(); ++o) {
      run_map[o] = src;
      for (std::size_t ax = outer_rank; ax-- > 0;) {
        if (++idx[ax] < out_shape[ax]) {
          src += src_stride[ax];
          break;
        }
        src -= src_stride[ax] * (out_shape[ax] - 1);
        idx[ax] = 0;
      }
    }
  }
  Tensor<T> out = Tensor<T>::uninitialized(out_shape);
  {
    const T* px = x.data().data();
    T* po = out.data().data();
    for (std::size_t o = 0; o < run_map.size(); ++o) std::copy_n(px + run_map[o], run, po + o * run);
  }
  if (g.tracks({&x})) {
    g.record("permute", {x}, out, [x, out, run, run_map = std::move(run_map)]() mutable {
      const T* go = out.grad().data();
      T* gx = x.ensure_grad().data();
      for (std::size_t o = 0; o < run_map.size(); ++o) {
        for (std::size_t i = 0; i < run; ++i) gx[run_map[o] + i] += go[o * run + i];
      }
    });
  }
  return out;
}

template <Scalar T>
Tensor<T> select(Graph<T>& g, const Tensor<T>& x, std::size_t axis, std::size_t index) {
  const Shape& s = x.shape();
  require(axis < s.size() && index < s[axis] && s.size() >= 2,
          "select: index " + std::to_string(index) + " on axis " + std::to_string(axis) +
              " out of range for " + shape_string(s));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t ext = s[axis];
  Shape out_shape = s;
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  Tensor<T> out = Tensor<T>::uninitialized(out_shape);
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>((o * ext + index) * inner), inner,
                out.data().begin() + static_cast<std::ptrdiff_t>(o * inner));
  }
  if (g.tracks({&x})) {
    g.record("select", {x}, out, [x, out, outer, inner, ext, index]() mutable {
      auto go = out.grad();
      auto gx = x.ensure_grad();
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < inner; ++i) gx[(o * ext + index) * inner + i] += go[o * inner + i];
      }
    });
  }
  return out;
}

template <Scalar T>
Tensor<T> prepend_token(Graph<T>& g, const Tensor<T>& x, const Tensor<T>& token) {
  require(x.rank() == 3 && token.numel() == x.extent(2),
          "prepend_token: token " + shape_string(token.shape()) + " incompatible with " +
              shape_string(x.shape()));
  const std::size_t b = x.extent(0), n = x.extent(1), d = x.extent(2);
  Tensor<T> out = Tensor<T>::uninitialized(Shape{b, n + 1, d});
  for (std::size_t i = 0; i < b; ++i) {
    T* dst = out.data().data() + i * (n + 1) * d;
    std::copy_n(token.data().begin(), d, dst);
    std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(i * n * d), n * d, dst + d);
  }
  if (g.tracks({&x, &token})) {
    g.record("prepend_token", {x, token}, out, [x, token, out, b, n, d]() mutable {
      auto go = out.grad();
      std::span<T> gx = wants_grad(x) ? x.ensure_grad() : std::span<T>{};
      std::span<T> gt = wants_grad(token) ? token.ensure_grad() : std::span<T>{};
      for (std::size_t i = 0; i < b; ++i) {
        const T* src = go.data() + i * (n + 1) * d;
        if (!gt.empty()) {
          for (std::size_t j = 0; j < d; ++j) gt[j] += src[j];
        }
        if (!gx.empty()) {
          for (std::size_t j = 0; j < n * d; ++j) gx[i * n * d + j] += src[d + j];
        }
      }
    });
  }
  return out;
}

template <Scalar T>
Tensor<T> scale_samples(Graph<T>& g, const Tensor<T>& x, std::span<const T> factors) {
  const std::size_t b = x.extent(0);
  require(factors.size() == b, "scale_samples: expected " + std::to_string(b) + " factors");
  const std::size_t per = x.numel() / b;
  Tensor<T> out = Tensor<T>::uninitialized(x.shape());
  {
    const T* px = x.data().data();
    T* po = out.data().data();
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j = 0; j < per; ++j) po[i * per + j] = px[i * per + j] * factors[i];
    }
  }
  if (g.tracks({&x})) {
    g.record("scale_samples", {x}, out,
             [x, out, f = std::vector<T>(factors.begin(), factors.end()), b, per]() mutable {
               auto go = out.grad();
               auto gx = x.ensure_grad();
               for (std::size_t i = 0; i < b; ++i) {
                 for (std::size_t j = 0; j < per; ++j) gx[i * per + j] += go[i * per + j] * f[i];
               }
             });
  }
  return out;
}

template <Scalar T>
Tensor<T> sum(Graph<T>& g, const Tensor<T>& x) {
  T total = 0;
  for (T v : x.data()) total += v;
  Tensor<T> out = Tensor<T>::scalar(total);
  if (g.tracks({&x})) {
    g.record("sum", {x}, out, [x, out]() mutable {
      const T go = out.grad()[0];
      for (T& v : x.ensure_grad()) v += go;
    });
  }
  return out;
}

template <Scalar T>
Tensor<T> mean(Graph<T>& g, const Tensor<T>& x) {
  return scale(g, sum(g, x), T(1) / static_cast<T>(x.numel()));
}

template <Scalar T>
Tensor<T> soft_cross_entropy(Graph<T>& g, const Tensor<T>& logits, const Tensor<T>& targets) {
  require(logits.rank() == 2 && targets.shape() == logits.shape(),
          "soft_cross_entropy: logits " + shape_string(logits.shape()) + " vs targets " +
              shape_string(targets.shape()));
  const std::size_t b = logits.extent(0), c = logits.extent(1);
  std::vector<T> probs(b * c);
  const T* pt = targets.data().data();
  T loss = 0;
  for (std::size_t i = 0; i < b; ++i) {
    const T* z = logits.data().data() + i * c;
    const T mx = *std::max_element(z, z + c);
    T total = 0;
    for (std::size_t j = 0; j < c; ++j) total += std::exp(z[j] - mx);
    const T log_total = std::log(total);
    for (std::size_t j = 0; j < c; ++j) {
      const T logp = z[j] - mx - log_total;
      probs[i * c + j] = std::exp(logp);
      loss -= pt[i * c + j] * logp;
    }
  }
  Tensor<T> out = Tensor<T>::scalar(loss / static_cast<T>(b));
  if (g.tracks({&logits})) {
    g.record("soft_cross_entropy", {logits}, out,
             [logits, targets, out, probs = std::move(probs), b, c]() mutable {
               const T go = out.grad()[0] / static_cast<T>(b);
               auto gz = logits.ensure_grad();
               const T* pt = targets.data().data();
               for (std::size_t i = 0; i < b; ++i) {
                 T mass = 0;
                 for (std::size_t j = 0; j < c; ++j) mass += pt[i * c + j];
                 for (std::size_t j = 0; j < c; ++j) {
                   gz[i * c + j] += go * (probs[i * c + j] * mass - pt[i * c + j]);
                 }
               }
             });
  }
  return out;
}

#define VITSLIM_INSTANTIATE_OPS(T)                                                            \
  template Tensor<T> matmul(Graph<T>&, const Tensor<T>&, const Tensor<T>&);                    \
  template Tensor<T> linear(Graph<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);  \
  template Tensor<T> batched_matmul(Graph<T>&, const Tensor<T>&, const Tensor<T>&, bool);      \
  template Tensor<T> add(Graph<T>&, const Tensor<T>&, const Tensor<T>&);                       \
  template Tensor<T> mul(Graph<T>&, const Tensor<T>&, const Tensor<T>&);                       \
  template Tensor<T> scale(Graph<T>&, const Tensor<T>&, T);                                    \
  template Tensor<T> gelu(Graph<T>&, const Tensor<T>&);                                        \
  template Tensor<T> layer_norm(Graph<T>&, const Tensor<T>&, const Tensor<T>&,                 \
                                const Tensor<T>&, T);                                          \
  template Tensor<T> softmax(Graph<T>&, const Tensor<T>&);                                     \
  template Tensor<T> reshape(Graph<T>&, const Tensor<T>&, Shape);                              \
  template Tensor<T> permute(Graph<T>&, const Tensor<T>&, std::span<const std::size_t>);       \
  template Tensor<T> select(Graph<T>&, const Tensor<T>&, std::size_t, std::size_t);            \
  template Tensor<T> prepend_token(Graph<T>&, const Tensor<T>&, const Tensor<T>&);             \
  template Tensor<T> scale_samples(Graph<T>&, const Tensor<T>&, std::span<const T>);           \
  template Tensor<T> sum(Graph<T>&, const Tensor<T>&);                                         \
  template Tensor<T> mean(Graph<T>&, const Tensor<T>&);                                        \
  template Tensor<T> soft_cross_entropy(Graph<T>&, const Tensor<T>&, const Tensor<T>&);

VITSLIM_INSTANTIATE_OPS(float)
VITSLIM_INSTANTIATE_OPS(double)

#undef VITSLIM_INSTANTIATE_OPS

}  // namespace vitslim::ops
