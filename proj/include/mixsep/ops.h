// Copyright 2026 The mixsep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Differentiable operation set: structural ops, activations, normalization,
// affine maps, 1D convolution, dropout, and multi-head attention. Forward
// computes values eagerly; each op registers the matching backward rule.

#ifndef MIXSEP_OPS_H_
#define MIXSEP_OPS_H_

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mixsep/rng.h"
#include "mixsep/tensor.h"

namespace mixsep {

namespace detail {

template <typename Real>
using EMat =
    Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Real>
using MapMat = Eigen::Map<EMat<Real>>;
template <typename Real>
using ConstMapMat = Eigen::Map<const EMat<Real>>;

inline std::string ShapeStr(const std::vector<int>& s) {
  std::string r = "[";
  for (size_t i = 0; i < s.size(); ++i)
    r += (i ? "," : "") + std::to_string(s[i]);
  return r + "]";
}

template <typename Real>
void CheckSameShape(const Tensor<Real>& a, const Tensor<Real>& b,
                    const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     ShapeStr(a.shape()) + " vs " + ShapeStr(b.shape()));
}

// Rows/cols view of a tensor flattened over all but the last axis.
template <typename Real>
std::pair<int64_t, int> LastAxisView(const Tensor<Real>& t) {
  if (t.rank() == 0) throw ShapeError("op requires rank >= 1");
  int cols = t.dim(t.rank() - 1);
  int64_t rows = cols == 0 ? 0 : t.size() / cols;
  return {rows, cols};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise and structural ops

template <typename Real>
Tensor<Real> Add(const Tensor<Real>& a, const Tensor<Real>& b) {
  detail::CheckSameShape(a, b, "add");
  std::vector<Real> out(a.values());
  for (int64_t i = 0; i < a.size(); ++i) out[i] += b.values()[i];
  return detail::MakeOp<Real>(
      a.shape(), std::move(out), {a, b}, [](TensorNode<Real>& self) {
        for (auto& in : self.inputs) {
          if (!in->requires_grad) continue;
          in->EnsureGrad();
          for (size_t i = 0; i < self.grad.size(); ++i)
            in->grad[i] += self.grad[i];
        }
      });
}

template <typename Real>
Tensor<Real> Sub(const Tensor<Real>& a, const Tensor<Real>& b) {
  detail::CheckSameShape(a, b, "sub");
  std::vector<Real> out(a.values());
  for (int64_t i = 0; i < a.size(); ++i) out[i] -= b.values()[i];
  return detail::MakeOp<Real>(
      a.shape(), std::move(out), {a, b}, [](TensorNode<Real>& self) {
        auto& a_in = self.inputs[0];
        auto& b_in = self.inputs[1];
        if (a_in->requires_grad) {
          a_in->EnsureGrad();
          for (size_t i = 0; i < self.grad.size(); ++i)
            a_in->grad[i] += self.grad[i];
        }
        if (b_in->requires_grad) {
          b_in->EnsureGrad();
          for (size_t i = 0; i < self.grad.size(); ++i)
            b_in->grad[i] -= self.grad[i];
        }
      });
}

template <typename Real>
Tensor<Real> Mul(const Tensor<Real>& a, const Tensor<Real>& b) {
  detail::CheckSameShape(a, b, "mul");
  std::vector<Real> out(a.values());
  for (int64_t i = 0; i < a.size(); ++i) out[i] *= b.values()[i];
  return detail::MakeOp<Real>(
      a.shape(), std::move(out), {a, b}, [](TensorNode<Real>& self) {
        auto& a_in = self.inputs[0];
        auto& b_in = self.inputs[1];
        if (a_in->requires_grad) {
          a_in->EnsureGrad();
          for (size_t i = 0; i < self.grad.size(); ++i)
            a_in->grad[i] += self.grad[i] * b_in->values[i];
        }
        if (b_in->requires_grad) {
          b_in->EnsureGrad();
          for (size_t i = 0; i < self.grad.size(); ++i)
            b_in->grad[i] += self.grad[i] * a_in->values[i];
        }
      });
}

template <typename Real>
Tensor<Real> Scale(const Tensor<Real>& a, Real c) {
  std::vector<Real> out(a.values());
  for (auto& v : out) v *= c;
  return detail::MakeOp<Real>(
      a.shape(), std::move(out), {a}, [c](TensorNode<Real>& self) {
        auto& in = self.inputs[0];
        if (!in->requires_grad) return;
        in->EnsureGrad();
        for (size_t i = 0; i < self.grad.size(); ++i)
          in->grad[i] += self.grad[i] * c;
      });
}

template <typename Real>
Tensor<Real> AddN(const std::vector<Tensor<Real>>& parts) {
  if (parts.empty()) throw ContractError("addn needs at least one input");
  std::vector<Real> out(parts[0].values());
  for (size_t k = 1; k < parts.size(); ++k) {
    detail::CheckSameShape(parts[0], parts[k], "addn");
    for (int64_t i = 0; i < parts[0].size(); ++i)
      out[i] += parts[k].values()[i];
  }
  return detail::MakeOp<Real>(
      parts[0].shape(), std::move(out), parts, [](TensorNode<Real>& self) {
        for (auto& in : self.inputs) {
          if (!in->requires_grad) continue;
          in->EnsureGrad();
          for (size_t i = 0; i < self.grad.size(); ++i)
            in->grad[i] += self.grad[i];
        }
      });
}

template <typename Real>
Tensor<Real> Relu(const Tensor<Real>& a) {
  std::vector<Real> out(a.values());
  for (auto& v : out) v = v > Real(0) ? v : Real(0);
  return detail::MakeOp<Real>(
      a.shape(), std::move(out), {a}, [](TensorNode<Real>& self) {
        auto& in = self.inputs[0];
        if (!in->requires_grad) return;
        in->EnsureGrad();
        for (size_t i = 0; i < self.grad.size(); ++i)
          if (in->values[i] > Real(0)) in->grad[i] += self.grad[i];
      });
}

template <typename Real>
Tensor<Real> Reshape(const Tensor<Real>& a, std::vector<int> shape) {
  if (Tensor<Real>::NumElements(shape) != a.size())
    throw ShapeError("reshape: element count mismatch");
  std::vector<Real> out(a.values());
  return detail::MakeOp<Real>(
      std::move(shape), std::move(out), {a}, [](TensorNode<Real>& self) {
        auto& in = self.inputs[0];
        if (!in->requires_grad) return;
        in->EnsureGrad();
        for (size_t i = 0; i < self.grad.size(); ++i)
          in->grad[i] += self.grad[i];
      });
}

template <typename Real>
Tensor<Real> Transpose2d(const Tensor<Real>& a) {
  if (a.rank() != 2) throw ShapeError("transpose requires rank 2");
  const int r = a.dim(0), c = a.dim(1);
  std::vector<Real> out(a.size());
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j)
      out[size_t(j) * r + i] = a.values()[size_t(i) * c + j];
  return detail::MakeOp<Real>(
      {c, r}, std::move(out), {a}, [r, c](TensorNode<Real>& self) {
        auto& in = self.inputs[0];
        if (!in->requires_grad) return;
        in->EnsureGrad();
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j)
            in->grad[size_t(i) * c + j] += self.grad[size_t(j) * r + i];
      });
}

template <typename Real>
Tensor<Real> Matmul(const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.rank() != 2 || b.rank() != 2)
    throw ShapeError("matmul requires rank-2 tensors");
  const int m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
  if (k != k2)
    throw ShapeError("matmul: inner dims " + std::to_string(k) + " vs " +
                     std::to_string(k2));
  std::vector<Real> out(size_t(m) * n);
  {
    detail::ConstMapMat<Real> ma(a.values().data(), m, k);
    detail::ConstMapMat<Real> mb(b.values().data(), k, n);
    detail::MapMat<Real> mo(out.data(), m, n);
    mo.noalias() = ma * mb;
  }
  return detail::MakeOp<Real>(
      {m, n}, std::move(out), {a, b}, [m, k, n](TensorNode<Real>& self) {
        auto& a_in = self.inputs[0];
        auto& b_in = self.inputs[1];
        detail::ConstMapMat<Real> g(self.grad.data(), m, n);
        if (a_in->requires_grad) {
          a_in->EnsureGrad();
          detail::ConstMapMat<Real> mb(b_in->values.data(), k, n);
          detail::MapMat<Real> ga(a_in->grad.data(), m, k);
          ga.noalias() += g * mb.transpose();
        }
        if (b_in->requires_grad) {
          b_in->EnsureGrad();
          detail::ConstMapMat<Real> ma(a_in->values.data(), m, k);
          detail::MapMat<Real> gb(b_in->grad.data(), k, n);
          gb.noalias() += ma.transpose() * g;
        }
      });
}

// Columns [c0, c0 + n) of a rank-2 tensor.
template <typename Real>
Tensor<Real> SliceCols(const Tensor<Real>& a, int c0, int n) {
  if (a.rank() != 2) throw ShapeError("slice_cols requires rank 2");
  const int rows = a.dim(0), cols = a.dim(1);
  if (c0 < 0 || n <= 0 || c0 + n > cols)
    throw ShapeError("slice_cols: range out of bounds");
  std::vector<Real> out(size_t(rows) * n);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < n; ++j)
      out[size_t(i) * n + j] = a.values()[size_t(i) * cols + c0 + j];
  return detail::MakeOp<Real>(
      {rows, n}, std::move(out), {a},
      [rows, cols, c0, n](TensorNode<Real>& self) {
        auto& in = self.inputs[0];
        if (!in->requires_grad) return;
        in->EnsureGrad();
        for (int i = 0; i < rows; ++i)
          for (int j = 0; j < n; ++j)
            in->grad[size_t(i) * cols + c0 + j] += self.grad[size_t(i) * n + j];
      });
}

template <typename Real>
Tensor<Real> ConcatCols(const std::vector<Tensor<Real>>& parts) {
  if (parts.empty()) throw ContractError("concat_cols needs inputs");
  const int rows = parts[0].dim(0);
  int cols = 0;
  std::vector<int> widths;
  for (const auto& p : parts) {
    if (p.rank() != 2 || p.dim(0) != rows)
      throw ShapeError("concat_cols: row count mismatch");
    widths.push_back(p.dim(1));
    cols += p.dim(1);
  }
  std::vector<Real> out(size_t(rows) * cols);
  int offset = 0;
  for (size_t k = 0; k < parts.size(); ++k) {
    const auto& v = parts[k].values();
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < widths[k]; ++j)
        out[size_t(i) * cols + offset + j] = v[size_t(i) * widths[k] + j];
    offset += widths[k];
  }
  return detail::MakeOp<Real>(
      {rows, cols}, std::move(out), parts,
      [rows, cols, widths](TensorNode<Real>& self) {
        int offset = 0;
        for (size_t k = 0; k < self.inputs.size(); ++k) {
          auto& in = self.inputs[k];
          const int w = widths[k];
          if (in->requires_grad) {
            in->EnsureGrad();
            for (int i = 0; i < rows; ++i)
              for (int j = 0; j < w; ++j)
                in->grad[size_t(i) * w + j] +=
                    self.grad[size_t(i) * cols + offset + j];
          }
          offset += w;
        }
      });
}

// Channel k of a rank-3 tensor [A, B, C] -> [A, B].
template <typename Real>
Tensor<Real> SliceChannel(const Tensor<Real>& a, int k) {
  if (a.rank() != 3) throw ShapeError("slice_channel requires rank 3");
  const int d0 = a.dim(0), d1 = a.dim(1), d2 = a.dim(2);
  if (k < 0 || k >= d2) throw ShapeError("slice_channel: index out of range");
  std::vector<Real> out(size_t(d0) * d1);
  for (int i = 0; i < d0; ++i)
    for (int j = 0; j < d1; ++j)
      out[size_t(i) * d1 + j] = a.values()[(size_t(i) * d1 + j) * d2 + k];
  return detail::MakeOp<Real>(
      {d0, d1}, std::move(out), {a}, [d0, d1, d2, k](TensorNode<Real>& self) {
        auto& in = self.inputs[0];
        if (!in->requires_grad) return;
        in->EnsureGrad();
        for (int i = 0; i < d0; ++i)
          for (int j = 0; j < d1; ++j)
            in->grad[(size_t(i) * d1 + j) * d2 + k] +=
                self.grad[size_t(i) * d1 + j];
      });
}

// Adds a length-C vector to every row of an [..., C] tensor.
template <typename Real>
Tensor<Real> AddRowVec(const Tensor<Real>& x, const Tensor<Real>& v) {
  auto [rows, cols] = detail::LastAxisView(x);
  if (v.rank() != 1 || v.dim(0) != cols)
    throw ShapeError("add_row_vec: vector length must equal last dim");
  std::vector<Real> out(x.values());
  for (int64_t r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out[r * cols + c] += v.values()[c];
  return detail::MakeOp<Real>(
      x.shape(), std::move(out), {x, v},
      [rows = rows, cols = cols](TensorNode<Real>& self) {
        auto& x_in = self.inputs[0];
        auto& v_in = self.inputs[1];
        if (x_in->requires_grad) {
          x_in->EnsureGrad();
          for (size_t i = 0; i < self.grad.size(); ++i)
            x_in->grad[i] += self.grad[i];
        }
        if (v_in->requires_grad) {
          v_in->EnsureGrad();
          for (int64_t r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
              v_in->grad[c] += self.grad[r * cols + c];
        }
      });
}

template <typename Real>
Tensor<Real> Sum(const Tensor<Real>& a) {
  Real total = 0;
  for (Real v : a.values()) total += v;
  return detail::MakeOp<Real>(
      {1}, {total}, {a}, [](TensorNode<Real>& self) {
        auto& in = self.inputs[0];
        if (!in->requires_grad) return;
        in->EnsureGrad();
        for (auto& g : in->grad) g += self.grad[0];
      });
}

template <typename Real>
Tensor<Real> Mean(const Tensor<Real>& a) {
  if (a.size() == 0) throw ShapeError("mean of empty tensor");
  return Scale(Sum(a), Real(1) / Real(a.size()));
}

// Mean squared difference over all elements.
template <typename Real>
Tensor<Real> MseLoss(const Tensor<Real>& pred, const Tensor<Real>& target) {
  detail::CheckSameShape(pred, target, "mse");
  Tensor<Real> d = Sub(pred, target);
  return Mean(Mul(d, d));
}

// ---------------------------------------------------------------------------
// Normalization and activations over the last axis

template <typename Real>
Tensor<Real> SoftmaxLastDim(const Tensor<Real>& a) {
  auto [rows, cols] = detail::LastAxisView(a);
  if (cols == 0) throw ConfigError("softmax over empty axis");
  std::vector<Real> out(a.values().size());
  for (int64_t r = 0; r < rows; ++r) {
    const Real* x = a.values().data() + r * cols;
    Real* y = out.data() + r * cols;
    Real mx = x[0];
    for (int c = 1; c < cols; ++c) mx = std::max(mx, x[c]);
    Real denom = 0;
    for (int c = 0; c < cols; ++c) {
      y[c] = std::exp(x[c] - mx);
      denom += y[c];
    }
    for (int c = 0; c < cols; ++c) y[c] /= denom;
  }
  return detail::MakeOp<Real>(
      a.shape(), std::move(out), {a},
      [rows = rows, cols = cols](TensorNode<Real>& self) {
        auto& in = self.inputs[0];
        if (!in->requires_grad) return;
        in->EnsureGrad();
        for (int64_t r = 0; r < rows; ++r) {
          const Real* y = self.values.data() + r * cols;
          const Real* g = self.grad.data() + r * cols;
          Real dot = 0;
          for (int c = 0; c < cols; ++c) dot += g[c] * y[c];
          Real* gx = in->grad.data() + r * cols;
          for (int c = 0; c < cols; ++c) gx[c] += (g[c] - dot) * y[c];
        }
      });
}

inline constexpr double kLayerNormEps = 1e-8;

// Normalizes each last-axis vector to zero mean / unit variance, then
// applies a learnable gain and bias.
template <typename Real>
Tensor<Real> LayerNormLastDim(const Tensor<Real>& x, const Tensor<Real>& gain,
                              const Tensor<Real>& bias) {
  auto [rows, cols] = detail::LastAxisView(x);
  if (gain.rank() != 1 || gain.dim(0) != cols || bias.rank() != 1 ||
      bias.dim(0) != cols)
    throw ShapeError("layer_norm: gain/bias must match last dim");
  std::vector<Real> out(x.values().size());
  for (int64_t r = 0; r < rows; ++r) {
    const Real* v = x.values().data() + r * cols;
    Real* y = out.data() + r * cols;
    Real mu = 0;
    for (int c = 0; c < cols; ++c) mu += v[c];
    mu /= cols;
    Real var = 0;
    for (int c = 0; c < cols; ++c) var += (v[c] - mu) * (v[c] - mu);
    var /= cols;
    const Real inv = Real(1) / std::sqrt(var + Real(kLayerNormEps));
    for (int c = 0; c < cols; ++c)
      y[c] = (v[c] - mu) * inv * gain.values()[c] + bias.values()[c];
  }
  return detail::MakeOp<Real>(
      x.shape(), std::move(out), {x, gain, bias},
      [rows = rows, cols = cols](TensorNode<Real>& self) {
        auto& x_in = self.inputs[0];
        auto& g_in = self.inputs[1];
        auto& b_in = self.inputs[2];
        if (x_in->requires_grad) x_in->EnsureGrad();
        if (g_in->requires_grad) g_in->EnsureGrad();
        if (b_in->requires_grad) b_in->EnsureGrad();
        std::vector<Real> xhat(cols);
        for (int64_t r = 0; r < rows; ++r) {
          const Real* v = x_in->values.data() + r * cols;
          const Real* g = self.grad.data() + r * cols;
          Real mu = 0;
          for (int c = 0; c < cols; ++c) mu += v[c];
          mu /= cols;
          Real var = 0;
          for (int c = 0; c < cols; ++c) var += (v[c] - mu) * (v[c] - mu);
          var /= cols;
          const Real inv = Real(1) / std::sqrt(var + Real(kLayerNormEps));
          for (int c = 0; c < cols; ++c) xhat[c] = (v[c] - mu) * inv;
          if (b_in->requires_grad)
            for (int c = 0; c < cols; ++c) b_in->grad[c] += g[c];
          if (g_in->requires_grad)
            for (int c = 0; c < cols; ++c) g_in->grad[c] += g[c] * xhat[c];
          if (x_in->requires_grad) {
            Real sum_dxhat = 0, sum_dxhat_xhat = 0;
            for (int c = 0; c < cols; ++c) {
              const Real dxhat = g[c] * g_in->values[c];
              sum_dxhat += dxhat;
              sum_dxhat_xhat += dxhat * xhat[c];
            }
            Real* gx = x_in->grad.data() + r * cols;
            for (int c = 0; c < cols; ++c) {
              const Real dxhat = g[c] * g_in->values[c];
              gx[c] += inv * (dxhat - (sum_dxhat + xhat[c] * sum_dxhat_xhat) /
                                          Real(cols));
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Affine map, convolution, dropout

// x: [..., in], w: [in, out], b: [out]. Applies the same affine map to every
// last-axis vector.
template <typename Real>
Tensor<Real> Linear(const Tensor<Real>& x, const Tensor<Real>& w,
                    const Tensor<Real>& b) {
  auto [rows, in_dim] = detail::LastAxisView(x);
  if (w.rank() != 2 || w.dim(0) != in_dim)
    throw ShapeError("linear: weight rows must equal input last dim (" +
                     std::to_string(in_dim) + " vs " +
                     detail::ShapeStr(w.shape()) + ")");
  const int out_dim = w.dim(1);
  if (b.rank() != 1 || b.dim(0) != out_dim)
    throw ShapeError("linear: bias length must equal output dim");
  std::vector<int> out_shape = x.shape();
  out_shape.back() = out_dim;
  std::vector<Real> out(size_t(rows) * out_dim);
  {
    detail::ConstMapMat<Real> mx(x.values().data(), rows, in_dim);
    detail::ConstMapMat<Real> mw(w.values().data(), in_dim, out_dim);
    detail::MapMat<Real> mo(out.data(), rows, out_dim);
    mo.noalias() = mx * mw;
    mo.rowwise() += Eigen::Map<const Eigen::Matrix<Real, 1, Eigen::Dynamic>>(
        b.values().data(), out_dim);
  }
  return detail::MakeOp<Real>(
      std::move(out_shape), std::move(out), {x, w, b},
      [rows = rows, in_dim = in_dim, out_dim](TensorNode<Real>& self) {
        auto& x_in = self.inputs[0];
        auto& w_in = self.inputs[1];
        auto& b_in = self.inputs[2];
        detail::ConstMapMat<Real> g(self.grad.data(), rows, out_dim);
        if (x_in->requires_grad) {
          x_in->EnsureGrad();
          detail::ConstMapMat<Real> mw(w_in->values.data(), in_dim, out_dim);
          detail::MapMat<Real> gx(x_in->grad.data(), rows, in_dim);
          gx.noalias() += g * mw.transpose();
        }
        if (w_in->requires_grad) {
          w_in->EnsureGrad();
          detail::ConstMapMat<Real> mx(x_in->values.data(), rows, in_dim);
          detail::MapMat<Real> gw(w_in->grad.data(), in_dim, out_dim);
          gw.noalias() += mx.transpose() * g;
        }
        if (b_in->requires_grad) {
          b_in->EnsureGrad();
          for (int64_t r = 0; r < rows; ++r)
            for (int c = 0; c < out_dim; ++c)
              b_in->grad[c] += self.grad[r * out_dim + c];
        }
      });
}

// Zero-padded same-size 1D convolution along the first axis.
// x: [T, C], w: [out_ch, C, kernel], b: [out_ch] -> [T, out_ch].
template <typename Real>
Tensor<Real> Conv1dSame(const Tensor<Real>& x, const Tensor<Real>& w,
                        const Tensor<Real>& b) {
  if (x.rank() != 2) throw ShapeError("conv1d: input must be rank 2");
  if (w.rank() != 3) throw ShapeError("conv1d: weight must be rank 3");
  const int t_len = x.dim(0), channels = x.dim(1);
  const int out_ch = w.dim(0), kernel = w.dim(2);
  if (w.dim(1) != channels)
    throw ShapeError("conv1d: weight channel dim mismatch");
  if (b.rank() != 1 || b.dim(0) != out_ch)
    throw ShapeError("conv1d: bias length must equal out channels");
  const int left = (kernel - 1) / 2;

  std::vector<Real> out(size_t(t_len) * out_ch);
  const Real* xv = x.values().data();
  const Real* wv = w.values().data();
  for (int t = 0; t < t_len; ++t)
    for (int o = 0; o < out_ch; ++o) {
      Real acc = b.values()[o];
      for (int dk = 0; dk < kernel; ++dk) {
        const int src = t + dk - left;
        if (src < 0 || src >= t_len) continue;
        const Real* xr = xv + size_t(src) * channels;
        const Real* wr = wv + (size_t(o) * channels) * kernel + dk;
        for (int c = 0; c < channels; ++c) acc += xr[c] * wr[size_t(c) * kernel];
      }
      out[size_t(t) * out_ch + o] = acc;
    }

  return detail::MakeOp<Real>(
      {t_len, out_ch}, std::move(out), {x, w, b},
      [t_len, channels, out_ch, kernel, left](TensorNode<Real>& self) {
        auto& x_in = self.inputs[0];
        auto& w_in = self.inputs[1];
        auto& b_in = self.inputs[2];
        if (x_in->requires_grad) x_in->EnsureGrad();
        if (w_in->requires_grad) w_in->EnsureGrad();
        if (b_in->requires_grad) b_in->EnsureGrad();
        for (int t = 0; t < t_len; ++t)
          for (int o = 0; o < out_ch; ++o) {
            const Real g = self.grad[size_t(t) * out_ch + o];
            if (g == Real(0)) continue;
            if (b_in->requires_grad) b_in->grad[o] += g;
            for (int dk = 0; dk < kernel; ++dk) {
              const int src = t + dk - left;
              if (src < 0 || src >= t_len) continue;
              for (int c = 0; c < channels; ++c) {
                const size_t wi = (size_t(o) * channels + c) * kernel + dk;
                const size_t xi = size_t(src) * channels + c;
                if (w_in->requires_grad)
                  w_in->grad[wi] += g * x_in->values[xi];
                if (x_in->requires_grad)
                  x_in->grad[xi] += g * w_in->values[wi];
              }
            }
          }
      });
}

// Inverted dropout. With train off (or rate 0) this is the exact identity.
template <typename Real>
Tensor<Real> Dropout(const Tensor<Real>& x, double rate, bool train,
                     Rng& rng) {
  if (rate < 0.0 || rate >= 1.0)
    throw ConfigError("dropout rate must be in [0, 1)");
  if (!train || rate == 0.0) return x;
  const Real keep_scale = Real(1.0 / (1.0 - rate));
  std::vector<Real> mask(x.size());
  for (auto& m : mask) m = rng.Uniform() < rate ? Real(0) : keep_scale;
  std::vector<Real> out(x.values());
  for (int64_t i = 0; i < x.size(); ++i) out[i] *= mask[i];
  return detail::MakeOp<Real>(
      x.shape(), std::move(out), {x},
      [mask = std::move(mask)](TensorNode<Real>& self) {
        auto& in = self.inputs[0];
        if (!in->requires_grad) return;
        in->EnsureGrad();
        for (size_t i = 0; i < self.grad.size(); ++i)
          in->grad[i] += self.grad[i] * mask[i];
      });
}

// ---------------------------------------------------------------------------
// Multi-head attention

// The key projection carries no bias: softmax is invariant to the
// row-constant score shift a key bias would add, so the parameter would be
// structurally gradient-free.
template <typename Real>
struct AttentionParams {
  Tensor<Real> wq, bq, wk, wv, bv, wo, bo;
};

// Scaled dot-product attention with `heads` heads. Self-attention when
// queries == keys_values; cross-attention otherwise. All positions attend
// everywhere (no masking). If attn_weights is non-null, the per-head softmax
// matrices are appended to it.
template <typename Real>
Tensor<Real> MultiHeadAttention(const Tensor<Real>& queries,
                                const Tensor<Real>& keys_values,
                                const AttentionParams<Real>& p, int heads,
                                std::vector<Tensor<Real>>* attn_weights = nullptr) {
  if (queries.rank() != 2 || keys_values.rank() != 2)
    throw ShapeError("attention expects rank-2 inputs");
  const int d_model = queries.dim(1);
  if (keys_values.dim(1) != d_model)
    throw ShapeError("attention: query/key feature dims differ");
  if (heads < 1 || d_model % heads != 0)
    throw ConfigError("attention: feature dim " + std::to_string(d_model) +
                      " not divisible by " + std::to_string(heads) + " heads");
  const int d_head = d_model / heads;
  const Real scale = Real(1) / std::sqrt(Real(d_head));

  Tensor<Real> q = Linear(queries, p.wq, p.bq);
  Tensor<Real> k = Matmul(keys_values, p.wk);
  Tensor<Real> v = Linear(keys_values, p.wv, p.bv);

  std::vector<Tensor<Real>> head_outputs;
  head_outputs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    Tensor<Real> qh = SliceCols(q, h * d_head, d_head);
    Tensor<Real> kh = SliceCols(k, h * d_head, d_head);
    Tensor<Real> vh = SliceCols(v, h * d_head, d_head);
    Tensor<Real> scores = Scale(Matmul(qh, Transpose2d(kh)), scale);
    Tensor<Real> weights = SoftmaxLastDim(scores);
    if (attn_weights) attn_weights->push_back(weights);
    head_outputs.push_back(Matmul(weights, vh));
  }
  return Linear(ConcatCols(head_outputs), p.wo, p.bo);
}

}  // namespace mixsep

#endif  // MIXSEP_OPS_H_
