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

#ifndef MIXSEP_GRADCHECK_H_
#define MIXSEP_GRADCHECK_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "mixsep/tensor.h"

namespace mixsep {

// Compares the reverse-mode gradient of a scalar function against central
// finite differences, coordinate by coordinate. `f` must rebuild its graph
// from the current values of `x` on every call and must be deterministic
// (dropout off). For large tensors at most `max_coords` coordinates are
// probed (all of them when max_coords <= 0), taken in descending |analytic|
// order: central differences on coordinates whose true derivative sits at
// the rounding floor measure noise, not correctness. Returns the max
// relative error with denominator max(|analytic|, |numeric|, 1e-8).
template <typename Real>
double FiniteDiffCheck(const std::function<Tensor<Real>()>& f, Tensor<Real>& x,
                       Real step = Real(1e-5), int max_coords = -1) {
  x.ZeroGrad();
  Tensor<Real> loss = f();
  Backward(loss);
  if (!std::isfinite(static_cast<double>(loss.item())))
    throw NumericError("finite_diff_check: loss is not finite");
  const std::vector<Real> analytic = x.grad();

  const int64_t n = x.size();
  std::vector<int64_t> coords(n);
  for (int64_t i = 0; i < n; ++i) coords[i] = i;
  if (max_coords > 0 && n > max_coords) {
    std::stable_sort(coords.begin(), coords.end(),
                     [&analytic](int64_t a, int64_t b) {
                       return std::abs(analytic[a]) > std::abs(analytic[b]);
                     });
    coords.resize(max_coords);
  }

  double max_rel = 0.0;
  for (int64_t i : coords) {
    const Real saved = x.values()[i];
    x.values()[i] = saved + step;
    const double up = static_cast<double>(f().item());
    x.values()[i] = saved - step;
    const double down = static_cast<double>(f().item());
    x.values()[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down))
      throw NumericError("finite_diff_check: non-finite value encountered");
    const double numeric = (up - down) / (2.0 * static_cast<double>(step));
    const double a = static_cast<double>(analytic[i]);
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
  }
  return max_rel;
}

// Finite-difference checks every listed parameter, probing at most
// max_coords_per_param coordinates each.
template <typename Real>
double ModelGradCheck(const std::function<Tensor<Real>()>& f,
                      const std::vector<Tensor<Real>>& params,
                      Real step = Real(1e-5), int max_coords_per_param = -1) {
  double max_rel = 0.0;
  for (Tensor<Real> p : params) {
    max_rel = std::max(max_rel,
                       FiniteDiffCheck<Real>(f, p, step, max_coords_per_param));
  }
  return max_rel;
}

}  // namespace mixsep

#endif  // MIXSEP_GRADCHECK_H_
