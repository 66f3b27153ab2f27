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

#ifndef MIXSEP_ADAM_H_
#define MIXSEP_ADAM_H_

#include <cmath>
#include <vector>

#include "mixsep/tensor.h"

namespace mixsep {

// Adam with bias correction. One state slot per parameter, matched by
// position; step() applies the update in place and zeroes the grads.
template <typename Real>
class AdamOptimizer {
 public:
  struct Hyper {
    Real lr = Real(0.001);
    Real beta1 = Real(0.9);
    Real beta2 = Real(0.999);
    Real eps = Real(1e-8);
  };

  AdamOptimizer(std::vector<Tensor<Real>> params, Hyper hyper)
      : params_(std::move(params)), hyper_(hyper) {
    slots_.resize(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
      slots_[i].m.assign(params_[i].size(), Real(0));
      slots_[i].v.assign(params_[i].size(), Real(0));
    }
  }

  int64_t step_count() const { return t_; }
  const Hyper& hyper() const { return hyper_; }

  void Step() {
    for (const auto& p : params_)
      if (!p.has_grad())
        throw ContractError("adam: parameter has no gradient");
    ++t_;
    const Real bc1 = Real(1) - std::pow(hyper_.beta1, Real(t_));
    const Real bc2 = Real(1) - std::pow(hyper_.beta2, Real(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
      auto& values = params_[i].values();
      auto& grad = params_[i].grad();
      auto& slot = slots_[i];
      for (size_t j = 0; j < values.size(); ++j) {
        const Real g = grad[j];
        slot.m[j] = hyper_.beta1 * slot.m[j] + (Real(1) - hyper_.beta1) * g;
        slot.v[j] = hyper_.beta2 * slot.v[j] + (Real(1) - hyper_.beta2) * g * g;
        const Real m_hat = slot.m[j] / bc1;
        const Real v_hat = slot.v[j] / bc2;
        values[j] -= hyper_.lr * m_hat / (std::sqrt(v_hat) + hyper_.eps);
      }
      params_[i].ZeroGrad();
    }
  }

 private:
  struct Slot {
    std::vector<Real> m, v;
  };
  std::vector<Tensor<Real>> params_;
  std::vector<Slot> slots_;
  Hyper hyper_;
  int64_t t_ = 0;
};

}  // namespace mixsep

#endif  // MIXSEP_ADAM_H_
