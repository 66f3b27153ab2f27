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
// Set-prediction loss: each predicted source is matched greedily, in index
// order, to the most similar unclaimed ground-truth source under MSE, and
// the matched costs are accumulated and normalized by the set size. A
// minimum-cost (Hungarian) assignment is provided as the test oracle.

#ifndef MIXSEP_BIJECTION_H_
#define MIXSEP_BIJECTION_H_

#include <vector>

#include "mixsep/common.h"
#include "mixsep/ops.h"
#include "mixsep/tensor.h"

namespace mixsep {

// s x s similarity matrix; at(i, j) = MSE(pred_i, truth_j).
struct SimMatrix {
  int s = 0;
  std::vector<double> values;

  explicit SimMatrix(int size) : s(size), values(size_t(size) * size, 0.0) {}
  double& at(int i, int j) { return values[size_t(i) * s + j]; }
  double at(int i, int j) const { return values[size_t(i) * s + j]; }
};

struct Assignment {
  double loss = 0.0;               // matched cost sum / s
  std::vector<int> truth_of_pred;  // permutation: prediction i -> truth index
};

// Mean squared difference between two equally sized value arrays.
double MseValue(const std::vector<double>& a, const std::vector<double>& b);

SimMatrix PairwiseMse(const std::vector<std::vector<double>>& preds,
                      const std::vector<std::vector<double>>& truths);

// Greedy matching in prediction index order; argmin ties break toward the
// smallest remaining truth index.
Assignment GreedyAssign(const SimMatrix& sim);

// Minimum-cost perfect matching (O(s^3) potentials method). Test oracle:
// training always uses the greedy rule.
Assignment HungarianAssign(const SimMatrix& sim);

// Differentiable greedy-bijection MSE over prediction/truth tensors. The
// assignment is recomputed from current values and then frozen: gradients
// flow only through the selected MSE entries.
template <typename Real>
struct BijectionLoss {
  Tensor<Real> loss;
  std::vector<int> truth_of_pred;
};

template <typename Real>
BijectionLoss<Real> GreedyBijectionLoss(const std::vector<Tensor<Real>>& preds,
                                        const std::vector<Tensor<Real>>& truths) {
  if (preds.empty() || preds.size() != truths.size())
    throw ContractError("bijection loss requires equally sized nonempty sets");
  const int s = static_cast<int>(preds.size());

  std::vector<Tensor<Real>> entries;
  entries.reserve(size_t(s) * s);
  SimMatrix sim(s);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) {
      Tensor<Real> mse = MseLoss(preds[i], truths[j]);
      sim.at(i, j) = static_cast<double>(mse.item());
      entries.push_back(std::move(mse));
    }

  Assignment assign = GreedyAssign(sim);
  std::vector<Tensor<Real>> selected;
  selected.reserve(s);
  for (int i = 0; i < s; ++i)
    selected.push_back(entries[size_t(i) * s + assign.truth_of_pred[i]]);
  return {Scale(AddN(selected), Real(1) / Real(s)),
          std::move(assign.truth_of_pred)};
}

}  // namespace mixsep

#endif  // MIXSEP_BIJECTION_H_
