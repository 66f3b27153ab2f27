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

#include "mixsep/bijection.h"

#include <algorithm>
#include <limits>

namespace mixsep {

double MseValue(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty())
    throw ShapeError("mse requires equal nonempty sizes");
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

SimMatrix PairwiseMse(const std::vector<std::vector<double>>& preds,
                      const std::vector<std::vector<double>>& truths) {
  if (preds.empty() || preds.size() != truths.size())
    throw ContractError("pairwise mse requires equally sized nonempty sets");
  const int s = static_cast<int>(preds.size());
  SimMatrix sim(s);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) sim.at(i, j) = MseValue(preds[i], truths[j]);
  return sim;
}

Assignment GreedyAssign(const SimMatrix& sim) {
  const int s = sim.s;
  if (s < 1) throw ContractError("greedy assignment needs s >= 1");
  Assignment out;
  out.truth_of_pred.assign(s, -1);
  std::vector<bool> taken(s, false);
  double total = 0.0;
  for (int i = 0; i < s; ++i) {
    int best = -1;
    for (int j = 0; j < s; ++j) {
      if (taken[j]) continue;
      if (best < 0 || sim.at(i, j) < sim.at(i, best)) best = j;
    }
    taken[best] = true;
    out.truth_of_pred[i] = best;
    total += sim.at(i, best);
  }
  out.loss = total / s;
  return out;
}

Assignment HungarianAssign(const SimMatrix& sim) {
  const int n = sim.s;
  if (n < 1) throw ContractError("hungarian assignment needs s >= 1");
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // Potentials method over a matrix with 1-based dummy row/column 0.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = match[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = sim.at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Assignment out;
  out.truth_of_pred.assign(n, -1);
  double total = 0.0;
  for (int j = 1; j <= n; ++j) {
    out.truth_of_pred[match[j] - 1] = j - 1;
    total += sim.at(match[j] - 1, j - 1);
  }
  out.loss = total / n;
  return out;
}

}  // namespace mixsep
