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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "mixsep/bijection.h"
#include "mixsep/gradcheck.h"
#include "mixsep/rng.h"

using namespace mixsep;
using T = Tensor<double>;

namespace {

SimMatrix RandomSim(int s, uint64_t seed) {
  Rng rng(seed);
  SimMatrix sim(s);
  for (auto& v : sim.values) v = rng.Uniform(0.0, 10.0);
  return sim;
}

double BruteForceOptimal(const SimMatrix& sim) {
  std::vector<int> perm(sim.s);
  for (int i = 0; i < sim.s; ++i) perm[i] = i;
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (int i = 0; i < sim.s; ++i) cost += sim.at(i, perm[i]);
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / sim.s;
}

bool IsPermutation(const std::vector<int>& p) {
  std::vector<bool> seen(p.size(), false);
  for (int v : p) {
    if (v < 0 || v >= int(p.size()) || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

std::vector<std::vector<double>> RandomSet(int s, int n, uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> out(s, std::vector<double>(n));
  for (auto& row : out)
    for (auto& v : row) v = rng.Uniform(-1.0, 1.0);
  return out;
}

}  // namespace

TEST_CASE("pairwise mse") {
  SUBCASE("preds equal to truths give a zero diagonal") {
    auto set = RandomSet(3, 10, 1);
    SimMatrix sim = PairwiseMse(set, set);
    for (int i = 0; i < 3; ++i) CHECK(sim.at(i, i) == 0.0);
  }
  SUBCASE("zeros vs constant c gives c^2") {
    std::vector<std::vector<double>> preds{{0, 0, 0, 0}};
    std::vector<std::vector<double>> truths{{0.5, 0.5, 0.5, 0.5}};
    SimMatrix sim = PairwiseMse(preds, truths);
    CHECK(sim.at(0, 0) == doctest::Approx(0.25));
  }
  SUBCASE("random case matches a scalar loop") {
    auto preds = RandomSet(2, 6, 2);
    auto truths = RandomSet(2, 6, 3);
    SimMatrix sim = PairwiseMse(preds, truths);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        double acc = 0.0;
        for (int k = 0; k < 6; ++k) {
          double d = preds[i][k] - truths[j][k];
          acc += d * d;
        }
        CHECK(std::abs(sim.at(i, j) - acc / 6.0) <= 1e-12);
      }
  }
  SUBCASE("shape mismatch") {
    std::vector<std::vector<double>> preds{{0, 0}};
    std::vector<std::vector<double>> truths{{1, 2, 3}};
    CHECK_THROWS_AS(PairwiseMse(preds, truths), ShapeError);
  }
}

TEST_CASE("greedy matches the worked 2x2 trace and hungarian beats it") {
  SimMatrix sim(2);
  sim.at(0, 0) = 1.0;
  sim.at(0, 1) = 2.0;
  sim.at(1, 0) = 0.5;
  sim.at(1, 1) = 3.0;
  Assignment greedy = GreedyAssign(sim);
  CHECK(greedy.loss == doctest::Approx(2.0));  // (1 + 3) / 2
  CHECK(greedy.truth_of_pred == std::vector<int>{0, 1});
  Assignment optimal = HungarianAssign(sim);
  CHECK(optimal.loss == doctest::Approx(1.25));  // (2 + 0.5) / 2
  CHECK(optimal.truth_of_pred == std::vector<int>{1, 0});
}

TEST_CASE("greedy ties break toward the smallest truth index") {
  SimMatrix sim(2);
  sim.at(0, 0) = 1.0;
  sim.at(0, 1) = 1.0;
  sim.at(1, 0) = 0.0;
  sim.at(1, 1) = 5.0;
  Assignment greedy = GreedyAssign(sim);
  CHECK(greedy.truth_of_pred == std::vector<int>{0, 1});
}

TEST_CASE("greedy dominates hungarian and both return permutations") {
  for (int s : {2, 3, 5}) {
    for (uint64_t seed = 0; seed < 200; ++seed) {
      SimMatrix sim = RandomSim(s, seed * 17 + s);
      Assignment greedy = GreedyAssign(sim);
      Assignment optimal = HungarianAssign(sim);
      CHECK(greedy.loss >= optimal.loss - 1e-12);
      CHECK(IsPermutation(greedy.truth_of_pred));
      CHECK(IsPermutation(optimal.truth_of_pred));
    }
  }
}

TEST_CASE("hungarian equals brute force over all 3! permutations") {
  for (uint64_t seed = 0; seed < 1000; ++seed) {
    SimMatrix sim = RandomSim(3, seed);
    CHECK(HungarianAssign(sim).loss ==
          doctest::Approx(BruteForceOptimal(sim)).epsilon(1e-12));
  }
}

TEST_CASE("diagonal-dominant matrices force the identity on both") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    SimMatrix sim(3);
    for (auto& v : sim.values) v = rng.Uniform(5.0, 10.0);
    for (int i = 0; i < 3; ++i) sim.at(i, i) = rng.Uniform(0.0, 1.0);
    Assignment greedy = GreedyAssign(sim);
    Assignment optimal = HungarianAssign(sim);
    CHECK(greedy.truth_of_pred == std::vector<int>{0, 1, 2});
    CHECK(greedy.loss == doctest::Approx(optimal.loss));
  }
}

TEST_CASE("graph loss: permuted truths give zero loss and recover the permutation") {
  auto truths_values = RandomSet(3, 12, 7);
  std::vector<T> truths, preds;
  for (const auto& row : truths_values)
    truths.push_back(T::FromData({3, 4}, std::vector<double>(row)));
  const std::vector<int> perm{2, 0, 1};
  for (int i = 0; i < 3; ++i)
    preds.push_back(
        T::FromData({3, 4}, std::vector<double>(truths_values[perm[i]])));
  auto result = GreedyBijectionLoss(preds, truths);
  CHECK(result.loss.item() <= 1e-12);
  CHECK(result.truth_of_pred == perm);
}

TEST_CASE("graph loss: scaling preds and truths by c scales the loss by c^2") {
  auto pv = RandomSet(2, 8, 8);
  auto tv = RandomSet(2, 8, 9);
  auto build = [&](double c) {
    std::vector<T> preds, truths;
    for (const auto& row : pv) {
      auto scaled = row;
      for (auto& v : scaled) v *= c;
      preds.push_back(T::FromData({8}, std::move(scaled)));
    }
    for (const auto& row : tv) {
      auto scaled = row;
      for (auto& v : scaled) v *= c;
      truths.push_back(T::FromData({8}, std::move(scaled)));
    }
    return GreedyBijectionLoss(preds, truths);
  };
  auto base = build(1.0);
  auto scaled = build(3.0);
  CHECK(scaled.loss.item() == doctest::Approx(9.0 * base.loss.item()));
  CHECK(scaled.truth_of_pred == base.truth_of_pred);
}

TEST_CASE("graph loss gradient passes finite differences away from ties") {
  Rng rng(10);
  std::vector<T> preds, truths;
  for (int i = 0; i < 3; ++i) {
    std::vector<double> p(10), t(10);
    for (auto& v : p) v = rng.Uniform(-1.0, 1.0);
    for (auto& v : t) v = rng.Uniform(-1.0, 1.0);
    preds.push_back(T::FromData({10}, std::move(p), true));
    truths.push_back(T::FromData({10}, std::move(t)));
  }
  for (auto& p : preds) {
    std::function<T()> f = [&]() {
      return GreedyBijectionLoss(preds, truths).loss;
    };
    CHECK(FiniteDiffCheck<double>(f, p) <= 1e-6);
  }
}

TEST_CASE("graph loss contract errors") {
  std::vector<T> a{T::Zeros({4})};
  std::vector<T> b;
  CHECK_THROWS_AS(GreedyBijectionLoss(a, b), ContractError);
  std::vector<T> two{T::Zeros({4}), T::Zeros({4})};
  CHECK_THROWS_AS(GreedyBijectionLoss(a, two), ContractError);
}
