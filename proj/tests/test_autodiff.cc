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
#include <cmath>

#include "doctest.h"
#include "mixsep/adam.h"
#include "mixsep/gradcheck.h"
#include "mixsep/gradcheck_suite.h"
#include "mixsep/ops.h"
#include "mixsep/rng.h"
#include "mixsep/stt.h"
#include "mixsep/tensor.h"

using namespace mixsep;
using T = Tensor<double>;

namespace {

T RandomTensor(std::vector<int> shape, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> data(T::NumElements(shape));
  for (auto& v : data) v = rng.Uniform(-1.0, 1.0);
  return T::FromData(std::move(shape), std::move(data), true);
}

}  // namespace

TEST_CASE("relu forwards the positive part") {
  T x = T::FromData({3}, {-1.0, 0.0, 2.0});
  T y = Relu(x);
  CHECK(y.values() == std::vector<double>{0.0, 0.0, 2.0});
}

TEST_CASE("softmax of a constant row is uniform") {
  T x = T::FromData({1, 3}, {0.0, 0.0, 0.0});
  T y = SoftmaxLastDim(x);
  for (double v : y.values()) CHECK(v == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("softmax over an empty axis is a config error") {
  T x = T::Zeros({3, 0});
  CHECK_THROWS_AS(SoftmaxLastDim(x), ConfigError);
}

TEST_CASE("matmul matches a naive triple loop") {
  Rng rng(42);
  T a = RandomTensor({3, 4}, 1);
  T b = RandomTensor({4, 2}, 2);
  T c = Matmul(a, b);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k)
        acc += a.values()[i * 4 + k] * b.values()[k * 2 + j];
      CHECK(std::abs(c.values()[i * 2 + j] - acc) <= 1e-12);
    }
}

TEST_CASE("matmul shape errors carry the offending dims") {
  T a = T::Zeros({3, 4});
  T b = T::Zeros({5, 2});
  CHECK_THROWS_WITH_AS(Matmul(a, b), doctest::Contains("4"), ShapeError);
}

TEST_CASE("backward on sum gives all-ones gradient") {
  T p = RandomTensor({2, 3}, 3);
  Backward(Sum(p));
  for (double g : p.grad()) CHECK(g == 1.0);
}

TEST_CASE("backward on sum of squares gives 2p") {
  T p = RandomTensor({5}, 4);
  Backward(Sum(Mul(p, p)));
  for (int i = 0; i < 5; ++i)
    CHECK(p.grad()[i] == doctest::Approx(2.0 * p.values()[i]));
}

TEST_CASE("backward contract violations") {
  T p = RandomTensor({2, 2}, 5);
  SUBCASE("non-scalar loss") {
    T y = Mul(p, p);
    CHECK_THROWS_AS(Backward(y), ContractError);
  }
  SUBCASE("double backward without rebuilding the graph") {
    T loss = Sum(p);
    Backward(loss);
    CHECK_THROWS_AS(Backward(loss), DoubleBackwardError);
  }
  SUBCASE("constants stay untouched") {
    T c = T::FromData({2, 2}, {1.0, 2.0, 3.0, 4.0});  // no grad
    Backward(Sum(Mul(p, c)));
    CHECK(p.has_grad());
    CHECK(!c.has_grad());
  }
}

TEST_CASE("gradients accumulate across shared subexpressions") {
  T p = RandomTensor({3}, 6);
  // loss = sum(p) + sum(p) -> grad 2
  Backward(Add(Sum(p), Sum(p)));
  for (double g : p.grad()) CHECK(g == doctest::Approx(2.0));
}

TEST_CASE("layer_norm normalizes each vector before gain and bias") {
  T x = RandomTensor({7, 16}, 8);
  T gain = T::Full({16}, 1.0, true);
  T bias = T::Zeros({16}, true);
  T y = LayerNormLastDim(x, gain, bias);
  for (int r = 0; r < 7; ++r) {
    double mu = 0.0, var = 0.0;
    for (int c = 0; c < 16; ++c) mu += y.values()[r * 16 + c];
    mu /= 16;
    for (int c = 0; c < 16; ++c) {
      double d = y.values()[r * 16 + c] - mu;
      var += d * d;
    }
    var /= 16;
    CHECK(std::abs(mu) <= 1e-9);
    CHECK(std::abs(var - 1.0) <= 1e-6);
  }
}

TEST_CASE("attention weight rows sum to one") {
  Rng rng(9);
  nn::AttentionLayer<double> attn;
  attn.Init(8, 2, rng);
  T x = RandomTensor({6, 8}, 10);
  std::vector<T> weights;
  attn(x, x, &weights);
  REQUIRE(weights.size() == 2);
  for (const auto& w : weights) {
    REQUIRE(w.shape() == std::vector<int>{6, 6});
    for (int r = 0; r < 6; ++r) {
      double row = 0.0;
      for (int c = 0; c < 6; ++c) row += w.values()[r * 6 + c];
      CHECK(std::abs(row - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("attention rejects head counts that do not divide the width") {
  Rng rng(11);
  nn::AttentionLayer<double> attn;
  attn.Init(8, 2, rng);
  attn.heads = 3;
  T x = RandomTensor({4, 8}, 12);
  CHECK_THROWS_AS(attn(x, x), ConfigError);
}

TEST_CASE("conv1d_same preserves the convolved axis length") {
  Rng rng(13);
  for (int t_len : {1, 2, 5, 9}) {
    T x = RandomTensor({t_len, 3}, 100 + t_len);
    nn::ConvLayer<double> conv;
    conv.Init(3, 3, 3, rng);
    T y = Conv1dSame(x, conv.w, conv.b);
    CHECK(y.dim(0) == t_len);
    CHECK(y.dim(1) == 3);
  }
}

TEST_CASE("dropout") {
  T x = RandomTensor({64}, 14);
  Rng rng(15);
  SUBCASE("train off is the exact identity") {
    T y = Dropout(x, 0.5, false, rng);
    CHECK(y.values() == x.values());
  }
  SUBCASE("rate zero is the exact identity") {
    T y = Dropout(x, 0.0, true, rng);
    CHECK(y.values() == x.values());
  }
  SUBCASE("train on zeroes some entries and rescales the rest") {
    T y = Dropout(x, 0.5, true, rng);
    int zeros = 0;
    for (int i = 0; i < 64; ++i) {
      if (y.values()[i] == 0.0) {
        ++zeros;
      } else {
        CHECK(y.values()[i] == doctest::Approx(2.0 * x.values()[i]));
      }
    }
    CHECK(zeros > 8);
    CHECK(zeros < 56);
  }
  SUBCASE("backward follows the stored mask") {
    T p = RandomTensor({32}, 16);
    Rng drop_rng(17);
    T y = Dropout(p, 0.25, true, drop_rng);
    Backward(Sum(y));
    for (int i = 0; i < 32; ++i) {
      const double expected = y.values()[i] == 0.0 ? 0.0 : 1.0 / 0.75;
      CHECK(p.grad()[i] == doctest::Approx(expected));
    }
  }
  SUBCASE("rate 1 is rejected") {
    CHECK_THROWS_AS(Dropout(x, 1.0, true, rng), ConfigError);
  }
}

TEST_CASE("finite differences: trivial and structured cases") {
  SUBCASE("f = sum has zero relative error") {
    T x = RandomTensor({3, 4}, 18);
    std::function<T()> f = [x]() { return Sum(x); };
    CHECK(FiniteDiffCheck<double>(f, x) <= 1e-10);
  }
  SUBCASE("layer_norm then weighted sum within 1e-6") {
    T x = RandomTensor({4, 6}, 19);
    T gain = T::Full({6}, 1.0, true);
    T bias = T::Zeros({6}, true);
    T r = RandomTensor({4, 6}, 20);
    std::function<T()> f = [=]() {
      return Sum(Mul(LayerNormLastDim(x, gain, bias), r));
    };
    CHECK(FiniteDiffCheck<double>(f, x) <= 1e-6);
  }
  SUBCASE("two-head self-attention within 1e-5") {
    Rng rng(21);
    nn::AttentionLayer<double> attn;
    attn.Init(8, 2, rng);
    T x = RandomTensor({5, 8}, 22);
    T r = RandomTensor({5, 8}, 23);
    std::function<T()> f = [=]() { return Sum(Mul(attn(x, x), r)); };
    CHECK(FiniteDiffCheck<double>(f, x) <= 1e-5);
  }
}

TEST_CASE("op gradient sweep stays under tolerance") {
  // The acceptance suite runs 20 seeds; a lighter sweep guards the unit run.
  for (const auto& entry : RunOpGradChecks(4)) {
    INFO(entry.name);
    CHECK(entry.max_rel_err <= entry.tolerance);
  }
}

TEST_CASE("adam") {
  SUBCASE("zero grads leave parameters unchanged") {
    T p = RandomTensor({4}, 24);
    std::vector<double> before = p.values();
    AdamOptimizer<double> adam({p}, {0.001});
    p.ZeroGrad();
    adam.Step();
    CHECK(p.values() == before);
    CHECK(adam.step_count() == 1);
  }
  SUBCASE("first step moves by about lr against the gradient") {
    T p = T::FromData({1}, {0.5}, true);
    AdamOptimizer<double> adam({p}, {0.001});
    p.grad()[0] = 1.0;
    adam.Step();
    CHECK(p.values()[0] == doctest::Approx(0.5 - 0.001).epsilon(1e-6));
    CHECK(p.grad()[0] == 0.0);  // grads zeroed by the step
  }
  SUBCASE("missing grad is a contract error") {
    T p = RandomTensor({4}, 25);
    AdamOptimizer<double> adam({p}, {0.001});
    CHECK_THROWS_AS(adam.Step(), ContractError);
  }
  SUBCASE("100 steps on w^2 from w=1 converge below 0.1") {
    T w = T::FromData({1}, {1.0}, true);
    AdamOptimizer<double> adam({w}, {0.1});
    for (int i = 0; i < 100; ++i) {
      Backward(Sum(Mul(w, w)));
      adam.Step();
    }
    CHECK(std::abs(w.values()[0]) < 0.1);
  }
}
