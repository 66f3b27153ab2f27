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

#include "mixsep/gradcheck_suite.h"

#include <functional>

#include "mixsep/bijection.h"
#include "mixsep/gradcheck.h"
#include "mixsep/ops.h"
#include "mixsep/stt.h"

namespace mixsep {

namespace {

using T = Tensor<double>;

// Uniform values kept away from zero so relu/argmax kinks cannot sit inside
// the finite-difference stencil.
T RandomTensor(std::vector<int> shape, Rng& rng, bool requires_grad = true) {
  std::vector<double> data(T::NumElements(shape));
  for (auto& v : data) {
    v = rng.Uniform(-1.0, 1.0);
    if (std::abs(v) < 1e-3) v += v < 0 ? -1e-3 : 1e-3;
  }
  return T::FromData(std::move(shape), std::move(data), requires_grad);
}

// Fixed random readout weights; a plain sum would hide gradient structure
// (softmax rows sum to one, for instance).
T Readout(const T& x, Rng& rng) {
  T r = RandomTensor(x.shape(), rng, false);
  return Sum(Mul(x, r));
}

struct OpCase {
  std::string name;
  // Returns (loss builder, parameters to probe) for one seeded instance.
  std::function<std::pair<std::function<T()>, std::vector<T>>(Rng&)> make;
};

std::vector<OpCase> BuildOpCases() {
  std::vector<OpCase> cases;

  cases.push_back({"matmul", [](Rng& rng) {
    T a = RandomTensor({3, 4}, rng);
    T b = RandomTensor({4, 2}, rng);
    auto r = std::make_shared<T>(RandomTensor({3, 2}, rng, false));
    std::function<T()> f = [a, b, r]() { return Sum(Mul(Matmul(a, b), *r)); };
    return std::make_pair(f, std::vector<T>{a, b});
  }});

  cases.push_back({"transpose", [](Rng& rng) {
    T a = RandomTensor({3, 5}, rng);
    auto r = std::make_shared<T>(RandomTensor({5, 3}, rng, false));
    std::function<T()> f = [a, r]() { return Sum(Mul(Transpose2d(a), *r)); };
    return std::make_pair(f, std::vector<T>{a});
  }});

  cases.push_back({"reshape", [](Rng& rng) {
    T a = RandomTensor({4, 6}, rng);
    auto r = std::make_shared<T>(RandomTensor({2, 3, 4}, rng, false));
    std::function<T()> f = [a, r]() {
      return Sum(Mul(Reshape(a, {2, 3, 4}), *r));
    };
    return std::make_pair(f, std::vector<T>{a});
  }});

  cases.push_back({"add", [](Rng& rng) {
    T a = RandomTensor({4, 3}, rng);
    T b = RandomTensor({4, 3}, rng);
    auto r = std::make_shared<T>(RandomTensor({4, 3}, rng, false));
    std::function<T()> f = [a, b, r]() { return Sum(Mul(Add(a, b), *r)); };
    return std::make_pair(f, std::vector<T>{a, b});
  }});

  cases.push_back({"elementwise-multiply", [](Rng& rng) {
    T a = RandomTensor({4, 3}, rng);
    T b = RandomTensor({4, 3}, rng);
    auto r = std::make_shared<T>(RandomTensor({4, 3}, rng, false));
    std::function<T()> f = [a, b, r]() { return Sum(Mul(Mul(a, b), *r)); };
    return std::make_pair(f, std::vector<T>{a, b});
  }});

  cases.push_back({"relu", [](Rng& rng) {
    T a = RandomTensor({5, 4}, rng);
    auto r = std::make_shared<T>(RandomTensor({5, 4}, rng, false));
    std::function<T()> f = [a, r]() { return Sum(Mul(Relu(a), *r)); };
    return std::make_pair(f, std::vector<T>{a});
  }});

  cases.push_back({"softmax", [](Rng& rng) {
    T a = RandomTensor({4, 6}, rng);
    auto r = std::make_shared<T>(RandomTensor({4, 6}, rng, false));
    std::function<T()> f = [a, r]() { return Sum(Mul(SoftmaxLastDim(a), *r)); };
    return std::make_pair(f, std::vector<T>{a});
  }});

  cases.push_back({"layer_norm", [](Rng& rng) {
    T x = RandomTensor({4, 6}, rng);
    T gain = RandomTensor({6}, rng);
    T bias = RandomTensor({6}, rng);
    auto r = std::make_shared<T>(RandomTensor({4, 6}, rng, false));
    std::function<T()> f = [x, gain, bias, r]() {
      return Sum(Mul(LayerNormLastDim(x, gain, bias), *r));
    };
    return std::make_pair(f, std::vector<T>{x, gain, bias});
  }});

  cases.push_back({"linear", [](Rng& rng) {
    T x = RandomTensor({5, 4}, rng);
    T w = RandomTensor({4, 3}, rng);
    T b = RandomTensor({3}, rng);
    auto r = std::make_shared<T>(RandomTensor({5, 3}, rng, false));
    std::function<T()> f = [x, w, b, r]() {
      return Sum(Mul(Linear(x, w, b), *r));
    };
    return std::make_pair(f, std::vector<T>{x, w, b});
  }});

  cases.push_back({"conv1d_same", [](Rng& rng) {
    T x = RandomTensor({7, 3}, rng);
    T w = RandomTensor({4, 3, 3}, rng);
    T b = RandomTensor({4}, rng);
    auto r = std::make_shared<T>(RandomTensor({7, 4}, rng, false));
    std::function<T()> f = [x, w, b, r]() {
      return Sum(Mul(Conv1dSame(x, w, b), *r));
    };
    return std::make_pair(f, std::vector<T>{x, w, b});
  }});

  cases.push_back({"dropout(off)", [](Rng& rng) {
    T x = RandomTensor({5, 4}, rng);
    auto r = std::make_shared<T>(RandomTensor({5, 4}, rng, false));
    std::function<T()> f = [x, r]() {
      Rng unused(1);
      return Sum(Mul(Dropout(x, 0.5, /*train=*/false, unused), *r));
    };
    return std::make_pair(f, std::vector<T>{x});
  }});

  cases.push_back({"self-attention", [](Rng& rng) {
    T x = RandomTensor({5, 8}, rng);
    nn::AttentionLayer<double> attn;
    attn.Init(8, 2, rng);
    auto r = std::make_shared<T>(RandomTensor({5, 8}, rng, false));
    std::function<T()> f = [x, attn, r]() { return Sum(Mul(attn(x, x), *r)); };
    std::vector<T> params{x,         attn.p.wq, attn.p.bq, attn.p.wk,
                          attn.p.wv, attn.p.bv, attn.p.wo, attn.p.bo};
    return std::make_pair(f, params);
  }});

  cases.push_back({"cross-attention", [](Rng& rng) {
    T q = RandomTensor({4, 6}, rng);
    T kv = RandomTensor({7, 6}, rng);
    nn::AttentionLayer<double> attn;
    attn.Init(6, 2, rng);
    auto r = std::make_shared<T>(RandomTensor({4, 6}, rng, false));
    std::function<T()> f = [q, kv, attn, r]() {
      return Sum(Mul(attn(q, kv), *r));
    };
    std::vector<T> params{q,         kv,        attn.p.wq, attn.p.bq,
                          attn.p.wk, attn.p.wv, attn.p.bv, attn.p.wo,
                          attn.p.bo};
    return std::make_pair(f, params);
  }});

  return cases;
}

}  // namespace

std::vector<GradCheckEntry> RunOpGradChecks(int seeds_per_op) {
  std::vector<GradCheckEntry> results;
  for (const auto& op_case : BuildOpCases()) {
    GradCheckEntry entry{op_case.name, 0.0, 1e-5};
    for (int seed = 0; seed < seeds_per_op; ++seed) {
      Rng rng(ChildSeed(0xabcde, seed));
      auto [f, params] = op_case.make(rng);
      // 48 covers every tensor in these cases except the largest attention
      // projections, whose near-zero-gradient coordinates sit below what
      // central differences can resolve at this tolerance.
      const double err = ModelGradCheck<double>(f, params, 1e-5, 48);
      entry.max_rel_err = std::max(entry.max_rel_err, err);
    }
    results.push_back(std::move(entry));
  }
  return results;
}

GradCheckEntry RunToyModelGradCheck(int max_coords_per_param) {
  SttConfig cfg;
  cfg.frames = 12;
  cfg.height = 18;
  cfg.embed_dim = 16;
  cfg.num_encoders = 2;
  cfg.num_decoders = 2;
  cfg.heads = 2;
  cfg.sources = 2;
  cfg.dropout = 0.0;

  SttModel<double> model(cfg, 0x70f);
  Rng rng(0x7e57);
  T mixture = RandomTensor({cfg.frames, cfg.height}, rng, false);
  std::vector<T> truths;
  for (int k = 0; k < cfg.sources; ++k)
    truths.push_back(RandomTensor({cfg.frames, cfg.height}, rng, false));

  std::function<T()> f = [&model, &mixture, &truths]() {
    std::vector<T> preds = model.Forward(mixture, false);
    return GreedyBijectionLoss(preds, truths).loss;
  };
  const double err =
      ModelGradCheck<double>(f, model.Params(), 1e-5, max_coords_per_param);
  return {"stt-toy-model", err, 1e-4};
}

}  // namespace mixsep
