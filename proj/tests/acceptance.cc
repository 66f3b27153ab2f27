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
// Behavioral acceptance suite. Each criterion prints one PASS/FAIL line;
// the exit code is the number of failures. Run with no arguments for the
// full suite or pass criterion numbers to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mixsep/bijection.h"
#include "mixsep/forge.h"
#include "mixsep/gradcheck_suite.h"
#include "mixsep/train.h"

using namespace mixsep;

namespace {

PcmClip RandomClip(int n, int rate, uint64_t seed) {
  Rng rng(seed);
  PcmClip c;
  c.sample_rate = rate;
  c.samples.resize(n);
  for (auto& v : c.samples) v = rng.Uniform(-1.0, 1.0);
  return c;
}

// 1. Paper-profile STFT of a 2 s 44.1 kHz clip is exactly 460x258.
bool Criterion1(std::string& detail) {
  Spectrogram spec = Stft(RandomClip(88200, 44100, 1));
  std::ostringstream os;
  os << "got " << spec.width << "x" << spec.height;
  detail = os.str();
  return spec.width == 460 && spec.height == 258;
}

// 2. STFT round trip within 1e-6 of the peak over 50 random clips.
bool Criterion2(std::string& detail) {
  double worst = 0.0;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    const bool paper = seed % 2 == 0;
    const StftParams params = paper ? StftParams{256, 192}
                                    : StftParams{128, 96};
    const int rate = paper ? 44100 : 8000;
    Rng rng(seed + 1000);
    const int len =
        params.n_fft + static_cast<int>(rng.UniformInt(paper ? 90000 : 9000));
    PcmClip clip = RandomClip(len, rate, seed);
    PcmClip back = Istft(Stft(clip, params));
    double peak = 0.0, err = 0.0;
    for (size_t i = 0; i < clip.samples.size(); ++i) {
      peak = std::max(peak, std::abs(clip.samples[i]));
      err = std::max(err, std::abs(back.samples[i] - clip.samples[i]));
    }
    worst = std::max(worst, err / peak);
  }
  std::ostringstream os;
  os << "worst relative error " << worst;
  detail = os.str();
  return worst <= 1e-6;
}

// 3. Finite-difference verification: every op at 1e-5, the toy model at 1e-4.
bool Criterion3(std::string& detail) {
  bool ok = true;
  std::ostringstream os;
  for (const auto& entry : RunOpGradChecks(20)) {
    ok = ok && entry.pass();
    os << entry.name << "=" << entry.max_rel_err << " ";
  }
  GradCheckEntry model = RunToyModelGradCheck(24);
  ok = ok && model.pass();
  os << model.name << "=" << model.max_rel_err;
  detail = os.str();
  return ok;
}

// 4. Greedy dominates Hungarian; equality on diagonal-dominant matrices;
// zero loss iff the sets match up to permutation.
bool Criterion4(std::string& detail) {
  for (int s : {2, 3, 5}) {
    for (uint64_t trial = 0; trial < 1000; ++trial) {
      Rng rng(ChildSeed(s, trial));
      SimMatrix sim(s);
      for (auto& v : sim.values) v = rng.Uniform(0.0, 10.0);
      Assignment greedy = GreedyAssign(sim);
      Assignment optimal = HungarianAssign(sim);
      if (greedy.loss < optimal.loss - 1e-12) {
        detail = "greedy beat hungarian at s=" + std::to_string(s);
        return false;
      }

      // Diagonal-dominant instance: each diagonal entry strictly row- and
      // column-minimal. Both procedures must pick the identity.
      SimMatrix dominant(s);
      for (auto& v : dominant.values) v = rng.Uniform(5.0, 10.0);
      for (int i = 0; i < s; ++i) dominant.at(i, i) = rng.Uniform(0.0, 1.0);
      Assignment g2 = GreedyAssign(dominant);
      Assignment h2 = HungarianAssign(dominant);
      if (std::abs(g2.loss - h2.loss) > 1e-12) {
        detail = "diagonal-dominant mismatch at s=" + std::to_string(s);
        return false;
      }
    }

    // Zero law over value sets.
    Rng rng(ChildSeed(99, s));
    std::vector<std::vector<double>> truths(s, std::vector<double>(32));
    for (auto& row : truths)
      for (auto& v : row) v = rng.Uniform(-1.0, 1.0);
    std::vector<int> perm(s);
    for (int i = 0; i < s; ++i) perm[i] = (i + 1) % s;
    std::vector<std::vector<double>> preds(s);
    for (int i = 0; i < s; ++i) preds[i] = truths[perm[i]];
    Assignment matched = GreedyAssign(PairwiseMse(preds, truths));
    if (matched.loss > 1e-12) {
      detail = "permuted sets did not reach zero loss";
      return false;
    }
    preds[0][0] += 0.5;  // now not a permutation
    Assignment broken = GreedyAssign(PairwiseMse(preds, truths));
    if (broken.loss <= 1e-12) {
      detail = "non-permutation reached zero loss";
      return false;
    }
  }
  detail = "1000 matrices per s in {2,3,5}";
  return true;
}

// 5. Forge conformance: paper-default counts, bit-identical regeneration at
// desk counts, and policy scans.
bool Criterion5(std::string& detail) {
  for (Policy u : {Policy::kInterclass, Policy::kIntraclass, Policy::kHybrid})
    for (int s : {2, 3, 5}) {
      if (DefaultMixtureCount({u, s, Fold::kTrain}) != 10000 * s ||
          DefaultMixtureCount({u, s, Fold::kVal}) != 1000 * s ||
          DefaultMixtureCount({u, s, Fold::kTest}) != 1000 * s) {
        detail = "default count rule violated";
        return false;
      }
    }

  // Paper-default build: 25-class 44.1 kHz corpus, 2 s mixtures,
  // D = 10^4 * s records for the train fold.
  {
    CorpusSpec spec;  // paper defaults
    Corpus corpus = GenSyntheticCorpus(spec, 11);
    SubdatasetId id{Policy::kInterclass, 2, Fold::kTrain};
    DatasetManifest manifest = BuildSubdataset(
        corpus, id, DefaultMixtureCount(id), 123, {2.0, 0.05, false});
    if (static_cast<int64_t>(manifest.records.size()) != 20000) {
      detail = "paper-default build produced " +
               std::to_string(manifest.records.size()) + " records";
      return false;
    }
  }

  // Desk-count checks.
  CorpusSpec desk{5, 12, {8, 2, 2}, 0.25, 0.5, 8000};
  Corpus corpus = GenSyntheticCorpus(desk, 7);
  ForgeOptions opts{1.0, 0.05, false};
  namespace fs = std::filesystem;

  auto audio_signature = [](const MixtureRecord& r) {
    Fnv64 h;
    h.Update(r.mixture.samples.data(),
             r.mixture.samples.size() * sizeof(double));
    for (const auto& s : r.sources)
      h.Update(s.samples.data(), s.samples.size() * sizeof(double));
    return h.digest();
  };

  SubdatasetId id{Policy::kHybrid, 2, Fold::kTrain};
  std::vector<uint64_t> sig1, sig2;
  DatasetManifest m1 = BuildSubdataset(corpus, id, 60, 99, opts,
                                       [&](const MixtureRecord& r) {
                                         sig1.push_back(audio_signature(r));
                                       });
  BuildSubdataset(corpus, id, 60, 99, opts, [&](const MixtureRecord& r) {
    sig2.push_back(audio_signature(r));
  });
  if (sig1 != sig2) {
    detail = "rebuild was not bit-identical";
    return false;
  }

  const std::string path =
      (fs::temp_directory_path() / "acceptance_manifest.jsonl").string();
  WriteManifest(m1, path);
  DatasetManifest reread = ReadManifest(path);
  for (int64_t i = 0; i < 60; ++i) {
    if (audio_signature(RegenerateRecord(corpus, reread, i)) != sig1[i]) {
      detail = "manifest regeneration diverged at record " + std::to_string(i);
      return false;
    }
  }

  for (Policy u : {Policy::kInterclass, Policy::kIntraclass}) {
    DatasetManifest manifest =
        BuildSubdataset(corpus, {u, 2, Fold::kTrain}, 200, 31, opts);
    ScanResult scan = ScanManifest(manifest, &corpus);
    if (!scan.ok) {
      detail = std::string(PolicyName(u)) + " scan: " + scan.violation;
      return false;
    }
  }
  detail = "counts, regeneration, and policy scans all hold";
  return true;
}

TrainConfig OverfitConfig() {
  TrainConfig cfg;
  cfg.policy = Policy::kHybrid;
  cfg.sources = 2;
  cfg.corpus = CorpusSpec{3, 12, {8, 2, 2}, 0.25, 1.0, 8000};
  cfg.stft = StftParams{128, 96};
  cfg.mixture_seconds = 1.0;
  cfg.stt.embed_dim = 32;
  cfg.stt.num_encoders = 1;
  cfg.stt.num_decoders = 1;
  cfg.stt.heads = 2;
  cfg.stt.ff_mult = 2;
  cfg.stt.dropout = 0.0;
  cfg.lr = 0.002;
  cfg.batch_size = 8;
  cfg.max_steps = 2000;
  cfg.eval_every = 500;
  cfg.seed = 21;
  cfg.train_count = 8;  // the fixed overfit suite
  cfg.val_count = 4;
  cfg.test_count = 4;
  return cfg;
}

// 6. Overfit: train loss on 8 fixed mixtures under 0.1x mixture projection
// within 2000 Adam steps.
bool Criterion6(std::string& detail) {
  namespace fs = std::filesystem;
  TrainConfig cfg = OverfitConfig();
  Corpus corpus = GenSyntheticCorpus(cfg.corpus, cfg.corpus_seed);
  std::string out = (fs::temp_directory_path() / "acceptance_overfit").string();
  fs::remove_all(out);
  TrainResult result = Train(cfg, corpus, out);

  TrainConfig resolved = cfg;
  resolved.Resolve();
  SttModel<float> model(resolved.stt, ChildSeed(cfg.seed, 1));
  LoadModel(model, result.last_checkpoint);
  DatasetManifest train_manifest =
      ReadManifest((fs::path(out) / "train_manifest.jsonl").string());
  EvalResult eval = Evaluate(model, train_manifest, corpus, cfg.stft);

  std::ostringstream os;
  os << "train loss " << eval.model_loss << " vs 0.1 x baseline "
     << 0.1 * eval.baseline_loss << " (baseline " << eval.baseline_loss
     << ", " << result.log.rows.size() << " steps)";
  detail = os.str();
  return eval.model_loss < 0.1 * eval.baseline_loss;
}

// 7. Generalization: validation loss under the mixture-projection baseline
// after training on a 200-mixture desk-scale set.
bool Criterion7(std::string& detail) {
  namespace fs = std::filesystem;
  TrainConfig cfg = OverfitConfig();
  cfg.train_count = 200;
  cfg.val_count = 40;
  cfg.stt.num_encoders = 2;
  cfg.stt.num_decoders = 2;
  cfg.max_steps = 1500;
  cfg.eval_every = 250;
  cfg.lr = 0.001;
  cfg.seed = 22;
  Corpus corpus = GenSyntheticCorpus(cfg.corpus, cfg.corpus_seed);
  std::string out = (fs::temp_directory_path() / "acceptance_gen").string();
  fs::remove_all(out);
  TrainResult result = Train(cfg, corpus, out);

  TrainConfig resolved = cfg;
  resolved.Resolve();
  SttModel<float> model(resolved.stt, ChildSeed(cfg.seed, 1));
  LoadModel(model, result.best_checkpoint);
  DatasetManifest val_manifest =
      ReadManifest((fs::path(out) / "val_manifest.jsonl").string());
  EvalResult eval = Evaluate(model, val_manifest, corpus, cfg.stft);

  std::ostringstream os;
  os << "validation loss " << eval.model_loss << " vs baseline "
     << eval.baseline_loss;
  detail = os.str();
  return eval.model_loss < eval.baseline_loss;
}

// 8. All six ablation variants construct, pass the parameter census, and
// complete 100 training steps.
bool Criterion8(std::string& detail) {
  namespace fs = std::filesystem;
  TrainConfig base = OverfitConfig();
  base.stt.embed_dim = 16;
  base.batch_size = 4;
  base.max_steps = 100;
  base.eval_every = 100;
  base.train_count = 8;
  base.val_count = 4;
  Corpus corpus = GenSyntheticCorpus(base.corpus, base.corpus_seed);

  TrainConfig full_cfg = base;
  full_cfg.Resolve();
  const auto full = SttModel<float>(full_cfg.stt, 1).ParameterCensus();

  std::ostringstream os;
  for (Ablation a : {Ablation::kTpOnly, Ablation::kSpOnly, Ablation::kTpDouble,
                     Ablation::kSpDouble, Ablation::kNoCnn, Ablation::kNoMgn}) {
    TrainConfig cfg = base;
    cfg.stt.ablation = a;
    TrainConfig resolved = cfg;
    resolved.Resolve();
    const auto census = SttModel<float>(resolved.stt, 1).ParameterCensus();
    bool census_ok = true;
    switch (a) {
      case Ablation::kTpOnly:
        census_ok = census.spectral_path == 0 && census.temporal_path > 0;
        break;
      case Ablation::kSpOnly:
        census_ok = census.temporal_path == 0 && census.spectral_path > 0;
        break;
      case Ablation::kTpDouble:
        census_ok = census.spectral_path == 0 &&
                    census.temporal_path == 2 * full.temporal_path;
        break;
      case Ablation::kSpDouble:
        census_ok = census.temporal_path == 0 &&
                    census.spectral_path == 2 * full.spectral_path;
        break;
      case Ablation::kNoCnn:
        census_ok = census.conv == 0;
        break;
      case Ablation::kNoMgn:
        census_ok = census.mgn_ff2 == 0;
        break;
      default:
        break;
    }
    if (!census_ok) {
      detail = std::string("census failed for ") + AblationName(a);
      return false;
    }
    std::string out = (fs::temp_directory_path() /
                       (std::string("acceptance_ablate_") + AblationName(a)))
                          .string();
    fs::remove_all(out);
    try {
      TrainResult result = Train(cfg, corpus, out);
      if (result.log.rows.size() != 100 ||
          !std::isfinite(result.final_train_loss)) {
        detail = std::string(AblationName(a)) + " did not finish 100 steps";
        return false;
      }
      os << AblationName(a) << "=" << result.final_train_loss << " ";
    } catch (const Error& e) {
      detail = std::string(AblationName(a)) + " failed: " + e.what();
      return false;
    }
  }
  detail = "final train losses: " + os.str();
  return true;
}

struct Criterion {
  int id;
  const char* title;
  bool (*run)(std::string&);
};

const Criterion kCriteria[] = {
    {1, "paper-profile spectrogram shape 460x258", Criterion1},
    {2, "stft/istft round trip within 1e-6 of peak", Criterion2},
    {3, "finite-difference gradient suite (ops 1e-5, model 1e-4)", Criterion3},
    {4, "greedy vs hungarian bijection oracle", Criterion4},
    {5, "forge counts, regeneration, and policy conformance", Criterion5},
    {6, "overfit run beats 0.1x mixture projection", Criterion6},
    {7, "validation loss beats mixture projection", Criterion7},
    {8, "all six ablation variants train for 100 steps", Criterion8},
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& criterion : kCriteria) {
    if (!selected.empty() && !selected.count(criterion.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = criterion.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("%s criterion %d: %s [%.1fs] %s\n", ok ? "PASS" : "FAIL",
                criterion.id, criterion.title, seconds,
                detail.empty() ? "" : ("- " + detail).c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  return failures;
}
