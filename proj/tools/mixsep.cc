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

#include <cstdio>
#include <filesystem>
#include <string>

#include "CLI11.hpp"
#include "mixsep/bijection.h"
#include "mixsep/forge.h"
#include "mixsep/gradcheck_suite.h"
#include "mixsep/train.h"

namespace fs = std::filesystem;
using namespace mixsep;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string corpus_dir;
  uint64_t seed = 0;
  bool deterministic = false;
  CLI::Option* seed_option = nullptr;

  bool seed_set() const { return seed_option && seed_option->count() > 0; }
};

void AddCommon(CLI::App* cmd, CommonOpts* opts) {
  cmd->add_option("--config", opts->config_path,
                  "Training/model config JSON (desk defaults when omitted)");
  cmd->add_option("--corpus-dir", opts->corpus_dir,
                  "Load a WAV corpus from <dir>/class_<id>/<tr|vl|te>/*.wav "
                  "instead of synthesizing one");
  opts->seed_option =
      cmd->add_option("--seed", opts->seed, "Override the config seed");
  cmd->add_flag("--deterministic", opts->deterministic,
                "Pin the fixed-reduction-order execution (always on; "
                "accepted for interface stability)");
}

TrainConfig LoadConfig(const CommonOpts& opts) {
  TrainConfig cfg = opts.config_path.empty()
                        ? TrainConfig::DeskDefault()
                        : TrainConfig::FromJsonFile(opts.config_path);
  if (opts.seed_set()) cfg.seed = opts.seed;
  if (opts.deterministic) cfg.deterministic = true;
  return cfg;
}

Corpus AcquireCorpus(const TrainConfig& cfg, const std::string& corpus_dir) {
  if (!corpus_dir.empty()) {
    Corpus corpus = LoadCorpusDir(corpus_dir);
    if (corpus.sample_rate() != cfg.corpus.sample_rate)
      throw RateError("corpus dir rate " +
                      std::to_string(corpus.sample_rate()) +
                      " does not match config rate " +
                      std::to_string(cfg.corpus.sample_rate));
    return corpus;
  }
  return GenSyntheticCorpus(cfg.corpus, cfg.corpus_seed);
}

SttModel<float> LoadModelFromDisk(TrainConfig cfg, const std::string& ckpt) {
  cfg.Resolve();
  SttModel<float> model(cfg.stt, ChildSeed(cfg.seed, 1));
  LoadModel(model, ckpt);
  return model;
}

int RunSynth(const CommonOpts& common, const std::string& out_root,
             const std::string& policy_name, int sources,
             const std::string& fold_name, int64_t count, bool manifest_only) {
  TrainConfig cfg = LoadConfig(common);
  Corpus corpus = AcquireCorpus(cfg, common.corpus_dir);
  SubdatasetId id{ParsePolicy(policy_name), sources, ParseFold(fold_name)};
  if (count <= 0) count = DefaultMixtureCount(id);
  ForgeOptions opts{cfg.mixture_seconds, cfg.volume_floor, false};

  fs::create_directories(out_root);
  RecordSink sink = nullptr;
  if (!manifest_only)
    sink = [&](const MixtureRecord& r) { WriteRecordAudio(r, out_root, id); };
  DatasetManifest manifest =
      BuildSubdataset(corpus, id, count, cfg.seed, opts, sink);
  const std::string manifest_path =
      (fs::path(out_root) / (std::string(PolicyName(id.u)) + "_" +
                             std::to_string(id.s) + "_" + FoldName(id.f) +
                             "_manifest.jsonl"))
          .string();
  WriteManifest(manifest, manifest_path);
  std::printf("wrote %zu records to %s\n", manifest.records.size(),
              manifest_path.c_str());
  ScanResult scan = ScanManifest(manifest, &corpus);
  if (!scan.ok) {
    std::printf("policy scan FAILED: %s\n", scan.violation.c_str());
    return 1;
  }
  return 0;
}

int RunTrain(const CommonOpts& common, const std::string& out_dir) {
  TrainConfig cfg = LoadConfig(common);
  Corpus corpus = AcquireCorpus(cfg, common.corpus_dir);
  TrainResult result = Train(cfg, corpus, out_dir);
  std::printf("final train loss %.6f\n", result.final_train_loss);
  std::printf("best validation loss %.6f\n", result.best_val_loss);
  std::printf("best checkpoint %s\n", result.best_checkpoint.c_str());
  return 0;
}

int RunEval(const CommonOpts& common, const std::string& ckpt,
            const std::string& fold_name, int64_t count,
            const std::string& manifest_path) {
  TrainConfig cfg = LoadConfig(common);
  Corpus corpus = AcquireCorpus(cfg, common.corpus_dir);
  SttModel<float> model = LoadModelFromDisk(cfg, ckpt);

  DatasetManifest manifest;
  if (!manifest_path.empty()) {
    manifest = ReadManifest(manifest_path);
  } else {
    Fold fold = ParseFold(fold_name);
    SubdatasetId id = cfg.Subdataset(fold);
    if (count <= 0) count = cfg.FoldCount(fold);
    if (count <= 0) count = DefaultMixtureCount(id);
    manifest = BuildSubdataset(corpus, id, count, ChildSeed(cfg.seed, 103),
                               {cfg.mixture_seconds, cfg.volume_floor, false});
  }
  EvalResult eval = Evaluate(model, manifest, corpus, cfg.stft);
  std::printf("records            %lld\n",
              static_cast<long long>(eval.count));
  std::printf("model loss         %.6f\n", eval.model_loss);
  std::printf("mixture projection %.6f\n", eval.baseline_loss);
  return 0;
}

int RunSeparate(const CommonOpts& common, const std::string& ckpt,
                const std::string& input, const std::string& out_dir,
                const std::string& dump_spec_dir) {
  TrainConfig cfg = LoadConfig(common);
  SttModel<float> model = LoadModelFromDisk(cfg, ckpt);
  auto paths = Separate(model, cfg.stft, cfg.mixture_seconds,
                        cfg.corpus.sample_rate, input, out_dir, dump_spec_dir);
  for (const auto& path : paths) std::printf("%s\n", path.c_str());
  return 0;
}

int RunGradcheck(int seeds, int model_coords) {
  int failures = 0;
  for (const auto& entry : RunOpGradChecks(seeds)) {
    std::printf("%-22s max rel err %.3e  (tol %.0e)  %s\n",
                entry.name.c_str(), entry.max_rel_err, entry.tolerance,
                entry.pass() ? "ok" : "FAIL");
    if (!entry.pass()) ++failures;
  }
  GradCheckEntry model = RunToyModelGradCheck(model_coords);
  std::printf("%-22s max rel err %.3e  (tol %.0e)  %s\n", model.name.c_str(),
              model.max_rel_err, model.tolerance, model.pass() ? "ok" : "FAIL");
  if (!model.pass()) ++failures;
  return failures;
}

int RunAblate(const CommonOpts& common, const std::string& out_dir,
              int steps) {
  TrainConfig base = LoadConfig(common);
  if (steps > 0) {
    base.max_steps = steps;
    base.eval_every = steps;
  }
  Corpus corpus = AcquireCorpus(base, common.corpus_dir);

  std::printf("%-12s %10s %14s %14s %14s\n", "variant", "params",
              "train loss", "val loss", "baseline");
  for (Ablation a : {Ablation::kFull, Ablation::kTpOnly, Ablation::kSpOnly,
                     Ablation::kTpDouble, Ablation::kSpDouble,
                     Ablation::kNoCnn, Ablation::kNoMgn}) {
    TrainConfig cfg = base;
    cfg.stt.ablation = a;
    const std::string dir =
        (fs::path(out_dir) / AblationName(a)).string();
    TrainResult result = Train(cfg, corpus, dir);

    TrainConfig resolved = cfg;
    resolved.Resolve();
    SttModel<float> model(resolved.stt, ChildSeed(cfg.seed, 1));
    LoadModel(model, result.best_checkpoint);
    DatasetManifest val_manifest =
        ReadManifest((fs::path(dir) / "val_manifest.jsonl").string());
    EvalResult eval = Evaluate(model, val_manifest, corpus, cfg.stft);
    std::printf("%-12s %10lld %14.6f %14.6f %14.6f\n", AblationName(a),
                static_cast<long long>(model.ParameterCensus().total()),
                result.final_train_loss, eval.model_loss, eval.baseline_loss);
    std::fflush(stdout);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixsep: synthetic mixture forging and transformer-based "
               "monoaural source separation"};
  app.require_subcommand(1);

  // synth
  CommonOpts synth_common;
  std::string synth_out, synth_policy = "hybrid", synth_fold = "tr";
  int synth_sources = 2;
  int64_t synth_count = 0;
  bool synth_manifest_only = false;
  auto* synth = app.add_subcommand(
      "synth", "Build a mixture subdataset (manifest plus audio tree)");
  AddCommon(synth, &synth_common);
  synth->add_option("--out", synth_out, "Output root")->required();
  synth->add_option("--policy", synth_policy,
                    "interclass | intraclass | hybrid");
  synth->add_option("--sources", synth_sources, "Sources per mixture");
  synth->add_option("--fold", synth_fold, "tr | vl | te");
  synth->add_option("--count", synth_count,
                    "Mixture count (default: the fold's standard count)");
  synth->add_flag("--manifest-only", synth_manifest_only,
                  "Skip writing WAV files");

  // train
  CommonOpts train_common;
  std::string train_out;
  auto* train = app.add_subcommand("train", "Train a separation model");
  AddCommon(train, &train_common);
  train->add_option("--out", train_out, "Run directory")->required();

  // eval
  CommonOpts eval_common;
  std::string eval_ckpt, eval_fold = "te", eval_manifest;
  int64_t eval_count = 0;
  auto* eval = app.add_subcommand(
      "eval", "Report bijection loss and the mixture-projection baseline");
  AddCommon(eval, &eval_common);
  eval->add_option("--ckpt", eval_ckpt, "Checkpoint file")->required();
  eval->add_option("--fold", eval_fold, "tr | vl | te");
  eval->add_option("--count", eval_count, "Mixture count override");
  eval->add_option("--manifest", eval_manifest,
                   "Evaluate an existing manifest instead of building one");

  // separate
  CommonOpts sep_common;
  std::string sep_ckpt, sep_input, sep_out, sep_dump;
  auto* separate = app.add_subcommand(
      "separate", "Split a mixture WAV into per-source WAV files");
  AddCommon(separate, &sep_common);
  separate->add_option("--ckpt", sep_ckpt, "Checkpoint file")->required();
  separate->add_option("--input", sep_input, "Mixture WAV")->required();
  separate->add_option("--out", sep_out, "Output directory")->required();
  separate->add_option("--dump-spec", sep_dump,
                       "Also dump per-window input spectrograms here");

  // gradcheck
  int gc_seeds = 20, gc_model_coords = 24;
  bool gc_deterministic = false;
  uint64_t gc_seed = 0;
  auto* gradcheck = app.add_subcommand(
      "gradcheck", "Finite-difference verification of the gradient engine");
  gradcheck->add_option("--seeds", gc_seeds, "Random instances per op");
  gradcheck->add_option("--model-coords", gc_model_coords,
                        "Probed coordinates per model parameter (-1: all)");
  gradcheck->add_option("--seed", gc_seed)->group("");
  gradcheck->add_flag("--deterministic", gc_deterministic)->group("");

  // ablate
  CommonOpts ablate_common;
  std::string ablate_out;
  int ablate_steps = 100;
  auto* ablate = app.add_subcommand(
      "ablate", "Train every encoder/head variant on a shared desk-scale "
                "dataset and print a comparison table");
  AddCommon(ablate, &ablate_common);
  ablate->add_option("--out", ablate_out, "Run directory")->required();
  ablate->add_option("--steps", ablate_steps, "Training steps per variant");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed())
      return RunSynth(synth_common, synth_out, synth_policy, synth_sources,
                      synth_fold, synth_count, synth_manifest_only);
    if (train->parsed()) return RunTrain(train_common, train_out);
    if (eval->parsed())
      return RunEval(eval_common, eval_ckpt, eval_fold, eval_count,
                     eval_manifest);
    if (separate->parsed())
      return RunSeparate(sep_common, sep_ckpt, sep_input, sep_out, sep_dump);
    if (gradcheck->parsed()) return RunGradcheck(gc_seeds, gc_model_coords);
    if (ablate->parsed())
      return RunAblate(ablate_common, ablate_out, ablate_steps);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
