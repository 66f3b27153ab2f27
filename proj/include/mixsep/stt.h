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
// Spectro-temporal transformer for source separation. The encoder runs two
// parallel paths per layer — temporal attention over frames and spectral
// attention over the transposed sequence — merged by transpose-and-add. A
// non-autoregressive decoder stack cross-attends to the encoder output, and
// a masked generation head emits one spectrogram per source.

#ifndef MIXSEP_STT_H_
#define MIXSEP_STT_H_

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mixsep/dsp.h"
#include "mixsep/ops.h"
#include "mixsep/rng.h"
#include "mixsep/tensor.h"

namespace mixsep {

enum class Ablation {
  kFull,
  kTpOnly,    // temporal path only
  kSpOnly,    // spectral path only
  kTpDouble,  // spectral path replaced by a second temporal path
  kSpDouble,  // temporal path replaced by a second spectral path
  kNoCnn,     // both paths, convolution stage removed
  kNoMgn,     // generation head without the multiplicative mask
};

const char* AblationName(Ablation a);
Ablation ParseAblation(const std::string& s);

// Convolution stage layout inside a path. channels == 0 means "the path
// width"; the final layer always maps back to the path width so the stage
// preserves shape.
struct ConvLayerSpec {
  int kernel = 3;
  int channels = 0;
};

struct SttConfig {
  int frames = 460;   // W
  int height = 258;   // H
  int embed_dim = 64; // H_e
  int num_encoders = 2;
  int num_decoders = 2;
  int heads = 2;
  std::vector<ConvLayerSpec> cnn_spec{{3, 0}, {3, 0}};
  int ff_mult = 4;  // feedforward hidden width multiplier
  double dropout = 0.0;
  int sources = 2;
  Ablation ablation = Ablation::kFull;

  void Validate() const;
  std::string ToJsonString() const;  // canonical form, digest input
  static SttConfig FromJsonString(const std::string& text);
  std::string Digest() const;

  bool has_spectral_path() const {
    return ablation != Ablation::kTpOnly && ablation != Ablation::kTpDouble;
  }
  bool has_temporal_path() const {
    return ablation != Ablation::kSpOnly && ablation != Ablation::kSpDouble;
  }
};

// Tuned grids exposed as presets.
inline constexpr int kGridEncoderCounts[] = {2, 4, 6, 8};
inline constexpr int kGridHeadCounts[] = {1, 2, 4};
inline constexpr double kGridDropouts[] = {0.0, 0.2, 0.5};

// The worst-case reference: predict the mixture itself for every source.
inline std::vector<Spectrogram> MixtureProjection(const Spectrogram& mixture,
                                                  int s) {
  return std::vector<Spectrogram>(static_cast<size_t>(s), mixture);
}

// ---------------------------------------------------------------------------
// Parameter bundles

namespace nn {

template <typename Real>
Tensor<Real> UniformParam(std::vector<int> shape, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<Real> data(Tensor<Real>::NumElements(shape));
  for (auto& v : data) v = static_cast<Real>(rng.Uniform(-bound, bound));
  return Tensor<Real>::FromData(std::move(shape), std::move(data), true);
}

template <typename Real>
struct LinearLayer {
  Tensor<Real> w, b;

  void Init(int in_dim, int out_dim, Rng& rng) {
    w = UniformParam<Real>({in_dim, out_dim}, in_dim, rng);
    b = Tensor<Real>::Zeros({out_dim}, true);
  }
  Tensor<Real> operator()(const Tensor<Real>& x) const {
    return Linear(x, w, b);
  }
};

template <typename Real>
struct NormLayer {
  Tensor<Real> gain, bias;

  void Init(int dim) {
    gain = Tensor<Real>::Full({dim}, Real(1), true);
    bias = Tensor<Real>::Zeros({dim}, true);
  }
  Tensor<Real> operator()(const Tensor<Real>& x) const {
    return LayerNormLastDim(x, gain, bias);
  }
};

template <typename Real>
struct ConvLayer {
  Tensor<Real> w, b;
  void Init(int in_ch, int out_ch, int kernel, Rng& rng) {
    w = UniformParam<Real>({out_ch, in_ch, kernel}, in_ch * kernel, rng);
    b = Tensor<Real>::Zeros({out_ch}, true);
  }
};

template <typename Real>
struct AttentionLayer {
  AttentionParams<Real> p;
  int heads = 1;

  void Init(int dim, int n_heads, Rng& rng) {
    heads = n_heads;
    auto proj = [&rng, dim]() { return UniformParam<Real>({dim, dim}, dim, rng); };
    auto bias = [dim]() { return Tensor<Real>::Zeros({dim}, true); };
    p.wq = proj(); p.bq = bias();
    p.wk = proj();
    p.wv = proj(); p.bv = bias();
    p.wo = proj(); p.bo = bias();
  }
  Tensor<Real> operator()(const Tensor<Real>& queries,
                          const Tensor<Real>& keys_values,
                          std::vector<Tensor<Real>>* weights = nullptr) const {
    return MultiHeadAttention(queries, keys_values, p, heads, weights);
  }
};

}  // namespace nn

enum class PathKind { kTemporal, kSpectral };

// ---------------------------------------------------------------------------
// Model

template <typename Real>
class SttModel {
 public:
  struct Path {
    PathKind kind;
    std::vector<nn::ConvLayer<Real>> convs;
    nn::AttentionLayer<Real> attn;
    nn::NormLayer<Real> norm1, norm2;
    nn::LinearLayer<Real> ff1, ff2;
  };
  struct Encoder {
    Path path_a;
    std::optional<Path> path_b;
  };
  struct Decoder {
    nn::AttentionLayer<Real> self_attn, cross_attn;
    nn::NormLayer<Real> norm1, norm2, norm3;
    nn::LinearLayer<Real> ff1, ff2;
  };

  SttModel(SttConfig config, uint64_t seed)
      : cfg_(std::move(config)), dropout_rng_(ChildSeed(seed, 0xd70u)) {
    cfg_.Validate();
    Rng rng(ChildSeed(seed, 0x1417u));

    embed_.Init(cfg_.height, cfg_.embed_dim, rng);
    pe_time_ = TimeEncoding(cfg_.frames, cfg_.embed_dim);
    pe_spec_ = SpectralEncoding(cfg_.height);

    encoders_.resize(cfg_.num_encoders);
    for (auto& enc : encoders_) {
      switch (cfg_.ablation) {
        case Ablation::kFull:
        case Ablation::kNoCnn:
          enc.path_a = MakePath(PathKind::kTemporal, rng);
          enc.path_b = MakePath(PathKind::kSpectral, rng);
          break;
        case Ablation::kTpOnly:
          enc.path_a = MakePath(PathKind::kTemporal, rng);
          break;
        case Ablation::kSpOnly:
          enc.path_a = MakePath(PathKind::kSpectral, rng);
          break;
        case Ablation::kTpDouble:
          enc.path_a = MakePath(PathKind::kTemporal, rng);
          enc.path_b = MakePath(PathKind::kTemporal, rng);
          break;
        case Ablation::kSpDouble:
          enc.path_a = MakePath(PathKind::kSpectral, rng);
          enc.path_b = MakePath(PathKind::kSpectral, rng);
          break;
        case Ablation::kNoMgn:
          enc.path_a = MakePath(PathKind::kTemporal, rng);
          enc.path_b = MakePath(PathKind::kSpectral, rng);
          break;
      }
    }

    decoders_.resize(cfg_.num_decoders);
    for (auto& dec : decoders_) {
      dec.self_attn.Init(cfg_.embed_dim, cfg_.heads, rng);
      dec.cross_attn.Init(cfg_.embed_dim, cfg_.heads, rng);
      dec.norm1.Init(cfg_.embed_dim);
      dec.norm2.Init(cfg_.embed_dim);
      dec.norm3.Init(cfg_.embed_dim);
      dec.ff1.Init(cfg_.embed_dim, cfg_.ff_mult * cfg_.embed_dim, rng);
      dec.ff2.Init(cfg_.ff_mult * cfg_.embed_dim, cfg_.embed_dim, rng);
    }

    const int out_dim = cfg_.height * cfg_.sources;
    mgn_ff1_.Init(cfg_.embed_dim, out_dim, rng);
    if (cfg_.ablation != Ablation::kNoMgn) {
      mgn_ff2_.emplace();
      mgn_ff2_->Init(out_dim, out_dim, rng);
      // Start with the mask open: a coordinate whose mask pre-activation is
      // negative passes no gradient through either factor of
      // FF1 * relu(FF2), so a zero-centered init leaves half the output
      // permanently dark.
      std::fill(mgn_ff2_->b.values().begin(), mgn_ff2_->b.values().end(),
                Real(1));
    }
  }

  const SttConfig& config() const { return cfg_; }

  // Per frame: add the spectral position tag to the raw column, map it to
  // the embedding width, then add the frame's temporal encoding.
  Tensor<Real> Embed(const Tensor<Real>& spec, bool train = false) {
    if (spec.rank() != 2 || spec.dim(0) != cfg_.frames ||
        spec.dim(1) != cfg_.height)
      throw ShapeError("embed: expected " + std::to_string(cfg_.frames) + "x" +
                       std::to_string(cfg_.height) + " spectrogram");
    Tensor<Real> tagged = AddRowVec(spec, pe_spec_);
    Tensor<Real> projected = embed_(tagged);
    Tensor<Real> out = Add(projected, pe_time_);
    return Dropout(out, cfg_.dropout, train, dropout_rng_);
  }

  // conv stage -> self-attention -> Add&Norm against the conv output ->
  // position-wise feedforward -> Add&Norm. Shape-preserving.
  Tensor<Real> PathForward(const Tensor<Real>& x, const Path& path, bool train,
                           std::vector<Tensor<Real>>* attn_weights = nullptr) {
    Tensor<Real> h = x;
    for (size_t i = 0; i < path.convs.size(); ++i) {
      h = Conv1dSame(h, path.convs[i].w, path.convs[i].b);
      if (i + 1 < path.convs.size()) h = Relu(h);
    }
    Tensor<Real> attn = path.attn(h, h, attn_weights);
    attn = Dropout(attn, cfg_.dropout, train, dropout_rng_);
    Tensor<Real> an1 = path.norm1(Add(attn, h));
    Tensor<Real> ff = path.ff2(Relu(path.ff1(an1)));
    ff = Dropout(ff, cfg_.dropout, train, dropout_rng_);
    return path.norm2(Add(ff, an1));
  }

  // One encoder layer: temporal-path output plus the transposed
  // spectral-path output; ablations drop or double a path.
  Tensor<Real> SteForward(const Tensor<Real>& x, int layer, bool train) {
    Encoder& enc = encoders_.at(layer);
    auto run = [&](const Path& path) {
      if (path.kind == PathKind::kTemporal) return PathForward(x, path, train);
      return Transpose2d(PathForward(Transpose2d(x), path, train));
    };
    Tensor<Real> out = run(enc.path_a);
    if (enc.path_b) out = Add(out, run(*enc.path_b));
    return out;
  }

  // Standard post-norm decoder blocks, non-autoregressive: the running
  // sequence starts as the encoder output and every block self-attends,
  // cross-attends to the encoder output, and applies the feedforward.
  Tensor<Real> DecoderStackForward(
      const Tensor<Real>& enc_out, bool train,
      std::vector<Tensor<Real>>* cross_attn_weights = nullptr) {
    Tensor<Real> x = enc_out;
    for (auto& dec : decoders_) {
      Tensor<Real> sa = dec.self_attn(x, x);
      sa = Dropout(sa, cfg_.dropout, train, dropout_rng_);
      Tensor<Real> x1 = dec.norm1(Add(sa, x));
      Tensor<Real> ca = dec.cross_attn(x1, enc_out, cross_attn_weights);
      ca = Dropout(ca, cfg_.dropout, train, dropout_rng_);
      Tensor<Real> x2 = dec.norm2(Add(ca, x1));
      Tensor<Real> ff = dec.ff2(Relu(dec.ff1(x2)));
      ff = Dropout(ff, cfg_.dropout, train, dropout_rng_);
      x = dec.norm3(Add(ff, x2));
    }
    return x;
  }

  // Generation head: FF1 projects each frame to H*s values; FF2 produces a
  // non-negative mask over the same space, multiplied elementwise into FF1.
  Tensor<Real> MgnForward(const Tensor<Real>& dec_out) {
    Tensor<Real> ff1 = mgn_ff1_(dec_out);  // [W, H*s]
    Tensor<Real> out = ff1;
    if (mgn_ff2_) out = Mul(ff1, Relu((*mgn_ff2_)(ff1)));
    return Reshape(out, {cfg_.frames, cfg_.height, cfg_.sources});
  }

  // Full pass, one predicted spectrogram tensor per source.
  std::vector<Tensor<Real>> Forward(const Tensor<Real>& mixture, bool train) {
    Tensor<Real> h = Embed(mixture, train);
    for (int j = 0; j < cfg_.num_encoders; ++j) h = SteForward(h, j, train);
    Tensor<Real> dec = DecoderStackForward(h, train);
    Tensor<Real> stacked = MgnForward(dec);
    std::vector<Tensor<Real>> preds;
    preds.reserve(cfg_.sources);
    for (int k = 0; k < cfg_.sources; ++k)
      preds.push_back(SliceChannel(stacked, k));
    return preds;
  }

  std::vector<std::pair<std::string, Tensor<Real>>> NamedParams() {
    std::vector<std::pair<std::string, Tensor<Real>>> out;
    auto add = [&out](const std::string& name, const Tensor<Real>& t) {
      out.emplace_back(name, t);
    };
    auto add_attn = [&add](const std::string& p, const nn::AttentionLayer<Real>& a) {
      add(p + ".q.w", a.p.wq); add(p + ".q.b", a.p.bq);
      add(p + ".k.w", a.p.wk);
      add(p + ".v.w", a.p.wv); add(p + ".v.b", a.p.bv);
      add(p + ".o.w", a.p.wo); add(p + ".o.b", a.p.bo);
    };
    auto add_path = [&](const std::string& p, const Path& path) {
      for (size_t i = 0; i < path.convs.size(); ++i) {
        add(p + ".conv" + std::to_string(i) + ".w", path.convs[i].w);
        add(p + ".conv" + std::to_string(i) + ".b", path.convs[i].b);
      }
      add_attn(p + ".attn", path.attn);
      add(p + ".norm1.gain", path.norm1.gain);
      add(p + ".norm1.bias", path.norm1.bias);
      add(p + ".ff1.w", path.ff1.w); add(p + ".ff1.b", path.ff1.b);
      add(p + ".ff2.w", path.ff2.w); add(p + ".ff2.b", path.ff2.b);
      add(p + ".norm2.gain", path.norm2.gain);
      add(p + ".norm2.bias", path.norm2.bias);
    };
    add("embed.w", embed_.w);
    add("embed.b", embed_.b);
    for (size_t j = 0; j < encoders_.size(); ++j) {
      const std::string p = "enc" + std::to_string(j);
      add_path(p + ".a", encoders_[j].path_a);
      if (encoders_[j].path_b) add_path(p + ".b", *encoders_[j].path_b);
    }
    for (size_t j = 0; j < decoders_.size(); ++j) {
      const std::string p = "dec" + std::to_string(j);
      add_attn(p + ".self", decoders_[j].self_attn);
      add_attn(p + ".cross", decoders_[j].cross_attn);
      add(p + ".norm1.gain", decoders_[j].norm1.gain);
      add(p + ".norm1.bias", decoders_[j].norm1.bias);
      add(p + ".norm2.gain", decoders_[j].norm2.gain);
      add(p + ".norm2.bias", decoders_[j].norm2.bias);
      add(p + ".ff1.w", decoders_[j].ff1.w); add(p + ".ff1.b", decoders_[j].ff1.b);
      add(p + ".ff2.w", decoders_[j].ff2.w); add(p + ".ff2.b", decoders_[j].ff2.b);
      add(p + ".norm3.gain", decoders_[j].norm3.gain);
      add(p + ".norm3.bias", decoders_[j].norm3.bias);
    }
    add("mgn.ff1.w", mgn_ff1_.w);
    add("mgn.ff1.b", mgn_ff1_.b);
    if (mgn_ff2_) {
      add("mgn.ff2.w", mgn_ff2_->w);
      add("mgn.ff2.b", mgn_ff2_->b);
    }
    return out;
  }

  std::vector<Tensor<Real>> Params() {
    std::vector<Tensor<Real>> out;
    for (auto& [name, t] : NamedParams()) out.push_back(t);
    return out;
  }

  struct Census {
    int64_t embed = 0;
    int64_t temporal_path = 0;
    int64_t spectral_path = 0;
    int64_t conv = 0;  // subset of the path counts
    int64_t decoder = 0;
    int64_t mgn_ff1 = 0;
    int64_t mgn_ff2 = 0;
    int64_t total() const {
      return embed + temporal_path + spectral_path + decoder + mgn_ff1 +
             mgn_ff2;
    }
  };

  Census ParameterCensus() const {
    Census census;
    census.embed = embed_.w.size() + embed_.b.size();
    auto attn_count = [](const nn::AttentionLayer<Real>& a) {
      return a.p.wq.size() + a.p.bq.size() + a.p.wk.size() + a.p.wv.size() +
             a.p.bv.size() + a.p.wo.size() + a.p.bo.size();
    };
    for (const auto& enc : encoders_) {
      auto path_count = [&](const Path& path) {
        int64_t conv = 0;
        for (const auto& c : path.convs) conv += c.w.size() + c.b.size();
        census.conv += conv;
        int64_t n = conv + attn_count(path.attn) + path.norm1.gain.size() +
                    path.norm1.bias.size() + path.norm2.gain.size() +
                    path.norm2.bias.size() + path.ff1.w.size() +
                    path.ff1.b.size() + path.ff2.w.size() + path.ff2.b.size();
        (path.kind == PathKind::kTemporal ? census.temporal_path
                                          : census.spectral_path) += n;
      };
      path_count(enc.path_a);
      if (enc.path_b) path_count(*enc.path_b);
    }
    for (const auto& dec : decoders_) {
      census.decoder += attn_count(dec.self_attn) + attn_count(dec.cross_attn);
      census.decoder += dec.norm1.gain.size() + dec.norm1.bias.size() +
                        dec.norm2.gain.size() + dec.norm2.bias.size() +
                        dec.norm3.gain.size() + dec.norm3.bias.size();
      census.decoder += dec.ff1.w.size() + dec.ff1.b.size() +
                        dec.ff2.w.size() + dec.ff2.b.size();
    }
    census.mgn_ff1 = mgn_ff1_.w.size() + mgn_ff1_.b.size();
    if (mgn_ff2_) census.mgn_ff2 = mgn_ff2_->w.size() + mgn_ff2_->b.size();
    return census;
  }

  // Test hooks.
  Encoder& encoder(int j) { return encoders_.at(j); }
  Decoder& decoder(int j) { return decoders_.at(j); }
  nn::LinearLayer<Real>& embed_layer() { return embed_; }
  nn::LinearLayer<Real>& mgn_ff1() { return mgn_ff1_; }
  nn::LinearLayer<Real>* mgn_ff2() {
    return mgn_ff2_ ? &*mgn_ff2_ : nullptr;
  }
  const Tensor<Real>& time_encoding() const { return pe_time_; }

 private:
  Path MakePath(PathKind kind, Rng& rng) {
    const int width =
        kind == PathKind::kTemporal ? cfg_.embed_dim : cfg_.frames;
    Path path;
    path.kind = kind;
    if (cfg_.ablation != Ablation::kNoCnn) {
      int in_ch = width;
      for (size_t i = 0; i < cfg_.cnn_spec.size(); ++i) {
        const bool last = i + 1 == cfg_.cnn_spec.size();
        int out_ch = cfg_.cnn_spec[i].channels;
        if (out_ch <= 0 || last) out_ch = width;
        nn::ConvLayer<Real> conv;
        conv.Init(in_ch, out_ch, cfg_.cnn_spec[i].kernel, rng);
        path.convs.push_back(std::move(conv));
        in_ch = out_ch;
      }
    }
    path.attn.Init(width, cfg_.heads, rng);
    path.norm1.Init(width);
    path.norm2.Init(width);
    path.ff1.Init(width, cfg_.ff_mult * width, rng);
    path.ff2.Init(cfg_.ff_mult * width, width, rng);
    return path;
  }

  // Sinusoidal table over frame positions.
  static Tensor<Real> TimeEncoding(int frames, int dim) {
    std::vector<Real> data(size_t(frames) * dim);
    for (int t = 0; t < frames; ++t)
      for (int i = 0; i < dim; ++i) {
        const double exponent = double(2 * (i / 2)) / dim;
        const double angle = t / std::pow(10000.0, exponent);
        data[size_t(t) * dim + i] =
            static_cast<Real>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
      }
    return Tensor<Real>::FromData({frames, dim}, std::move(data));
  }

  // Fixed sinusoidal tag distinguishing spectral positions, added to every
  // raw column before the embedding map.
  static Tensor<Real> SpectralEncoding(int height) {
    std::vector<Real> data(height);
    for (int k = 0; k < height; ++k) {
      const double exponent = double(2 * (k / 2)) / height;
      const double angle = k / std::pow(10000.0, exponent);
      data[k] =
          static_cast<Real>(k % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
    return Tensor<Real>::FromData({height}, std::move(data));
  }

  SttConfig cfg_;
  Rng dropout_rng_;
  nn::LinearLayer<Real> embed_;
  Tensor<Real> pe_time_, pe_spec_;
  std::vector<Encoder> encoders_;
  std::vector<Decoder> decoders_;
  nn::LinearLayer<Real> mgn_ff1_;
  std::optional<nn::LinearLayer<Real>> mgn_ff2_;
};

// ---------------------------------------------------------------------------
// Spectrogram <-> tensor bridging

template <typename Real>
Tensor<Real> TensorFromSpectrogram(const Spectrogram& spec) {
  std::vector<Real> data(spec.data.size());
  for (size_t i = 0; i < data.size(); ++i)
    data[i] = static_cast<Real>(spec.data[i]);
  return Tensor<Real>::FromData({spec.width, spec.height}, std::move(data));
}

template <typename Real>
Spectrogram SpectrogramFromTensor(const Tensor<Real>& t,
                                  const Spectrogram::Meta& meta) {
  if (t.rank() != 2) throw ShapeError("expected a rank-2 prediction");
  Spectrogram spec;
  spec.width = t.dim(0);
  spec.height = t.dim(1);
  spec.meta = meta;
  spec.data.assign(t.values().begin(), t.values().end());
  return spec;
}

}  // namespace mixsep

#endif  // MIXSEP_STT_H_
