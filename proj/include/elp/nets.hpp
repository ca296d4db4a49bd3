#pragma once

#include <optional>
#include <string>
#include <vector>

#include "elp/latent.hpp"
#include "elp/motion.hpp"
#include "elp/rng.hpp"
#include "elp/tape.hpp"

namespace elp::nets {

using ad::Tape;
using ad::Tensor;

// Named trainable tensors in declaration order (checkpoint order).
class ParamStore {
 public:
  Tensor create(const std::string& name, ad::Shape shape, std::size_t fan_in, Rng& rng);
  Tensor create_zeros(const std::string& name, ad::Shape shape);

  struct Entry {
    std::string name;
    Tensor tensor;
  };
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t total_count() const;
  void zero_grads();

 private:
  std::vector<Entry> entries_;
};

struct Linear {
  Tensor w, b;
  Linear() = default;
  Linear(ParamStore& ps, const std::string& name, std::size_t in, std::size_t out, Rng& rng);
  Tensor forward(Tape& t, const Tensor& x) const;  // x: T x in
};

// 1-D convolution over the time axis, kernel size 3, zero padding, optional
// dilation; implemented as shifted matmuls
struct Conv1d {
  std::vector<Tensor> taps;  // one in x out weight per kernel tap
  Tensor b;
  long dilation = 1;
  Conv1d() = default;
  Conv1d(ParamStore& ps, const std::string& name, std::size_t in, std::size_t out, long dilation,
         Rng& rng);
  Tensor forward(Tape& t, const Tensor& x) const;
};

struct GruCell {
  Linear zg, rg, hg;  // gates over [x, h]
  std::size_t hidden = 0;
  GruCell() = default;
  GruCell(ParamStore& ps, const std::string& name, std::size_t in, std::size_t hidden, Rng& rng);
  Tensor forward(Tape& t, const Tensor& x) const;  // x: T x in -> T x hidden
};

struct NetworkConfig {
  std::size_t audio_in = 29;
  std::size_t audio_h1 = 32;
  std::size_t audio_h2 = 48;
  std::size_t audio_out = 128;
  std::size_t beta_dim = 100;
  std::size_t pose_dim = 6;
  std::size_t tdnn_hidden = 24;
  std::vector<std::size_t> tdnn_dilations = {1, 2, 4};
  std::size_t tdnn_mlp_hidden = 16;
  std::size_t head_h1 = 48;
  std::size_t head_h2 = 48;
  std::size_t head_gru = 24;
  std::size_t dec1_hidden = 48;
  std::size_t dec2_hidden = 16;
  std::size_t dec2_gru = 8;
  double dropout = 0.1;

  std::size_t style_dim() const { return audio_out + 2 * beta_dim + pose_dim; }
  // kernel-3 dilated stack; receptive field of the TDNN trunk
  std::size_t tdnn_receptive_field() const {
    std::size_t rf = 1;
    for (std::size_t d : tdnn_dilations) rf += 2 * d;
    return rf;
  }
};

struct ForwardOptions {
  bool train = false;
  double temperature = 1.0;
  // teacher-forced / override emotion; required in train mode, optional at
  // inference (defaults to the classifier argmax)
  std::optional<EmotionVector> emotion;
  bool use_partition = true;  // false = Base-Space ablation (no emotion split)
  // soft sampling keeps the objective differentiable end to end, which is
  // what finite-difference verification needs; training uses hard mode
  bool hard_sampling = true;
  const std::vector<double>* frozen_noise = nullptr;
  Rng* rng = nullptr;  // required when train && !frozen_noise
};

struct ListenerPrediction {
  Tensor beta_pred;   // T x beta_dim
  Tensor pose_pred;   // T x pose_dim
  Tensor blink_prob;  // T
  Tensor emotion_logits;  // N
};

struct ForwardResult {
  ListenerPrediction pred;
  latent::CodewordGrid grid;
  EmotionVector used_emotion;
  Tensor style;       // T x style_dim
  Tensor head_logits; // T x H x V
  Tensor embedding;   // T x H x range (one-hot in hard mode)
};

class AseModel {
 public:
  AseModel(const NetworkConfig& net_cfg, const latent::LatentConfig& latent_cfg,
           std::uint64_t seed);

  ForwardResult forward(Tape& tape, const AudioFeatureSequence& audio,
                        const MotionSequence& speaker_motion, const ForwardOptions& opts) const;

  // decoder-only path used by the random-latent baseline and ablation dumps
  ListenerPrediction decode_grid(Tape& tape, const latent::CodewordGrid& grid) const;

  Tensor encode_audio(Tape& t, const Tensor& feats, bool train, Rng* rng) const;
  Tensor classify_emotion(Tape& t, const Tensor& style) const;  // -> N logits
  Tensor encode_heads(Tape& t, const Tensor& style) const;      // -> T x H x V
  std::pair<Tensor, Tensor> decode_motion(Tape& t, const Tensor& embedding) const;
  Tensor decode_blink(Tape& t, const Tensor& embedding) const;

  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const NetworkConfig& net_config() const { return net_cfg_; }
  const latent::LatentConfig& latent_config() const { return latent_cfg_; }

 private:
  Tensor dropout_mask(Tape& t, const Tensor& x, bool train, Rng* rng) const;

  NetworkConfig net_cfg_;
  latent::LatentConfig latent_cfg_;
  ParamStore params_;

  Conv1d audio_c1_, audio_c2_, audio_c3_;
  std::vector<Conv1d> tdnn_convs_;
  Linear tdnn_fc1_, tdnn_fc2_;
  Conv1d head_c1_, head_c2_;
  GruCell head_gru_;
  Linear head_out_;
  Conv1d dec1_c1_;
  Linear dec1_beta_, dec1_pose_;
  Conv1d dec2_c1_;
  GruCell dec2_gru_;
  Linear dec2_out_;
};

}  // namespace elp::nets
