#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "elp/gradcheck.hpp"
#include "elp/losses.hpp"
#include "elp/nets.hpp"

using namespace elp;
using namespace elp::nets;
using ad::Shape;
using ad::Tape;
using ad::Tensor;

namespace {

// tiny configuration used for gradient checks
NetworkConfig tiny_net() {
  NetworkConfig c;
  c.audio_in = 5;
  c.audio_h1 = 4;
  c.audio_h2 = 4;
  c.audio_out = 6;
  c.beta_dim = 3;
  c.pose_dim = 2;
  c.tdnn_hidden = 4;
  c.tdnn_dilations = {1, 2};
  c.tdnn_mlp_hidden = 4;
  c.head_h1 = 4;
  c.head_h2 = 4;
  c.head_gru = 3;
  c.dec1_hidden = 4;
  c.dec2_hidden = 4;
  c.dec2_gru = 3;
  c.dropout = 0.0;
  return c;
}

latent::LatentConfig tiny_latent() {
  latent::LatentConfig l;
  l.heads = 4;
  l.categories = 4;
  l.emotions = 2;
  return l;
}

Mat random_mat(Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  Mat m(r, c);
  for (auto& v : m.data) v = rng.uniform(-scale, scale);
  return m;
}

struct Clip {
  AudioFeatureSequence audio;
  MotionSequence motion;
};

Clip random_clip(Rng& rng, std::size_t frames, const NetworkConfig& c, double scale = 1.0) {
  Clip clip;
  clip.audio.feats = random_mat(rng, frames, c.audio_in, scale);
  clip.motion.beta = random_mat(rng, frames, c.beta_dim, scale);
  clip.motion.pose = random_mat(rng, frames, c.pose_dim, scale);
  return clip;
}

}  // namespace

TEST_CASE("audio_encode output shape and eval determinism") {
  NetworkConfig c;  // paper-shaped defaults
  AseModel model(c, latent::LatentConfig{}, 7);
  Rng rng(1);
  Mat feats = random_mat(rng, 50, 29);
  Tape t1, t2;
  Tensor y1 = model.encode_audio(t1, Tensor::from_mat(feats), false, nullptr);
  Tensor y2 = model.encode_audio(t2, Tensor::from_mat(feats), false, nullptr);
  CHECK(y1.shape() == Shape{50, 128});
  CHECK(y1.values() == y2.values());

  Mat wrong = random_mat(rng, 50, 13);
  CHECK_THROWS(model.encode_audio(t1, Tensor::from_mat(wrong), false, nullptr));
}

TEST_CASE("classify_emotion shapes, receptive field error, batch independence") {
  auto c = tiny_net();
  auto l = tiny_latent();
  AseModel model(c, l, 3);
  Rng rng(2);
  Mat style = random_mat(rng, 20, c.style_dim());
  Tape t;
  Tensor logits = model.classify_emotion(t, Tensor::from_mat(style));
  CHECK(logits.shape() == Shape{2});

  Mat tooshort = random_mat(rng, 3, c.style_dim());
  CHECK_THROWS_WITH_AS(model.classify_emotion(t, Tensor::from_mat(tooshort)),
                       doctest::Contains("at least"), std::runtime_error);

  // clips evaluated independently: same clip gives same logits regardless of
  // what was evaluated before on the same tape
  Mat other = random_mat(rng, 20, c.style_dim());
  Tape t2;
  model.classify_emotion(t2, Tensor::from_mat(other));
  Tensor again = model.classify_emotion(t2, Tensor::from_mat(style));
  CHECK(again.values() == logits.values());
}

TEST_CASE("encode_heads shape and finite logits on zero input") {
  auto c = tiny_net();
  auto l = tiny_latent();
  AseModel model(c, l, 3);
  Tape t;
  Tensor logits = model.encode_heads(t, Tensor::zeros({10, c.style_dim()}));
  CHECK(logits.shape() == Shape{10, 4, 4});
  for (double v : logits.values()) CHECK(std::isfinite(v));
}

TEST_CASE("decoders: output shapes and sigmoid range") {
  auto c = tiny_net();
  auto l = tiny_latent();
  AseModel model(c, l, 5);
  Rng rng(4);
  latent::CodewordGrid grid;
  grid.frames = 10;
  grid.heads = l.heads;
  grid.range = l.range();
  for (std::size_t i = 0; i < grid.frames * grid.heads; ++i)
    grid.codes.push_back(static_cast<std::uint32_t>(1 + rng.uniform_index(grid.range)));
  Tape t;
  auto pred = model.decode_grid(t, grid);
  CHECK(pred.beta_pred.shape() == Shape{10, 3});
  CHECK(pred.pose_pred.shape() == Shape{10, 2});
  CHECK(pred.blink_prob.shape() == Shape{10});
  for (double v : pred.blink_prob.values()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("ase_forward: inference determinism and emotion partition") {
  auto c = tiny_net();
  auto l = tiny_latent();
  AseModel model(c, l, 11);
  Rng rng(5);
  Clip clip = random_clip(rng, 12, c);

  ForwardOptions infer;
  Tape t1, t2;
  auto r1 = model.forward(t1, clip.audio, clip.motion, infer);
  auto r2 = model.forward(t2, clip.audio, clip.motion, infer);
  CHECK(r1.pred.beta_pred.values() == r2.pred.beta_pred.values());
  CHECK(r1.pred.blink_prob.values() == r2.pred.blink_prob.values());
  CHECK(r1.grid.codes == r2.grid.codes);

  // different emotion overrides land in disjoint codeword blocks
  ForwardOptions e0 = infer, e1 = infer;
  e0.emotion = EmotionVector::onehot(0, 2);
  e1.emotion = EmotionVector::onehot(1, 2);
  Tape t3, t4;
  auto g0 = model.forward(t3, clip.audio, clip.motion, e0).grid;
  auto g1 = model.forward(t4, clip.audio, clip.motion, e1).grid;
  for (auto code : g0.codes) CHECK(code <= l.categories);
  for (auto code : g1.codes) CHECK(code > l.categories);
}

TEST_CASE("ase_forward: train mode reproducibility with fixed seed") {
  auto c = tiny_net();
  auto l = tiny_latent();
  AseModel model(c, l, 11);
  Rng data_rng(6);
  Clip clip = random_clip(data_rng, 12, c);

  auto run = [&] {
    Rng rng(77);
    ForwardOptions train;
    train.train = true;
    train.emotion = EmotionVector::onehot(1, 2);
    train.rng = &rng;
    Tape t;
    auto r = model.forward(t, clip.audio, clip.motion, train);
    return r.pred.beta_pred.values();
  };
  CHECK(run() == run());
}

TEST_CASE("ase_forward: outputs finite for extreme inputs") {
  auto c = tiny_net();
  auto l = tiny_latent();
  AseModel model(c, l, 13);
  for (double fill : {0.0, 1.0, 1e3, -1e3}) {
    Clip clip;
    clip.audio.feats = Mat(10, c.audio_in, fill);
    clip.motion.beta = Mat(10, c.beta_dim, fill);
    clip.motion.pose = Mat(10, c.pose_dim, fill);
    // constant motion makes std blocks zero; perturb one frame to keep
    // variation when fill is 0
    clip.motion.beta(0, 0) += 1.0;
    Tape t;
    ForwardOptions infer;
    auto r = model.forward(t, clip.audio, clip.motion, infer);
    for (double v : r.pred.beta_pred.values()) CHECK(std::isfinite(v));
    for (double v : r.pred.pose_pred.values()) CHECK(std::isfinite(v));
    for (double v : r.pred.blink_prob.values()) CHECK(std::isfinite(v));
  }
}

TEST_CASE("no-partition ablation keeps codes in [1,V]") {
  auto c = tiny_net();
  auto l = tiny_latent();
  AseModel model(c, l, 17);
  Rng rng(8);
  Clip clip = random_clip(rng, 10, c);
  ForwardOptions infer;
  infer.use_partition = false;
  Tape t;
  auto r = model.forward(t, clip.audio, clip.motion, infer);
  CHECK(r.grid.range == l.categories);
  for (auto code : r.grid.codes) {
    CHECK(code >= 1);
    CHECK(code <= l.categories);
  }
}

TEST_CASE("end-to-end gradients match finite differences on reduced config") {
  auto c = tiny_net();
  auto l = tiny_latent();
  AseModel model(c, l, 21);
  Rng rng(9);
  const std::size_t frames = 8;
  Clip clip = random_clip(rng, frames, c);
  MotionSequence listener;
  listener.beta = random_mat(rng, frames, c.beta_dim);
  listener.pose = random_mat(rng, frames, c.pose_dim);
  BlinkSequence blink;
  for (std::size_t i = 0; i < frames; ++i) blink.phi.push_back(i % 2);
  EmotionVector emo = EmotionVector::onehot(0, 2);

  // frozen Gumbel noise so the objective is deterministic in the parameters
  std::vector<double> noise(frames * l.heads * l.categories);
  for (auto& g : noise) g = rng.gumbel();

  // check every parameter group; the objective re-runs the full model with
  // perturbed copies of one parameter at a time
  const auto& entries = model.params().entries();
  for (std::size_t pi = 0; pi < entries.size(); ++pi) {
    ad::ScalarFn f = [&, pi](Tape& t, const std::vector<Tensor>& p) -> Tensor {
      // temporarily substitute the perturbed parameter values
      auto& target = const_cast<std::vector<double>&>(entries[pi].tensor.values());
      std::vector<double> saved = target;
      target = p[0].values();
      ForwardOptions opts;
      opts.train = true;
      opts.emotion = emo;
      opts.frozen_noise = &noise;
      opts.hard_sampling = false;  // soft path: differentiable end to end
      auto r = model.forward(t, clip.audio, clip.motion, opts);
      losses::LossWeights w;
      Tensor loss =
          losses::total_loss(t, losses::motion_l2(t, r.pred.beta_pred, r.pred.pose_pred,
                                                  listener.beta, listener.pose),
                             losses::blink_ce(t, r.pred.blink_prob, blink),
                             losses::emotion_ce(t, t.softmax_last(r.pred.emotion_logits), emo),
                             losses::blink_reg(t, r.pred.blink_prob), w);
      target = saved;
      return loss;
    };
    // analytic gradient via the real parameter tensor
    model.params().zero_grads();
    Tape tape;
    ForwardOptions opts;
    opts.train = true;
    opts.emotion = emo;
    opts.frozen_noise = &noise;
    opts.hard_sampling = false;
    auto r = model.forward(tape, clip.audio, clip.motion, opts);
    losses::LossWeights w;
    Tensor loss =
        losses::total_loss(tape, losses::motion_l2(tape, r.pred.beta_pred, r.pred.pose_pred,
                                                   listener.beta, listener.pose),
                           losses::blink_ce(tape, r.pred.blink_prob, blink),
                           losses::emotion_ce(tape, tape.softmax_last(r.pred.emotion_logits), emo),
                           losses::blink_reg(tape, r.pred.blink_prob), w);
    tape.backward(loss);
    const auto analytic = entries[pi].tensor.grad();

    // central differences on a handful of coordinates per group
    Rng pick(Rng::seed_mix(123, pi));
    Tensor probe = Tensor::from(entries[pi].tensor.shape(), entries[pi].tensor.values());
    const double h = 1e-5;
    std::size_t n = probe.numel();
    for (int rep = 0; rep < 3; ++rep) {
      std::size_t ci = pick.uniform_index(n);
      auto& vals = probe.mutable_values();
      double orig = vals[ci];
      Tape dummy;
      vals[ci] = orig + h;
      double fp = f(dummy, {probe}).value();
      vals[ci] = orig - h;
      double fm = f(dummy, {probe}).value();
      vals[ci] = orig;
      double fd = (fp - fm) / (2 * h);
      double err = std::fabs(analytic[ci] - fd) / (std::fabs(analytic[ci]) + std::fabs(fd) + 1e-8);
      INFO("param=", entries[pi].name, " coord=", ci);
      CHECK(err < 1e-4);
    }
  }
}
