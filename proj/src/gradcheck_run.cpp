#include "elp/gradcheck_run.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "elp/gradcheck.hpp"
#include "elp/losses.hpp"
#include "elp/nets.hpp"

namespace elp::gradcheck {

using ad::Tape;
using ad::Tensor;

double Report::worst() const {
  double w = 0;
  for (const auto& c : components) w = std::max(w, c.max_rel_err);
  return w;
}

config::ExperimentConfig reduced_default_config() {
  config::ExperimentConfig c;
  c.corpus.clip_count = 20;
  c.corpus.frames = 10;
  c.corpus.emotions = 2;
  c.corpus.beta_dim = 6;
  c.corpus.pose_dim = 2;
  c.corpus.audio_dim = 5;
  c.net.audio_in = 5;
  c.net.audio_h1 = 6;
  c.net.audio_h2 = 6;
  c.net.audio_out = 8;
  c.net.beta_dim = 6;
  c.net.pose_dim = 2;
  c.net.tdnn_hidden = 6;
  c.net.tdnn_dilations = {1, 2};
  c.net.tdnn_mlp_hidden = 6;
  c.net.head_h1 = 8;
  c.net.head_h2 = 8;
  c.net.head_gru = 6;
  c.net.dec1_hidden = 8;
  c.net.dec2_hidden = 6;
  c.net.dec2_gru = 4;
  c.net.dropout = 0.0;  // dropout masks are not part of the objective
  c.latent = {4, 4, 2};
  c.validate();
  return c;
}

namespace {

Mat random_mat(Rng& rng, std::size_t r, std::size_t c) {
  Mat m(r, c);
  for (double& v : m.data) v = rng.uniform(-1.0, 1.0);
  return m;
}

Tensor random_tensor(Rng& rng, ad::Shape shape, double lo, double hi) {
  std::vector<double> vals(ad::shape_numel(shape));
  for (double& v : vals) v = rng.uniform(lo, hi);
  return Tensor::from(shape, vals, false);
}

// per-loss-term finite-difference checks on random prediction/target pairs
void check_loss_terms(const config::ExperimentConfig& cfg, std::uint64_t seed, Report& report) {
  const std::size_t T = cfg.corpus.frames;
  const std::size_t bd = cfg.net.beta_dim;
  const std::size_t pd = cfg.net.pose_dim;
  const std::size_t N = cfg.latent.emotions;
  Rng rng(Rng::seed_mix(seed, 0x6c6f7373ULL));

  Mat beta_gt = random_mat(rng, T, bd);
  Mat pose_gt = random_mat(rng, T, pd);
  BlinkSequence blink;
  for (std::size_t t = 0; t < T; ++t) blink.phi.push_back(rng.uniform() < 0.3 ? 1 : 0);
  EmotionVector emo = EmotionVector::onehot(rng.uniform_index(N), N);

  Tensor beta_pred = random_tensor(rng, {T, bd}, -1.0, 1.0);
  Tensor pose_pred = random_tensor(rng, {T, pd}, -1.0, 1.0);
  // probabilities kept away from the clamp boundary and from ties (the total
  // variation term is not differentiable at equal neighbors) so the objective
  // is smooth inside the finite-difference stencil
  Tensor blink_prob = random_tensor(rng, {T}, 0.1, 0.9);
  {
    auto& bp = blink_prob.mutable_values();
    for (std::size_t t = 1; t < T; ++t)
      while (std::fabs(bp[t] - bp[t - 1]) < 1e-3) bp[t] = rng.uniform(0.1, 0.9);
  }
  Tensor emo_logits = random_tensor(rng, {N}, -1.5, 1.5);

  auto record = [&](const char* name, const ad::ScalarFn& f, const std::vector<Tensor>& point) {
    ad::FdOptions fo;
    fo.denom_floor = 1e-4;  // some terms have exact-zero gradient coordinates
    double err = ad::finite_difference_check(f, point, fo);
    for (auto& c : report.components)
      if (c.name == name) {
        c.max_rel_err = std::max(c.max_rel_err, err);
        return;
      }
    report.components.push_back({name, err});
  };

  record(
      "motion_l2",
      [&](Tape& t, const std::vector<Tensor>& p) {
        return losses::motion_l2(t, p[0], p[1], beta_gt, pose_gt);
      },
      {beta_pred, pose_pred});
  record(
      "blink_ce",
      [&](Tape& t, const std::vector<Tensor>& p) { return losses::blink_ce(t, p[0], blink); },
      {blink_prob});
  record(
      "emotion_ce",
      [&](Tape& t, const std::vector<Tensor>& p) {
        return losses::emotion_ce(t, t.softmax_last(p[0]), emo);
      },
      {emo_logits});
  record(
      "blink_reg",
      [&](Tape& t, const std::vector<Tensor>& p) { return losses::blink_reg(t, p[0]); },
      {blink_prob});
  record(
      "total_objective",
      [&](Tape& t, const std::vector<Tensor>& p) {
        return losses::total_loss(t, losses::motion_l2(t, p[0], p[1], beta_gt, pose_gt),
                                  losses::blink_ce(t, p[2], blink),
                                  losses::emotion_ce(t, t.softmax_last(p[3]), emo),
                                  losses::blink_reg(t, p[2]), cfg.loss);
      },
      {beta_pred, pose_pred, blink_prob, emo_logits});
}

// end-to-end check through the full model: one analytic backward pass, then
// central differences on a few coordinates of every parameter group
double check_end_to_end(const config::ExperimentConfig& cfg, std::uint64_t seed,
                        std::size_t coords_per_group, double inject_grad_error,
                        std::vector<std::string>& param_groups) {
  const std::size_t T = cfg.corpus.frames;
  Rng rng(Rng::seed_mix(seed, 0x65324554ULL));
  nets::AseModel model(cfg.net, cfg.latent, Rng::seed_mix(seed, 1));

  AudioFeatureSequence audio;
  audio.feats = random_mat(rng, T, cfg.net.audio_in);
  MotionSequence speaker;
  speaker.beta = random_mat(rng, T, cfg.net.beta_dim);
  speaker.pose = random_mat(rng, T, cfg.net.pose_dim);
  Mat beta_gt = random_mat(rng, T, cfg.net.beta_dim);
  Mat pose_gt = random_mat(rng, T, cfg.net.pose_dim);
  BlinkSequence blink;
  for (std::size_t t = 0; t < T; ++t) blink.phi.push_back(t % 3 == 0 ? 1 : 0);
  EmotionVector emo = EmotionVector::onehot(rng.uniform_index(cfg.latent.emotions),
                                            cfg.latent.emotions);

  // frozen Gumbel noise with soft sampling keeps the objective a fixed,
  // differentiable function of the parameters
  std::vector<double> noise(T * cfg.latent.heads * cfg.latent.categories);
  for (double& g : noise) g = rng.gumbel();

  auto objective = [&](Tape& t) -> Tensor {
    nets::ForwardOptions opts;
    opts.train = true;
    opts.emotion = emo;
    opts.use_partition = cfg.use_partition;
    opts.frozen_noise = &noise;
    opts.hard_sampling = false;
    auto r = model.forward(t, audio, speaker, opts);
    return losses::total_loss(
        t, losses::motion_l2(t, r.pred.beta_pred, r.pred.pose_pred, beta_gt, pose_gt),
        losses::blink_ce(t, r.pred.blink_prob, blink),
        losses::emotion_ce(t, t.softmax_last(r.pred.emotion_logits), emo),
        losses::blink_reg(t, r.pred.blink_prob), cfg.loss);
  };

  model.params().zero_grads();
  {
    Tape tape;
    tape.backward(objective(tape));
  }

  const double h = 1e-5;
  double max_err = 0.0;
  const auto& entries = model.params().entries();
  param_groups.clear();
  for (std::size_t pi = 0; pi < entries.size(); ++pi) {
    param_groups.push_back(entries[pi].name);
    const auto& analytic = entries[pi].tensor.grad();
    nets::ParamStore::Entry entry = entries[pi];  // handle copy shares storage
    auto& vals = entry.tensor.mutable_values();
    Rng pick(Rng::seed_mix(seed, 0x706b00ULL + pi));
    for (std::size_t rep = 0; rep < coords_per_group; ++rep) {
      const std::size_t ci = pick.uniform_index(vals.size());
      const double orig = vals[ci];
      Tape dummy_p, dummy_m;
      vals[ci] = orig + h;
      const double fp = objective(dummy_p).value();
      vals[ci] = orig - h;
      const double fm = objective(dummy_m).value();
      vals[ci] = orig;
      require(std::isfinite(fp) && std::isfinite(fm), "gradcheck: non-finite objective");
      const double fd = (fp - fm) / (2.0 * h);
      const double a = analytic[ci] + inject_grad_error;
      // denominator floor 1e-4 keeps central-difference round-off (~1e-10 in
      // absolute terms on this objective) from dominating near-zero gradients
      max_err = std::max(max_err, std::fabs(a - fd) / (std::fabs(a) + std::fabs(fd) + 1e-4));
    }
  }
  return max_err;
}

}  // namespace

Report run(const config::ExperimentConfig& cfg, std::size_t n_seeds,
           std::size_t coords_per_group, double inject_grad_error) {
  cfg.validate();
  require(cfg.latent.heads <= 4 && cfg.latent.categories <= 4,
          "gradcheck: requires a reduced configuration (heads <= 4, categories <= 4)");
  require(cfg.corpus.frames >= cfg.net.tdnn_receptive_field(),
          "gradcheck: frame count below the classifier receptive field");
  require(n_seeds >= 1 && coords_per_group >= 1, "gradcheck: need at least one seed/coordinate");

  Report report;
  double e2e = 0.0;
  for (std::size_t s = 0; s < n_seeds; ++s) {
    const std::uint64_t seed = Rng::seed_mix(cfg.seed, s);
    check_loss_terms(cfg, seed, report);
    e2e = std::max(e2e, check_end_to_end(cfg, seed, coords_per_group, inject_grad_error,
                                         report.param_groups));
  }
  report.components.push_back({"end_to_end", e2e});
  return report;
}

void write_report(const Report& report, std::ostream& out) {
  for (const auto& c : report.components)
    out << c.name << " max_rel_err=" << c.max_rel_err << '\n';
  out << "param_groups_checked=" << report.param_groups.size() << '\n';
}

}  // namespace elp::gradcheck
