#include "elp/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace elp::eval {

namespace {

// one method's generated outputs, clip-aligned with the test split
struct Generated {
  std::string method;
  std::vector<Mat> beta, pose;
  std::vector<std::vector<double>> blink;  // probabilities or binary values
};

Mat pool_frames(const std::vector<Mat>& clips) {
  Mat out(0, clips.front().cols);
  for (const Mat& c : clips) {
    out.data.insert(out.data.end(), c.data.begin(), c.data.end());
    out.rows += c.rows;
  }
  return out;
}

std::vector<double> to_double(const BlinkSequence& b) {
  std::vector<double> v(b.frames());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = b.phi[i];
  return v;
}

}  // namespace

EvalOutputs evaluate(const nets::AseModel& model, const corpus::Corpus& data,
                     const config::ExperimentConfig& cfg, const EvalOptions& opts) {
  const auto& test = data.test;
  require(!test.empty(), "evaluate: empty test split");
  const std::size_t T = test.front().speaker.frames();
  const std::size_t beta_dim = test.front().listener.beta.cols;
  require(test.size() * T >= beta_dim + 1,
          "evaluate: too few test frames for gaussian Frechet distance");

  metrics::WtlccOptions wo;
  wo.window = std::min(opts.window, T);
  wo.max_lag = std::min(opts.max_lag, wo.window - 1);

  // ground truth row
  Generated gt{"gt", {}, {}, {}};
  for (const auto& clip : test) {
    gt.beta.push_back(clip.listener.beta);
    gt.pose.push_back(clip.listener.pose);
    gt.blink.push_back(to_double(clip.blink));
  }

  // model row: inference path, emotion from the classifier
  Generated mdl{"model", {}, {}, {}};
  std::size_t correct = 0;
  for (const auto& clip : test) {
    ad::Tape tape;
    nets::ForwardOptions fo;
    fo.use_partition = cfg.use_partition;
    auto r = model.forward(tape, clip.audio, clip.speaker, fo);
    mdl.beta.push_back(r.pred.beta_pred.to_mat());
    mdl.pose.push_back(r.pred.pose_pred.to_mat());
    mdl.blink.push_back(r.pred.blink_prob.values());
    if (r.used_emotion.slot() == clip.emotion.slot()) ++correct;
  }

  std::vector<Generated> methods = {gt, mdl};

  std::vector<metrics::CorpusClipRef> train_refs;
  for (const auto& clip : data.train)
    train_refs.push_back({&clip.audio, &clip.speaker, &clip.listener});

  auto motion_only = [&](const std::string& name, auto&& gen_fn) {
    Generated g{name, {}, {}, {}};
    for (const auto& clip : test) {
      const MotionSequence& m = gen_fn(clip);
      g.beta.push_back(m.beta);
      g.pose.push_back(m.pose);
      g.blink.emplace_back(T, 0.0);  // no blink model
    }
    methods.push_back(std::move(g));
  };

  if (opts.nn_motion) {
    require(!train_refs.empty(), "evaluate: nn_motion baseline needs a train split");
    motion_only("nn_motion", [&](const corpus::ConversationClip& c) -> const MotionSequence& {
      return metrics::baseline_nn_motion(c.speaker, train_refs);
    });
  }
  if (opts.nn_audio) {
    require(!train_refs.empty(), "evaluate: nn_audio baseline needs a train split");
    motion_only("nn_audio", [&](const corpus::ConversationClip& c) -> const MotionSequence& {
      return metrics::baseline_nn_audio(c.audio, train_refs);
    });
  }
  if (opts.random) {
    require(!train_refs.empty(), "evaluate: random baseline needs a train split");
    Generated g{"random", {}, {}, {}};
    for (const auto& clip : test) {
      Rng rng(Rng::seed_mix(cfg.seed, 0x72616e64ULL ^ clip.id));
      MotionSequence m = metrics::baseline_random(train_refs, rng);
      g.beta.push_back(m.beta);
      g.pose.push_back(m.pose);
      g.blink.emplace_back(T, 0.0);
    }
    methods.push_back(std::move(g));
  }
  if (opts.dls_random) {
    Generated g{"dls_random", {}, {}, {}};
    for (const auto& clip : test) {
      Rng rng(Rng::seed_mix(cfg.seed, 0x646c73ULL ^ clip.id));
      auto s = metrics::baseline_dls_random(model, T, rng);
      g.beta.push_back(s.motion.beta);
      g.pose.push_back(s.motion.pose);
      g.blink.push_back(s.blink_prob);
    }
    methods.push_back(std::move(g));
  }

  Mat gt_beta_pool = pool_frames(gt.beta);
  Mat gt_pose_pool = pool_frames(gt.pose);

  EvalOutputs out;
  out.report.config_digest = cfg.digest();
  out.report.seed = cfg.seed;
  out.report.clip_count = test.size();
  out.emotion_accuracy = static_cast<double>(correct) / static_cast<double>(test.size());

  for (const auto& g : methods) {
    metrics::MetricRow row;
    row.method = g.method;
    Mat beta_pool = pool_frames(g.beta);
    Mat pose_pool = pool_frames(g.pose);
    row.fd_beta = metrics::frechet_distance(beta_pool, gt_beta_pool, metrics::FdMode::Gaussian);
    row.fd_beta_l1 = metrics::frechet_distance(beta_pool, gt_beta_pool, metrics::FdMode::L1);
    row.fd_pose = metrics::frechet_distance(pose_pool, gt_pose_pool, metrics::FdMode::Gaussian);
    row.fd_pose_l1 = metrics::frechet_distance(pose_pool, gt_pose_pool, metrics::FdMode::L1);
    row.vd_beta = metrics::variation_diversity(g.beta);
    row.vd_pose = metrics::variation_diversity(g.pose);
    row.sid_beta = metrics::shannon_diversity(beta_pool, gt_beta_pool, opts.k);
    row.sid_pose = metrics::shannon_diversity(pose_pool, gt_pose_pool, opts.k);
    for (std::size_t i = 0; i < test.size(); ++i) {
      row.rpcc_beta += metrics::rpcc(test[i].speaker.beta, g.beta[i], test[i].listener.beta);
      row.rpcc_pose += metrics::rpcc(test[i].speaker.pose, g.pose[i], test[i].listener.pose);
      row.wtlcc_beta += metrics::wtlcc_mat(test[i].speaker.beta, g.beta[i], wo);
      row.wtlcc_pose += metrics::wtlcc_mat(test[i].speaker.pose, g.pose[i], wo);
      row.sts_beta += metrics::sts_distance(g.beta[i], test[i].listener.beta);
      row.sts_pose += metrics::sts_distance(g.pose[i], test[i].listener.pose);
      row.blink_wtlcc += metrics::wtlcc(g.blink[i], gt.blink[i], wo);
    }
    const double inv = 1.0 / static_cast<double>(test.size());
    row.rpcc_beta *= inv;
    row.rpcc_pose *= inv;
    row.wtlcc_beta *= inv;
    row.wtlcc_pose *= inv;
    row.sts_beta *= inv;
    row.sts_pose *= inv;
    row.blink_wtlcc *= inv;
    out.report.rows.push_back(std::move(row));
  }
  return out;
}

namespace {

// mean predicted expression frame for one clip, optional emotion override
std::vector<double> mean_beta_frame(const nets::AseModel& model,
                                    const corpus::ConversationClip& clip,
                                    const config::ExperimentConfig& cfg,
                                    const std::optional<EmotionVector>& override_emotion) {
  ad::Tape tape;
  nets::ForwardOptions fo;
  fo.use_partition = cfg.use_partition;
  fo.emotion = override_emotion;
  auto r = model.forward(tape, clip.audio, clip.speaker, fo);
  Mat beta = r.pred.beta_pred.to_mat();
  std::vector<double> mean(beta.cols, 0.0);
  for (std::size_t t = 0; t < beta.rows; ++t)
    for (std::size_t d = 0; d < beta.cols; ++d) mean[d] += beta(t, d);
  for (double& v : mean) v /= static_cast<double>(beta.rows);
  return mean;
}

double l2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

double emotion_separation(const nets::AseModel& model, const corpus::Corpus& data,
                          const config::ExperimentConfig& cfg) {
  require(!data.test.empty(), "emotion_separation: empty test split");
  const std::size_t N = cfg.latent.emotions;
  const std::size_t bd = cfg.net.beta_dim;
  std::vector<std::vector<double>> sums(N, std::vector<double>(bd, 0.0));
  std::vector<std::size_t> counts(N, 0);
  for (const auto& clip : data.test) {
    std::vector<double> mean = mean_beta_frame(model, clip, cfg, std::nullopt);
    const std::size_t slot = clip.emotion.slot();
    for (std::size_t d = 0; d < bd; ++d) sums[slot][d] += mean[d];
    ++counts[slot];
  }
  double acc = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < N; ++i) {
    if (counts[i] == 0) continue;
    for (double& v : sums[i]) v /= static_cast<double>(counts[i]);
  }
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = i + 1; j < N; ++j) {
      if (counts[i] == 0 || counts[j] == 0) continue;
      acc += l2(sums[i], sums[j]);
      ++pairs;
    }
  require(pairs > 0, "emotion_separation: need test clips from at least two emotions");
  return acc / static_cast<double>(pairs);
}

double override_shift(const nets::AseModel& model, const corpus::Corpus& data,
                      const config::ExperimentConfig& cfg) {
  require(!data.test.empty(), "override_shift: empty test split");
  const std::size_t N = cfg.latent.emotions;
  require(N >= 2, "override_shift: needs at least two emotions");
  double acc = 0;
  for (const auto& clip : data.test) {
    auto lo = mean_beta_frame(model, clip, cfg, EmotionVector::onehot(0, N));
    auto hi = mean_beta_frame(model, clip, cfg, EmotionVector::onehot(N - 1, N));
    acc += l2(lo, hi);
  }
  return acc / static_cast<double>(data.test.size());
}

void write_feature_dump(const nets::AseModel& model, const corpus::Corpus& data,
                        const config::ExperimentConfig& cfg, std::ostream& out) {
  out << "clip_id,emotion";
  for (std::size_t d = 0; d < cfg.net.beta_dim; ++d) out << ",beta_mean_" << d;
  out << '\n';
  char buf[64];
  for (const auto& clip : data.test) {
    std::vector<double> mean = mean_beta_frame(model, clip, cfg, std::nullopt);
    out << clip.id << ',' << clip.emotion.slot();
    for (double v : mean) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace elp::eval
