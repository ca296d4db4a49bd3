#include "elp/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include <json.hpp>

namespace elp::metrics {

namespace {

std::vector<double> column(const Mat& m, std::size_t c) {
  std::vector<double> v(m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) v[r] = m(r, c);
  return v;
}

// Pearson correlation over explicitly paired samples
double pcc_pairs(const std::vector<std::pair<double, double>>& pairs) {
  const std::size_t n = pairs.size();
  if (n < 2) return 0.0;
  double mx = 0, my = 0;
  for (const auto& [a, b] : pairs) {
    mx += a;
    my += b;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (const auto& [a, b] : pairs) {
    sxy += (a - mx) * (b - my);
    sxx += (a - mx) * (a - mx);
    syy += (b - my) * (b - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

Eigen::MatrixXd to_eigen(const Mat& m) {
  Eigen::MatrixXd e(m.rows, m.cols);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) e(static_cast<long>(r), static_cast<long>(c)) = m(r, c);
  return e;
}

// symmetric PSD square root; clamps negative eigenvalues to zero
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& s, std::size_t& clamped) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (s + s.transpose()));
  Eigen::VectorXd lam = es.eigenvalues();
  for (long i = 0; i < lam.size(); ++i) {
    if (lam[i] < 0.0) {
      lam[i] = 0.0;
      ++clamped;
    }
  }
  return es.eigenvectors() * lam.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

void fit_gaussian(const Mat& frames, Eigen::VectorXd& mu, Eigen::MatrixXd& sigma) {
  const auto x = to_eigen(frames);
  const double n = static_cast<double>(frames.rows);
  mu = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - mu.transpose();
  sigma = centered.transpose() * centered / n;  // population covariance
}

double mean_frame_l2(const Mat& a, const Mat& b) {
  require(a.rows == b.rows && a.cols == b.cols, "baseline: clip shape mismatch");
  double acc = 0;
  for (std::size_t r = 0; r < a.rows; ++r) {
    double s = 0;
    for (std::size_t c = 0; c < a.cols; ++c) {
      double d = a(r, c) - b(r, c);
      s += d * d;
    }
    acc += std::sqrt(s);
  }
  return acc / static_cast<double>(a.rows);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

double pcc(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), "pcc: length mismatch");
  require(x.size() >= 2, "pcc: need at least 2 samples");
  std::vector<std::pair<double, double>> pairs(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) pairs[i] = {x[i], y[i]};
  return pcc_pairs(pairs);
}

double rpcc(const Mat& speaker, const Mat& gen, const Mat& gt) {
  require(speaker.rows == gen.rows && speaker.rows == gt.rows, "rpcc: frame count mismatch");
  require(speaker.cols == gen.cols && speaker.cols == gt.cols, "rpcc: dimension mismatch");
  require(speaker.cols > 0, "rpcc: empty motion");
  double acc = 0;
  for (std::size_t d = 0; d < speaker.cols; ++d) {
    auto s = column(speaker, d);
    acc += std::fabs(pcc(s, column(gen, d)) - pcc(s, column(gt, d)));
  }
  return acc / static_cast<double>(speaker.cols);
}

double wtlcc(const std::vector<double>& x, const std::vector<double>& y,
             const WtlccOptions& opts) {
  require(x.size() == y.size(), "wtlcc: length mismatch");
  const std::size_t T = x.size();
  require(opts.window >= 3, "wtlcc: window too small (< 3 frames)");
  require(opts.window <= T, "wtlcc: window exceeds sequence length");
  require(opts.max_lag < opts.window, "wtlcc: max_lag must be below window");
  const std::size_t stride = std::max<std::size_t>(1, opts.window / 2);
  const long lag_max = static_cast<long>(opts.max_lag);

  double acc = 0;
  std::size_t n_windows = 0;
  for (std::size_t s = 0; s + opts.window <= T; s += stride) {
    double best = -std::numeric_limits<double>::infinity();
    for (long lag = -lag_max; lag <= lag_max; ++lag) {
      std::vector<std::pair<double, double>> pairs;
      for (std::size_t i = 0; i < opts.window; ++i) {
        long yi = static_cast<long>(s + i) + lag;
        if (yi < 0 || yi >= static_cast<long>(T)) continue;
        pairs.emplace_back(x[s + i], y[static_cast<std::size_t>(yi)]);
      }
      best = std::max(best, pcc_pairs(pairs));
    }
    acc += best;
    ++n_windows;
  }
  return acc / static_cast<double>(n_windows);
}

double wtlcc_mat(const Mat& x, const Mat& y, const WtlccOptions& opts) {
  require(x.rows == y.rows && x.cols == y.cols, "wtlcc_mat: shape mismatch");
  require(x.cols > 0, "wtlcc_mat: empty input");
  double acc = 0;
  for (std::size_t d = 0; d < x.cols; ++d) acc += wtlcc(column(x, d), column(y, d), opts);
  return acc / static_cast<double>(x.cols);
}

double frechet_distance(const Mat& gen_frames, const Mat& gt_frames, FdMode mode,
                        std::size_t* clamped) {
  require(gen_frames.cols == gt_frames.cols, "frechet_distance: dimension mismatch");
  if (clamped) *clamped = 0;
  if (mode == FdMode::L1) {
    require(gen_frames.rows == gt_frames.rows, "frechet_distance: l1 mode needs aligned frames");
    require(gen_frames.rows > 0, "frechet_distance: empty input");
    double acc = 0;
    for (std::size_t i = 0; i < gen_frames.size(); ++i)
      acc += std::fabs(gen_frames.data[i] - gt_frames.data[i]);
    return acc / static_cast<double>(gen_frames.rows);
  }
  const std::size_t d = gen_frames.cols;
  require(gen_frames.rows >= d + 1 && gt_frames.rows >= d + 1,
          "frechet_distance: need at least D+1 frames per set in gaussian mode");
  Eigen::VectorXd mu_g, mu_t;
  Eigen::MatrixXd sig_g, sig_t;
  fit_gaussian(gen_frames, mu_g, sig_g);
  fit_gaussian(gt_frames, mu_t, sig_t);

  std::size_t n_clamped = 0;
  Eigen::MatrixXd root_g = psd_sqrt(sig_g, n_clamped);
  Eigen::MatrixXd inner = psd_sqrt(root_g * sig_t * root_g, n_clamped);
  if (clamped) *clamped = n_clamped;
  double value = (mu_g - mu_t).squaredNorm() + (sig_g + sig_t - 2.0 * inner).trace();
  // numerical cancellation can leave a tiny negative residue
  return std::max(value, 0.0);
}

double variation_diversity(const std::vector<Mat>& clips) {
  require(!clips.empty(), "variation_diversity: no clips");
  double acc = 0;
  for (const Mat& clip : clips) {
    require(clip.rows >= 2, "variation_diversity: clip needs at least 2 frames");
    double clip_acc = 0;
    for (std::size_t c = 0; c < clip.cols; ++c) {
      double mean = 0;
      for (std::size_t r = 0; r < clip.rows; ++r) mean += clip(r, c);
      mean /= static_cast<double>(clip.rows);
      double var = 0;
      for (std::size_t r = 0; r < clip.rows; ++r) var += (clip(r, c) - mean) * (clip(r, c) - mean);
      clip_acc += var / static_cast<double>(clip.rows);
    }
    acc += clip_acc / static_cast<double>(clip.cols);
  }
  return acc / static_cast<double>(clips.size());
}

namespace {

double sq_dist(const double* a, const double* b, std::size_t d) {
  double s = 0;
  for (std::size_t i = 0; i < d; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

std::size_t nearest_centroid(const double* p, const Mat& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows; ++c) {
    double d = sq_dist(p, centroids.row(c), centroids.cols);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

Mat kmeans_fit(const Mat& ref, std::size_t k, std::uint64_t seed) {
  const std::size_t n = ref.rows, d = ref.cols;
  Rng rng(seed);
  Mat centroids(k, d);

  // k-means++ seeding
  std::size_t first = rng.uniform_index(n);
  for (std::size_t j = 0; j < d; ++j) centroids(0, j) = ref(first, j);
  std::vector<double> dist2(n);
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t cc = 0; cc < c; ++cc)
        best = std::min(best, sq_dist(ref.row(i), centroids.row(cc), d));
      dist2[i] = best;
      total += best;
    }
    std::size_t pick = 0;
    if (total > 0) {
      double u = rng.uniform() * total, run = 0;
      for (std::size_t i = 0; i < n; ++i) {
        run += dist2[i];
        if (run >= u) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.uniform_index(n);
    }
    for (std::size_t j = 0; j < d; ++j) centroids(c, j) = ref(pick, j);
  }

  std::vector<std::size_t> assign(n, 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t a = nearest_centroid(ref.row(i), centroids);
      if (a != assign[i]) {
        assign[i] = a;
        changed = true;
      }
    }
    Mat sums(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[assign[i]];
      for (std::size_t j = 0; j < d; ++j) sums(assign[i], j) += ref(i, j);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // re-seed an empty cluster from the point farthest from its centroid
        std::size_t far = 0;
        double far_d = -1;
        for (std::size_t i = 0; i < n; ++i) {
          double dd = sq_dist(ref.row(i), centroids.row(assign[i]), d);
          if (dd > far_d) {
            far_d = dd;
            far = i;
          }
        }
        for (std::size_t j = 0; j < d; ++j) centroids(c, j) = ref(far, j);
        changed = true;
      } else {
        for (std::size_t j = 0; j < d; ++j)
          centroids(c, j) = sums(c, j) / static_cast<double>(counts[c]);
      }
    }
    if (!changed && iter > 0) break;
  }
  return centroids;
}

}  // namespace

double shannon_diversity(const Mat& gen_frames, const Mat& ref_frames, std::size_t k,
                         std::uint64_t seed) {
  require(k >= 1, "shannon_diversity: k must be positive");
  require(ref_frames.rows >= k, "shannon_diversity: need at least k reference frames");
  require(gen_frames.cols == ref_frames.cols, "shannon_diversity: dimension mismatch");
  require(gen_frames.rows > 0, "shannon_diversity: no generated frames");
  Mat centroids = kmeans_fit(ref_frames, k, seed);
  std::vector<std::size_t> hist(k, 0);
  for (std::size_t i = 0; i < gen_frames.rows; ++i)
    ++hist[nearest_centroid(gen_frames.row(i), centroids)];
  double h = 0;
  const double n = static_cast<double>(gen_frames.rows);
  for (std::size_t c = 0; c < k; ++c) {
    if (hist[c] == 0) continue;
    double q = static_cast<double>(hist[c]) / n;
    h -= q * std::log(q);
  }
  return h;
}

double sts_distance(const Mat& x, const Mat& y) {
  require(x.rows == y.rows && x.cols == y.cols, "sts_distance: shape mismatch");
  require(x.rows >= 2, "sts_distance: need at least 2 frames");
  require(x.cols > 0, "sts_distance: empty input");
  double acc = 0;
  for (std::size_t c = 0; c < x.cols; ++c) {
    double d2 = 0;
    for (std::size_t r = 0; r + 1 < x.rows; ++r) {
      double sx = x(r + 1, c) - x(r, c);
      double sy = y(r + 1, c) - y(r, c);
      d2 += (sx - sy) * (sx - sy);
    }
    acc += std::sqrt(d2);
  }
  return acc / static_cast<double>(x.cols);
}

namespace {

Mat concat_cols(const Mat& a, const Mat& b) {
  require(a.rows == b.rows, "concat_cols: row mismatch");
  Mat out(a.rows, a.cols + b.cols);
  for (std::size_t r = 0; r < a.rows; ++r) {
    for (std::size_t c = 0; c < a.cols; ++c) out(r, c) = a(r, c);
    for (std::size_t c = 0; c < b.cols; ++c) out(r, a.cols + c) = b(r, c);
  }
  return out;
}

}  // namespace

const MotionSequence& baseline_nn_motion(const MotionSequence& query_speaker,
                                         const std::vector<CorpusClipRef>& train_set) {
  require(!train_set.empty(), "baseline_nn_motion: empty train set");
  Mat q = concat_cols(query_speaker.beta, query_speaker.pose);
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    const auto& sp = *train_set[i].speaker;
    double d = mean_frame_l2(q, concat_cols(sp.beta, sp.pose));
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return *train_set[best].listener;
}

const MotionSequence& baseline_nn_audio(const AudioFeatureSequence& query_audio,
                                        const std::vector<CorpusClipRef>& train_set) {
  require(!train_set.empty(), "baseline_nn_audio: empty train set");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    double d = mean_frame_l2(query_audio.feats, train_set[i].audio->feats);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return *train_set[best].listener;
}

namespace {

// per-dimension population std over all training listener frames
void listener_std(const std::vector<CorpusClipRef>& train_set, std::vector<double>& beta_std,
                  std::vector<double>& pose_std) {
  auto pooled = [&](auto select) {
    std::size_t cols = select(*train_set[0].listener).cols;
    std::vector<double> mean(cols, 0.0), var(cols, 0.0);
    std::size_t n = 0;
    for (const auto& clip : train_set) {
      const Mat& m = select(*clip.listener);
      for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) mean[c] += m(r, c);
      n += m.rows;
    }
    for (auto& v : mean) v /= static_cast<double>(n);
    for (const auto& clip : train_set) {
      const Mat& m = select(*clip.listener);
      for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
          var[c] += (m(r, c) - mean[c]) * (m(r, c) - mean[c]);
    }
    for (auto& v : var) v = std::sqrt(v / static_cast<double>(n));
    return var;
  };
  beta_std = pooled([](const MotionSequence& m) -> const Mat& { return m.beta; });
  pose_std = pooled([](const MotionSequence& m) -> const Mat& { return m.pose; });
}

}  // namespace

MotionSequence baseline_random(const std::vector<CorpusClipRef>& train_set, Rng& rng,
                               double sigma_scale) {
  require(!train_set.empty(), "baseline_random: empty train set");
  std::vector<double> beta_std, pose_std;
  listener_std(train_set, beta_std, pose_std);
  MotionSequence out = *train_set[rng.uniform_index(train_set.size())].listener;
  for (std::size_t r = 0; r < out.beta.rows; ++r)
    for (std::size_t c = 0; c < out.beta.cols; ++c)
      out.beta(r, c) += sigma_scale * beta_std[c] * rng.normal();
  for (std::size_t r = 0; r < out.pose.rows; ++r)
    for (std::size_t c = 0; c < out.pose.cols; ++c)
      out.pose(r, c) += sigma_scale * pose_std[c] * rng.normal();
  return out;
}

DlsRandomResult baseline_dls_random(const nets::AseModel& model, std::size_t frames, Rng& rng,
                                    double blink_threshold) {
  const auto& l = model.latent_config();
  DlsRandomResult out;
  out.grid.frames = frames;
  out.grid.heads = l.heads;
  out.grid.range = l.range();
  out.grid.codes.resize(frames * l.heads);
  for (auto& c : out.grid.codes)
    c = static_cast<std::uint32_t>(1 + rng.uniform_index(out.grid.range));
  ad::Tape tape;
  auto pred = model.decode_grid(tape, out.grid);
  out.motion.beta = pred.beta_pred.to_mat();
  out.motion.pose = pred.pose_pred.to_mat();
  out.blink_prob = pred.blink_prob.values();
  for (double p : out.blink_prob) out.blink.phi.push_back(p > blink_threshold ? 1 : 0);
  return out;
}

void MetricReport::write_csv(std::ostream& out) const {
  out << "method,fd_beta,vd_beta,sid_beta,rpcc_beta,wtlcc_beta,sts_beta,"
         "fd_pose,vd_pose,sid_pose,rpcc_pose,wtlcc_pose,sts_pose,blink_wtlcc,"
         "fd_beta_l1,fd_pose_l1\n";
  for (const auto& r : rows) {
    out << r.method << ',' << fmt(r.fd_beta) << ',' << fmt(r.vd_beta) << ',' << fmt(r.sid_beta)
        << ',' << fmt(r.rpcc_beta) << ',' << fmt(r.wtlcc_beta) << ',' << fmt(r.sts_beta) << ','
        << fmt(r.fd_pose) << ',' << fmt(r.vd_pose) << ',' << fmt(r.sid_pose) << ','
        << fmt(r.rpcc_pose) << ',' << fmt(r.wtlcc_pose) << ',' << fmt(r.sts_pose) << ','
        << fmt(r.blink_wtlcc) << ',' << fmt(r.fd_beta_l1) << ',' << fmt(r.fd_pose_l1) << '\n';
  }
}

void MetricReport::write_json(std::ostream& out) const {
  nlohmann::ordered_json j;
  j["config_digest"] = config_digest;
  j["seed"] = seed;
  j["clip_count"] = clip_count;
  j["methods"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json m;
    m["method"] = r.method;
    m["beta"] = {{"fd", r.fd_beta},       {"fd_l1", r.fd_beta_l1}, {"vd", r.vd_beta},
                 {"sid", r.sid_beta},     {"rpcc", r.rpcc_beta},   {"wtlcc", r.wtlcc_beta},
                 {"sts", r.sts_beta}};
    m["pose"] = {{"fd", r.fd_pose},       {"fd_l1", r.fd_pose_l1}, {"vd", r.vd_pose},
                 {"sid", r.sid_pose},     {"rpcc", r.rpcc_pose},   {"wtlcc", r.wtlcc_pose},
                 {"sts", r.sts_pose}};
    m["blink"] = {{"wtlcc", r.blink_wtlcc}};
    j["methods"].push_back(m);
  }
  out << j.dump(2) << '\n';
}

}  // namespace elp::metrics
