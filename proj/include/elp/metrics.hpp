#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "elp/mat.hpp"
#include "elp/motion.hpp"
#include "elp/nets.hpp"
#include "elp/rng.hpp"

namespace elp::metrics {

// Pearson correlation; 0 by convention when either input has zero variance.
double pcc(const std::vector<double>& x, const std::vector<double>& y);

// mean over columns of |PCC(speaker_d, gen_d) - PCC(speaker_d, gt_d)|
double rpcc(const Mat& speaker, const Mat& gen, const Mat& gt);

struct WtlccOptions {
  std::size_t window = 100;  // 4 s at 25 fps
  std::size_t max_lag = 25;  // 1 s
};

// windowed time-lagged cross correlation: windows of `window` frames with
// stride window/2, max over lags in [-max_lag, max_lag] of the PCC between the
// overlapping samples, mean over windows
double wtlcc(const std::vector<double>& x, const std::vector<double>& y, const WtlccOptions& opts);

// column-wise wtlcc averaged over dimensions
double wtlcc_mat(const Mat& x, const Mat& y, const WtlccOptions& opts);

enum class FdMode { Gaussian, L1 };

// Gaussian mode fits (mean, population covariance) to each frame set and
// returns the closed-form Frechet distance between the two Gaussians; L1 mode
// is the mean over aligned frames of the L1 frame difference.  `clamped`, when
// non-null, receives the number of negative eigenvalues clamped to zero.
double frechet_distance(const Mat& gen_frames, const Mat& gt_frames, FdMode mode,
                        std::size_t* clamped = nullptr);

// mean over clips of the per-dimension temporal (population) variance
double variation_diversity(const std::vector<Mat>& clips);

// k-means (k-means++ seeding, fixed seed, <=100 iterations) fit on ref_frames;
// Shannon entropy of the nearest-centroid histogram of gen_frames
double shannon_diversity(const Mat& gen_frames, const Mat& ref_frames, std::size_t k,
                         std::uint64_t seed = 0x6b6d6e73ULL);

// short time-series distance: per dimension the L2 norm of the slope
// difference sequence, averaged over dimensions
double sts_distance(const Mat& x, const Mat& y);

struct CorpusClipRef {
  const AudioFeatureSequence* audio = nullptr;
  const MotionSequence* speaker = nullptr;
  const MotionSequence* listener = nullptr;
};

// nearest-neighbour baselines: return the listener motion paired with the
// training clip closest to the query (mean frame-wise L2 distance)
const MotionSequence& baseline_nn_motion(const MotionSequence& query_speaker,
                                         const std::vector<CorpusClipRef>& train_set);
const MotionSequence& baseline_nn_audio(const AudioFeatureSequence& query_audio,
                                        const std::vector<CorpusClipRef>& train_set);

// uniformly sampled training listener clip plus Gaussian perturbation with
// per-dimension sigma = sigma_scale * training std
MotionSequence baseline_random(const std::vector<CorpusClipRef>& train_set, Rng& rng,
                               double sigma_scale = 0.05);

// uniform random codewords decoded through the trained decoders
struct DlsRandomResult {
  MotionSequence motion;
  BlinkSequence blink;
  std::vector<double> blink_prob;
  latent::CodewordGrid grid;
};
DlsRandomResult baseline_dls_random(const nets::AseModel& model, std::size_t frames, Rng& rng,
                                    double blink_threshold = 0.5);

struct MetricRow {
  std::string method;
  double fd_beta = 0, vd_beta = 0, sid_beta = 0, rpcc_beta = 0, wtlcc_beta = 0, sts_beta = 0;
  double fd_pose = 0, vd_pose = 0, sid_pose = 0, rpcc_pose = 0, wtlcc_pose = 0, sts_pose = 0;
  double blink_wtlcc = 0;
  double fd_beta_l1 = 0, fd_pose_l1 = 0;
};

struct MetricReport {
  std::string config_digest;
  std::uint64_t seed = 0;
  std::size_t clip_count = 0;
  std::vector<MetricRow> rows;

  void write_csv(std::ostream& out) const;
  void write_json(std::ostream& out) const;
};

}  // namespace elp::metrics
