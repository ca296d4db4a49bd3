#include "elp/motion.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace elp {

void MotionSequence::validate() const {
  require(beta.rows == pose.rows, "MotionSequence: beta and pose frame counts differ");
  require(beta.all_finite() && pose.all_finite(), "MotionSequence: non-finite coefficient");
}

void BlinkSequence::validate() const {
  for (auto v : phi) require(v == 0 || v == 1, "BlinkSequence: values must be binary");
}

void EmotionVector::validate() const {
  std::size_t ones = 0;
  for (double v : e) {
    require(v == 0.0 || v == 1.0, "EmotionVector: entries must be 0 or 1");
    if (v == 1.0) ++ones;
  }
  require(ones == 1, "EmotionVector: exactly one entry must be 1");
}

std::size_t EmotionVector::slot() const {
  validate();
  for (std::size_t i = 0; i < e.size(); ++i)
    if (e[i] == 1.0) return i;
  throw std::runtime_error("EmotionVector: unreachable");
}

EmotionVector EmotionVector::onehot(std::size_t slot, std::size_t n) {
  require(slot < n, "EmotionVector: slot out of range");
  EmotionVector v;
  v.e.assign(n, 0.0);
  v.e[slot] = 1.0;
  return v;
}

Mat temporal_derivative(const Mat& seq) {
  require(seq.rows >= 1, "temporal_derivative: empty sequence");
  Mat out(seq.rows, seq.cols, 0.0);
  for (std::size_t t = 1; t < seq.rows; ++t)
    for (std::size_t d = 0; d < seq.cols; ++d) out(t, d) = seq(t, d) - seq(t - 1, d);
  return out;
}

std::vector<double> clip_std(const Mat& seq) {
  require(seq.rows >= 2, "clip_std: need at least 2 frames");
  std::vector<double> mean(seq.cols, 0.0), var(seq.cols, 0.0);
  for (std::size_t t = 0; t < seq.rows; ++t)
    for (std::size_t d = 0; d < seq.cols; ++d) mean[d] += seq(t, d);
  for (double& m : mean) m /= static_cast<double>(seq.rows);
  for (std::size_t t = 0; t < seq.rows; ++t)
    for (std::size_t d = 0; d < seq.cols; ++d) {
      double diff = seq(t, d) - mean[d];
      var[d] += diff * diff;
    }
  std::vector<double> out(seq.cols);
  for (std::size_t d = 0; d < seq.cols; ++d)
    out[d] = std::sqrt(var[d] / static_cast<double>(seq.rows));
  return out;
}

SpeakerStyleSequence compute_speaker_style(const Mat& audio_encoded,
                                           const MotionSequence& motion) {
  const std::size_t t = motion.frames();
  require(audio_encoded.rows == t, "compute_speaker_style: audio/motion length mismatch");
  require(t >= 2, "compute_speaker_style: need at least 2 frames");

  std::vector<double> std_beta = clip_std(motion.beta);
  std::vector<double> std_dbeta = clip_std(temporal_derivative(motion.beta));
  std::vector<double> std_dpose = clip_std(temporal_derivative(motion.pose));

  const std::size_t width =
      audio_encoded.cols + std_beta.size() + std_dbeta.size() + std_dpose.size();
  SpeakerStyleSequence out;
  out.s_sty = Mat(t, width);
  for (std::size_t r = 0; r < t; ++r) {
    double* row = out.s_sty.row(r);
    std::copy(audio_encoded.row(r), audio_encoded.row(r) + audio_encoded.cols, row);
    std::size_t off = audio_encoded.cols;
    std::copy(std_beta.begin(), std_beta.end(), row + off);
    off += std_beta.size();
    std::copy(std_dbeta.begin(), std_dbeta.end(), row + off);
    off += std_dbeta.size();
    std::copy(std_dpose.begin(), std_dpose.end(), row + off);
  }
  return out;
}

namespace {

double dist(const EyeLandmarkSequence::Point& a, const EyeLandmarkSequence::Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// (|p2-p6| + |p3-p5|) / (2 |p1-p4|) for one eye
double ear_one_eye(const std::array<EyeLandmarkSequence::Point, 6>& p) {
  double denom = dist(p[0], p[3]);
  require(denom >= 1e-9, "eye_closure_ratio: degenerate corner distance");
  return (dist(p[1], p[5]) + dist(p[2], p[4])) / (2.0 * denom);
}

}  // namespace

std::vector<double> eye_closure_ratio(const EyeLandmarkSequence& landmarks) {
  const std::size_t t = landmarks.frames.size();
  require(t >= 1, "eye_closure_ratio: empty sequence");
  std::vector<double> ear(t);
  for (std::size_t f = 0; f < t; ++f)
    ear[f] = 0.5 * (ear_one_eye(landmarks.frames[f][0]) + ear_one_eye(landmarks.frames[f][1]));

  // EAR_open from the 95th percentile, robust to clips starting mid-blink
  std::vector<double> sorted = ear;
  std::sort(sorted.begin(), sorted.end());
  std::size_t idx = static_cast<std::size_t>(std::floor(0.95 * static_cast<double>(t - 1)));
  double ear_open = sorted[idx];
  require(ear_open > 1e-9, "eye_closure_ratio: eye never opens in clip");

  std::vector<double> r(t);
  for (std::size_t f = 0; f < t; ++f) r[f] = 1.0 - ear[f] / ear_open;
  return r;
}

BlinkSequence extract_blink(const std::vector<double>& ratio, double threshold) {
  require(threshold > 0.0 && threshold < 1.0, "extract_blink: threshold must be in (0,1)");
  BlinkSequence out;
  out.phi.resize(ratio.size());
  for (std::size_t t = 0; t < ratio.size(); ++t) out.phi[t] = ratio[t] > threshold ? 1 : 0;
  return out;
}

}  // namespace elp
