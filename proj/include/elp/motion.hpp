#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "elp/mat.hpp"

namespace elp {

// Per-frame listener/speaker coefficients: expression weights plus head pose.
struct MotionSequence {
  Mat beta;  // T x 100 by default
  Mat pose;  // T x 6 by default
  double fps = 25.0;

  std::size_t frames() const { return beta.rows; }
  void validate() const;
};

struct AudioFeatureSequence {
  Mat feats;  // T x D_a, frame-aligned with the paired MotionSequence
  std::size_t frames() const { return feats.rows; }
};

struct BlinkSequence {
  std::vector<std::uint8_t> phi;  // 1 = eyelid closing at this frame
  std::size_t frames() const { return phi.size(); }
  void validate() const;
};

struct EmotionVector {
  std::vector<double> e;  // one-hot of length N
  std::size_t slot() const;  // index of the 1
  void validate() const;
  static EmotionVector onehot(std::size_t slot, std::size_t n);
};

// 6 image-plane landmark points per eye per frame, both eyes.
struct EyeLandmarkSequence {
  struct Point {
    double x, y;
  };
  // frame -> eye (0 left, 1 right) -> p1..p6
  std::vector<std::array<std::array<Point, 6>, 2>> frames;
};

struct SpeakerStyleSequence {
  Mat s_sty;  // T x (Da_enc + 2*dim(beta) + dim(pose))
};

// out[t] = seq[t] - seq[t-1]; out[0] = 0
Mat temporal_derivative(const Mat& seq);

// per-dimension population std over the clip (T >= 2)
std::vector<double> clip_std(const Mat& seq);

// Eq. 1: per-frame concat of encoded audio with the clip-level std vectors
SpeakerStyleSequence compute_speaker_style(const Mat& audio_encoded, const MotionSequence& motion);

// closure ratio r(t) = 1 - EAR(t)/EAR_open, EAR_open = clip 95th percentile EAR
std::vector<double> eye_closure_ratio(const EyeLandmarkSequence& landmarks);

BlinkSequence extract_blink(const std::vector<double>& ratio, double threshold);

}  // namespace elp
