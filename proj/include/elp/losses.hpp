#pragma once

#include "elp/motion.hpp"
#include "elp/tape.hpp"

namespace elp::losses {

using ad::Tape;
using ad::Tensor;

struct LossWeights {
  double lambda1 = 5.0;   // blink cross-entropy
  double lambda2 = 5.0;   // emotion cross-entropy
  double lambda3 = 0.01;  // blink regularization
  void validate() const;
};

// sum over frames of per-frame Euclidean norms of the expression and pose
// residuals; `squared` switches to squared norms (config option, default off)
Tensor motion_l2(Tape& t, const Tensor& beta_pred, const Tensor& pose_pred, const Mat& beta_gt,
                 const Mat& pose_gt, bool squared = false);

// binary cross-entropy per frame, probabilities clamped to [1e-7, 1-1e-7]
Tensor blink_ce(Tape& t, const Tensor& blink_prob, const BlinkSequence& gt);

// total variation of the predicted blink probabilities; 0 for T < 2
Tensor blink_reg(Tape& t, const Tensor& blink_prob);

// per-class binary form over a simplex prediction (softmax applied upstream)
Tensor emotion_ce(Tape& t, const Tensor& pred_simplex, const EmotionVector& gt);

// L = L_L2 + lambda1*L_CE1 + lambda2*L_CE2 + lambda3*L_reg
Tensor total_loss(Tape& t, const Tensor& l2, const Tensor& ce1, const Tensor& ce2,
                  const Tensor& reg, const LossWeights& w);

inline constexpr double kProbClamp = 1e-7;

}  // namespace elp::losses
