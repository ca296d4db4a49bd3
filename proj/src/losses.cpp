#include "elp/losses.hpp"

#include <cmath>

namespace elp::losses {

void LossWeights::validate() const {
  require(lambda1 >= 0.0 && lambda2 >= 0.0 && lambda3 >= 0.0,
          "LossWeights: weights must be nonnegative");
}

namespace {

Tensor frame_norms(Tape& t, const Tensor& pred, const Mat& gt, bool squared) {
  require(pred.shape().size() == 2 && pred.shape()[0] == gt.rows && pred.shape()[1] == gt.cols,
          "motion_l2: prediction shape " + ad::shape_str(pred.shape()) + " vs ground truth " +
              std::to_string(gt.rows) + "x" + std::to_string(gt.cols));
  Tensor diff = t.sub(pred, Tensor::from_mat(gt));
  Tensor rowsum = t.sum_last(t.mul(diff, diff));  // [T]
  if (squared) return t.sum_all(rowsum);
  return t.sum_all(t.sqrt_(rowsum));
}

}  // namespace

Tensor motion_l2(Tape& t, const Tensor& beta_pred, const Tensor& pose_pred, const Mat& beta_gt,
                 const Mat& pose_gt, bool squared) {
  return t.add(frame_norms(t, beta_pred, beta_gt, squared),
               frame_norms(t, pose_pred, pose_gt, squared));
}

Tensor blink_ce(Tape& t, const Tensor& blink_prob, const BlinkSequence& gt) {
  require(blink_prob.numel() == gt.frames(), "blink_ce: length mismatch");
  gt.validate();
  const std::size_t frames = gt.frames();
  std::vector<double> phi(frames), inv_phi(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    phi[i] = gt.phi[i];
    inv_phi[i] = 1.0 - phi[i];
  }
  Tensor p = t.clamp(blink_prob, kProbClamp, 1.0 - kProbClamp);
  Tensor one_minus = t.sub(Tensor::full(p.shape(), 1.0), p);
  Tensor pos = t.mul(t.log_(p), Tensor::from(p.shape(), std::move(phi)));
  Tensor neg = t.mul(t.log_(one_minus), Tensor::from(p.shape(), std::move(inv_phi)));
  return t.scale(t.add(t.sum_all(pos), t.sum_all(neg)), -1.0);
}

Tensor blink_reg(Tape& t, const Tensor& blink_prob) {
  const std::size_t frames = blink_prob.numel();
  if (frames < 2) return Tensor::scalar(0.0);
  Tensor cur = t.slice_rows(blink_prob, 1, frames);
  Tensor prev = t.slice_rows(blink_prob, 0, frames - 1);
  return t.sum_all(t.abs_(t.sub(cur, prev)));
}

Tensor emotion_ce(Tape& t, const Tensor& pred_simplex, const EmotionVector& gt) {
  gt.validate();
  require(pred_simplex.numel() == gt.e.size(), "emotion_ce: class count mismatch");
  Tensor p = t.clamp(pred_simplex, kProbClamp, 1.0 - kProbClamp);
  Tensor one_minus = t.sub(Tensor::full(p.shape(), 1.0), p);
  std::vector<double> e = gt.e, inv_e(gt.e.size());
  for (std::size_t i = 0; i < inv_e.size(); ++i) inv_e[i] = 1.0 - e[i];
  Tensor pos = t.mul(t.log_(p), Tensor::from(p.shape(), std::move(e)));
  Tensor neg = t.mul(t.log_(one_minus), Tensor::from(p.shape(), std::move(inv_e)));
  return t.scale(t.add(t.sum_all(pos), t.sum_all(neg)), -1.0);
}

Tensor total_loss(Tape& t, const Tensor& l2, const Tensor& ce1, const Tensor& ce2,
                  const Tensor& reg, const LossWeights& w) {
  w.validate();
  const char* names[] = {"L_L2", "L_CE1", "L_CE2", "L_reg"};
  const Tensor* parts[] = {&l2, &ce1, &ce2, &reg};
  for (int i = 0; i < 4; ++i)
    require(std::isfinite(parts[i]->value()),
            std::string("total_loss: non-finite component ") + names[i]);
  Tensor acc = t.add(l2, t.scale(ce1, w.lambda1));
  acc = t.add(acc, t.scale(ce2, w.lambda2));
  return t.add(acc, t.scale(reg, w.lambda3));
}

}  // namespace elp::losses
