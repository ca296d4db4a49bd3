#pragma once

#include <cstddef>
#include <vector>

#include "elp/mat.hpp"
#include "elp/motion.hpp"

namespace elp::blink {

// maximal run of consecutive 1s in a blink sequence
struct BlinkGroup {
  std::size_t start = 0;
  std::size_t length = 0;
};

// coefficient vector representing full eye closure
struct ClosureBlendshape {
  std::vector<double> beta_c;
  void validate() const;
  // unit weight on one coefficient axis, zeros elsewhere
  static ClosureBlendshape unit(std::size_t dim, std::size_t axis);
};

std::vector<BlinkGroup> group_blinks(const BlinkSequence& phi);

// Blendshape interpolation: per group the first ceil(L/2) frames ramp the
// pre-group coefficients toward beta_c (closure reached at the end of the
// half) and the remaining floor(L/2) frames ramp from beta_c toward the
// post-group coefficients.  Groups touching the sequence boundary use the
// nearest in-group frame as the missing endpoint.  Frames outside groups are
// returned unchanged.
Mat apply_blink(const Mat& beta, const BlinkSequence& phi, const ClosureBlendshape& closure);

}  // namespace elp::blink
