#include "elp/blink.hpp"

#include <cmath>

namespace elp::blink {

void ClosureBlendshape::validate() const {
  require(!beta_c.empty(), "ClosureBlendshape: empty coefficient vector");
  for (double v : beta_c)
    require(std::isfinite(v), "ClosureBlendshape: non-finite coefficient");
}

ClosureBlendshape ClosureBlendshape::unit(std::size_t dim, std::size_t axis) {
  require(axis < dim, "ClosureBlendshape: closure axis out of range");
  ClosureBlendshape c;
  c.beta_c.assign(dim, 0.0);
  c.beta_c[axis] = 1.0;
  return c;
}

std::vector<BlinkGroup> group_blinks(const BlinkSequence& phi) {
  phi.validate();
  std::vector<BlinkGroup> groups;
  const std::size_t T = phi.frames();
  std::size_t i = 0;
  while (i < T) {
    if (phi.phi[i]) {
      BlinkGroup g;
      g.start = i;
      while (i < T && phi.phi[i]) ++i;
      g.length = i - g.start;
      groups.push_back(g);
    } else {
      ++i;
    }
  }
  return groups;
}

Mat apply_blink(const Mat& beta, const BlinkSequence& phi, const ClosureBlendshape& closure) {
  require(beta.rows == phi.frames(), "apply_blink: frame count mismatch");
  closure.validate();
  require(closure.beta_c.size() == beta.cols, "apply_blink: closure width mismatch");

  Mat out = beta;
  const std::size_t D = beta.cols;
  for (const BlinkGroup& g : group_blinks(phi)) {
    // endpoints from the original coefficients adjacent to the group, falling
    // back to the group edge at sequence boundaries
    const double* b1 = beta.row(g.start > 0 ? g.start - 1 : g.start);
    const std::size_t after = g.start + g.length;
    const double* b2 = beta.row(after < beta.rows ? after : after - 1);

    const std::size_t half1 = (g.length + 1) / 2;
    const std::size_t half2 = g.length / 2;
    for (std::size_t i = 1; i <= half1; ++i) {
      double w = static_cast<double>(i) / static_cast<double>(half1);
      double* row = out.row(g.start + i - 1);
      for (std::size_t d = 0; d < D; ++d) row[d] = (1.0 - w) * b1[d] + w * closure.beta_c[d];
    }
    for (std::size_t j = 1; j <= half2; ++j) {
      double w = static_cast<double>(j) / static_cast<double>(half2 + 1);
      double* row = out.row(g.start + half1 + j - 1);
      for (std::size_t d = 0; d < D; ++d) row[d] = (1.0 - w) * closure.beta_c[d] + w * b2[d];
    }
  }
  return out;
}

}  // namespace elp::blink
