#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "elp/rng.hpp"
#include "elp/tape.hpp"

namespace elp::ad {

// Scalar function of a set of leaf tensors, expressed through a tape so the
// analytic gradient is available.
using ScalarFn = std::function<Tensor(Tape&, const std::vector<Tensor>&)>;

struct FdOptions {
  double h = 1e-5;
  // cap on checked coordinates per tensor; 0 = all. Subsampling is seeded.
  std::size_t max_coords_per_tensor = 0;
  std::uint64_t subsample_seed = 0;
  // additive denominator floor; raise it when the objective has exact-zero
  // gradient coordinates so central-difference round-off is not amplified
  double denom_floor = 1e-8;
};

// Max over checked coordinates of
//   |analytic - central| / (|analytic| + |central| + denom_floor).
// Throws if f evaluates to a non-finite value at any perturbed point.
double finite_difference_check(const ScalarFn& f, const std::vector<Tensor>& point,
                               const FdOptions& opts = {});

}  // namespace elp::ad
