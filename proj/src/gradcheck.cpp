#include "elp/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace elp::ad {

namespace {

double eval_at(const ScalarFn& f, const std::vector<Tensor>& point) {
  Tape tape;
  // the work tensors never require grad, so the tape stays empty
  double v = f(tape, point).value();
  if (!std::isfinite(v)) throw std::runtime_error("finite_difference_check: non-finite objective");
  return v;
}

}  // namespace

double finite_difference_check(const ScalarFn& f, const std::vector<Tensor>& point,
                               const FdOptions& opts) {
  // analytic gradient
  std::vector<Tensor> leaves;
  leaves.reserve(point.size());
  for (const auto& p : point) {
    Tensor t = Tensor::from(p.shape(), p.values(), true);
    t.zero_grad();
    leaves.push_back(t);
  }
  Tape tape;
  Tensor y = f(tape, leaves);
  tape.backward(y);

  Rng pick(opts.subsample_seed);
  double max_err = 0.0;
  std::vector<Tensor> work;
  work.reserve(point.size());
  for (const auto& p : point) work.push_back(Tensor::from(p.shape(), p.values(), false));

  for (std::size_t ti = 0; ti < point.size(); ++ti) {
    const std::size_t n = point[ti].numel();
    std::vector<std::size_t> coords;
    if (opts.max_coords_per_tensor == 0 || opts.max_coords_per_tensor >= n) {
      coords.resize(n);
      for (std::size_t i = 0; i < n; ++i) coords[i] = i;
    } else {
      for (std::size_t i = 0; i < opts.max_coords_per_tensor; ++i)
        coords.push_back(pick.uniform_index(n));
      std::sort(coords.begin(), coords.end());
      coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    }
    const std::vector<double>& analytic = leaves[ti].grad();
    std::vector<double>& vals = work[ti].mutable_values();
    for (std::size_t c : coords) {
      const double orig = vals[c];
      vals[c] = orig + opts.h;
      const double fp = eval_at(f, work);
      vals[c] = orig - opts.h;
      const double fm = eval_at(f, work);
      vals[c] = orig;
      const double fd = (fp - fm) / (2.0 * opts.h);
      const double err = std::fabs(analytic[c] - fd) /
                         (std::fabs(analytic[c]) + std::fabs(fd) + opts.denom_floor);
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

}  // namespace elp::ad
