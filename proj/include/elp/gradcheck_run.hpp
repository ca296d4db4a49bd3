#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "elp/config.hpp"

namespace elp::gradcheck {

struct Component {
  std::string name;
  double max_rel_err = 0;
};

struct Report {
  std::vector<Component> components;      // per-loss and end-to-end errors
  std::vector<std::string> param_groups;  // groups covered by the e2e check
  double worst() const;
  bool pass(double threshold) const { return worst() < threshold; }
};

// small configuration suitable for finite-difference verification
config::ExperimentConfig reduced_default_config();

// Finite-difference verification of every loss term, the combined objective
// and the end-to-end model objective (frozen Gumbel noise, soft sampling).
// inject_grad_error is a test fixture: it offsets the analytic end-to-end
// gradient so a broken backward rule is provably detected.
Report run(const config::ExperimentConfig& cfg, std::size_t n_seeds = 10,
           std::size_t coords_per_group = 2, double inject_grad_error = 0.0);

void write_report(const Report& report, std::ostream& out);

}  // namespace elp::gradcheck
