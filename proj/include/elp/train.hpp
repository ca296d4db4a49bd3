#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "elp/config.hpp"
#include "elp/corpus.hpp"
#include "elp/nets.hpp"

namespace elp::train {

// decoupled-weight-decay adaptive moment estimation
class AdamW {
 public:
  AdamW(const nets::ParamStore& params, const config::OptimizerConfig& cfg);
  // applies one update; grads are read from the parameter store and scaled by
  // grad_scale (1/batch for mean-of-clip losses)
  void step(nets::ParamStore& params, double grad_scale);

 private:
  config::OptimizerConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

struct StepStats {
  std::size_t step = 0;
  double l2 = 0, ce1 = 0, ce2 = 0, reg = 0, total = 0;
};

struct TrainResult {
  std::vector<StepStats> log;                             // one row per step
  std::vector<std::pair<std::size_t, double>> val_log;    // (step, val loss)
  double initial_loss = 0, final_loss = 0;
  bool diverged = false;
  std::size_t completed_steps = 0;
};

// linear Gumbel temperature anneal over the training run
double tau_at(const config::OptimizerConfig& cfg, std::size_t step);

// teacher-forced validation objective (deterministic inference path)
double validation_loss(const nets::AseModel& model,
                       const std::vector<corpus::ConversationClip>& clips,
                       const config::ExperimentConfig& cfg);

// Minimizes the total objective over the train split.  On divergence
// (non-finite loss) parameters are rolled back to the last validation
// snapshot and the run stops early with diverged = true.
TrainResult train_model(nets::AseModel& model, const corpus::Corpus& data,
                        const config::ExperimentConfig& cfg);

void write_loss_csv(const TrainResult& result, std::ostream& out);
void write_val_csv(const TrainResult& result, std::ostream& out);

}  // namespace elp::train
