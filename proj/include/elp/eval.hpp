#pragma once

#include "elp/config.hpp"
#include "elp/corpus.hpp"
#include "elp/metrics.hpp"
#include "elp/nets.hpp"

namespace elp::eval {

struct EvalOptions {
  bool nn_motion = true;
  bool nn_audio = true;
  bool random = true;
  bool dls_random = true;
  std::size_t k = 10;           // clusters for the Shannon index
  std::size_t window = 100;     // clipped to the clip length
  std::size_t max_lag = 25;     // clipped below the window
};

struct EvalOutputs {
  metrics::MetricReport report;
  double emotion_accuracy = 0;  // classifier argmax vs labels on the test split
};

// Scores the model (classifier-selected emotion), the ground-truth row and
// the enabled baselines on the corpus test split.
EvalOutputs evaluate(const nets::AseModel& model, const corpus::Corpus& data,
                     const config::ExperimentConfig& cfg, const EvalOptions& opts);

// How far apart the model's outputs sit per ground-truth emotion: mean
// pairwise L2 distance between the per-emotion means of predicted expression
// frames on the test split (inference path, no emotion override).
double emotion_separation(const nets::AseModel& model, const corpus::Corpus& data,
                          const config::ExperimentConfig& cfg);

// Mean L2 distance between the mean predicted expression frames under the two
// extreme emotion overrides; zero when overrides do not reach the decoder.
double override_shift(const nets::AseModel& model, const corpus::Corpus& data,
                      const config::ExperimentConfig& cfg);

// per-clip feature rows for ablation plots: clip id, ground-truth emotion
// slot, then the mean predicted expression frame
void write_feature_dump(const nets::AseModel& model, const corpus::Corpus& data,
                        const config::ExperimentConfig& cfg, std::ostream& out);

}  // namespace elp::eval
