#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "elp/corpus.hpp"
#include "elp/losses.hpp"
#include "elp/nets.hpp"

namespace elp::config {

struct OptimizerConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
  std::size_t batch_size = 16;
  std::size_t steps = 2000;
  std::size_t val_every = 100;
  double tau_start = 1.0;  // Gumbel temperature anneal
  double tau_end = 0.5;
  void validate() const;
};

struct ExperimentConfig {
  corpus::CorpusSpec corpus;
  nets::NetworkConfig net;
  latent::LatentConfig latent{8, 8, 3};  // desk-scale default
  losses::LossWeights loss;
  OptimizerConfig opt;
  std::uint64_t seed = 7;
  bool use_partition = true;  // false trains the no-partition ablation twin
  std::string corpus_dir = "corpus";
  std::string out_dir = "out";

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::string& path);
  void save(const std::string& path) const;

  // digest over the full resolved config (stamps reports)
  std::string digest() const;
  // digest over the model-shaping sections only (checkpoint compatibility)
  std::string model_digest() const;

  // env var ELP_SEED, when set, overrides the configured seed
  void apply_env_seed();
};

}  // namespace elp::config
