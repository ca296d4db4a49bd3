#include "elp/config.hpp"

#include <cstdlib>
#include <fstream>

#include "elp/digest.hpp"

namespace elp::config {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

template <typename T>
void get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

ordered_json corpus_json(const corpus::CorpusSpec& s) {
  ordered_json j;
  j["clip_count"] = s.clip_count;
  j["frames"] = s.frames;
  j["fps"] = s.fps;
  j["emotions"] = s.emotions;
  j["beta_dim"] = s.beta_dim;
  j["pose_dim"] = s.pose_dim;
  j["audio_dim"] = s.audio_dim;
  j["noise"] = s.noise;
  j["lag"] = s.lag;
  j["seed"] = s.seed;
  j["amplitude_base"] = s.amplitude_base;
  j["amplitude_step"] = s.amplitude_step;
  j["freq_base"] = s.freq_base;
  j["freq_step"] = s.freq_step;
  j["gain_base"] = s.gain_base;
  j["gain_step"] = s.gain_step;
  j["hazard_base"] = s.hazard_base;
  j["hazard_step"] = s.hazard_step;
  j["blink_len"] = s.blink_len;
  j["blink_refractory"] = s.blink_refractory;
  j["blink_modulation"] = s.blink_modulation;
  return j;
}

void corpus_from_json(const json& j, corpus::CorpusSpec& s) {
  get(j, "clip_count", s.clip_count);
  get(j, "frames", s.frames);
  get(j, "fps", s.fps);
  get(j, "emotions", s.emotions);
  get(j, "beta_dim", s.beta_dim);
  get(j, "pose_dim", s.pose_dim);
  get(j, "audio_dim", s.audio_dim);
  get(j, "noise", s.noise);
  get(j, "lag", s.lag);
  get(j, "seed", s.seed);
  get(j, "amplitude_base", s.amplitude_base);
  get(j, "amplitude_step", s.amplitude_step);
  get(j, "freq_base", s.freq_base);
  get(j, "freq_step", s.freq_step);
  get(j, "gain_base", s.gain_base);
  get(j, "gain_step", s.gain_step);
  get(j, "hazard_base", s.hazard_base);
  get(j, "hazard_step", s.hazard_step);
  get(j, "blink_len", s.blink_len);
  get(j, "blink_refractory", s.blink_refractory);
  get(j, "blink_modulation", s.blink_modulation);
}

ordered_json net_json(const nets::NetworkConfig& n) {
  ordered_json j;
  j["audio_in"] = n.audio_in;
  j["audio_h1"] = n.audio_h1;
  j["audio_h2"] = n.audio_h2;
  j["audio_out"] = n.audio_out;
  j["beta_dim"] = n.beta_dim;
  j["pose_dim"] = n.pose_dim;
  j["tdnn_hidden"] = n.tdnn_hidden;
  j["tdnn_dilations"] = n.tdnn_dilations;
  j["tdnn_mlp_hidden"] = n.tdnn_mlp_hidden;
  j["head_h1"] = n.head_h1;
  j["head_h2"] = n.head_h2;
  j["head_gru"] = n.head_gru;
  j["dec1_hidden"] = n.dec1_hidden;
  j["dec2_hidden"] = n.dec2_hidden;
  j["dec2_gru"] = n.dec2_gru;
  j["dropout"] = n.dropout;
  return j;
}

void net_from_json(const json& j, nets::NetworkConfig& n) {
  get(j, "audio_in", n.audio_in);
  get(j, "audio_h1", n.audio_h1);
  get(j, "audio_h2", n.audio_h2);
  get(j, "audio_out", n.audio_out);
  get(j, "beta_dim", n.beta_dim);
  get(j, "pose_dim", n.pose_dim);
  get(j, "tdnn_hidden", n.tdnn_hidden);
  get(j, "tdnn_dilations", n.tdnn_dilations);
  get(j, "tdnn_mlp_hidden", n.tdnn_mlp_hidden);
  get(j, "head_h1", n.head_h1);
  get(j, "head_h2", n.head_h2);
  get(j, "head_gru", n.head_gru);
  get(j, "dec1_hidden", n.dec1_hidden);
  get(j, "dec2_hidden", n.dec2_hidden);
  get(j, "dec2_gru", n.dec2_gru);
  get(j, "dropout", n.dropout);
}

ordered_json latent_json(const latent::LatentConfig& l) {
  return ordered_json{{"heads", l.heads}, {"categories", l.categories}, {"emotions", l.emotions}};
}

}  // namespace

void OptimizerConfig::validate() const {
  require(lr > 0.0, "OptimizerConfig: lr must be positive");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0,
          "OptimizerConfig: betas must be in [0,1)");
  require(eps > 0.0, "OptimizerConfig: eps must be positive");
  require(weight_decay >= 0.0, "OptimizerConfig: negative weight decay");
  require(batch_size >= 1, "OptimizerConfig: batch_size must be positive");
  require(steps >= 1, "OptimizerConfig: steps must be positive");
  require(val_every >= 1, "OptimizerConfig: val_every must be positive");
  require(tau_start > 0.0 && tau_end > 0.0, "OptimizerConfig: temperatures must be positive");
}

void ExperimentConfig::validate() const {
  corpus.validate();
  opt.validate();
  loss.validate();
  require(latent.heads >= 1 && latent.categories >= 1 && latent.emotions >= 2,
          "ExperimentConfig: degenerate latent space");
  require(latent.emotions == corpus.emotions,
          "ExperimentConfig: latent emotions must match corpus emotions");
  require(net.audio_in == corpus.audio_dim,
          "ExperimentConfig: network audio_in must match corpus audio_dim");
  require(net.beta_dim == corpus.beta_dim && net.pose_dim == corpus.pose_dim,
          "ExperimentConfig: network motion dims must match corpus dims");
  require(!out_dir.empty() && !corpus_dir.empty(), "ExperimentConfig: empty directory");
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  ordered_json j;
  j["corpus"] = corpus_json(corpus);
  j["network"] = net_json(net);
  j["latent"] = latent_json(latent);
  j["loss"] = ordered_json{
      {"lambda1", loss.lambda1}, {"lambda2", loss.lambda2}, {"lambda3", loss.lambda3}};
  j["optimizer"] = ordered_json{{"lr", opt.lr},
                                {"beta1", opt.beta1},
                                {"beta2", opt.beta2},
                                {"eps", opt.eps},
                                {"weight_decay", opt.weight_decay},
                                {"batch_size", opt.batch_size},
                                {"steps", opt.steps},
                                {"val_every", opt.val_every},
                                {"tau_start", opt.tau_start},
                                {"tau_end", opt.tau_end}};
  j["seed"] = seed;
  j["use_partition"] = use_partition;
  j["corpus_dir"] = corpus_dir;
  j["out_dir"] = out_dir;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  if (j.contains("corpus")) corpus_from_json(j.at("corpus"), c.corpus);
  if (j.contains("network")) net_from_json(j.at("network"), c.net);
  if (j.contains("latent")) {
    const auto& l = j.at("latent");
    get(l, "heads", c.latent.heads);
    get(l, "categories", c.latent.categories);
    get(l, "emotions", c.latent.emotions);
  }
  if (j.contains("loss")) {
    const auto& l = j.at("loss");
    get(l, "lambda1", c.loss.lambda1);
    get(l, "lambda2", c.loss.lambda2);
    get(l, "lambda3", c.loss.lambda3);
  }
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    get(o, "lr", c.opt.lr);
    get(o, "beta1", c.opt.beta1);
    get(o, "beta2", c.opt.beta2);
    get(o, "eps", c.opt.eps);
    get(o, "weight_decay", c.opt.weight_decay);
    get(o, "batch_size", c.opt.batch_size);
    get(o, "steps", c.opt.steps);
    get(o, "val_every", c.opt.val_every);
    get(o, "tau_start", c.opt.tau_start);
    get(o, "tau_end", c.opt.tau_end);
  }
  get(j, "seed", c.seed);
  get(j, "use_partition", c.use_partition);
  get(j, "corpus_dir", c.corpus_dir);
  get(j, "out_dir", c.out_dir);
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "ExperimentConfig: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("ExperimentConfig: invalid JSON in " + path + ": " + e.what());
  }
  return from_json(j);
}

void ExperimentConfig::save(const std::string& path) const {
  std::ofstream out(path);
  require(out.good(), "ExperimentConfig: cannot write " + path);
  out << to_json().dump(2) << '\n';
}

std::string ExperimentConfig::digest() const { return fnv1a_hex(to_json().dump()); }

std::string ExperimentConfig::model_digest() const {
  ordered_json j;
  j["network"] = net_json(net);
  j["latent"] = latent_json(latent);
  j["use_partition"] = use_partition;
  return fnv1a_hex(j.dump());
}

void ExperimentConfig::apply_env_seed() {
  const char* env = std::getenv("ELP_SEED");
  if (!env || !*env) return;
  char* end = nullptr;
  unsigned long long v = std::strtoull(env, &end, 10);
  require(end && *end == '\0', "ELP_SEED: not an unsigned integer");
  seed = static_cast<std::uint64_t>(v);
}

}  // namespace elp::config
