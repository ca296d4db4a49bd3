// elp: deterministic command-line laboratory for emotion-conditioned listener
// motion synthesis. Subcommands: gen-data, train, infer, eval, ablate,
// gradcheck. Configuration is JSON; flags override individual keys; the env
// var ELP_SEED overrides the seed last.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "elp/blink.hpp"
#include "elp/checkpoint.hpp"
#include "elp/config.hpp"
#include "elp/corpus.hpp"
#include "elp/eval.hpp"
#include "elp/gradcheck_run.hpp"
#include "elp/train.hpp"

namespace {

constexpr const char* kVersion = "elp 0.1.0";

using elp::require;

struct CommonFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir, corpus_dir;
  std::size_t clips = 0, frames = 0, steps = 0, batch_size = 0, heads = 0, categories = 0;
  double lr = 0;
  bool use_partition = true;

  CLI::Option *o_seed = nullptr, *o_out = nullptr, *o_corpus = nullptr, *o_clips = nullptr,
              *o_frames = nullptr, *o_steps = nullptr, *o_batch = nullptr, *o_heads = nullptr,
              *o_cats = nullptr, *o_lr = nullptr, *o_part = nullptr;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON experiment config file");
    o_seed = cmd->add_option("--seed", seed, "random seed");
    o_out = cmd->add_option("--out", out_dir, "output directory");
    o_corpus = cmd->add_option("--corpus-dir", corpus_dir, "corpus directory");
    o_clips = cmd->add_option("--clips", clips, "corpus clip count");
    o_frames = cmd->add_option("--frames", frames, "frames per clip");
    o_steps = cmd->add_option("--steps", steps, "optimizer steps");
    o_batch = cmd->add_option("--batch-size", batch_size, "training batch size");
    o_heads = cmd->add_option("--heads", heads, "latent heads H");
    o_cats = cmd->add_option("--categories", categories, "categories per head V");
    o_lr = cmd->add_option("--lr", lr, "learning rate");
    o_part = cmd->add_option("--use-partition", use_partition,
                             "1 = emotion-partitioned latent space, 0 = base-space twin");
  }

  elp::config::ExperimentConfig resolve() const {
    elp::config::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = elp::config::ExperimentConfig::load(config_path);
    if (o_seed->count()) cfg.seed = seed;
    if (o_out->count()) cfg.out_dir = out_dir;
    if (o_corpus->count()) cfg.corpus_dir = corpus_dir;
    if (o_clips->count()) cfg.corpus.clip_count = clips;
    if (o_frames->count()) cfg.corpus.frames = frames;
    if (o_steps->count()) cfg.opt.steps = steps;
    if (o_batch->count()) cfg.opt.batch_size = batch_size;
    if (o_heads->count()) cfg.latent.heads = heads;
    if (o_cats->count()) cfg.latent.categories = categories;
    if (o_lr->count()) cfg.opt.lr = lr;
    if (o_part->count()) cfg.use_partition = use_partition;
    cfg.apply_env_seed();
    cfg.validate();
    return cfg;
  }
};

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path);
  require(f.good(), "cannot open output file: " + path.string());
  return f;
}

// every run leaves its fully-resolved config and the tool version next to its
// outputs
void stamp_dir(const std::filesystem::path& dir, const elp::config::ExperimentConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(std::filesystem::is_directory(dir), "cannot create output directory: " + dir.string());
  cfg.save((dir / "config.json").string());
  open_out(dir / "version.txt") << kVersion << '\n';
}

elp::corpus::Corpus load_matching_corpus(const elp::config::ExperimentConfig& cfg) {
  elp::corpus::Corpus data = elp::corpus::load_corpus(cfg.corpus_dir);
  require(data.spec.digest() == cfg.corpus.digest(),
          "corpus directory does not match the configured corpus parameters");
  return data;
}

elp::nets::AseModel load_model(const elp::config::ExperimentConfig& cfg,
                               const std::string& ckpt_path) {
  elp::nets::AseModel model(cfg.net, cfg.latent, cfg.seed);
  elp::checkpoint::load(ckpt_path, cfg.model_digest(), model.params());
  return model;
}

int run_train_into(const elp::config::ExperimentConfig& cfg, const elp::corpus::Corpus& data,
                   const std::filesystem::path& dir, elp::nets::AseModel& model) {
  elp::train::TrainResult r = elp::train::train_model(model, data, cfg);
  {
    auto f = open_out(dir / "loss.csv");
    elp::train::write_loss_csv(r, f);
  }
  {
    auto f = open_out(dir / "val.csv");
    elp::train::write_val_csv(r, f);
  }
  elp::checkpoint::save((dir / "model.ckpt").string(), cfg.model_digest(), model.params());
  if (r.diverged) {
    std::cerr << "training diverged at step " << r.completed_steps
              << "; last validated parameters written to " << (dir / "model.ckpt").string()
              << '\n';
    return 2;
  }
  std::cout << "trained " << r.completed_steps << " steps: loss " << r.initial_loss << " -> "
            << r.final_loss << '\n';
  return 0;
}

void write_eval_outputs(const elp::eval::EvalOutputs& out, const std::filesystem::path& dir) {
  {
    auto f = open_out(dir / "metrics.csv");
    out.report.write_csv(f);
  }
  {
    auto f = open_out(dir / "metrics.json");
    out.report.write_json(f);
  }
  nlohmann::ordered_json summary;
  summary["emotion_accuracy"] = out.emotion_accuracy;
  summary["clip_count"] = out.report.clip_count;
  open_out(dir / "summary.json") << summary.dump(2) << '\n';
}

int cmd_gen_data(const CommonFlags& flags) {
  auto cfg = flags.resolve();
  elp::corpus::Corpus data = elp::corpus::generate_corpus(cfg.corpus);
  elp::corpus::write_corpus(data, cfg.corpus_dir);
  stamp_dir(cfg.corpus_dir, cfg);
  std::cout << "wrote " << cfg.corpus.clip_count << " clips (" << data.train.size() << " train, "
            << data.val.size() << " val, " << data.test.size() << " test) to " << cfg.corpus_dir
            << '\n';
  return 0;
}

int cmd_train(const CommonFlags& flags) {
  auto cfg = flags.resolve();
  elp::corpus::Corpus data = load_matching_corpus(cfg);
  stamp_dir(cfg.out_dir, cfg);
  elp::nets::AseModel model(cfg.net, cfg.latent, cfg.seed);
  return run_train_into(cfg, data, cfg.out_dir, model);
}

int cmd_infer(const CommonFlags& flags, const std::string& ckpt, std::uint64_t clip_id,
              int emotion_override) {
  auto cfg = flags.resolve();
  elp::corpus::Corpus data = load_matching_corpus(cfg);
  const elp::corpus::ConversationClip* clip = nullptr;
  for (const auto* split : {&data.train, &data.val, &data.test})
    for (const auto& c : *split)
      if (c.id == clip_id) clip = &c;
  require(clip != nullptr, "clip id not found in the corpus");

  elp::nets::AseModel model = load_model(cfg, ckpt);
  elp::ad::Tape tape;
  elp::nets::ForwardOptions fo;
  fo.use_partition = cfg.use_partition;
  if (emotion_override >= 0)
    fo.emotion = elp::EmotionVector::onehot(static_cast<std::size_t>(emotion_override),
                                            cfg.latent.emotions);
  auto r = model.forward(tape, clip->audio, clip->speaker, fo);

  elp::corpus::ConversationClip pred = *clip;
  pred.listener.beta = r.pred.beta_pred.to_mat();
  pred.listener.pose = r.pred.pose_pred.to_mat();
  pred.blink.phi.assign(clip->blink.frames(), 0);
  for (std::size_t t = 0; t < pred.blink.frames(); ++t)
    pred.blink.phi[t] = r.pred.blink_prob.values()[t] > 0.5 ? 1 : 0;
  pred.emotion = r.used_emotion;

  stamp_dir(cfg.out_dir, cfg);
  const std::filesystem::path dir = cfg.out_dir;
  {
    auto f = open_out(dir / "prediction.txt");
    elp::corpus::write_clip(pred, f);
  }
  {
    elp::corpus::ConversationClip composited = pred;
    composited.listener.beta = elp::blink::apply_blink(
        pred.listener.beta, pred.blink,
        elp::blink::ClosureBlendshape::unit(pred.listener.beta.cols, 0));
    auto f = open_out(dir / "prediction_composited.txt");
    elp::corpus::write_clip(composited, f);
  }
  {
    auto f = open_out(dir / "codewords.csv");
    elp::latent::write_codeword_csv(r.grid, f);
  }
  std::cout << "clip " << clip_id << ": emotion slot " << r.used_emotion.slot()
            << (emotion_override >= 0 ? " (override)" : " (classifier)") << ", outputs in "
            << cfg.out_dir << '\n';
  return 0;
}

int cmd_eval(const CommonFlags& flags, const std::string& ckpt, const elp::eval::EvalOptions& eo) {
  auto cfg = flags.resolve();
  elp::corpus::Corpus data = load_matching_corpus(cfg);
  elp::nets::AseModel model = load_model(cfg, ckpt);
  elp::eval::EvalOutputs out = elp::eval::evaluate(model, data, cfg, eo);
  stamp_dir(cfg.out_dir, cfg);
  write_eval_outputs(out, cfg.out_dir);
  std::cout << "evaluated " << out.report.clip_count
            << " test clips; emotion accuracy = " << out.emotion_accuracy << '\n';
  return 0;
}

int cmd_ablate(const CommonFlags& flags, const std::string& mode,
               const std::vector<std::size_t>& head_list) {
  auto cfg = flags.resolve();
  elp::corpus::Corpus data = load_matching_corpus(cfg);
  stamp_dir(cfg.out_dir, cfg);
  const std::filesystem::path dir = cfg.out_dir;
  elp::eval::EvalOptions eo;

  if (mode == "space") {
    // twin training: identical everything except the emotion partition
    nlohmann::ordered_json j;
    double separation[2] = {0, 0};
    for (int twin = 0; twin < 2; ++twin) {
      elp::config::ExperimentConfig tcfg = cfg;
      tcfg.use_partition = (twin == 0);
      const std::string tag = twin == 0 ? "u" : "v";
      elp::nets::AseModel model(tcfg.net, tcfg.latent, tcfg.seed);
      int rc = run_train_into(tcfg, data, dir, model);
      // twin checkpoints under distinct names
      std::filesystem::rename(dir / "model.ckpt", dir / ("model_" + tag + ".ckpt"));
      std::filesystem::rename(dir / "loss.csv", dir / ("loss_" + tag + ".csv"));
      std::filesystem::rename(dir / "val.csv", dir / ("val_" + tag + ".csv"));
      if (rc != 0) return rc;
      elp::eval::EvalOutputs out = elp::eval::evaluate(model, data, tcfg, eo);
      {
        auto f = open_out(dir / ("metrics_" + tag + ".csv"));
        out.report.write_csv(f);
      }
      {
        auto f = open_out(dir / ("features_" + tag + ".csv"));
        elp::eval::write_feature_dump(model, data, tcfg, f);
      }
      separation[twin] = elp::eval::emotion_separation(model, data, tcfg);
      j["separation_" + tag] = separation[twin];
      j["override_shift_" + tag] = elp::eval::override_shift(model, data, tcfg);
      j["emotion_accuracy_" + tag] = out.emotion_accuracy;
    }
    j["separation_ratio"] = separation[0] / separation[1];
    open_out(dir / "ablation.json") << j.dump(2) << '\n';
    std::cout << "emotion-mean separation: partitioned " << separation[0] << " vs base "
              << separation[1] << " (ratio " << separation[0] / separation[1] << ")\n";
    return 0;
  }

  if (mode == "heads") {
    elp::metrics::MetricReport sweep;
    sweep.config_digest = cfg.digest();
    sweep.seed = cfg.seed;
    sweep.clip_count = data.test.size();
    for (std::size_t h : head_list) {
      elp::config::ExperimentConfig tcfg = cfg;
      tcfg.latent.heads = h;
      tcfg.validate();
      elp::nets::AseModel model(tcfg.net, tcfg.latent, tcfg.seed);
      int rc = run_train_into(tcfg, data, dir, model);
      const std::string tag = "H" + std::to_string(h);
      std::filesystem::rename(dir / "model.ckpt", dir / ("model_" + tag + ".ckpt"));
      std::filesystem::rename(dir / "loss.csv", dir / ("loss_" + tag + ".csv"));
      std::filesystem::rename(dir / "val.csv", dir / ("val_" + tag + ".csv"));
      if (rc != 0) return rc;
      elp::eval::EvalOptions model_only;
      model_only.nn_motion = model_only.nn_audio = model_only.random = model_only.dls_random =
          false;
      elp::eval::EvalOutputs out = elp::eval::evaluate(model, data, tcfg, model_only);
      elp::metrics::MetricRow row = out.report.rows[1];  // the model row
      row.method = "H=" + std::to_string(h);
      sweep.rows.push_back(row);
      auto f = open_out(dir / ("features_" + tag + ".csv"));
      elp::eval::write_feature_dump(model, data, tcfg, f);
    }
    auto f = open_out(dir / "head_sweep.csv");
    sweep.write_csv(f);
    std::cout << "head sweep complete: " << sweep.rows.size() << " rows in "
              << (dir / "head_sweep.csv").string() << '\n';
    return 0;
  }

  throw std::runtime_error("ablate: unknown mode '" + mode + "' (expected space or heads)");
}

int cmd_gradcheck(const CommonFlags& flags, std::size_t seeds, std::size_t coords) {
  elp::config::ExperimentConfig cfg;
  if (!flags.config_path.empty() || flags.o_seed->count() || flags.o_heads->count() ||
      flags.o_cats->count()) {
    cfg = flags.resolve();
  } else {
    cfg = elp::gradcheck::reduced_default_config();
    cfg.apply_env_seed();
  }
  elp::gradcheck::Report rep = elp::gradcheck::run(cfg, seeds, coords);
  elp::gradcheck::write_report(rep, std::cout);
  const double threshold = 1e-3;
  std::cout << (rep.pass(threshold) ? "PASS" : "FAIL") << " (worst " << rep.worst()
            << ", threshold " << threshold << ")\n";
  return rep.pass(threshold) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emotional listener portrait laboratory"};
  app.require_subcommand(1);

  CommonFlags gen_f, train_f, infer_f, eval_f, ablate_f, gc_f;

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic conversation corpus");
  gen_f.attach(gen);

  auto* train = app.add_subcommand("train", "train the adaptive space encoder");
  train_f.attach(train);

  auto* infer = app.add_subcommand("infer", "predict listener motion for one corpus clip");
  infer_f.attach(infer);
  std::string infer_ckpt = "out/model.ckpt";
  std::uint64_t clip_id = 0;
  int emotion_override = -1;
  infer->add_option("--checkpoint", infer_ckpt, "trained model checkpoint");
  infer->add_option("--clip-id", clip_id, "corpus clip id")->required();
  infer->add_option("--emotion", emotion_override, "emotion slot override (default: classifier)");

  auto* eval = app.add_subcommand("eval", "score the model and baselines on the test split");
  eval_f.attach(eval);
  std::string eval_ckpt = "out/model.ckpt";
  elp::eval::EvalOptions eo;
  eval->add_option("--checkpoint", eval_ckpt, "trained model checkpoint");
  eval->add_option("--nn-motion", eo.nn_motion, "include the motion nearest-neighbour baseline");
  eval->add_option("--nn-audio", eo.nn_audio, "include the audio nearest-neighbour baseline");
  eval->add_option("--random", eo.random, "include the perturbed-random baseline");
  eval->add_option("--dls-random", eo.dls_random, "include the random-codeword baseline");

  auto* ablate = app.add_subcommand("ablate", "latent-space and head-count ablations");
  ablate_f.attach(ablate);
  std::string mode = "space";
  std::vector<std::size_t> head_list = {1, 4, 16, 64, 128};
  ablate->add_option("--mode", mode, "space | heads");
  ablate->add_option("--head-list", head_list, "head counts for the sweep");

  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  gc_f.attach(gc);
  std::size_t gc_seeds = 10, gc_coords = 2;
  gc->add_option("--seeds", gc_seeds, "number of random seeds");
  gc->add_option("--coords", gc_coords, "checked coordinates per parameter group");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(gen_f);
    if (train->parsed()) return cmd_train(train_f);
    if (infer->parsed()) return cmd_infer(infer_f, infer_ckpt, clip_id, emotion_override);
    if (eval->parsed()) return cmd_eval(eval_f, eval_ckpt, eo);
    if (ablate->parsed()) return cmd_ablate(ablate_f, mode, head_list);
    if (gc->parsed()) return cmd_gradcheck(gc_f, gc_seeds, gc_coords);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
