#include "elp/train.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "elp/losses.hpp"

namespace elp::train {

using ad::Tape;
using ad::Tensor;

AdamW::AdamW(const nets::ParamStore& params, const config::OptimizerConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  for (const auto& e : params.entries()) {
    m_.emplace_back(e.tensor.numel(), 0.0);
    v_.emplace_back(e.tensor.numel(), 0.0);
  }
}

void AdamW::step(nets::ParamStore& params, double grad_scale) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const auto& entries = params.entries();
  require(entries.size() == m_.size(), "AdamW: parameter store changed size");
  for (std::size_t p = 0; p < entries.size(); ++p) {
    nets::ParamStore::Entry entry = entries[p];  // handle copy shares storage
    const auto& grad = entry.tensor.grad();
    auto& vals = entry.tensor.mutable_values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      double g = grad[i] * grad_scale;
      m_[p][i] = cfg_.beta1 * m_[p][i] + (1.0 - cfg_.beta1) * g;
      v_[p][i] = cfg_.beta2 * v_[p][i] + (1.0 - cfg_.beta2) * g * g;
      double mhat = m_[p][i] / bc1;
      double vhat = v_[p][i] / bc2;
      // decoupled weight decay
      vals[i] -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * vals[i]);
    }
  }
}

double tau_at(const config::OptimizerConfig& cfg, std::size_t step) {
  if (cfg.steps <= 1) return cfg.tau_start;
  double frac = static_cast<double>(step) / static_cast<double>(cfg.steps - 1);
  return cfg.tau_start + (cfg.tau_end - cfg.tau_start) * frac;
}

namespace {

struct LossParts {
  double l2, ce1, ce2, reg, total;
};

LossParts clip_loss(Tape& tape, const nets::AseModel& model,
                    const corpus::ConversationClip& clip, const nets::ForwardOptions& opts,
                    const losses::LossWeights& w, Tensor* total_out) {
  auto r = model.forward(tape, clip.audio, clip.speaker, opts);
  Tensor l2 = losses::motion_l2(tape, r.pred.beta_pred, r.pred.pose_pred, clip.listener.beta,
                                clip.listener.pose);
  Tensor ce1 = losses::blink_ce(tape, r.pred.blink_prob, clip.blink);
  Tensor ce2 =
      losses::emotion_ce(tape, tape.softmax_last(r.pred.emotion_logits), clip.emotion);
  Tensor reg = losses::blink_reg(tape, r.pred.blink_prob);
  Tensor total = losses::total_loss(tape, l2, ce1, ce2, reg, w);
  if (total_out) *total_out = total;
  return {l2.value(), ce1.value(), ce2.value(), reg.value(), total.value()};
}

std::vector<std::vector<double>> snapshot(const nets::ParamStore& params) {
  std::vector<std::vector<double>> out;
  for (const auto& e : params.entries()) out.push_back(e.tensor.values());
  return out;
}

void restore(nets::ParamStore& params, const std::vector<std::vector<double>>& snap) {
  const auto& entries = params.entries();
  for (std::size_t p = 0; p < entries.size(); ++p) {
    nets::ParamStore::Entry entry = entries[p];
    entry.tensor.mutable_values() = snap[p];
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

double validation_loss(const nets::AseModel& model,
                       const std::vector<corpus::ConversationClip>& clips,
                       const config::ExperimentConfig& cfg) {
  require(!clips.empty(), "validation_loss: no clips");
  double acc = 0;
  for (const auto& clip : clips) {
    Tape tape;
    nets::ForwardOptions opts;
    opts.emotion = clip.emotion;  // teacher-forced, deterministic hard path
    opts.use_partition = cfg.use_partition;
    acc += clip_loss(tape, model, clip, opts, cfg.loss, nullptr).total;
  }
  return acc / static_cast<double>(clips.size());
}

TrainResult train_model(nets::AseModel& model, const corpus::Corpus& data,
                        const config::ExperimentConfig& cfg) {
  cfg.validate();
  require(!data.train.empty(), "train_model: empty train split");
  require(!data.val.empty(), "train_model: empty val split");

  AdamW opt(model.params(), cfg.opt);
  Rng rng(Rng::seed_mix(cfg.seed, 0x7472616e494eULL));
  TrainResult result;
  auto last_good = snapshot(model.params());

  for (std::size_t step = 0; step < cfg.opt.steps; ++step) {
    model.params().zero_grads();
    StepStats stats;
    stats.step = step;
    bool finite = true;
    for (std::size_t b = 0; b < cfg.opt.batch_size; ++b) {
      const auto& clip = data.train[rng.uniform_index(data.train.size())];
      Tape tape;
      nets::ForwardOptions opts;
      opts.train = true;
      opts.temperature = tau_at(cfg.opt, step);
      opts.emotion = clip.emotion;  // teacher forcing
      opts.use_partition = cfg.use_partition;
      opts.rng = &rng;
      Tensor total;
      LossParts parts;
      try {
        parts = clip_loss(tape, model, clip, opts, cfg.loss, &total);
      } catch (const std::runtime_error&) {
        finite = false;  // non-finite loss component
        break;
      }
      tape.backward(total);
      stats.l2 += parts.l2;
      stats.ce1 += parts.ce1;
      stats.ce2 += parts.ce2;
      stats.reg += parts.reg;
      stats.total += parts.total;
    }
    const double inv = 1.0 / static_cast<double>(cfg.opt.batch_size);
    stats.l2 *= inv;
    stats.ce1 *= inv;
    stats.ce2 *= inv;
    stats.reg *= inv;
    stats.total *= inv;

    if (!finite || !std::isfinite(stats.total)) {
      restore(model.params(), last_good);
      result.diverged = true;
      break;
    }
    opt.step(model.params(), inv);
    result.log.push_back(stats);
    result.completed_steps = step + 1;

    if ((step + 1) % cfg.opt.val_every == 0 || step + 1 == cfg.opt.steps) {
      double vl = validation_loss(model, data.val, cfg);
      if (!std::isfinite(vl)) {
        restore(model.params(), last_good);
        result.diverged = true;
        break;
      }
      result.val_log.emplace_back(step + 1, vl);
      last_good = snapshot(model.params());
    }
  }

  if (!result.log.empty()) {
    result.initial_loss = result.log.front().total;
    result.final_loss = result.log.back().total;
  }
  return result;
}

void write_loss_csv(const TrainResult& result, std::ostream& out) {
  out << "step,L_L2,L_CE1,L_CE2,L_reg,L_total\n";
  for (const auto& s : result.log)
    out << s.step << ',' << fmt(s.l2) << ',' << fmt(s.ce1) << ',' << fmt(s.ce2) << ','
        << fmt(s.reg) << ',' << fmt(s.total) << '\n';
}

void write_val_csv(const TrainResult& result, std::ostream& out) {
  out << "step,val_loss\n";
  for (const auto& [step, loss] : result.val_log) out << step << ',' << fmt(loss) << '\n';
}

}  // namespace elp::train
