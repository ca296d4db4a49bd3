#include "elp/nets.hpp"

#include <cmath>

namespace elp::nets {

using latent::CodewordGrid;

Tensor ParamStore::create(const std::string& name, ad::Shape shape, std::size_t fan_in,
                          Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> v(ad::shape_numel(shape));
  for (auto& x : v) x = rng.uniform(-bound, bound);
  Tensor t = Tensor::from(std::move(shape), std::move(v), true);
  entries_.push_back({name, t});
  return t;
}

Tensor ParamStore::create_zeros(const std::string& name, ad::Shape shape) {
  Tensor t = Tensor::zeros(std::move(shape), true);
  entries_.push_back({name, t});
  return t;
}

std::size_t ParamStore::total_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.numel();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& e : entries_) e.tensor.zero_grad();
}

Linear::Linear(ParamStore& ps, const std::string& name, std::size_t in, std::size_t out,
               Rng& rng)
    : w(ps.create(name + ".w", {in, out}, in, rng)),
      b(ps.create(name + ".b", {out}, in, rng)) {}

Tensor Linear::forward(Tape& t, const Tensor& x) const { return t.add(t.matmul(x, w), b); }

Conv1d::Conv1d(ParamStore& ps, const std::string& name, std::size_t in, std::size_t out,
               long dil, Rng& rng)
    : dilation(dil) {
  const std::size_t fan_in = 3 * in;
  for (int k = 0; k < 3; ++k)
    taps.push_back(ps.create(name + ".w" + std::to_string(k), {in, out}, fan_in, rng));
  b = ps.create(name + ".b", {out}, fan_in, rng);
}

Tensor Conv1d::forward(Tape& t, const Tensor& x) const {
  // taps at offsets -d, 0, +d over the time axis
  Tensor acc;
  for (int k = 0; k < 3; ++k) {
    long offset = (static_cast<long>(k) - 1) * dilation;
    Tensor shifted = offset == 0 ? x : t.shift_rows(x, offset);
    Tensor term = t.matmul(shifted, taps[k]);
    acc = k == 0 ? term : t.add(acc, term);
  }
  return t.add(acc, b);
}

GruCell::GruCell(ParamStore& ps, const std::string& name, std::size_t in, std::size_t hid,
                 Rng& rng)
    : zg(ps, name + ".z", in + hid, hid, rng),
      rg(ps, name + ".r", in + hid, hid, rng),
      hg(ps, name + ".h", in + hid, hid, rng),
      hidden(hid) {}

Tensor GruCell::forward(Tape& t, const Tensor& x) const {
  const std::size_t frames = x.shape()[0];
  Tensor h = Tensor::zeros({1, hidden});
  std::vector<Tensor> outputs;
  outputs.reserve(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    Tensor xt = t.slice_rows(x, f, f + 1);
    Tensor xh = t.concat({xt, h}, 1);
    Tensor z = t.sigmoid(zg.forward(t, xh));
    Tensor r = t.sigmoid(rg.forward(t, xh));
    Tensor cand = t.tanh_(hg.forward(t, t.concat({xt, t.mul(r, h)}, 1)));
    // h = (1-z)*h + z*cand
    Tensor one = Tensor::full({1, hidden}, 1.0);
    h = t.add(t.mul(t.sub(one, z), h), t.mul(z, cand));
    outputs.push_back(h);
  }
  return t.concat(outputs, 0);
}

AseModel::AseModel(const NetworkConfig& net_cfg, const latent::LatentConfig& latent_cfg,
                   std::uint64_t seed)
    : net_cfg_(net_cfg), latent_cfg_(latent_cfg) {
  Rng rng(Rng::seed_mix(seed, 0x70617261ULL));  // parameter stream
  const auto& c = net_cfg_;
  audio_c1_ = Conv1d(params_, "audio.c1", c.audio_in, c.audio_h1, 1, rng);
  audio_c2_ = Conv1d(params_, "audio.c2", c.audio_h1, c.audio_h2, 1, rng);
  audio_c3_ = Conv1d(params_, "audio.c3", c.audio_h2, c.audio_out, 1, rng);

  std::size_t tin = c.style_dim();
  for (std::size_t i = 0; i < c.tdnn_dilations.size(); ++i) {
    tdnn_convs_.emplace_back(params_, "tdnn.c" + std::to_string(i), tin, c.tdnn_hidden,
                             static_cast<long>(c.tdnn_dilations[i]), rng);
    tin = c.tdnn_hidden;
  }
  tdnn_fc1_ = Linear(params_, "tdnn.fc1", c.tdnn_hidden, c.tdnn_mlp_hidden, rng);
  tdnn_fc2_ = Linear(params_, "tdnn.fc2", c.tdnn_mlp_hidden, latent_cfg_.emotions, rng);

  head_c1_ = Conv1d(params_, "head.c1", c.style_dim(), c.head_h1, 1, rng);
  head_c2_ = Conv1d(params_, "head.c2", c.head_h1, c.head_h2, 1, rng);
  head_gru_ = GruCell(params_, "head.gru", c.head_h2, c.head_gru, rng);
  head_out_ = Linear(params_, "head.out", c.head_gru,
                     latent_cfg_.heads * latent_cfg_.categories, rng);

  const std::size_t emb = latent_cfg_.heads * latent_cfg_.range();
  dec1_c1_ = Conv1d(params_, "dec1.c1", emb, c.dec1_hidden, 1, rng);
  dec1_beta_ = Linear(params_, "dec1.beta", c.dec1_hidden, c.beta_dim, rng);
  dec1_pose_ = Linear(params_, "dec1.pose", c.dec1_hidden, c.pose_dim, rng);

  dec2_c1_ = Conv1d(params_, "dec2.c1", emb, c.dec2_hidden, 1, rng);
  dec2_gru_ = GruCell(params_, "dec2.gru", c.dec2_hidden, c.dec2_gru, rng);
  dec2_out_ = Linear(params_, "dec2.out", c.dec2_gru, 1, rng);
}

Tensor AseModel::dropout_mask(Tape& t, const Tensor& x, bool train, Rng* rng) const {
  if (!train || net_cfg_.dropout <= 0.0) return x;
  require(rng != nullptr, "dropout: rng required in train mode");
  const double keep = 1.0 - net_cfg_.dropout;
  std::vector<double> mask(x.numel());
  for (auto& m : mask) m = rng->uniform() < keep ? 1.0 / keep : 0.0;
  return t.mul(x, Tensor::from(x.shape(), std::move(mask)));
}

Tensor AseModel::encode_audio(Tape& t, const Tensor& feats, bool train, Rng* rng) const {
  require(feats.shape().size() == 2 && feats.shape()[1] == net_cfg_.audio_in,
          "audio_encode: expected T x " + std::to_string(net_cfg_.audio_in) + " input, got " +
              ad::shape_str(feats.shape()));
  Tensor h = t.relu(audio_c1_.forward(t, feats));
  h = dropout_mask(t, h, train, rng);
  h = t.relu(audio_c2_.forward(t, h));
  h = dropout_mask(t, h, train, rng);
  return audio_c3_.forward(t, h);
}

Tensor AseModel::classify_emotion(Tape& t, const Tensor& style) const {
  require(style.shape().size() == 2 && style.shape()[1] == net_cfg_.style_dim(),
          "classify_emotion: style width mismatch");
  require(style.shape()[0] >= net_cfg_.tdnn_receptive_field(),
          "classify_emotion: clip too short, need at least " +
              std::to_string(net_cfg_.tdnn_receptive_field()) + " frames");
  Tensor h = style;
  for (const auto& conv : tdnn_convs_) h = t.relu(conv.forward(t, h));
  Tensor pooled = t.reshape(t.mean_axis0(h), {1, net_cfg_.tdnn_hidden});
  Tensor logits = tdnn_fc2_.forward(t, t.relu(tdnn_fc1_.forward(t, pooled)));
  return t.reshape(logits, {latent_cfg_.emotions});
}

Tensor AseModel::encode_heads(Tape& t, const Tensor& style) const {
  require(style.shape().size() == 2 && style.shape()[1] == net_cfg_.style_dim(),
          "encode_heads: style width mismatch");
  const std::size_t frames = style.shape()[0];
  Tensor h = t.relu(head_c1_.forward(t, style));
  h = t.relu(head_c2_.forward(t, h));
  h = head_gru_.forward(t, h);
  Tensor logits = head_out_.forward(t, h);
  return t.reshape(logits, {frames, latent_cfg_.heads, latent_cfg_.categories});
}

std::pair<Tensor, Tensor> AseModel::decode_motion(Tape& t, const Tensor& embedding) const {
  const std::size_t emb = latent_cfg_.heads * latent_cfg_.range();
  require(embedding.shape().size() == 2 && embedding.shape()[1] == emb,
          "decode_motion: expected T x " + std::to_string(emb) + " embedding, got " +
              ad::shape_str(embedding.shape()));
  Tensor h = t.relu(dec1_c1_.forward(t, embedding));
  return {dec1_beta_.forward(t, h), dec1_pose_.forward(t, h)};
}

Tensor AseModel::decode_blink(Tape& t, const Tensor& embedding) const {
  const std::size_t emb = latent_cfg_.heads * latent_cfg_.range();
  require(embedding.shape().size() == 2 && embedding.shape()[1] == emb,
          "decode_blink: expected T x " + std::to_string(emb) + " embedding");
  const std::size_t frames = embedding.shape()[0];
  Tensor h = t.relu(dec2_c1_.forward(t, embedding));
  h = dec2_gru_.forward(t, h);
  return t.reshape(t.sigmoid(dec2_out_.forward(t, h)), {frames});
}

ForwardResult AseModel::forward(Tape& tape, const AudioFeatureSequence& audio,
                                const MotionSequence& speaker_motion,
                                const ForwardOptions& opts) const {
  require(audio.frames() == speaker_motion.frames(), "ase_forward: audio/motion length mismatch");
  const std::size_t frames = audio.frames();

  Tensor audio_enc =
      encode_audio(tape, Tensor::from_mat(audio.feats), opts.train, opts.rng);

  // style = a(t) (+) clip-level std blocks (the std blocks are constants of
  // the input clip, so gradients flow through the audio branch only)
  std::vector<double> std_beta = clip_std(speaker_motion.beta);
  std::vector<double> std_dbeta = clip_std(temporal_derivative(speaker_motion.beta));
  std::vector<double> std_dpose = clip_std(temporal_derivative(speaker_motion.pose));
  std::vector<double> block;
  block.reserve(std_beta.size() + std_dbeta.size() + std_dpose.size());
  block.insert(block.end(), std_beta.begin(), std_beta.end());
  block.insert(block.end(), std_dbeta.begin(), std_dbeta.end());
  block.insert(block.end(), std_dpose.begin(), std_dpose.end());
  std::vector<double> rep(frames * block.size());
  for (std::size_t f = 0; f < frames; ++f)
    std::copy(block.begin(), block.end(), rep.begin() + f * block.size());
  Tensor stats = Tensor::from({frames, block.size()}, std::move(rep));
  Tensor style = tape.concat({audio_enc, stats}, 1);

  ForwardResult out;
  out.style = style;
  out.pred.emotion_logits = classify_emotion(tape, style);

  if (opts.emotion) {
    out.used_emotion = *opts.emotion;
    out.used_emotion.validate();
    require(out.used_emotion.e.size() == latent_cfg_.emotions,
            "ase_forward: emotion vector length mismatch");
  } else {
    require(!opts.train, "ase_forward: training requires a teacher emotion");
    const auto& lv = out.pred.emotion_logits.values();
    std::size_t best = 0;
    for (std::size_t i = 1; i < lv.size(); ++i)
      if (lv[i] > lv[best]) best = i;
    out.used_emotion = EmotionVector::onehot(best, latent_cfg_.emotions);
  }

  out.head_logits = encode_heads(tape, style);

  Tensor base;
  if (opts.train) {
    require(opts.rng != nullptr || opts.frozen_noise != nullptr,
            "ase_forward: train mode needs an rng or frozen noise");
    latent::GumbelOptions gopts;
    gopts.temperature = opts.temperature;
    gopts.hard = opts.hard_sampling;
    gopts.frozen_noise = opts.frozen_noise;
    Rng fallback(0);
    base = latent::gumbel_softmax(tape, out.head_logits, gopts,
                                  opts.rng ? *opts.rng : fallback);
  } else {
    base = latent::hard_argmax(tape, out.head_logits);
  }

  Tensor expanded = opts.use_partition ? latent::split_rearrange(tape, base, out.used_emotion)
                                       : base;
  out.grid = latent::to_codewords(expanded);

  // decoders consume the flattened embedding; in the no-partition ablation the
  // codeword range is V, so pad the block layout to keep decoder shapes fixed
  Tensor emb3 = opts.use_partition
                    ? expanded
                    : tape.place_block(base, 0, latent_cfg_.emotions);
  out.embedding = emb3;
  Tensor emb2 =
      tape.reshape(emb3, {frames, latent_cfg_.heads * latent_cfg_.range()});
  auto [beta, pose] = decode_motion(tape, emb2);
  out.pred.beta_pred = beta;
  out.pred.pose_pred = pose;
  out.pred.blink_prob = decode_blink(tape, emb2);
  return out;
}

ListenerPrediction AseModel::decode_grid(Tape& tape, const CodewordGrid& grid) const {
  require(grid.heads == latent_cfg_.heads && grid.range == latent_cfg_.range(),
          "decode_grid: grid layout does not match the model config");
  Tensor emb3 = latent::embed_codewords(grid);
  Tensor emb2 = tape.reshape(emb3, {grid.frames, latent_cfg_.heads * latent_cfg_.range()});
  ListenerPrediction pred;
  auto [beta, pose] = decode_motion(tape, emb2);
  pred.beta_pred = beta;
  pred.pose_pred = pose;
  pred.blink_prob = decode_blink(tape, emb2);
  return pred;
}

}  // namespace elp::nets
