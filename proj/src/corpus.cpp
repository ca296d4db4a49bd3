#include "elp/corpus.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "elp/digest.hpp"

namespace elp::corpus {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

nlohmann::ordered_json spec_json(const CorpusSpec& s) {
  nlohmann::ordered_json j;
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

CorpusSpec spec_from_json(const nlohmann::json& j) {
  CorpusSpec s;
  s.clip_count = j.at("clip_count");
  s.frames = j.at("frames");
  s.fps = j.at("fps");
  s.emotions = j.at("emotions");
  s.beta_dim = j.at("beta_dim");
  s.pose_dim = j.at("pose_dim");
  s.audio_dim = j.at("audio_dim");
  s.noise = j.at("noise");
  s.lag = j.at("lag");
  s.seed = j.at("seed");
  s.amplitude_base = j.at("amplitude_base");
  s.amplitude_step = j.at("amplitude_step");
  s.freq_base = j.at("freq_base");
  s.freq_step = j.at("freq_step");
  s.gain_base = j.at("gain_base");
  s.gain_step = j.at("gain_step");
  s.hazard_base = j.at("hazard_base");
  s.hazard_step = j.at("hazard_step");
  s.blink_len = j.at("blink_len");
  s.blink_refractory = j.at("blink_refractory");
  s.blink_modulation = j.at("blink_modulation");
  return s;
}

// fixed per-emotion audio projection, independent of the corpus seed
Mat audio_projection(std::size_t slot, std::size_t audio_dim, std::size_t in_dim) {
  Rng rng(Rng::seed_mix(0xa0d10ULL, slot));
  Mat w(audio_dim, in_dim);
  double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (auto& v : w.data) v = scale * rng.normal();
  return w;
}

// Two clip-shared tones with per-dimension phases and weights.  Every frame
// of the clean signal lives in the 4-dim span of the two tones, so the whole
// frame state is recoverable from a handful of discrete codes, while the
// random second frequency breaks pure periodicity and decorrelates unrelated
// clips under lag search.  The per-dimension shape (phases and weights) is
// keyed by emotion, not by clip: clips of one emotion share the projection
// from tone state to coefficients, so the mapping is learnable from data,
// while the clip-level frequencies keep the clips distinct.
struct ToneBank {
  double f1, f2;
  std::vector<double> p1, p2, a, b;
  ToneBank(Rng& clip_rng, std::uint64_t shape_key, std::size_t dims, double base_freq)
      : f1(base_freq * (1.0 + 0.2 * (clip_rng.uniform() - 0.5))),
        f2(clip_rng.uniform(0.3, 3.0)) {
    Rng shape_rng(shape_key);
    for (std::size_t d = 0; d < dims; ++d) {
      p1.push_back(shape_rng.uniform(0.0, kTwoPi));
      p2.push_back(shape_rng.uniform(0.0, kTwoPi));
      a.push_back(shape_rng.uniform(0.5, 1.0));
      b.push_back(shape_rng.uniform(0.3, 0.7));
    }
  }
  double eval(std::size_t d, double tsec) const {
    return a[d] * std::sin(kTwoPi * f1 * tsec + p1[d]) +
           b[d] * std::sin(kTwoPi * f2 * tsec + p2[d]);
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_section(std::ostream& out, const char* name, const Mat& m) {
  out << '[' << name << "]\n";
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) {
      if (c) out << ' ';
      out << fmt(m(r, c));
    }
    out << '\n';
  }
}

struct LineReader {
  std::istream& in;
  std::size_t line_no = 0;
  bool next(std::string& line) {
    if (!std::getline(in, line)) return false;
    ++line_no;
    return true;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw std::runtime_error("clip line " + std::to_string(line_no) + ": " + msg);
  }
};

Mat read_section(LineReader& r, const std::string& name, std::size_t rows, std::size_t cols) {
  std::string line;
  if (!r.next(line)) r.fail("expected section [" + name + "], found end of file");
  if (line != "[" + name + "]") r.fail("expected section [" + name + "], found '" + line + "'");
  Mat m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!r.next(line))
      r.fail("section [" + name + "] truncated: expected " + std::to_string(rows) +
             " rows, found " + std::to_string(i));
    std::istringstream ss(line);
    for (std::size_t c = 0; c < cols; ++c) {
      if (!(ss >> m(i, c)))
        r.fail("section [" + name + "] row has fewer than " + std::to_string(cols) + " values");
    }
    std::string extra;
    if (ss >> extra) r.fail("section [" + name + "] row has more than " + std::to_string(cols) +
                            " values");
  }
  return m;
}

}  // namespace

void CorpusSpec::validate() const {
  require(clip_count >= 1, "CorpusSpec: clip_count must be positive");
  require(frames >= 2, "CorpusSpec: need at least 2 frames");
  require(emotions >= 2, "CorpusSpec: need at least 2 emotions");
  require(beta_dim >= 1 && pose_dim >= 1 && audio_dim >= 1, "CorpusSpec: empty dimension");
  require(noise >= 0.0, "CorpusSpec: negative noise");
  require(lag < frames, "CorpusSpec: lag must be below clip length");
  require(hazard(emotions - 1) < 1.0, "CorpusSpec: blink hazard must stay below 1");
  require(blink_len >= 1, "CorpusSpec: blink_len must be positive");
  require(blink_modulation >= 0.0 && blink_modulation <= 1.0,
          "CorpusSpec: blink_modulation must be in [0,1]");
}

std::string CorpusSpec::digest() const { return fnv1a_hex(spec_json(*this).dump()); }

void ConversationClip::validate() const {
  emotion.validate();
  const std::size_t T = speaker.frames();
  require(T >= 2, "ConversationClip: too few frames");
  require(audio.frames() == T && listener.frames() == T && blink.frames() == T,
          "ConversationClip: component frame counts differ");
  require(speaker.pose.rows == T && listener.pose.rows == T,
          "ConversationClip: pose frame count differs");
  blink.validate();
}

BlinkSequence generate_blinks(double hazard, std::size_t frames,
                              const std::vector<double>& modulation, std::size_t blink_len,
                              std::size_t refractory, Rng& rng) {
  require(hazard > 0.0 && hazard < 1.0, "generate_blinks: hazard out of range");
  require(modulation.empty() || modulation.size() == frames,
          "generate_blinks: modulation length mismatch");
  BlinkSequence out;
  out.phi.assign(frames, 0);
  std::size_t blinking = 0, refractory_left = 0;
  for (std::size_t t = 0; t < frames; ++t) {
    if (blinking > 0) {
      out.phi[t] = 1;
      if (--blinking == 0) refractory_left = refractory;
    } else if (refractory_left > 0) {
      --refractory_left;
    } else {
      double h = hazard * (modulation.empty() ? 1.0 : modulation[t]);
      if (rng.uniform() < h) {
        out.phi[t] = 1;
        blinking = blink_len - 1;
        if (blinking == 0) refractory_left = refractory;
      }
    }
  }
  return out;
}

Split split_of(std::uint64_t id) {
  std::uint64_t h = Rng::seed_mix(0x517aULL, id) % 10;
  if (h < 7) return Split::Train;
  if (h == 7) return Split::Val;
  return Split::Test;
}

ConversationClip generate_clip(const CorpusSpec& spec, std::uint64_t id) {
  spec.validate();
  const std::size_t slot = id % spec.emotions;
  Rng rng(Rng::seed_mix(spec.seed, id));
  const double A = spec.amplitude(slot);
  const double f = spec.frequency(slot);

  ConversationClip clip;
  clip.id = id;
  clip.emotion = EmotionVector::onehot(slot, spec.emotions);

  ToneBank beta_tones(rng, Rng::seed_mix(0xbe7a0ULL, slot), spec.beta_dim, f);
  ToneBank pose_tones(rng, Rng::seed_mix(0x90e5eULL, slot), spec.pose_dim, f);
  clip.speaker.beta = Mat(spec.frames, spec.beta_dim);
  clip.speaker.pose = Mat(spec.frames, spec.pose_dim);
  clip.speaker.fps = spec.fps;
  for (std::size_t t = 0; t < spec.frames; ++t) {
    double ts = static_cast<double>(t) / spec.fps;
    for (std::size_t d = 0; d < spec.beta_dim; ++d)
      clip.speaker.beta(t, d) = A * beta_tones.eval(d, ts) + spec.noise * rng.normal();
    for (std::size_t d = 0; d < spec.pose_dim; ++d)
      clip.speaker.pose(t, d) = 0.3 * A * pose_tones.eval(d, ts) + spec.noise * rng.normal();
  }

  const std::size_t in_dim = spec.beta_dim + spec.pose_dim;
  Mat w = audio_projection(slot, spec.audio_dim, in_dim);
  clip.audio.feats = Mat(spec.frames, spec.audio_dim);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    for (std::size_t k = 0; k < spec.audio_dim; ++k) {
      double acc = 0;
      for (std::size_t j = 0; j < spec.beta_dim; ++j) acc += w(k, j) * clip.speaker.beta(t, j);
      for (std::size_t j = 0; j < spec.pose_dim; ++j)
        acc += w(k, spec.beta_dim + j) * clip.speaker.pose(t, j);
      clip.audio.feats(t, k) = acc + spec.noise * rng.normal();
    }
  }

  const double g = spec.gain(slot);
  clip.listener.beta = Mat(spec.frames, spec.beta_dim);
  clip.listener.pose = Mat(spec.frames, spec.pose_dim);
  clip.listener.fps = spec.fps;
  for (std::size_t t = 0; t < spec.frames; ++t) {
    std::size_t src = t >= spec.lag ? t - spec.lag : 0;
    for (std::size_t d = 0; d < spec.beta_dim; ++d)
      clip.listener.beta(t, d) = g * clip.speaker.beta(src, d) + spec.noise * rng.normal();
    for (std::size_t d = 0; d < spec.pose_dim; ++d)
      clip.listener.pose(t, d) = g * clip.speaker.pose(src, d) + spec.noise * rng.normal();
  }

  // blink hazard rises with the clean dim-0 speaker energy so blink timing is
  // recoverable from the speaker stream; mean modulation factor is 1
  std::vector<double> mod(spec.frames);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    double ts = static_cast<double>(t) / spec.fps;
    double u = 0.5 * (1.0 + std::sin(kTwoPi * beta_tones.f1 * ts + beta_tones.p1[0]));
    mod[t] = (1.0 - spec.blink_modulation) + 2.0 * spec.blink_modulation * u;
  }
  clip.blink = generate_blinks(spec.hazard(slot), spec.frames, mod, spec.blink_len,
                               spec.blink_refractory, rng);
  return clip;
}

Corpus generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  Corpus corpus;
  corpus.spec = spec;
  for (std::uint64_t id = 0; id < spec.clip_count; ++id) {
    ConversationClip clip = generate_clip(spec, id);
    switch (split_of(id)) {
      case Split::Train: corpus.train.push_back(std::move(clip)); break;
      case Split::Val: corpus.val.push_back(std::move(clip)); break;
      case Split::Test: corpus.test.push_back(std::move(clip)); break;
    }
  }
  return corpus;
}

void write_clip(const ConversationClip& clip, std::ostream& out) {
  clip.validate();
  out << "#elp-clip v1 T=" << clip.speaker.frames() << " N=" << clip.emotion.e.size()
      << " emotion=" << clip.emotion.slot() << " dims=" << clip.speaker.beta.cols << ','
      << clip.speaker.pose.cols << ',' << clip.audio.feats.cols << '\n';
  write_section(out, "speaker_beta", clip.speaker.beta);
  write_section(out, "speaker_pose", clip.speaker.pose);
  write_section(out, "audio", clip.audio.feats);
  write_section(out, "listener_beta", clip.listener.beta);
  write_section(out, "listener_pose", clip.listener.pose);
  out << "[blink]\n";
  for (std::size_t t = 0; t < clip.blink.frames(); ++t)
    out << static_cast<int>(clip.blink.phi[t]) << '\n';
}

ConversationClip read_clip(std::istream& in, std::uint64_t id) {
  LineReader r{in};
  std::string header;
  if (!r.next(header)) r.fail("empty file");
  std::size_t T = 0, N = 0, emotion = 0, bd = 0, pd = 0, adim = 0;
  if (std::sscanf(header.c_str(), "#elp-clip v1 T=%zu N=%zu emotion=%zu dims=%zu,%zu,%zu", &T, &N,
                  &emotion, &bd, &pd, &adim) != 6)
    r.fail("malformed header '" + header + "'");
  if (emotion >= N) r.fail("emotion index out of range");

  ConversationClip clip;
  clip.id = id;
  clip.emotion = EmotionVector::onehot(emotion, N);
  clip.speaker.beta = read_section(r, "speaker_beta", T, bd);
  clip.speaker.pose = read_section(r, "speaker_pose", T, pd);
  clip.audio.feats = read_section(r, "audio", T, adim);
  clip.listener.beta = read_section(r, "listener_beta", T, bd);
  clip.listener.pose = read_section(r, "listener_pose", T, pd);
  Mat blink = read_section(r, "blink", T, 1);
  for (std::size_t t = 0; t < T; ++t) {
    double v = blink(t, 0);
    if (v != 0.0 && v != 1.0) r.fail("non-binary blink value");
    clip.blink.phi.push_back(static_cast<std::uint8_t>(v));
  }
  clip.validate();
  return clip;
}

namespace {

const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    default: return "test";
  }
}

void write_split(const std::vector<ConversationClip>& clips, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& clip : clips) {
    std::ofstream out(dir / ("clip_" + std::to_string(clip.id) + ".txt"));
    require(out.good(), "write_corpus: cannot open clip file in " + dir.string());
    write_clip(clip, out);
  }
}

}  // namespace

void write_corpus(const Corpus& corpus, const std::string& dir) {
  std::filesystem::path root(dir);
  write_split(corpus.train, root / "train");
  write_split(corpus.val, root / "val");
  write_split(corpus.test, root / "test");

  nlohmann::ordered_json manifest;
  manifest["spec"] = spec_json(corpus.spec);
  manifest["digest"] = corpus.spec.digest();
  manifest["clips"] = nlohmann::ordered_json::array();
  auto add = [&](const std::vector<ConversationClip>& clips, Split s) {
    for (const auto& clip : clips) {
      manifest["clips"].push_back({{"id", clip.id},
                                   {"emotion", clip.emotion.slot()},
                                   {"split", split_name(s)}});
    }
  };
  add(corpus.train, Split::Train);
  add(corpus.val, Split::Val);
  add(corpus.test, Split::Test);
  std::ofstream out(root / "manifest.json");
  require(out.good(), "write_corpus: cannot open manifest in " + dir);
  out << manifest.dump(2) << '\n';
}

Corpus load_corpus(const std::string& dir) {
  std::filesystem::path root(dir);
  std::ifstream min(root / "manifest.json");
  require(min.good(), "load_corpus: missing manifest.json in " + dir);
  nlohmann::json manifest = nlohmann::json::parse(min);
  Corpus corpus;
  corpus.spec = spec_from_json(manifest.at("spec"));
  require(manifest.at("digest") == corpus.spec.digest(),
          "load_corpus: manifest digest does not match its spec");
  for (const auto& entry : manifest.at("clips")) {
    std::uint64_t id = entry.at("id");
    std::string split = entry.at("split");
    std::ifstream in(root / split / ("clip_" + std::to_string(id) + ".txt"));
    require(in.good(), "load_corpus: missing clip file for id " + std::to_string(id));
    ConversationClip clip = read_clip(in, id);
    clip.speaker.fps = corpus.spec.fps;
    clip.listener.fps = corpus.spec.fps;
    require(clip.emotion.slot() == entry.at("emotion"),
            "load_corpus: manifest emotion disagrees with clip header");
    if (split == "train")
      corpus.train.push_back(std::move(clip));
    else if (split == "val")
      corpus.val.push_back(std::move(clip));
    else
      corpus.test.push_back(std::move(clip));
  }
  return corpus;
}

}  // namespace elp::corpus
