#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "elp/blink.hpp"
#include "elp/corpus.hpp"
#include "elp/metrics.hpp"

using namespace elp;
using namespace elp::corpus;

namespace {

CorpusSpec small_spec() {
  CorpusSpec s;
  s.clip_count = 60;
  s.beta_dim = 6;
  s.pose_dim = 2;
  s.audio_dim = 5;
  s.seed = 11;
  return s;
}

std::string clip_text(const ConversationClip& clip) {
  std::ostringstream ss;
  write_clip(clip, ss);
  return ss.str();
}

std::filesystem::path temp_dir(const char* tag) {
  auto p = std::filesystem::temp_directory_path() / (std::string("elp_corpus_") + tag);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("generation is deterministic and labels are balanced") {
  CorpusSpec spec = small_spec();
  Corpus a = generate_corpus(spec);
  Corpus b = generate_corpus(spec);
  REQUIRE(a.train.size() == b.train.size());
  CHECK(a.train.size() + a.val.size() + a.test.size() == spec.clip_count);
  for (std::size_t i = 0; i < a.train.size(); ++i)
    CHECK(clip_text(a.train[i]) == clip_text(b.train[i]));

  std::vector<std::size_t> counts(spec.emotions, 0);
  auto tally = [&](const std::vector<ConversationClip>& clips) {
    for (const auto& c : clips) ++counts[c.emotion.slot()];
  };
  tally(a.train);
  tally(a.val);
  tally(a.test);
  for (std::size_t i = 0; i < spec.emotions; ++i)
    for (std::size_t j = 0; j < spec.emotions; ++j)
      CHECK(std::llabs(static_cast<long long>(counts[i]) - static_cast<long long>(counts[j])) <=
            1);

  // different seed changes the data
  CorpusSpec other = spec;
  other.seed = 12;
  CHECK(clip_text(generate_corpus(other).train[0]) != clip_text(a.train[0]));
}

TEST_CASE("split is 70/10/20 by id hash") {
  std::size_t tr = 0, va = 0, te = 0;
  for (std::uint64_t id = 0; id < 10000; ++id) {
    switch (split_of(id)) {
      case Split::Train: ++tr; break;
      case Split::Val: ++va; break;
      case Split::Test: ++te; break;
    }
  }
  CHECK(std::fabs(tr / 10000.0 - 0.7) < 0.02);
  CHECK(std::fabs(va / 10000.0 - 0.1) < 0.02);
  CHECK(std::fabs(te / 10000.0 - 0.2) < 0.02);
}

TEST_CASE("per-emotion amplitudes separate by at least 3x the noise std") {
  CorpusSpec spec = small_spec();
  // parameter audit
  for (std::size_t e = 0; e + 1 < spec.emotions; ++e)
    CHECK(spec.amplitude(e + 1) - spec.amplitude(e) >= 3.0 * spec.noise);

  // empirical mean |beta| per emotion, ordered and separated
  Corpus corpus = generate_corpus(spec);
  std::vector<double> mean_abs(spec.emotions, 0.0);
  std::vector<std::size_t> n(spec.emotions, 0);
  for (const auto& clip : corpus.train) {
    double acc = 0;
    for (double v : clip.speaker.beta.data) acc += std::fabs(v);
    mean_abs[clip.emotion.slot()] += acc / static_cast<double>(clip.speaker.beta.size());
    ++n[clip.emotion.slot()];
  }
  for (std::size_t e = 0; e < spec.emotions; ++e) mean_abs[e] /= static_cast<double>(n[e]);
  for (std::size_t e = 0; e + 1 < spec.emotions; ++e)
    CHECK(mean_abs[e + 1] - mean_abs[e] >= 3.0 * spec.noise);
}

TEST_CASE("ground-truth listener tracks its speaker at the planted lag") {
  CorpusSpec spec = small_spec();
  Corpus corpus = generate_corpus(spec);
  metrics::WtlccOptions o;
  o.window = spec.frames;
  o.max_lag = spec.lag + 2;

  double matched = 0, shuffled = 0;
  const auto& clips = corpus.test;
  REQUIRE(clips.size() >= 2);
  for (std::size_t i = 0; i < clips.size(); ++i) {
    matched += metrics::wtlcc_mat(clips[i].speaker.beta, clips[i].listener.beta, o);
    const auto& other = clips[(i + 1) % clips.size()];
    shuffled += metrics::wtlcc_mat(other.speaker.beta, clips[i].listener.beta, o);
  }
  matched /= static_cast<double>(clips.size());
  shuffled /= static_cast<double>(clips.size());
  CHECK(matched >= 0.5);
  CHECK(matched - shuffled >= 0.2);
}

TEST_CASE("blink rate per emotion matches the configured renewal rate within 10%") {
  CorpusSpec spec;
  const std::size_t frames = 10000;
  for (std::size_t slot = 0; slot < spec.emotions; ++slot) {
    // sinusoidal modulation with mean 1, as used by the generator
    std::vector<double> mod(frames);
    for (std::size_t t = 0; t < frames; ++t)
      mod[t] = 1.0 + spec.blink_modulation * std::sin(2.0 * M_PI * t / 25.0);
    Rng rng(100 + slot);
    BlinkSequence seq = generate_blinks(spec.hazard(slot), frames, mod, spec.blink_len,
                                        spec.blink_refractory, rng);
    double rate = static_cast<double>(blink::group_blinks(seq).size()) / frames;
    CHECK(std::fabs(rate - spec.blink_rate(slot)) / spec.blink_rate(slot) < 0.10);
  }
  // rates rise from positive to negative emotion
  CHECK(spec.blink_rate(0) < spec.blink_rate(1));
  CHECK(spec.blink_rate(1) < spec.blink_rate(2));
}

TEST_CASE("blink groups respect length and refractory structure") {
  CorpusSpec spec = small_spec();
  Corpus corpus = generate_corpus(spec);
  for (const auto& clip : corpus.train) {
    auto groups = blink::group_blinks(clip.blink);
    for (std::size_t i = 0; i < groups.size(); ++i) {
      CHECK(groups[i].length <= spec.blink_len);  // may be cut by the clip end
      if (i + 1 < groups.size())
        CHECK(groups[i + 1].start - (groups[i].start + groups[i].length) >=
              spec.blink_refractory);
    }
  }
}

TEST_CASE("clip file round trip is bit-for-bit") {
  CorpusSpec spec = small_spec();
  ConversationClip clip = generate_clip(spec, 5);
  std::string text = clip_text(clip);
  std::istringstream in(text);
  ConversationClip back = read_clip(in, 5);
  CHECK(clip_text(back) == text);
  CHECK(back.speaker.beta.data == clip.speaker.beta.data);
  CHECK(back.listener.pose.data == clip.listener.pose.data);
  CHECK(back.blink.phi == clip.blink.phi);
  CHECK(back.emotion.slot() == clip.emotion.slot());

  // header carries T, N, emotion and dims
  CHECK(text.rfind("#elp-clip v1 T=50 N=3 emotion=2 dims=6,2,5", 0) == 0);
}

TEST_CASE("malformed clip files fail with line numbers") {
  CorpusSpec spec = small_spec();
  ConversationClip clip = generate_clip(spec, 1);
  std::string text = clip_text(clip);

  {
    std::istringstream bad("#elp-clip v2 nonsense\n");
    CHECK_THROWS_WITH_AS(read_clip(bad, 0), doctest::Contains("malformed header"),
                         std::runtime_error);
  }
  {
    // truncate inside the first section
    std::istringstream bad(text.substr(0, text.find('\n', text.find("[speaker_beta]")) + 1));
    try {
      read_clip(bad, 0);
      FAIL("expected truncation error");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("expected 50 rows, found 0") != std::string::npos);
      CHECK(std::string(e.what()).find("line") != std::string::npos);
    }
  }
  {
    // widen one row
    std::string wide = text;
    std::size_t row_start = wide.find('\n', wide.find("[speaker_beta]")) + 1;
    wide.insert(wide.find('\n', row_start), " 0.5");
    std::istringstream bad(wide);
    CHECK_THROWS_WITH_AS(read_clip(bad, 0), doctest::Contains("more than"), std::runtime_error);
  }
  {
    // non-binary blink value
    std::string blinky = text;
    std::size_t pos = blinky.find("[blink]\n") + 8;
    blinky.replace(pos, 1, "2");
    std::istringstream bad(blinky);
    CHECK_THROWS_WITH_AS(read_clip(bad, 0), doctest::Contains("non-binary"), std::runtime_error);
  }
}

TEST_CASE("directory round trip preserves clips, splits and metric values") {
  CorpusSpec spec = small_spec();
  spec.clip_count = 30;
  Corpus corpus = generate_corpus(spec);
  auto dir = temp_dir("roundtrip");
  write_corpus(corpus, dir.string());
  Corpus back = load_corpus(dir.string());

  CHECK(back.spec.digest() == spec.digest());
  REQUIRE(back.train.size() == corpus.train.size());
  REQUIRE(back.val.size() == corpus.val.size());
  REQUIRE(back.test.size() == corpus.test.size());
  for (std::size_t i = 0; i < corpus.train.size(); ++i)
    CHECK(clip_text(back.train[i]) == clip_text(corpus.train[i]));

  // metric-level round trip on the test split
  metrics::WtlccOptions o;
  o.window = spec.frames;
  o.max_lag = spec.lag + 2;
  double before = 0, after = 0;
  for (std::size_t i = 0; i < corpus.test.size(); ++i) {
    before += metrics::wtlcc_mat(corpus.test[i].speaker.beta, corpus.test[i].listener.beta, o);
    after += metrics::wtlcc_mat(back.test[i].speaker.beta, back.test[i].listener.beta, o);
  }
  CHECK(before == after);

  std::filesystem::remove_all(dir);
}

TEST_CASE("invalid specs and corrupt manifests are rejected") {
  CorpusSpec bad = small_spec();
  bad.lag = bad.frames;
  CHECK_THROWS(generate_corpus(bad));
  bad = small_spec();
  bad.clip_count = 0;
  CHECK_THROWS(generate_corpus(bad));
  bad = small_spec();
  bad.emotions = 1;
  CHECK_THROWS(generate_corpus(bad));

  CHECK_THROWS(load_corpus("/nonexistent/elp_corpus"));

  // tampered manifest digest
  CorpusSpec spec = small_spec();
  spec.clip_count = 5;
  auto dir = temp_dir("tamper");
  write_corpus(generate_corpus(spec), dir.string());
  std::ifstream in(dir / "manifest.json");
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  std::size_t pos = text.find("\"noise\": 0.05");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 13, "\"noise\": 0.06");
  std::ofstream(dir / "manifest.json") << text;
  CHECK_THROWS_WITH_AS(load_corpus(dir.string()), doctest::Contains("digest"),
                       std::runtime_error);
  std::filesystem::remove_all(dir);
}
