#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "elp/motion.hpp"
#include "elp/rng.hpp"

namespace elp::corpus {

// Generator parameters for the synthetic conversation corpus.  Each emotion
// gets a distinct speaker amplitude/frequency, listener response gain and
// blink hazard, so labels are recoverable from the signals themselves.
struct CorpusSpec {
  std::size_t clip_count = 300;
  std::size_t frames = 50;  // T
  double fps = 25.0;
  std::size_t emotions = 3;  // N, ordered positive .. negative
  std::size_t beta_dim = 100;
  std::size_t pose_dim = 6;
  std::size_t audio_dim = 29;
  double noise = 0.05;    // additive Gaussian noise std
  std::size_t lag = 4;    // listener response delay in frames
  std::uint64_t seed = 7;

  // emotion-pattern parameters
  double amplitude_base = 0.4, amplitude_step = 0.4;  // speaker motion scale
  double freq_base = 1.0, freq_step = 0.6;            // Hz
  double gain_base = 0.6, gain_step = 0.3;            // listener response gain
  double hazard_base = 0.02, hazard_step = 0.02;      // blink rate per frame
  std::size_t blink_len = 2;
  std::size_t blink_refractory = 5;
  double blink_modulation = 0.75;  // hazard swing driven by speaker energy

  double amplitude(std::size_t slot) const { return amplitude_base + amplitude_step * slot; }
  double frequency(std::size_t slot) const { return freq_base + freq_step * slot; }
  double gain(std::size_t slot) const { return gain_base + gain_step * slot; }
  double hazard(std::size_t slot) const { return hazard_base + hazard_step * slot; }
  // groups per frame of the renewal process, modulation averaged out
  double blink_rate(std::size_t slot) const {
    return 1.0 / (1.0 / hazard(slot) + blink_len + blink_refractory - 1.0);
  }

  void validate() const;
  std::string digest() const;
};

struct ConversationClip {
  std::uint64_t id = 0;
  MotionSequence speaker;
  AudioFeatureSequence audio;
  MotionSequence listener;
  BlinkSequence blink;
  EmotionVector emotion;
  void validate() const;
};

enum class Split { Train, Val, Test };

struct Corpus {
  CorpusSpec spec;
  std::vector<ConversationClip> train, val, test;
};

// renewal blink process: per-frame hazard (optionally modulated per frame),
// blink groups of `blink_len` frames followed by a refractory period
BlinkSequence generate_blinks(double hazard, std::size_t frames,
                              const std::vector<double>& modulation, std::size_t blink_len,
                              std::size_t refractory, Rng& rng);

ConversationClip generate_clip(const CorpusSpec& spec, std::uint64_t id);

// 70/10/20 split by clip id hash, independent of the seed
Split split_of(std::uint64_t id);

Corpus generate_corpus(const CorpusSpec& spec);

void write_clip(const ConversationClip& clip, std::ostream& out);
ConversationClip read_clip(std::istream& in, std::uint64_t id);

// directory layout: <dir>/{train,val,test}/clip_<id>.txt + <dir>/manifest.json
void write_corpus(const Corpus& corpus, const std::string& dir);
Corpus load_corpus(const std::string& dir);

}  // namespace elp::corpus
