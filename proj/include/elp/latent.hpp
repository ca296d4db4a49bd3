#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "elp/motion.hpp"
#include "elp/rng.hpp"
#include "elp/tape.hpp"

namespace elp::latent {

struct LatentConfig {
  std::size_t heads = 128;      // H
  std::size_t categories = 64;  // V
  std::size_t emotions = 3;     // N
  std::size_t range() const { return categories * emotions; }
};

// T x H integer codewords, 1-based, each inside its emotion's block.
struct CodewordGrid {
  std::size_t frames = 0;
  std::size_t heads = 0;
  std::size_t range = 0;  // N*V
  std::vector<std::uint32_t> codes;
  std::size_t tie_count = 0;  // argmax ties resolved to the lowest index

  std::uint32_t at(std::size_t t, std::size_t h) const { return codes[t * heads + h]; }
  void validate() const;
};

struct GumbelOptions {
  double temperature = 1.0;
  bool hard = true;
  // test hook: fixed per-element Gumbel noise (size = logits.numel()); when
  // set the rng is not consulted
  const std::vector<double>* frozen_noise = nullptr;
};

// Eq.-style categorical reparameterization over the last axis of T x H x V
// logits. Soft fibers sum to 1; hard mode emits exact one-hots with
// straight-through gradients.
ad::Tensor gumbel_softmax(ad::Tape& tape, const ad::Tensor& logits, const GumbelOptions& opts,
                          Rng& rng);

// deterministic inference path: argmax one-hot, no noise
ad::Tensor hard_argmax(ad::Tape& tape, const ad::Tensor& logits);

// gates the Base Space with a one-hot emotion and concatenates the per-emotion
// blocks, expanding the last axis V -> N*V
ad::Tensor split_rearrange(ad::Tape& tape, const ad::Tensor& base, const EmotionVector& e);

CodewordGrid to_codewords(const ad::Tensor& transformed);

// exact one-hot expansion; inverse of to_codewords on hard fibers
ad::Tensor embed_codewords(const CodewordGrid& grid);

void write_codeword_csv(const CodewordGrid& grid, std::ostream& out);

}  // namespace elp::latent
