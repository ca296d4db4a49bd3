#include "elp/latent.hpp"

#include <ostream>

namespace elp::latent {

using ad::Shape;
using ad::Tensor;

void CodewordGrid::validate() const {
  require(codes.size() == frames * heads, "CodewordGrid: size mismatch");
  for (auto c : codes)
    require(c >= 1 && c <= range, "CodewordGrid: code out of range [1," + std::to_string(range) + "]");
}

Tensor gumbel_softmax(ad::Tape& tape, const Tensor& logits, const GumbelOptions& opts, Rng& rng) {
  require(opts.temperature > 0.0, "gumbel_softmax: temperature must be positive");
  std::vector<double> noise;
  if (opts.frozen_noise) {
    require(opts.frozen_noise->size() == logits.numel(),
            "gumbel_softmax: frozen noise size mismatch");
    noise = *opts.frozen_noise;
  } else {
    noise.resize(logits.numel());
    for (auto& g : noise) g = rng.gumbel();
  }
  Tensor g = Tensor::from(logits.shape(), std::move(noise));
  Tensor soft = tape.softmax_last(tape.scale(tape.add(logits, g), 1.0 / opts.temperature));
  if (!opts.hard) return soft;
  return tape.straight_through_hard(soft);
}

Tensor hard_argmax(ad::Tape& tape, const Tensor& logits) {
  return tape.straight_through_hard(logits);
}

Tensor split_rearrange(ad::Tape& tape, const Tensor& base, const EmotionVector& e) {
  std::size_t slot = e.slot();  // validates one-hot
  return tape.place_block(base, slot, e.e.size());
}

CodewordGrid to_codewords(const Tensor& transformed) {
  const Shape& s = transformed.shape();
  require(s.size() == 3, "to_codewords: expected T x H x NV tensor");
  CodewordGrid grid;
  grid.frames = s[0];
  grid.heads = s[1];
  grid.range = s[2];
  grid.codes.resize(grid.frames * grid.heads);
  const std::size_t nv = grid.range;
  for (std::size_t f = 0; f < grid.codes.size(); ++f) {
    const double* x = transformed.values().data() + f * nv;
    std::size_t best = 0;
    bool tie = false;
    for (std::size_t i = 1; i < nv; ++i) {
      if (x[i] > x[best]) {
        best = i;
        tie = false;
      } else if (x[i] == x[best]) {
        tie = true;
      }
    }
    if (tie) ++grid.tie_count;
    grid.codes[f] = static_cast<std::uint32_t>(best + 1);
  }
  return grid;
}

Tensor embed_codewords(const CodewordGrid& grid) {
  grid.validate();
  std::vector<double> out(grid.frames * grid.heads * grid.range, 0.0);
  for (std::size_t f = 0; f < grid.codes.size(); ++f)
    out[f * grid.range + grid.codes[f] - 1] = 1.0;
  return Tensor::from({grid.frames, grid.heads, grid.range}, std::move(out));
}

void write_codeword_csv(const CodewordGrid& grid, std::ostream& out) {
  out << "frame";
  for (std::size_t h = 0; h < grid.heads; ++h) out << ",head_" << h;
  out << "\n";
  for (std::size_t t = 0; t < grid.frames; ++t) {
    out << t;
    for (std::size_t h = 0; h < grid.heads; ++h) out << "," << grid.at(t, h);
    out << "\n";
  }
}

}  // namespace elp::latent
