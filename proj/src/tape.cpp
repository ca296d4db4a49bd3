#include "elp/tape.hpp"

#include <algorithm>
#include <cmath>

#include "elp/kernels.hpp"

namespace elp::ad {

namespace {

double* gbuf(TensorData* t) {
  if (t->grad.size() != t->values.size()) t->grad.assign(t->values.size(), 0.0);
  return t->grad.data();
}

enum class Bcast { Same, Scalar, Suffix };

Bcast bcast_mode(const char* op, const Shape& a, const Shape& b) {
  if (a == b) return Bcast::Same;
  if (shape_numel(b) == 1) return Bcast::Scalar;
  if (b.size() <= a.size() &&
      std::equal(b.rbegin(), b.rend(), a.rbegin()))
    return Bcast::Suffix;
  throw std::runtime_error(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                           shape_str(b));
}

}  // namespace

namespace {
bool any_requires(const std::vector<Tensor>& inputs) {
  for (const auto& t : inputs)
    if (t.requires_grad()) return true;
  return false;
}
}  // namespace

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  Bcast mode = bcast_mode("add", a.shape(), b.shape());
  std::vector<double> out(a.numel());
  const std::size_t bn = b.numel();
  switch (mode) {
    case Bcast::Same:
      kernels::add(a.values().data(), b.values().data(), out.data(), out.size());
      break;
    case Bcast::Scalar: {
      const double bv = b.values()[0];
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + bv;
      break;
    }
    case Bcast::Suffix:
      for (std::size_t o = 0; o < a.numel() / bn; ++o)
        kernels::add(a.values().data() + o * bn, b.values().data(), out.data() + o * bn, bn);
      break;
  }
  return make_node(a.shape(), std::move(out), {a, b},
                   [mode, bn](TensorData* y, const std::vector<std::shared_ptr<TensorData>>& in) {
                     const double* g = y->grad.data();
                     const std::size_t n = y->values.size();
                     if (in[0]->requires_grad) kernels::axpy(1.0, g, gbuf(in[0].get()), n);
                     if (in[1]->requires_grad) {
                       double* db = gbuf(in[1].get());
                       if (mode == Bcast::Same) kernels::axpy(1.0, g, db, n);
                       else if (mode == Bcast::Scalar) db[0] += kernels::sum(g, n);
                       else
                         for (std::size_t o = 0; o < n / bn; ++o)
                           kernels::axpy(1.0, g + o * bn, db, bn);
                     }
                   });
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
  Bcast mode = bcast_mode("sub", a.shape(), b.shape());
  std::vector<double> out(a.numel());
  const std::size_t bn = b.numel();
  switch (mode) {
    case Bcast::Same:
      kernels::sub(a.values().data(), b.values().data(), out.data(), out.size());
      break;
    case Bcast::Scalar: {
      const double bv = b.values()[0];
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - bv;
      break;
    }
    case Bcast::Suffix:
      for (std::size_t o = 0; o < a.numel() / bn; ++o)
        kernels::sub(a.values().data() + o * bn, b.values().data(), out.data() + o * bn, bn);
      break;
  }
  return make_node(a.shape(), std::move(out), {a, b},
                   [mode, bn](TensorData* y, const std::vector<std::shared_ptr<TensorData>>& in) {
                     const double* g = y->grad.data();
                     const std::size_t n = y->values.size();
                     if (in[0]->requires_grad) kernels::axpy(1.0, g, gbuf(in[0].get()), n);
                     if (in[1]->requires_grad) {
                       double* db = gbuf(in[1].get());
                       if (mode == Bcast::Same) kernels::axpy(-1.0, g, db, n);
                       else if (mode == Bcast::Scalar) db[0] -= kernels::sum(g, n);
                       else
                         for (std::size_t o = 0; o < n / bn; ++o)
                           kernels::axpy(-1.0, g + o * bn, db, bn);
                     }
                   });
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  Bcast mode = bcast_mode("mul", a.shape(), b.shape());
  std::vector<double> out(a.numel());
  const std::size_t bn = b.numel();
  switch (mode) {
    case Bcast::Same:
      kernels::mul(a.values().data(), b.values().data(), out.data(), out.size());
      break;
    case Bcast::Scalar:
      kernels::scale(a.values().data(), b.values()[0], out.data(), out.size());
      break;
    case Bcast::Suffix:
      for (std::size_t o = 0; o < a.numel() / bn; ++o)
        kernels::mul(a.values().data() + o * bn, b.values().data(), out.data() + o * bn, bn);
      break;
  }
  return make_node(a.shape(), std::move(out), {a, b},
                   [mode, bn](TensorData* y, const std::vector<std::shared_ptr<TensorData>>& in) {
                     const double* g = y->grad.data();
                     const std::size_t n = y->values.size();
                     const double* av = in[0]->values.data();
                     const double* bv = in[1]->values.data();
                     if (in[0]->requires_grad) {
                       double* da = gbuf(in[0].get());
                       if (mode == Bcast::Same)
                         for (std::size_t i = 0; i < n; ++i) da[i] += g[i] * bv[i];
                       else if (mode == Bcast::Scalar)
                         kernels::axpy(bv[0], g, da, n);
                       else
                         for (std::size_t o = 0; o < n / bn; ++o)
                           for (std::size_t j = 0; j < bn; ++j)
                             da[o * bn + j] += g[o * bn + j] * bv[j];
                     }
                     if (in[1]->requires_grad) {
                       double* db = gbuf(in[1].get());
                       if (mode == Bcast::Same)
                         for (std::size_t i = 0; i < n; ++i) db[i] += g[i] * av[i];
                       else if (mode == Bcast::Scalar)
                         db[0] += kernels::dot(g, av, n);
                       else
                         for (std::size_t o = 0; o < n / bn; ++o)
                           for (std::size_t j = 0; j < bn; ++j)
                             db[j] += g[o * bn + j] * av[o * bn + j];
                     }
                   });
}

Tensor Tape::scale(const Tensor& a, double c) {
  std::vector<double> out(a.numel());
  kernels::scale(a.values().data(), c, out.data(), out.size());
  return make_node(a.shape(), std::move(out), {a},
                   [c](TensorData* y, const std::vector<std::shared_ptr<TensorData>>& in) {
                     if (in[0]->requires_grad)
                       kernels::axpy(c, y->grad.data(), gbuf(in[0].get()), y->values.size());
                   });
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0])
    throw std::runtime_error("matmul: incompatible shapes " + shape_str(a.shape()) + " and " +
                             shape_str(b.shape()));
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  std::vector<double> out(m * n, 0.0);
  kernels::gemm(a.values().data(), b.values().data(), out.data(), m, k, n);
  return make_node({m, n}, std::move(out), {a, b},
                   [m, k, n](TensorData* y, const std::vector<std::shared_ptr<TensorData>>& in) {
                     const double* g = y->grad.data();
                     if (in[0]->requires_grad)
                       kernels::gemm_bt(g, in[1]->values.data(), gbuf(in[0].get()), m, k, n);
                     if (in[1]->requires_grad)
                       kernels::gemm_at(in[0]->values.data(), g, gbuf(in[1].get()), m, k, n);
                   });
}

Tensor Tape::concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw std::runtime_error("concat: no inputs");
  const Shape& s0 = parts[0].shape();
  if (axis >= s0.size()) throw std::runtime_error("concat: axis out of range");
  Shape out_shape = s0;
  std::size_t total_axis = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != s0.size()) throw std::runtime_error("concat: rank mismatch");
    for (std::size_t d = 0; d < s.size(); ++d)
      if (d != axis && s[d] != s0[d])
        throw std::runtime_error("concat: shape mismatch " + shape_str(s) + " vs " + shape_str(s0));
    total_axis += s[axis];
  }
  out_shape[axis] = total_axis;
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= s0[d];
  for (std::size_t d = axis + 1; d < s0.size(); ++d) inner *= s0[d];

  std::vector<double> out(shape_numel(out_shape));
  std::vector<std::size_t> chunk(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) chunk[i] = parts[i].shape()[axis] * inner;
  const std::size_t out_stride = total_axis * inner;
  for (std::size_t o = 0; o < outer; ++o) {
    std::size_t off = o * out_stride;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const double* src = parts[i].values().data() + o * chunk[i];
      std::copy(src, src + chunk[i], out.data() + off);
      off += chunk[i];
    }
  }
  return make_node(std::move(out_shape), std::move(out), parts,
                   [outer, out_stride, chunk](TensorData* y,
                                              const std::vector<std::shared_ptr<TensorData>>& in) {
                     const double* g = y->grad.data();
                     for (std::size_t o = 0; o < outer; ++o) {
                       std::size_t off = o * out_stride;
                       for (std::size_t i = 0; i < in.size(); ++i) {
                         if (in[i]->requires_grad)
                           kernels::axpy(1.0, g + off, gbuf(in[i].get()) + o * chunk[i], chunk[i]);
                         off += chunk[i];
                       }
                     }
                   });
}

Tensor Tape::slice_rows(const Tensor& a, std::size_t r0, std::size_t r1) {
  const Shape& s = a.shape();
  if (s.empty() || r0 >= r1 || r1 > s[0])
    throw std::runtime_error("slice_rows: bad range on shape " + shape_str(s));
  const std::size_t rowsz = a.numel() / s[0];
  Shape out_shape = s;
  out_shape[0] = r1 - r0;
  std::vector<double> out(a.values().begin() + r0 * rowsz, a.values().begin() + r1 * rowsz);
  return make_node(std::move(out_shape), std::move(out), {a},
                   [r0, rowsz](TensorData* y, const std::vector<std::shared_ptr<TensorData>>& in) {
                     if (in[0]->requires_grad)
                       kernels::axpy(1.0, y->grad.data(), gbuf(in[0].get()) + r0 * rowsz,
                                     y->values.size());
                   });
}

Tensor Tape::shift_rows(const Tensor& a, long offset) {
  const Shape& s = a.shape();
  if (s.empty()) throw std::runtime_error("shift_rows: rank 0");
  const long rows = static_cast<long>(s[0]);
  const std::size_t rowsz = a.numel() / s[0];
  std::vector<double> out(a.numel(), 0.0);
  for (long t = 0; t < rows; ++t) {
    long src = t - offset;
    if (src >= 0 && src < rows)
      std::copy(a.values().data() + src * rowsz, a.values().data() + (src + 1) * rowsz,
                out.data() + t * rowsz);
  }
  return make_node(s, std::move(out), {a},
                   [offset, rows, rowsz](TensorData* y,
                                         const std::vector<std::shared_ptr<TensorData>>& in) {
                     if (!in[0]->requires_grad) return;
                     double* da = gbuf(in[0].get());
                     const double* g = y->grad.data();
                     for (long t = 0; t < rows; ++t) {
                       long src = t - offset;
                       if (src >= 0 && src < rows)
                         kernels::axpy(1.0, g + t * rowsz, da + src * rowsz, rowsz);
                     }
                   });
}

Tensor Tape::reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel())
    throw std::runtime_error("reshape: element count mismatch " + shape_str(a.shape()) + " -> " +
                             shape_str(shape));
  std::vector<double> out = a.values();
  return make_node(std::move(shape), std::move(out), {a},
                   [](TensorData* y, const std::vector<std::shared_ptr<TensorData>>& in) {
                     if (in[0]->requires_grad)
                       kernels::axpy(1.0, y->grad.data(), gbuf(in[0].get()), y->values.size());
                   });
}

Tensor Tape::relu(const Tensor& a) {
  std::vector<double> out(a.numel());
  kernels::relu(a.values().data(), out.data(), out.size());
  return make_node(a.shape(), std::move(out), {a},
                   [](TensorData* y, const std::vector<std::shared_ptr<TensorData>>& in) {
                     if (!in[0]->requires_grad) return;
                     double* da = gbuf(in[0].get());
                     const double* g = y->grad.data();
                     const double* x = in[0]->values.data();
                     for (std::size_t i = 0; i < y->values.size(); ++i)
                       if (x[i] > 0.0) da[i] += g[i];
                   });
}

Tensor Tape::tanh_(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(a.values()[i]);
  return make_node(a.shape(), std::move(out), {a},
                   [](TensorData* y, const std::vector<std::shared_ptr<TensorData>>& in) {
                     if (!in[0]->requires_grad) return;
                     double* da = gbuf(in[0].get());
                     const double* g = y->grad.data();
                     const double* yv = y->values.data();
                     for (std::size_t i = 0; i < y->values.size(); ++i)
                       da[i] += g[i] * (1.0 - yv[i] * yv[i]);
                   });
}

Tensor Tape::sigmoid(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double x = a.values()[i];
    out[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  return make_node(a.shape(), std::move(out), {a},
                   [](TensorData* y, const std::vector<std::shared_ptr<TensorData>>& in) {
                     if (!in[0]->requires_grad) return;
                     double* da = gbuf(in[0].get());
                     const double* g = y->grad.data();
                     const double* yv = y->values.data();
                     for (std::size_t i = 0; i < y->values.size(); ++i)
                       da[i] += g[i] * yv[i] * (1.0 - yv[i]);
                   });
}

Tensor Tape::log_(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (a.values()[i] <= 0.0)
      throw std::runtime_error("log: non-positive input " + std::to_string(a.values()[i]));
    out[i] = std::log(a.values()[i]);
  }
  return make_node(a.shape(), std::move(out), {a},
                   [](TensorData* y, const std::vector<std::shared_ptr<TensorData>>& in) {
                     if (!in[0]->requires_grad) return;
                     double* da = gbuf(in[0].get());
                     const double* g = y->grad.data();
                     const double* x = in[0]->values.data();
                     for (std::size_t i = 0; i < y->values.size(); ++i) da[i] += g[i] / x[i];
                   });
}

Tensor Tape::exp_(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(a.values()[i]);
  return make_node(a.shape(), std::move(out), {a},
                   [](TensorData* y, const std::vector<std::shared_ptr<TensorData>>& in) {
                     if (!in[0]->requires_grad) return;
                     double* da = gbuf(in[0].get());
                     const double* g = y->grad.data();
                     const double* yv = y->values.data();
                     for (std::size_t i = 0; i < y->values.size(); ++i) da[i] += g[i] * yv[i];
                   });
}

Tensor Tape::sqrt_(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (a.values()[i] < 0.0)
      throw std::runtime_error("sqrt: negative input " + std::to_string(a.values()[i]));
    out[i] = std::sqrt(a.values()[i]);
  }
  return make_node(a.shape(), std::move(out), {a},
                   [](TensorData* y, const std::vector<std::shared_ptr<TensorData>>& in) {
                     if (!in[0]->requires_grad) return;
                     double* da = gbuf(in[0].get());
                     const double* g = y->grad.data();
                     const double* yv = y->values.data();
                     // derivative denominator clamped so sqrt(0) stays finite
                     for (std::size_t i = 0; i < y->values.size(); ++i)
                       da[i] += g[i] * 0.5 / std::max(yv[i], 1e-12);
                   });
}

Tensor Tape::abs_(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::fabs(a.values()[i]);
  return make_node(a.shape(), std::move(out), {a},
                   [](TensorData* y, const std::vector<std::shared_ptr<TensorData>>& in) {
                     if (!in[0]->requires_grad) return;
                     double* da = gbuf(in[0].get());
                     const double* g = y->grad.data();
                     const double* x = in[0]->values.data();
                     for (std::size_t i = 0; i < y->values.size(); ++i)
                       da[i] += g[i] * (x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0));
                   });
}

Tensor Tape::clamp(const Tensor& a, double lo, double hi) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(hi, std::max(lo, a.values()[i]));
  return make_node(a.shape(), std::move(out), {a},
                   [lo, hi](TensorData* y, const std::vector<std::shared_ptr<TensorData>>& in) {
                     if (!in[0]->requires_grad) return;
                     double* da = gbuf(in[0].get());
                     const double* g = y->grad.data();
                     const double* x = in[0]->values.data();
                     for (std::size_t i = 0; i < y->values.size(); ++i)
                       if (x[i] > lo && x[i] < hi) da[i] += g[i];
                   });
}

Tensor Tape::softmax_last(const Tensor& a) {
  const Shape& s = a.shape();
  if (s.empty()) throw std::runtime_error("softmax: rank 0");
  const std::size_t v = s.back();
  const std::size_t fibers = a.numel() / v;
  std::vector<double> out(a.numel());
  for (std::size_t f = 0; f < fibers; ++f) {
    const double* x = a.values().data() + f * v;
    double* y = out.data() + f * v;
    double mx = x[0];
    for (std::size_t i = 1; i < v; ++i) mx = std::max(mx, x[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < v; ++i) {
      y[i] = std::exp(x[i] - mx);
      z += y[i];
    }
    for (std::size_t i = 0; i < v; ++i) y[i] /= z;
  }
  return make_node(s, std::move(out), {a},
                   [v, fibers](TensorData* y, const std::vector<std::shared_ptr<TensorData>>& in) {
                     if (!in[0]->requires_grad) return;
                     double* da = gbuf(in[0].get());
                     for (std::size_t f = 0; f < fibers; ++f) {
                       const double* yv = y->values.data() + f * v;
                       const double* g = y->grad.data() + f * v;
                       double dotgy = kernels::dot(g, yv, v);
                       for (std::size_t i = 0; i < v; ++i) da[f * v + i] += yv[i] * (g[i] - dotgy);
                     }
                   });
}

Tensor Tape::sum_all(const Tensor& a) {
  std::vector<double> out{kernels::sum(a.values().data(), a.numel())};
  return make_node({1}, std::move(out), {a},
                   [](TensorData* y, const std::vector<std::shared_ptr<TensorData>>& in) {
                     if (!in[0]->requires_grad) return;
                     double* da = gbuf(in[0].get());
                     const double g = y->grad[0];
                     for (std::size_t i = 0; i < in[0]->values.size(); ++i) da[i] += g;
                   });
}

Tensor Tape::mean_all(const Tensor& a) {
  const double inv = 1.0 / static_cast<double>(a.numel());
  std::vector<double> out{kernels::sum(a.values().data(), a.numel()) * inv};
  return make_node({1}, std::move(out), {a},
                   [inv](TensorData* y, const std::vector<std::shared_ptr<TensorData>>& in) {
                     if (!in[0]->requires_grad) return;
                     double* da = gbuf(in[0].get());
                     const double g = y->grad[0] * inv;
                     for (std::size_t i = 0; i < in[0]->values.size(); ++i) da[i] += g;
                   });
}

Tensor Tape::mean_axis0(const Tensor& a) {
  const Shape& s = a.shape();
  if (s.size() < 2) throw std::runtime_error("mean_axis0: rank < 2");
  const std::size_t t = s[0], rowsz = a.numel() / t;
  Shape out_shape(s.begin() + 1, s.end());
  std::vector<double> out(rowsz, 0.0);
  for (std::size_t r = 0; r < t; ++r)
    kernels::axpy(1.0, a.values().data() + r * rowsz, out.data(), rowsz);
  const double inv = 1.0 / static_cast<double>(t);
  for (double& x : out) x *= inv;
  return make_node(std::move(out_shape), std::move(out), {a},
                   [t, rowsz, inv](TensorData* y,
                                   const std::vector<std::shared_ptr<TensorData>>& in) {
                     if (!in[0]->requires_grad) return;
                     double* da = gbuf(in[0].get());
                     for (std::size_t r = 0; r < t; ++r)
                       kernels::axpy(inv, y->grad.data(), da + r * rowsz, rowsz);
                   });
}

Tensor Tape::sum_last(const Tensor& a) {
  const Shape& s = a.shape();
  if (s.empty()) throw std::runtime_error("sum_last: rank 0");
  const std::size_t v = s.back();
  const std::size_t fibers = a.numel() / v;
  Shape out_shape(s.begin(), s.end() - 1);
  if (out_shape.empty()) out_shape = {1};
  std::vector<double> out(fibers);
  for (std::size_t f = 0; f < fibers; ++f) out[f] = kernels::sum(a.values().data() + f * v, v);
  return make_node(std::move(out_shape), std::move(out), {a},
                   [v, fibers](TensorData* y, const std::vector<std::shared_ptr<TensorData>>& in) {
                     if (!in[0]->requires_grad) return;
                     double* da = gbuf(in[0].get());
                     for (std::size_t f = 0; f < fibers; ++f) {
                       const double g = y->grad[f];
                       for (std::size_t i = 0; i < v; ++i) da[f * v + i] += g;
                     }
                   });
}

Tensor Tape::straight_through_hard(const Tensor& a) {
  const Shape& s = a.shape();
  if (s.empty()) throw std::runtime_error("straight_through_hard: rank 0");
  const std::size_t v = s.back();
  const std::size_t fibers = a.numel() / v;
  std::vector<double> out(a.numel(), 0.0);
  for (std::size_t f = 0; f < fibers; ++f) {
    const double* x = a.values().data() + f * v;
    std::size_t best = 0;
    for (std::size_t i = 1; i < v; ++i)
      if (x[i] > x[best]) best = i;
    out[f * v + best] = 1.0;
  }
  return make_node(s, std::move(out), {a},
                   [](TensorData* y, const std::vector<std::shared_ptr<TensorData>>& in) {
                     if (in[0]->requires_grad)
                       kernels::axpy(1.0, y->grad.data(), gbuf(in[0].get()), y->values.size());
                   });
}

Tensor Tape::place_block(const Tensor& a, std::size_t block, std::size_t n_blocks) {
  const Shape& s = a.shape();
  if (s.empty() || block >= n_blocks) throw std::runtime_error("place_block: bad block index");
  const std::size_t v = s.back();
  const std::size_t fibers = a.numel() / v;
  Shape out_shape = s;
  out_shape.back() = v * n_blocks;
  std::vector<double> out(a.numel() * n_blocks, 0.0);
  for (std::size_t f = 0; f < fibers; ++f)
    std::copy(a.values().data() + f * v, a.values().data() + (f + 1) * v,
              out.data() + f * v * n_blocks + block * v);
  return make_node(std::move(out_shape), std::move(out), {a},
                   [v, fibers, block, n_blocks](
                       TensorData* y, const std::vector<std::shared_ptr<TensorData>>& in) {
                     if (!in[0]->requires_grad) return;
                     double* da = gbuf(in[0].get());
                     for (std::size_t f = 0; f < fibers; ++f)
                       kernels::axpy(1.0, y->grad.data() + f * v * n_blocks + block * v,
                                     da + f * v, v);
                   });
}

Tensor Tape::make_node(Shape shape, std::vector<double> values,
                       const std::vector<Tensor>& inputs,
                       std::function<void(TensorData*, const std::vector<std::shared_ptr<TensorData>>&)> bw) {
  Tensor out = Tensor::from(std::move(shape), std::move(values));
  if (!any_requires(inputs)) return out;
  out.data()->requires_grad = true;
  out.data()->node = static_cast<int>(nodes_.size());
  out.data()->owner = this;
  Node n;
  n.output = out.ptr();
  std::vector<std::shared_ptr<TensorData>> ins;
  ins.reserve(inputs.size());
  for (const auto& t : inputs) ins.push_back(t.ptr());
  n.backward = [bw = std::move(bw), outp = out.ptr().get(), ins = std::move(ins)]() {
    bw(outp, ins);
  };
  nodes_.push_back(std::move(n));
  return out;
}

void Tape::backward(const Tensor& root) {
  if (root.numel() != 1) throw std::runtime_error("backward: root is not a scalar");
  TensorData* rd = root.data();
  if (rd->owner != this || rd->node < 0)
    throw std::runtime_error("backward: root was not produced by this tape");
  const int rn = rd->node;
  // interior grads are fresh per backward; leaves accumulate across calls
  for (int i = 0; i <= rn; ++i)
    nodes_[i].output->grad.assign(nodes_[i].output->values.size(), 0.0);
  rd->grad[0] = 1.0;
  for (int i = rn; i >= 0; --i) nodes_[i].backward();
}

Tensor variance_axis0(Tape& tape, const Tensor& x) {
  Tensor m = tape.mean_axis0(x);
  Tensor d = tape.sub(x, m);
  return tape.mean_axis0(tape.mul(d, d));
}

}  // namespace elp::ad
