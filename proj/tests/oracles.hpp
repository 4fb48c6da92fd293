#pragma once

// Test-side reference models, written from the arithmetic rules directly and
// sharing no code with the library beyond the value types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "elsa/fxp.hpp"
#include "elsa/layer.hpp"

namespace oracle {

struct LiteralProduct {
  std::int32_t count = 0;  // unclamped up-down counter
  std::int64_t cycles = 0;
};

// Walks the multiplicand stream cycle by cycle: at cycle c the selector picks
// i = (number of trailing zeros of c) + 1 and emits bit n-i of X's two's
// complement pattern, inverted for the sign bit; the bit is XORed with W's
// sign and moves the counter up on 1, down on 0, for |N(W)| cycles.
inline LiteralProduct literal_am(std::int32_t x, std::int32_t w, int n) {
  const std::uint32_t pattern =
      static_cast<std::uint32_t>(x + (std::int32_t{1} << n)) % (1U << n);
  const bool w_negative = w < 0;
  const std::int32_t length = w < 0 ? -w : w;
  LiteralProduct p;
  for (std::int32_t c = 1; c <= length; ++c) {
    int i = 1;
    std::int32_t v = c;
    while (v % 2 == 0) {
      v /= 2;
      ++i;
    }
    bool bit = ((pattern >> (n - i)) & 1U) != 0;
    if (i == 1) bit = !bit;
    if (bit != w_negative) {
      ++p.count;
    } else {
      --p.count;
    }
    ++p.cycles;
  }
  return p;
}

inline std::int32_t clamp_fraction(std::int64_t v, int n) {
  const std::int64_t hi = (std::int64_t{1} << (n - 1)) - 1;
  return static_cast<std::int32_t>(std::clamp(v, -hi - 1, hi));
}

inline std::int32_t clamp_wide(std::int64_t v, int n, int guard) {
  const std::int64_t hi = (std::int64_t{1} << (n + guard - 1)) - 1;
  return static_cast<std::int32_t>(std::clamp(v, -hi - 1, hi));
}

inline std::int32_t literal_product(std::int32_t x, std::int32_t w, int n) {
  return clamp_fraction(literal_am(x, w, n).count, n);
}

inline std::int32_t hard_sigmoid(std::int64_t v, int n) {
  const std::int64_t one = std::int64_t{1} << (n - 1);
  if (v > 2 * one) return static_cast<std::int32_t>(one - 1);
  if (v <= -2 * one) return 0;
  // floor(v / 4) + 1/2
  const std::int64_t q = v >= 0 ? v / 4 : -((-v + 3) / 4);
  return clamp_fraction(q + one / 2, n);
}

inline std::int32_t hard_tanh(std::int64_t v, int n) {
  const std::int64_t one = std::int64_t{1} << (n - 1);
  if (v > one) return static_cast<std::int32_t>(one - 1);
  if (v <= -one) return static_cast<std::int32_t>(-one);
  return clamp_fraction(v, n);
}

struct IntState {
  std::vector<std::int32_t> h, c;
};

// One LSTM step on numerators with the literal multiplier: MVM columns in
// index order with saturating accumulation, ternary add, hard activations,
// C = i*C^ then + f*C_prev (gate drives the stream), h = o * tanh(C).
inline IntState approx_lstm_step(const elsa::LayerParams& p,
                                 const std::vector<std::int32_t>& x,
                                 const IntState& s) {
  const int n = p.bits;
  const int g = p.guard;
  const std::size_t hidden = p.hidden_dim;
  auto mvm_row = [&](const elsa::Matrix<elsa::Fraction>& w,
                     const std::vector<std::int32_t>& v, std::size_t r) {
    std::int32_t acc = 0;
    for (std::size_t k = 0; k < v.size(); ++k)
      acc = clamp_wide(std::int64_t{acc} + literal_product(w(r, k).numerator(), v[k], n),
                       n, g);
    return acc;
  };
  auto pre = [&](const elsa::GateWeights<elsa::Fraction, elsa::WideValue>& gw,
                 std::size_t r) {
    return clamp_wide(std::int64_t{mvm_row(gw.wx, x, r)} + mvm_row(gw.wh, s.h, r) +
                          gw.bias[r].numerator(),
                      n, g);
  };
  IntState out{std::vector<std::int32_t>(hidden), std::vector<std::int32_t>(hidden)};
  for (std::size_t r = 0; r < hidden; ++r) {
    const std::int32_t i = hard_sigmoid(pre(p.input, r), n);
    const std::int32_t f = hard_sigmoid(pre(p.forget, r), n);
    const std::int32_t o = hard_sigmoid(pre(p.output, r), n);
    const std::int32_t cc = hard_tanh(pre(p.candidate, r), n);
    std::int32_t acc = clamp_wide(literal_product(cc, i, n), n, g);
    acc = clamp_wide(std::int64_t{acc} + literal_product(s.c[r], f, n), n, g);
    out.c[r] = clamp_fraction(acc, n);
    out.h[r] = literal_product(hard_tanh(out.c[r], n), o, n);
  }
  return out;
}

// Textbook LSTM step in double precision, gates stacked as one 4N x (M+N)
// matrix over the concatenated [x; h] vector.
struct TextbookStep {
  std::vector<double> h, c, i, f, o, g;
};

inline TextbookStep textbook_lstm_step(const elsa::FloatLayer& l,
                                       const std::vector<double>& x,
                                       const std::vector<double>& h,
                                       const std::vector<double>& c) {
  const std::size_t n = l.hidden_dim;
  const std::size_t m = l.input_dim;
  std::vector<double> z(m + n);
  std::copy(x.begin(), x.end(), z.begin());
  std::copy(h.begin(), h.end(), z.begin() + static_cast<std::ptrdiff_t>(m));
  const elsa::GateWeights<double, double>* gates[] = {&l.input, &l.forget, &l.output,
                                                      &l.candidate};
  std::vector<double> a(4 * n);
  for (std::size_t q = 0; q < 4; ++q) {
    for (std::size_t r = 0; r < n; ++r) {
      double s = 0.0;
      for (std::size_t k = 0; k < m + n; ++k)
        s += (k < m ? gates[q]->wx(r, k) : gates[q]->wh(r, k - m)) * z[k];
      a[q * n + r] = s + gates[q]->bias[r];
    }
  }
  TextbookStep out;
  for (std::size_t r = 0; r < n; ++r) {
    out.i.push_back(1.0 / (1.0 + std::exp(-a[r])));
    out.f.push_back(1.0 / (1.0 + std::exp(-a[n + r])));
    out.o.push_back(1.0 / (1.0 + std::exp(-a[2 * n + r])));
    out.g.push_back(std::tanh(a[3 * n + r]));
    out.c.push_back(out.f[r] * c[r] + out.i[r] * out.g[r]);
    out.h.push_back(out.o[r] * std::tanh(out.c[r]));
  }
  return out;
}

}  // namespace oracle
