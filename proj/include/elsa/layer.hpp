#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "elsa/error.hpp"
#include "elsa/fxp.hpp"
#include "elsa/matrix.hpp"

namespace elsa {

// Weights feeding one gate pre-activation: W_x * x_t + W_h * h_{t-1} + b.
template <class W, class B>
struct GateWeights {
  Matrix<W> wx;  // N x M
  Matrix<W> wh;  // N x N
  std::vector<B> bias;

  friend bool operator==(const GateWeights&, const GateWeights&) = default;
};

/// Quantized parameters of one LSTM layer, as loaded into the accelerator.
struct LayerParams {
  std::size_t input_dim = 0;   // M
  std::size_t hidden_dim = 0;  // N
  int bits = 8;
  int guard = kDefaultGuardBits;
  GateWeights<Fraction, WideValue> input;      // i: W_xi, W_hi, b_i
  GateWeights<Fraction, WideValue> output;     // o: W_xo, W_ho, b_o
  GateWeights<Fraction, WideValue> forget;     // f: W_xf, W_hf, b_f
  GateWeights<Fraction, WideValue> candidate;  // C^: W_xc, W_hc, b_c

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

/// Real-valued mirror of LayerParams.
struct FloatLayer {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  GateWeights<double, double> input;
  GateWeights<double, double> output;
  GateWeights<double, double> forget;
  GateWeights<double, double> candidate;
};

struct LayerState {
  std::vector<Fraction> h;
  std::vector<Fraction> c;
  std::size_t t = 0;

  static LayerState zero(std::size_t hidden, int bits) {
    return {std::vector<Fraction>(hidden, Fraction::zero(bits)),
            std::vector<Fraction>(hidden, Fraction::zero(bits)), 0};
  }

  friend bool operator==(const LayerState&, const LayerState&) = default;
};

namespace layer_detail {

template <class W, class B>
void check_gate(const GateWeights<W, B>& g, std::size_t m, std::size_t n,
                const char* name) {
  const std::string gate(name);
  require(g.wx.rows() == n && g.wx.cols() == m,
          "layer: W_x" + gate + " must be hidden x input");
  require(g.wh.rows() == n && g.wh.cols() == n,
          "layer: W_h" + gate + " must be hidden x hidden");
  require(g.bias.size() == n, "layer: b_" + gate + " must have hidden entries");
}

template <class W, class B, class F>
void for_each_gate(F&& f, const GateWeights<W, B>& i, const GateWeights<W, B>& o,
                   const GateWeights<W, B>& fg, const GateWeights<W, B>& c) {
  f(i, "i");
  f(o, "o");
  f(fg, "f");
  f(c, "c");
}

}  // namespace layer_detail

inline void validate(const LayerParams& p) {
  require(p.input_dim > 0 && p.hidden_dim > 0, "layer: empty dimensions");
  layer_detail::for_each_gate(
      [&](const auto& g, const char* name) {
        layer_detail::check_gate(g, p.input_dim, p.hidden_dim, name);
        for (const Fraction& w : g.wx.data())
          require(w.bits() == p.bits, "layer: weight width differs from layer");
        for (const Fraction& w : g.wh.data())
          require(w.bits() == p.bits, "layer: weight width differs from layer");
        for (const WideValue& b : g.bias)
          require(b.bits() == p.bits && b.guard() == p.guard,
                  "layer: bias width differs from layer");
      },
      p.input, p.output, p.forget, p.candidate);
}

inline void validate(const FloatLayer& p) {
  require(p.input_dim > 0 && p.hidden_dim > 0, "layer: empty dimensions");
  layer_detail::for_each_gate(
      [&](const auto& g, const char* name) {
        layer_detail::check_gate(g, p.input_dim, p.hidden_dim, name);
      },
      p.input, p.output, p.forget, p.candidate);
}

/// Quantizes every weight to `bits` and every bias to the wide accumulator
/// format. `clamped`, when given, is incremented once per value that fell
/// outside its representable range.
inline LayerParams quantize_layer(const FloatLayer& f, int bits,
                                  int guard = kDefaultGuardBits,
                                  std::size_t* clamped = nullptr) {
  validate(f);
  LayerParams p;
  p.input_dim = f.input_dim;
  p.hidden_dim = f.hidden_dim;
  p.bits = bits;
  p.guard = guard;
  auto convert = [&](const GateWeights<double, double>& g) {
    GateWeights<Fraction, WideValue> q;
    auto matrix = [&](const Matrix<double>& m) {
      Matrix<Fraction> out(m.rows(), m.cols(), Fraction::zero(bits));
      for (std::size_t k = 0; k < m.data().size(); ++k) {
        bool hit = false;
        out.data()[k] = quantize(m.data()[k], bits, &hit);
        if (hit && clamped != nullptr) ++*clamped;
      }
      return out;
    };
    q.wx = matrix(g.wx);
    q.wh = matrix(g.wh);
    for (double b : g.bias) {
      bool hit = false;
      q.bias.push_back(quantize_wide(b, bits, guard, &hit));
      if (hit && clamped != nullptr) ++*clamped;
    }
    return q;
  };
  p.input = convert(f.input);
  p.output = convert(f.output);
  p.forget = convert(f.forget);
  p.candidate = convert(f.candidate);
  return p;
}

inline std::vector<Fraction> quantize_vector(const std::vector<double>& v,
                                             int bits) {
  std::vector<Fraction> out;
  out.reserve(v.size());
  for (double x : v) out.push_back(quantize(x, bits));
  return out;
}

}  // namespace elsa
