#pragma once

// Seeded random layers and input sequences for sweeps and accuracy runs.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "elsa/fxp.hpp"
#include "elsa/layer.hpp"
#include "elsa/rng.hpp"

namespace elsa {

// Weights and biases uniform in [-scale, scale]; scale defaults to 1/sqrt(N).
inline FloatLayer random_float_layer(std::size_t input_dim, std::size_t hidden,
                                     SplitMix64& rng,
                                     std::optional<double> scale = std::nullopt) {
  const double s = scale.value_or(1.0 / std::sqrt(static_cast<double>(hidden)));
  FloatLayer layer;
  layer.input_dim = input_dim;
  layer.hidden_dim = hidden;
  for (auto* g : {&layer.input, &layer.output, &layer.forget, &layer.candidate}) {
    g->wx = Matrix<double>(hidden, input_dim);
    g->wh = Matrix<double>(hidden, hidden);
    for (double& w : g->wx.data()) w = rng.uniform(-s, s);
    for (double& w : g->wh.data()) w = rng.uniform(-s, s);
    g->bias.resize(hidden);
    for (double& b : g->bias) b = rng.uniform(-s, s);
  }
  return layer;
}

// Real inputs uniform in [-1, 1).
inline std::vector<std::vector<double>> random_real_inputs(std::size_t steps,
                                                           std::size_t dim,
                                                           SplitMix64& rng) {
  std::vector<std::vector<double>> xs(steps, std::vector<double>(dim));
  for (auto& x : xs)
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
  return xs;
}

// Numerators uniform over every representable n-bit fraction.
inline std::vector<std::vector<Fraction>> random_fraction_inputs(
    std::size_t steps, std::size_t dim, int bits, SplitMix64& rng) {
  const std::int64_t lo = Fraction::min(bits).numerator();
  const std::int64_t hi = Fraction::max(bits).numerator();
  std::vector<std::vector<Fraction>> xs(steps);
  for (auto& x : xs) {
    x.reserve(dim);
    for (std::size_t j = 0; j < dim; ++j)
      x.emplace_back(static_cast<std::int32_t>(rng.uniform_int(lo, hi)), bits);
  }
  return xs;
}

inline std::vector<std::vector<Fraction>> quantize_inputs(
    const std::vector<std::vector<double>>& xs, int bits) {
  std::vector<std::vector<Fraction>> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(quantize_vector(x, bits));
  return out;
}

}  // namespace elsa
