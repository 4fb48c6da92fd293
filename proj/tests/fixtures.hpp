#pragma once

#include <cstdint>
#include <vector>

#include "elsa/fxp.hpp"
#include "elsa/layer.hpp"
#include "elsa/rng.hpp"
#include "elsa/workload.hpp"

namespace fixture {

inline elsa::GateWeights<elsa::Fraction, elsa::WideValue> scalar_gate(
    std::int32_t wx, std::int32_t wh, std::int32_t bias, int n, int guard) {
  elsa::GateWeights<elsa::Fraction, elsa::WideValue> g;
  g.wx = elsa::Matrix<elsa::Fraction>(1, 1, elsa::Fraction(wx, n));
  g.wh = elsa::Matrix<elsa::Fraction>(1, 1, elsa::Fraction(wh, n));
  g.bias = {elsa::WideValue(bias, n, guard)};
  return g;
}

// N = M = 1, T = 2, n = 8, zero initial state. After step 1, |h| = 6; step 2
// sees |x| = 10, |i| = 4, |f| = 8, |o| = 5, giving 20 pipelined and 21
// sequential cycles in the t >= 2 window.
inline elsa::LayerParams tiny_layer() {
  elsa::LayerParams p;
  p.input_dim = 1;
  p.hidden_dim = 1;
  p.bits = 8;
  p.guard = 3;
  p.input = scalar_gate(-86, 0, -232, 8, 3);
  p.output = scalar_gate(-75, 0, -229, 8, 3);
  p.forget = scalar_gate(-95, 0, -215, 8, 3);
  p.candidate = scalar_gate(-10, 0, 282, 8, 3);
  return p;
}

inline std::vector<std::vector<elsa::Fraction>> tiny_inputs() {
  return {{elsa::Fraction(-121, 8)}, {elsa::Fraction(10, 8)}};
}

inline elsa::LayerParams zero_layer(std::size_t input, std::size_t hidden, int n,
                                    int guard = elsa::kDefaultGuardBits) {
  elsa::LayerParams p;
  p.input_dim = input;
  p.hidden_dim = hidden;
  p.bits = n;
  p.guard = guard;
  for (auto* g : {&p.input, &p.output, &p.forget, &p.candidate}) {
    g->wx = elsa::Matrix<elsa::Fraction>(hidden, input, elsa::Fraction::zero(n));
    g->wh = elsa::Matrix<elsa::Fraction>(hidden, hidden, elsa::Fraction::zero(n));
    g->bias.assign(hidden, elsa::WideValue::zero(n, guard));
  }
  return p;
}

inline std::vector<std::vector<elsa::Fraction>> zero_inputs(std::size_t steps,
                                                            std::size_t dim, int n) {
  return std::vector<std::vector<elsa::Fraction>>(
      steps, std::vector<elsa::Fraction>(dim, elsa::Fraction::zero(n)));
}

struct RandomCase {
  elsa::LayerParams params;
  std::vector<std::vector<elsa::Fraction>> inputs;
};

inline RandomCase random_case(int n, std::size_t input, std::size_t hidden,
                              std::size_t steps, std::uint64_t seed,
                              int guard = elsa::kDefaultGuardBits) {
  elsa::SplitMix64 rng(seed);
  const elsa::FloatLayer f = elsa::random_float_layer(input, hidden, rng);
  return {elsa::quantize_layer(f, n, guard),
          elsa::random_fraction_inputs(steps, input, n, rng)};
}

}  // namespace fixture
