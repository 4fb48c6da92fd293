#pragma once

// Reference models and error harnesses: the double-precision LSTM, the exact
// fixed-point LSTM, the exhaustive multiplier checker and the MSE /
// relative-error measurements.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ostream>
#include <string>
#include <vector>

#include "elsa/am.hpp"
#include "elsa/error.hpp"
#include "elsa/fxp.hpp"
#include "elsa/layer.hpp"
#include "elsa/rng.hpp"
#include "elsa/sched.hpp"
#include "elsa/units.hpp"
#include "elsa/workload.hpp"

namespace elsa {

// ---------------------------------------------------------------------------
// Floating point LSTM

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct FloatRun {
  // [t][j] for t = 1..T (index t - 1).
  std::vector<std::vector<double>> h, c;
  std::vector<std::vector<double>> i, f, o, c_cand;
};

inline FloatRun float_lstm_run(const FloatLayer& layer,
                               const std::vector<std::vector<double>>& inputs) {
  validate(layer);
  const std::size_t n = layer.hidden_dim;
  const std::size_t m = layer.input_dim;
  std::vector<double> h(n, 0.0), c(n, 0.0);
  FloatRun run;
  auto affine = [&](const GateWeights<double, double>& g,
                    const std::vector<double>& x, std::size_t j) {
    double s = g.bias[j];
    for (std::size_t k = 0; k < m; ++k) s += g.wx(j, k) * x[k];
    for (std::size_t k = 0; k < n; ++k) s += g.wh(j, k) * h[k];
    return s;
  };
  for (const auto& x : inputs) {
    require(x.size() == m, "float_lstm_run: input length differs from M");
    std::vector<double> i(n), f(n), o(n), cc(n), c_next(n), h_next(n);
    for (std::size_t j = 0; j < n; ++j) {
      i[j] = sigmoid(affine(layer.input, x, j));
      o[j] = sigmoid(affine(layer.output, x, j));
      f[j] = sigmoid(affine(layer.forget, x, j));
      cc[j] = std::tanh(affine(layer.candidate, x, j));
    }
    for (std::size_t j = 0; j < n; ++j) {
      c_next[j] = i[j] * cc[j] + f[j] * c[j];
      h_next[j] = o[j] * std::tanh(c_next[j]);
    }
    h = h_next;
    c = c_next;
    run.h.push_back(h);
    run.c.push_back(c);
    run.i.push_back(std::move(i));
    run.f.push_back(std::move(f));
    run.o.push_back(std::move(o));
    run.c_cand.push_back(std::move(cc));
  }
  return run;
}

// ---------------------------------------------------------------------------
// Exact fixed-point LSTM: the accelerator's datapath (widths, activations,
// saturation, accumulation order) with every multiplier exact. Products are
// truncated toward zero onto the accumulator grid.

inline std::vector<LayerState> exact_fxp_lstm_run(
    const LayerParams& p, const std::vector<std::vector<Fraction>>& inputs,
    const LayerState& init) {
  validate(p);
  const std::size_t n = p.hidden_dim;
  const std::size_t m = p.input_dim;
  const int bits = p.bits;
  const int guard = p.guard;
  require(init.h.size() == n && init.c.size() == n,
          "exact_fxp_lstm_run: initial state length differs from N");

  auto product = [&](const Fraction& a, const Fraction& b) {
    return ExactArithmetic::truncated_product(a.numerator(), b.numerator(), bits);
  };
  auto accumulate = [&](const WideValue& acc, std::int32_t term) {
    return WideValue::saturate(std::int64_t{acc.numerator()} + term, bits, guard);
  };
  auto mvm = [&](const Matrix<Fraction>& w, const std::vector<Fraction>& v,
                 std::size_t j) {
    WideValue acc = WideValue::zero(bits, guard);
    for (std::size_t k = 0; k < w.cols(); ++k)
      acc = accumulate(acc, product(w(j, k), v[k]));
    return acc;
  };

  std::vector<LayerState> states;
  LayerState s = init;
  for (const auto& x : inputs) {
    require(x.size() == m, "exact_fxp_lstm_run: input length differs from M");
    LayerState next = LayerState::zero(n, bits);
    next.t = s.t + 1;
    for (std::size_t j = 0; j < n; ++j) {
      auto pre = [&](const GateWeights<Fraction, WideValue>& g) {
        return ternary_add(mvm(g.wx, x, j), mvm(g.wh, s.h, j), g.bias[j]);
      };
      const Fraction i = hsig(pre(p.input));
      const Fraction f = hsig(pre(p.forget));
      const Fraction o = hsig(pre(p.output));
      const Fraction cc = htanh(pre(p.candidate));
      WideValue c_acc = WideValue::zero(bits, guard);
      c_acc = accumulate(c_acc, product(cc, i));
      c_acc = accumulate(c_acc, product(s.c[j], f));
      next.c[j] = narrow(c_acc);
      const Fraction tanh_c = htanh(widen(next.c[j], guard));
      next.h[j] = Fraction::saturate(product(tanh_c, o), bits);
    }
    states.push_back(next);
    s = std::move(next);
  }
  return states;
}

// ---------------------------------------------------------------------------
// Exhaustive multiplier check

struct AmCheckResult {
  int bits = 0;
  std::uint64_t pairs = 0;
  double bound = 0.0;  // n / 2^(n+1)
  double max_abs_error = 0.0;
  Fraction worst_x, worst_w;
  std::uint64_t violations = 0;
  Fraction first_violation_x, first_violation_w;
  std::uint64_t fast_mismatches = 0;  // output differs from the original AM
  std::uint64_t cycle_mismatches = 0;  // accelerated cycles != floor(orig/2)

  bool bound_holds() const { return violations == 0; }
  bool fast_equivalent() const {
    return fast_mismatches == 0 && cycle_mismatches == 0;
  }
  bool passed() const { return bound_holds() && fast_equivalent(); }
};

inline constexpr int kMaxExhaustiveBits = 10;

namespace oracle_detail {

class AmChecker {
 public:
  explicit AmChecker(int bits)
      : scale_(std::int64_t{1} << (bits - 1)),
        bound_limit_(std::int64_t{bits} << (2 * bits - 2)) {
    r_.bits = bits;
    r_.bound = std::ldexp(static_cast<double>(bits), -(bits + 1));
  }

  // Errors are compared exactly in units of 2^-(2n-2):
  //   |Z - XW| <= n / 2^(n+1)  <=>  err * 2^(n+1) <= n * 2^(2n-2).
  void check(const Fraction& x, const Fraction& w) {
    const AmProduct orig = am_multiply(x, w);
    const AmProduct fast = am_multiply_fast(x, w);
    ++r_.pairs;
    if (fast.z != orig.z) ++r_.fast_mismatches;
    if (fast.cycles != orig.cycles / 2) ++r_.cycle_mismatches;
    const std::int64_t err = std::abs(orig.z.numerator() * scale_ -
                                      std::int64_t{x.numerator()} * w.numerator());
    if (err > worst_) {
      worst_ = err;
      r_.worst_x = x;
      r_.worst_w = w;
    }
    if ((err << (r_.bits + 1)) > bound_limit_) {
      if (r_.violations == 0) {
        r_.first_violation_x = x;
        r_.first_violation_w = w;
      }
      ++r_.violations;
    }
  }

  AmCheckResult finish() {
    r_.max_abs_error = std::ldexp(static_cast<double>(worst_), -(2 * r_.bits - 2));
    return r_;
  }

 private:
  AmCheckResult r_;
  std::int64_t scale_;
  std::int64_t bound_limit_;
  std::int64_t worst_ = -1;
};

}  // namespace oracle_detail

inline AmCheckResult exhaustive_am_check(int bits) {
  require(bits >= kMinBits && bits <= kMaxExhaustiveBits,
          "exhaustive_am_check: bits must be in [2, 10]");
  oracle_detail::AmChecker checker(bits);
  const std::int32_t lo = Fraction::min(bits).numerator();
  const std::int32_t hi = Fraction::max(bits).numerator();
  for (std::int32_t xn = lo; xn <= hi; ++xn)
    for (std::int32_t wn = lo; wn <= hi; ++wn)
      checker.check(Fraction(xn, bits), Fraction(wn, bits));
  return checker.finish();
}

// Same checks on `samples` seeded pairs, for widths too large to enumerate.
inline AmCheckResult sampled_am_check(int bits, std::uint64_t samples,
                                      std::uint64_t seed) {
  fxp_detail::check_bits(bits);
  oracle_detail::AmChecker checker(bits);
  SplitMix64 rng(seed);
  const std::int64_t lo = Fraction::min(bits).numerator();
  const std::int64_t hi = Fraction::max(bits).numerator();
  for (std::uint64_t s = 0; s < samples; ++s) {
    const auto xn = static_cast<std::int32_t>(rng.uniform_int(lo, hi));
    const auto wn = static_cast<std::int32_t>(rng.uniform_int(lo, hi));
    checker.check(Fraction(xn, bits), Fraction(wn, bits));
  }
  return checker.finish();
}

// ---------------------------------------------------------------------------
// Error metrics

struct ErrorReport {
  std::vector<double> mse;  // index t - 1
  double slope = 0.0;       // least squares fit of mse against t = 1..T
  double intercept = 0.0;
  double mean_mse = 0.0;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Ordinary least squares of y against x = 1..len.
inline LineFit fit_line(const std::vector<double>& y) {
  const std::size_t len = y.size();
  if (len == 0) return {};
  if (len == 1) return {0.0, y[0]};
  const double n = static_cast<double>(len);
  const double x_mean = (n + 1.0) / 2.0;
  double y_mean = 0.0;
  for (double v : y) y_mean += v;
  y_mean /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = 0; k < len; ++k) {
    const double dx = static_cast<double>(k + 1) - x_mean;
    sxy += dx * (y[k] - y_mean);
    sxx += dx * dx;
  }
  const double slope = sxy / sxx;
  return {slope, y_mean - slope * x_mean};
}

inline ErrorReport mse_series(const std::vector<std::vector<double>>& approx,
                              const std::vector<std::vector<double>>& exact) {
  require(approx.size() == exact.size(), "mse_series: sequence lengths differ");
  ErrorReport rep;
  rep.mse.reserve(approx.size());
  for (std::size_t t = 0; t < approx.size(); ++t) {
    require(approx[t].size() == exact[t].size() && !approx[t].empty(),
            "mse_series: vector lengths differ");
    double s = 0.0;
    for (std::size_t j = 0; j < approx[t].size(); ++j) {
      const double d = approx[t][j] - exact[t][j];
      s += d * d;
    }
    rep.mse.push_back(s / static_cast<double>(approx[t].size()));
  }
  const LineFit fit = fit_line(rep.mse);
  rep.slope = fit.slope;
  rep.intercept = fit.intercept;
  double sum = 0.0;
  for (double v : rep.mse) sum += v;
  rep.mean_mse = rep.mse.empty() ? 0.0 : sum / static_cast<double>(rep.mse.size());
  return rep;
}

// h (or C) of every step as reals, [t][j].
inline std::vector<std::vector<double>> hidden_reals(
    const std::vector<LayerState>& states) {
  std::vector<std::vector<double>> out;
  out.reserve(states.size());
  for (const LayerState& s : states) {
    std::vector<double> v;
    v.reserve(s.h.size());
    for (const Fraction& f : s.h) v.push_back(f.to_real());
    out.push_back(std::move(v));
  }
  return out;
}

inline std::vector<std::vector<double>> memory_reals(
    const std::vector<LayerState>& states) {
  std::vector<std::vector<double>> out;
  out.reserve(states.size());
  for (const LayerState& s : states) {
    std::vector<double> v;
    v.reserve(s.c.size());
    for (const Fraction& f : s.c) v.push_back(f.to_real());
    out.push_back(std::move(v));
  }
  return out;
}

struct MseComparison {
  int bits = 0;
  ErrorReport h;
  ErrorReport c;
};

/// Accelerator vs floating point over `steps` steps of one random layer.
/// The float layer and real inputs depend only on (hidden, steps, seed), so
/// runs at different widths see the same problem.
inline MseComparison mse_vs_float(int bits, std::size_t hidden,
                                  std::size_t steps, std::uint64_t seed,
                                  int guard = kDefaultGuardBits) {
  SplitMix64 rng(seed);
  const FloatLayer real = random_float_layer(hidden, hidden, rng);
  const auto xs = random_real_inputs(steps, hidden, rng);
  const FloatRun reference = float_lstm_run(real, xs);

  const LayerParams params = quantize_layer(real, bits, guard);
  const LayerRun run = run_pipelined(params, quantize_inputs(xs, bits),
                                     LayerState::zero(hidden, bits),
                                     SimOptions{.keep_records = false});
  return {bits, mse_series(hidden_reals(run.states), reference.h),
          mse_series(memory_reals(run.states), reference.c)};
}

inline void write_mse_report(std::ostream& out, const MseComparison& cmp) {
  out << "t,mse_h,mse_c\n";
  const auto old_precision = out.precision(10);
  for (std::size_t t = 0; t < cmp.h.mse.size(); ++t)
    out << t + 1 << ',' << cmp.h.mse[t] << ',' << cmp.c.mse[t] << '\n';
  out.precision(old_precision);
}

// ---------------------------------------------------------------------------
// Relative error against exact fixed point

struct RelativeErrorLevel {
  std::string level;
  double mean = 0.0;
  double stddev = 0.0;
  std::uint64_t samples = 0;
};

class RelativeErrorAccumulator {
 public:
  explicit RelativeErrorAccumulator(int bits)
      : epsilon_(std::ldexp(1.0, -(bits - 1))) {}

  void add(double approx, double exact) {
    const double rel = std::abs(approx - exact) / std::max(std::abs(exact), epsilon_);
    ++count_;
    const double delta = rel - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (rel - mean_);
  }

  RelativeErrorLevel finish(std::string level) const {
    const double var = count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0;
    return {std::move(level), mean_, std::sqrt(var), count_};
  }

 private:
  double epsilon_;
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

inline constexpr std::size_t kMacLength = 100;

// Single products: AM output vs the exact product of the same quantized
// operands. Operands are reals uniform in [-1, 1) quantized to `bits`.
inline RelativeErrorLevel relative_error_multiply(int bits, std::uint64_t samples,
                                                  std::uint64_t seed) {
  SplitMix64 rng(seed);
  RelativeErrorAccumulator acc(bits);
  for (std::uint64_t s = 0; s < samples; ++s) {
    const Fraction x = quantize(rng.uniform(-1.0, 1.0), bits);
    const Fraction w = quantize(rng.uniform(-1.0, 1.0), bits);
    const double approx = Fraction::saturate(am_count(x, w), bits).to_real();
    acc.add(approx, x.to_real() * w.to_real());
  }
  return acc.finish("multiply");
}

// Length-100 dot products: AM-MAC (saturating wide accumulator) vs an exact
// MAC over the same operands, clamped to the same accumulator range.
inline RelativeErrorLevel relative_error_mac(int bits, std::uint64_t samples,
                                             std::uint64_t seed,
                                             int guard = kDefaultGuardBits) {
  SplitMix64 rng(seed);
  RelativeErrorAccumulator acc(bits);
  const double scale = std::ldexp(1.0, bits - 1);
  const double lo = WideValue::min(bits, guard).to_real();
  const double hi = WideValue::max(bits, guard).to_real();
  for (std::uint64_t s = 0; s < samples; ++s) {
    std::int64_t approx = 0;
    double exact = 0.0;
    for (std::size_t k = 0; k < kMacLength; ++k) {
      const Fraction x = quantize(rng.uniform(-1.0, 1.0), bits);
      const Fraction w = quantize(rng.uniform(-1.0, 1.0), bits);
      approx = WideValue::saturate(
                   approx + Fraction::saturate(am_count(x, w), bits).numerator(),
                   bits, guard)
                   .numerator();
      exact += x.to_real() * w.to_real();
    }
    acc.add(static_cast<double>(approx) / scale, std::clamp(exact, lo, hi));
  }
  return acc.finish("mac");
}

// Hidden states of one random layer: accelerator vs exact fixed point, over
// ceil(samples / hidden) steps.
inline RelativeErrorLevel relative_error_layer(int bits, std::uint64_t samples,
                                               std::uint64_t seed,
                                               std::size_t hidden = 64,
                                               int guard = kDefaultGuardBits) {
  SplitMix64 rng(seed);
  const std::size_t steps = std::max<std::size_t>(
      1, static_cast<std::size_t>((samples + hidden - 1) / hidden));
  const LayerParams params =
      quantize_layer(random_float_layer(hidden, hidden, rng), bits, guard);
  const auto xs = quantize_inputs(random_real_inputs(steps, hidden, rng), bits);
  const LayerState init = LayerState::zero(hidden, bits);
  const LayerRun approx =
      run_pipelined(params, xs, init, SimOptions{.keep_records = false});
  const std::vector<LayerState> exact = exact_fxp_lstm_run(params, xs, init);
  RelativeErrorAccumulator acc(bits);
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t j = 0; j < hidden; ++j)
      acc.add(approx.states[t].h[j].to_real(), exact[t].h[j].to_real());
  return acc.finish("layer");
}

inline std::vector<RelativeErrorLevel> relative_error_suite(
    int bits, std::uint64_t samples, std::uint64_t seed, std::size_t hidden = 64) {
  return {relative_error_multiply(bits, samples, derive_seed(seed, 0)),
          relative_error_mac(bits, samples, derive_seed(seed, 1)),
          relative_error_layer(bits, samples, derive_seed(seed, 2), hidden)};
}

// 1 - mean relative error of the AM-MAC.
inline double mac_accuracy(int bits, std::uint64_t samples, std::uint64_t seed) {
  return 1.0 - relative_error_mac(bits, samples, seed).mean;
}

inline void write_relative_error_report(
    std::ostream& out, const std::vector<RelativeErrorLevel>& levels) {
  out << "level,mean_rel_err,std_rel_err\n";
  const auto old_precision = out.precision(8);
  for (const auto& l : levels)
    out << l.level << ',' << l.mean << ',' << l.stddev << '\n';
  out.precision(old_precision);
}

}  // namespace elsa
