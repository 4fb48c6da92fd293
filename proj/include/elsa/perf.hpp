#pragma once

// Analytic cycle model of a layer run, evaluated over recorded operand
// magnitudes, and the configuration sweep comparing the two schedules.
//
// Conventions shared with the scheduler:
//   - every "/2" is a per-operand floor (the accelerated multiplier's latency);
//   - the MVM column cost is charged at the iteration that consumes it, so
//     CS1 of iteration t costs max(|x_t^N|, |h_{t-1}^N|) and the partial
//     column in CS5(j, t) costs max(|x_{t+1}^j|, |h_t^j|), absent at t = T;
//   - sums run over t in [2, T].

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include "elsa/error.hpp"
#include "elsa/layer.hpp"
#include "elsa/magnitude_trace.hpp"
#include "elsa/rng.hpp"
#include "elsa/sched.hpp"
#include "elsa/workload.hpp"

namespace elsa {

namespace perf_detail {

inline bool window_empty(const MagnitudeTrace& m, std::ostream* warn) {
  if (m.timesteps() >= 2) return false;
  if (warn != nullptr)
    *warn << "warning: fewer than 2 time steps, model window is empty\n";
  return true;
}

}  // namespace perf_detail

inline std::int64_t eval_pipelined(const MagnitudeTrace& m,
                                   std::ostream* warn = &std::clog) {
  require(m.input_dim() == m.hidden(),
          "eval_pipelined: the analytic model needs input_dim == hidden");
  if (perf_detail::window_empty(m, warn)) return 0;
  const std::int64_t T = static_cast<std::int64_t>(m.timesteps());
  const std::int64_t N = static_cast<std::int64_t>(m.hidden());
  const std::size_t n = m.hidden();

  std::int64_t total = 0;
  for (std::size_t t = 2; t <= m.timesteps(); ++t) {
    total += std::max(m.mx(t, n), m.mh(t - 1, n));        // CS1
    total += m.mi(t, 1) / 2 + m.mf(t, 1) / 2;             // CS3
    total += m.mo(t, n) / 2;                              // CS7
    const bool last = t == m.timesteps();
    for (std::size_t j = 1; j < n; ++j) {                 // CS5
      std::int64_t track_h = m.mo(t, j) / 2;
      if (!last) track_h += std::max(m.mx(t + 1, j), m.mh(t, j));
      const std::int64_t track_c = m.mi(t, j + 1) / 2 + m.mf(t, j + 1) / 2;
      total += std::max(track_h, track_c);
    }
  }
  return total + T + N * (T - 1) - 1;
}

inline std::int64_t eval_nonpipelined(const MagnitudeTrace& m,
                                      std::ostream* warn = &std::clog) {
  require(m.input_dim() == m.hidden(),
          "eval_nonpipelined: the analytic model needs input_dim == hidden");
  if (perf_detail::window_empty(m, warn)) return 0;
  const std::int64_t T = static_cast<std::int64_t>(m.timesteps());
  const std::int64_t N = static_cast<std::int64_t>(m.hidden());

  std::int64_t total = 0;
  for (std::size_t t = 2; t <= m.timesteps(); ++t) {
    for (std::size_t j = 1; j <= m.hidden(); ++j) {
      total += std::max(m.mx(t, j), m.mh(t - 1, j));
      total += m.mi(t, j) / 2 + m.mf(t, j) / 2 + m.mo(t, j) / 2;
    }
  }
  return total + 3 * N * (T - 1);
}

struct PerfConfig {
  int bits = 8;
  std::size_t hidden = 64;
  std::size_t timesteps = 10;
  std::uint64_t seed = 0;

  friend bool operator==(const PerfConfig&, const PerfConfig&) = default;
};

struct SweepRow {
  PerfConfig config;
  std::int64_t model_pipelined = 0;
  std::int64_t model_nonpipelined = 0;
  std::int64_t sim_pipelined = 0;
  std::int64_t sim_nonpipelined = 0;
  double speedup = 0.0;

  bool cross_validated() const {
    return sim_pipelined == model_pipelined &&
           sim_nonpipelined == model_nonpipelined;
  }

  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct SweepSummary {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

// How a sweep instance is drawn. Defaults: weights and biases uniform in
// [-1/sqrt(N), 1/sqrt(N)], inputs uniform over representable fractions.
struct SweepWorkload {
  std::optional<double> weight_scale;
  std::optional<double> bias_value;  // overrides every bias when set
  bool zero_inputs = false;
  int guard = kDefaultGuardBits;
};

// Row-major expansion of the grid (bits outermost, timesteps innermost);
// each configuration gets its own seed derived from `seed`.
inline std::vector<PerfConfig> make_grid(const std::vector<int>& bits,
                                         const std::vector<std::size_t>& hidden,
                                         const std::vector<std::size_t>& steps,
                                         std::uint64_t seed) {
  std::vector<PerfConfig> grid;
  for (int b : bits)
    for (std::size_t h : hidden)
      for (std::size_t t : steps)
        grid.push_back({b, h, t, derive_seed(seed, grid.size())});
  return grid;
}

inline std::vector<PerfConfig> default_grid(std::uint64_t seed) {
  return make_grid({8, 12, 16}, {64, 128, 256}, {10, 100, 1000}, seed);
}

inline SweepRow sweep_row(const PerfConfig& cfg, const SweepWorkload& w = {}) {
  require(cfg.hidden > 0 && cfg.timesteps > 0, "sweep: empty configuration");
  SplitMix64 rng(cfg.seed);
  FloatLayer real = random_float_layer(cfg.hidden, cfg.hidden, rng, w.weight_scale);
  if (w.bias_value)
    for (auto* g : {&real.input, &real.output, &real.forget, &real.candidate})
      std::fill(g->bias.begin(), g->bias.end(), *w.bias_value);
  const LayerParams params = quantize_layer(real, cfg.bits, w.guard);

  std::vector<std::vector<Fraction>> inputs =
      w.zero_inputs
          ? std::vector<std::vector<Fraction>>(
                cfg.timesteps,
                std::vector<Fraction>(cfg.hidden, Fraction::zero(cfg.bits)))
          : random_fraction_inputs(cfg.timesteps, cfg.hidden, cfg.bits, rng);
  const LayerState init = LayerState::zero(cfg.hidden, cfg.bits);
  const SimOptions quiet{.keep_records = false};

  const LayerRun p = run_pipelined(params, inputs, init, quiet);
  const LayerRun np = run_nonpipelined(params, inputs, init, quiet);

  SweepRow row;
  row.config = cfg;
  row.model_pipelined = eval_pipelined(p.magnitudes, nullptr);
  row.model_nonpipelined = eval_nonpipelined(np.magnitudes, nullptr);
  row.sim_pipelined = p.trace.model_window_cycles;
  row.sim_nonpipelined = np.trace.model_window_cycles;
  row.speedup = row.model_pipelined > 0
                    ? static_cast<double>(row.model_nonpipelined) /
                          static_cast<double>(row.model_pipelined)
                    : 0.0;
  return row;
}

// Rows come back in grid order.
inline std::vector<SweepRow> sweep(const std::vector<PerfConfig>& grid,
                                   const SweepWorkload& w = {}) {
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (const PerfConfig& cfg : grid) rows.push_back(sweep_row(cfg, w));
  return rows;
}

inline SweepSummary summarize(const std::vector<SweepRow>& rows) {
  SweepSummary s;
  if (rows.empty()) return s;
  s.min = std::numeric_limits<double>::infinity();
  s.max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (const SweepRow& r : rows) {
    sum += r.speedup;
    s.min = std::min(s.min, r.speedup);
    s.max = std::max(s.max, r.speedup);
  }
  s.mean = sum / static_cast<double>(rows.size());
  return s;
}

inline void write_sweep_report(std::ostream& out,
                               const std::vector<SweepRow>& rows) {
  const auto old_flags = out.flags();
  const auto old_precision = out.precision();
  out.setf(std::ios::fixed);
  out.precision(6);
  out << "bits,hidden,timesteps,seed,model_pipelined,model_nonpipelined,"
         "sim_pipelined,sim_nonpipelined,speedup\n";
  for (const SweepRow& r : rows) {
    out << r.config.bits << ',' << r.config.hidden << ',' << r.config.timesteps
        << ',' << r.config.seed << ',' << r.model_pipelined << ','
        << r.model_nonpipelined << ',' << r.sim_pipelined << ','
        << r.sim_nonpipelined << ',' << r.speedup << '\n';
  }
  const SweepSummary s = summarize(rows);
  out << "mean,min,max\n" << s.mean << ',' << s.min << ',' << s.max << '\n';
  out.flags(old_flags);
  out.precision(old_precision);
}

}  // namespace elsa
