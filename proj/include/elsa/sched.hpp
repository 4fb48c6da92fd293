#pragma once

// Cycle model of one LSTM layer on the accelerator.
//
// Two schedules share the same arithmetic:
//
//   pipelined   Top controller states CS1..CS7. CS1 finishes the MVMs (all
//               columns at t = 1, only the columns not yet consumed after
//               that); CS2/CS4/CS6 are single-cycle adder+activation states;
//               CS3 runs the first EMA; CS5 runs, in two tracks, [EM for h_j
//               then MVM column j of step t+1] and [EMA for C_{j+1}], and
//               costs the longer track; CS7 runs the last EM.
//   sequential  The six datapath stages run back to back: full MVM, then per
//               element adder+sigmoids (1), EMA, output sigmoid (1), tanh (1),
//               EM.
//
// State transitions, buffer latches and multiplier preprocessing are free.
// The model window is the cycle total over iterations t >= 2.

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "elsa/error.hpp"
#include "elsa/fxp.hpp"
#include "elsa/layer.hpp"
#include "elsa/magnitude_trace.hpp"
#include "elsa/units.hpp"

namespace elsa {

enum class Phase : std::uint8_t {
  cs1, cs2, cs3, cs4, cs5, cs6, cs7,
  stage1, stage2, stage3, stage4, stage5, stage6,
};

inline const char* phase_name(Phase p) {
  static constexpr const char* kNames[] = {"CS1", "CS2", "CS3", "CS4", "CS5",
                                           "CS6", "CS7", "ST1", "ST2", "ST3",
                                           "ST4", "ST5", "ST6"};
  return kNames[static_cast<int>(p)];
}

inline bool is_single_cycle(Phase p) {
  return p == Phase::cs2 || p == Phase::cs4 || p == Phase::cs6 ||
         p == Phase::stage2 || p == Phase::stage4 || p == Phase::stage5;
}

// j is 1-based; 0 marks a whole-vector state (CS1 / ST1).
struct TraceRecord {
  Phase phase;
  std::size_t t;
  std::size_t j;
  std::int64_t cycles;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct CycleTrace {
  std::vector<TraceRecord> records;
  std::int64_t total_cycles = 0;
  std::int64_t model_window_cycles = 0;
  // Stream cycles spent by the x-side and h-side MVM groups, counted per
  // column regardless of overlap.
  std::int64_t x_stream_cycles = 0;
  std::int64_t h_stream_cycles = 0;

  void add(Phase phase, std::size_t t, std::size_t j, std::int64_t cycles,
           bool keep_record) {
    if (keep_record) records.push_back({phase, t, j, cycles});
    total_cycles += cycles;
    if (t >= 2) model_window_cycles += cycles;
  }

  // One record per line: state,t,j,cycles
  void write(std::ostream& out) const {
    for (const TraceRecord& r : records)
      out << phase_name(r.phase) << ',' << r.t << ',' << r.j << ',' << r.cycles
          << '\n';
  }
};

enum class Schedule { pipelined, sequential };

struct SimOptions {
  bool keep_records = true;
};

struct LayerRun {
  std::vector<LayerState> states;  // states[k] is the state after step k + 1
  CycleTrace trace;
  MagnitudeTrace magnitudes;
};

template <Arithmetic A = ApproxArithmetic>
class LayerRunner {
 public:
  explicit LayerRunner(const LayerParams& p, SimOptions options = {})
      : p_(p), options_(options) {
    validate(p_);
  }

  LayerRun run(std::span<const std::vector<Fraction>> inputs,
               const LayerState& init, Schedule schedule) {
    check_inputs(inputs, init);
    build_units();
    const std::size_t steps = inputs.size();
    LayerRun out;
    out.magnitudes = MagnitudeTrace(steps, p_.hidden_dim, p_.input_dim);
    out.states.reserve(steps);
    for (std::size_t j = 0; j < p_.hidden_dim; ++j)
      out.magnitudes.mh(0, j + 1) = std::abs(init.h[j].numerator());

    LayerState state = init;
    for (std::size_t k = 0; k < steps; ++k) {
      const std::size_t t = k + 1;
      for (std::size_t j = 0; j < p_.input_dim; ++j)
        out.magnitudes.mx(t, j + 1) = std::abs(inputs[k][j].numerator());
      const std::vector<Fraction>* next = k + 1 < steps ? &inputs[k + 1] : nullptr;
      Step step(*this, out, t, state);
      if (schedule == Schedule::pipelined) {
        step.run_pipelined(inputs[k], next);
      } else {
        step.run_sequential(inputs[k]);
      }
      state.h = std::move(step.h_new);
      state.c = std::move(step.c_new);
      state.t = init.t + t;
      for (std::size_t j = 0; j < p_.hidden_dim; ++j)
        out.magnitudes.mh(t, j + 1) = std::abs(state.h[j].numerator());
      out.states.push_back(state);
    }
    return out;
  }

 private:
  struct Units {
    MvmUnit<A> xi, hi, xo, ho, xf, hf, xc, hc;
  };

  struct Buffers {
    std::vector<WideValue> xi, hi, xo, ho, xf, hf, xc, hc;
  };

  // One iteration of the layer; owns the transient gate vectors.
  struct Step {
    Step(LayerRunner& r, LayerRun& out, std::size_t t, const LayerState& prev)
        : runner(r), run(out), t(t), prev(prev) {
      const std::size_t n = r.p_.hidden_dim;
      const Fraction zero = Fraction::zero(r.p_.bits);
      i.assign(n, zero);
      f.assign(n, zero);
      o.assign(n, zero);
      c_cand.assign(n, zero);
      tanh_out.assign(n, zero);
      c_new.assign(n, zero);
      h_new.assign(n, zero);
    }

    void record(Phase phase, std::size_t j, std::int64_t cycles) {
      run.trace.add(phase, t, j, cycles, runner.options_.keep_records);
    }

    WideValue pre(const GateWeights<Fraction, WideValue>& g,
                  const std::vector<WideValue>& ax,
                  const std::vector<WideValue>& ah, std::size_t j) const {
      return ternary_add(ax[j], ah[j], g.bias[j]);
    }

    // Adders + HSig/HSig/HTanh for f_j, C^_j, i_j.
    void input_forget_candidate(std::size_t j) {
      const LayerParams& p = runner.p_;
      i[j] = hsig(pre(p.input, buf.xi, buf.hi, j));
      f[j] = hsig(pre(p.forget, buf.xf, buf.hf, j));
      c_cand[j] = htanh(pre(p.candidate, buf.xc, buf.hc, j));
      run.magnitudes.mi(t, j + 1) = std::abs(i[j].numerator());
      run.magnitudes.mf(t, j + 1) = std::abs(f[j].numerator());
    }

    void output_gate(std::size_t j) {
      o[j] = hsig(pre(runner.p_.output, buf.xo, buf.ho, j));
      run.magnitudes.mo(t, j + 1) = std::abs(o[j].numerator());
    }

    void tanh_of_memory(std::size_t j) {
      tanh_out[j] = htanh(widen(c_new[j], runner.p_.guard));
    }

    std::int64_t ema(std::size_t j) {
      const EmaResult r =
          ema_step<A>(i[j], c_cand[j], f[j], prev.c[j], runner.p_.guard);
      c_new[j] = narrow(r.c_new);
      return r.cycles;
    }

    std::int64_t em(std::size_t j) {
      const EmResult r = em_multiply<A>(o[j], tanh_out[j]);
      h_new[j] = r.h;
      return r.cycles;
    }

    void run_pipelined(const std::vector<Fraction>& x,
                       const std::vector<Fraction>* x_next) {
      const std::size_t n = runner.p_.hidden_dim;
      record(Phase::cs1, 0, runner.finish_mvms(x, prev.h, run.trace));
      buf = runner.latch();

      input_forget_candidate(0);
      record(Phase::cs2, 1, 1);
      record(Phase::cs3, 1, ema(0));

      for (std::size_t j = 0; j + 1 < n; ++j) {
        input_forget_candidate(j + 1);
        output_gate(j);
        tanh_of_memory(j);
        record(Phase::cs4, j + 1, 1);

        std::int64_t track_h = em(j);
        if (x_next != nullptr)
          track_h += runner.column_pair(j, x_next, &h_new, run.trace);
        const std::int64_t track_c = ema(j + 1);
        record(Phase::cs5, j + 1, std::max(track_h, track_c));
      }

      output_gate(n - 1);
      tanh_of_memory(n - 1);
      record(Phase::cs6, n, 1);
      record(Phase::cs7, n, em(n - 1));
    }

    void run_sequential(const std::vector<Fraction>& x) {
      const std::size_t n = runner.p_.hidden_dim;
      record(Phase::stage1, 0, runner.finish_mvms(x, prev.h, run.trace));
      buf = runner.latch();
      for (std::size_t j = 0; j < n; ++j) {
        input_forget_candidate(j);
        record(Phase::stage2, j + 1, 1);
        record(Phase::stage3, j + 1, ema(j));
        output_gate(j);
        record(Phase::stage4, j + 1, 1);
        tanh_of_memory(j);
        record(Phase::stage5, j + 1, 1);
        record(Phase::stage6, j + 1, em(j));
      }
    }

    LayerRunner& runner;
    LayerRun& run;
    std::size_t t;
    const LayerState& prev;
    Buffers buf;
    std::vector<Fraction> i, f, o, c_cand, tanh_out, c_new, h_new;
  };

  void check_inputs(std::span<const std::vector<Fraction>> inputs,
                    const LayerState& init) const {
    require(!inputs.empty(), "layer run: at least one time step required");
    for (const auto& x : inputs) {
      require(x.size() == p_.input_dim, "layer run: input length differs from M");
      for (const Fraction& v : x)
        require(v.bits() == p_.bits, "layer run: input width differs from layer");
    }
    require(init.h.size() == p_.hidden_dim && init.c.size() == p_.hidden_dim,
            "layer run: initial state length differs from N");
    for (const auto* v : {&init.h, &init.c})
      for (const Fraction& e : *v)
        require(e.bits() == p_.bits, "layer run: state width differs from layer");
  }

  void build_units() {
    const int g = p_.guard;
    units_ = Units{MvmUnit<A>(p_.input.wx, g),     MvmUnit<A>(p_.input.wh, g),
                   MvmUnit<A>(p_.output.wx, g),    MvmUnit<A>(p_.output.wh, g),
                   MvmUnit<A>(p_.forget.wx, g),    MvmUnit<A>(p_.forget.wh, g),
                   MvmUnit<A>(p_.candidate.wx, g), MvmUnit<A>(p_.candidate.wh, g)};
  }

  // Column j on both MVM groups when that column is the next one due. The
  // x-side and h-side groups advance in lockstep, so the pair costs the
  // slower of the two streams.
  std::int64_t column_pair(std::size_t j, const std::vector<Fraction>* x,
                           const std::vector<Fraction>* h, CycleTrace& trace) {
    std::int64_t cx = 0;
    std::int64_t ch = 0;
    if (x != nullptr && j < p_.input_dim && units_.xi.column_cursor() == j) {
      const typename A::Column col((*x)[j]);
      cx = units_.xi.run_column(col);
      units_.xo.run_column(col);
      units_.xf.run_column(col);
      units_.xc.run_column(col);
      trace.x_stream_cycles += cx;
    }
    if (h != nullptr && j < p_.hidden_dim && units_.hi.column_cursor() == j) {
      const typename A::Column col((*h)[j]);
      ch = units_.hi.run_column(col);
      units_.ho.run_column(col);
      units_.hf.run_column(col);
      units_.hc.run_column(col);
      trace.h_stream_cycles += ch;
    }
    return std::max(cx, ch);
  }

  // Every column not yet consumed for this step.
  std::int64_t finish_mvms(const std::vector<Fraction>& x,
                           const std::vector<Fraction>& h, CycleTrace& trace) {
    const std::size_t width = std::max(p_.input_dim, p_.hidden_dim);
    const std::size_t start =
        std::min(units_.xi.column_cursor(), units_.hi.column_cursor());
    std::int64_t cycles = 0;
    for (std::size_t j = start; j < width; ++j)
      cycles += column_pair(j, &x, &h, trace);
    for (const MvmUnit<A>* u : {&units_.xi, &units_.hi, &units_.xo, &units_.ho,
                                &units_.xf, &units_.hf, &units_.xc, &units_.hc})
      require(u->complete(), "scheduler: MVM latched with unconsumed columns");
    return cycles;
  }

  Buffers latch() {
    return Buffers{units_.xi.latch_and_reset(), units_.hi.latch_and_reset(),
                   units_.xo.latch_and_reset(), units_.ho.latch_and_reset(),
                   units_.xf.latch_and_reset(), units_.hf.latch_and_reset(),
                   units_.xc.latch_and_reset(), units_.hc.latch_and_reset()};
  }

  const LayerParams& p_;
  SimOptions options_;
  Units units_;
};

template <Arithmetic A = ApproxArithmetic>
LayerRun run_pipelined(const LayerParams& p,
                       std::span<const std::vector<Fraction>> inputs,
                       const LayerState& init, SimOptions options = {}) {
  return LayerRunner<A>(p, options).run(inputs, init, Schedule::pipelined);
}

template <Arithmetic A = ApproxArithmetic>
LayerRun run_nonpipelined(const LayerParams& p,
                          std::span<const std::vector<Fraction>> inputs,
                          const LayerState& init, SimOptions options = {}) {
  return LayerRunner<A>(p, options).run(inputs, init, Schedule::sequential);
}

inline const MagnitudeTrace& gate_magnitude_trace(const LayerRun& run) {
  return run.magnitudes;
}

}  // namespace elsa
