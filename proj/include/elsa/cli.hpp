#pragma once

// Command-line front end: am-check, sim, sweep, accuracy, generate.
// Exit codes: 0 success, 1 usage error, 2 data or format error,
// 3 verification failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "elsa/app.hpp"
#include "elsa/error.hpp"
#include "elsa/fxp.hpp"
#include "elsa/oracle.hpp"
#include "elsa/perf.hpp"
#include "elsa/sched.hpp"
#include "elsa/workload.hpp"

namespace elsa::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kVerifyFailed = 3 };

namespace detail {

inline std::string fraction_text(const Fraction& f) {
  return std::to_string(f.numerator()) + "/" + std::to_string(f.scale());
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  return out;
}

struct AmCheckArgs {
  int bits = 8;
  bool fast_only = false;
  std::uint64_t samples = 20000;
  std::uint64_t seed = 0;
};

inline int am_check(const AmCheckArgs& a, std::ostream& out) {
  const bool exhaustive = a.bits <= kMaxExhaustiveBits;
  const AmCheckResult r = exhaustive ? exhaustive_am_check(a.bits)
                                     : sampled_am_check(a.bits, a.samples, a.seed);
  out << std::setprecision(10);
  out << "bits=" << r.bits << " pairs=" << r.pairs
      << (exhaustive ? " (exhaustive)" : " (sampled)") << '\n';
  out << "fast_equivalence=" << (r.fast_equivalent() ? "pass" : "FAIL")
      << " output_mismatches=" << r.fast_mismatches
      << " cycle_mismatches=" << r.cycle_mismatches << '\n';
  if (a.fast_only) return r.fast_equivalent() ? kOk : kVerifyFailed;

  out << "max_error" << (r.bound_holds() ? " <= " : " > ") << r.bound
      << " (max_error=" << r.max_abs_error << " at X=" << fraction_text(r.worst_x)
      << " W=" << fraction_text(r.worst_w) << ")\n";
  if (!r.bound_holds())
    out << "bound=FAIL violations=" << r.violations
        << " first_counterexample X=" << fraction_text(r.first_violation_x)
        << " W=" << fraction_text(r.first_violation_w) << '\n';
  else
    out << "bound=pass\n";
  return r.passed() ? kOk : kVerifyFailed;
}

struct SimArgs {
  int bits = 8;
  std::size_t hidden = 16;
  std::size_t input_dim = 0;  // 0: same as hidden
  std::size_t timesteps = 10;
  std::uint64_t seed = 0;
  bool no_pipeline = false;
  bool zero = false;
  std::string trace_path;
};

inline int sim(const SimArgs& a, std::ostream& out, std::ostream& err) {
  const std::size_t m = a.input_dim == 0 ? a.hidden : a.input_dim;
  SplitMix64 rng(a.seed);
  LayerParams params;
  std::vector<std::vector<Fraction>> inputs;
  if (a.zero) {
    params = quantize_layer(random_float_layer(m, a.hidden, rng, 0.0), a.bits);
    inputs.assign(a.timesteps, std::vector<Fraction>(m, Fraction::zero(a.bits)));
  } else {
    params = quantize_layer(random_float_layer(m, a.hidden, rng), a.bits);
    inputs = random_fraction_inputs(a.timesteps, m, a.bits, rng);
  }
  const LayerState init = LayerState::zero(a.hidden, a.bits);
  const SimOptions opts{.keep_records = !a.trace_path.empty()};
  const LayerRun run = a.no_pipeline ? run_nonpipelined(params, inputs, init, opts)
                                     : run_pipelined(params, inputs, init, opts);
  if (!a.trace_path.empty()) {
    std::ofstream trace = open_output(a.trace_path);
    run.trace.write(trace);
  }

  out << "schedule=" << (a.no_pipeline ? "nonpipelined" : "pipelined") << '\n';
  out << "total_cycles=" << run.trace.total_cycles << '\n';
  out << "model_window_cycles=" << run.trace.model_window_cycles << '\n';
  out << "x_stream_cycles=" << run.trace.x_stream_cycles << '\n';
  out << "h_stream_cycles=" << run.trace.h_stream_cycles << '\n';

  if (m != a.hidden) {
    out << "model=skipped (input_dim != hidden)\n";
    return kOk;
  }
  if (a.timesteps < 2) {
    err << "warning: fewer than 2 time steps, model window is empty\n";
    out << "model=skipped (timesteps < 2)\n";
    return kOk;
  }
  const std::int64_t model = a.no_pipeline ? eval_nonpipelined(run.magnitudes, &err)
                                           : eval_pipelined(run.magnitudes, &err);
  const bool match = model == run.trace.model_window_cycles;
  out << "model=" << model << (match ? " (match)" : " (MISMATCH)") << '\n';
  return match ? kOk : kVerifyFailed;
}

struct SweepArgs {
  std::vector<int> bits{8, 12, 16};
  std::vector<std::size_t> hidden{64, 128, 256};
  std::vector<std::size_t> timesteps{10, 100, 1000};
  std::uint64_t seed = 0;
  std::string out_path;
};

inline int sweep(const SweepArgs& a, std::ostream& out) {
  const std::vector<SweepRow> rows =
      elsa::sweep(make_grid(a.bits, a.hidden, a.timesteps, a.seed));
  if (a.out_path.empty()) {
    write_sweep_report(out, rows);
  } else {
    std::ofstream file = open_output(a.out_path);
    write_sweep_report(file, rows);
  }
  std::size_t mismatches = 0;
  for (const SweepRow& r : rows)
    if (!r.cross_validated()) ++mismatches;
  const SweepSummary s = summarize(rows);
  out << std::fixed << std::setprecision(4) << "configs=" << rows.size()
      << " speedup_mean=" << s.mean << " speedup_min=" << s.min
      << " speedup_max=" << s.max << " model_mismatches=" << mismatches << '\n';
  return mismatches == 0 ? kOk : kVerifyFailed;
}

struct AccuracyArgs {
  std::vector<int> bits{5, 6, 8, 12, 16};
  std::size_t timesteps = 1000;
  std::size_t hidden = 64;
  std::uint64_t samples = 100000;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

inline int accuracy(const AccuracyArgs& a, std::ostream& out) {
  std::filesystem::create_directories(a.out_dir);
  const std::filesystem::path dir(a.out_dir);
  out << std::setprecision(6);
  for (int b : a.bits) {
    const MseComparison mse = mse_vs_float(b, a.hidden, a.timesteps, a.seed);
    std::ofstream series = open_output((dir / ("mse_" + std::to_string(b) + ".csv")).string());
    write_mse_report(series, mse);

    const std::vector<RelativeErrorLevel> levels =
        relative_error_suite(b, a.samples, a.seed, a.hidden);
    std::ofstream rel = open_output(
        (dir / ("relative_error_" + std::to_string(b) + ".csv")).string());
    write_relative_error_report(rel, levels);

    out << "bits=" << b << " mean_mse_h=" << mse.h.mean_mse
        << " slope_h*T=" << mse.h.slope * static_cast<double>(a.timesteps)
        << " mean_mse_c=" << mse.c.mean_mse;
    for (const RelativeErrorLevel& l : levels) out << ' ' << l.level << '=' << l.mean;
    out << '\n';
  }
  return kOk;
}

struct GenerateArgs {
  std::string weights;
  std::string vocab;
  int bits = 8;
  GenerationConfig gen;
};

inline int generate(const GenerateArgs& a, std::ostream& out, std::ostream& err) {
  const NetworkSpec net = load_network(a.weights, a.vocab, a.bits);
  if (net.clamped > 0)
    err << "warning: " << net.clamped << " weights clamped to the " << a.bits
        << "-bit range\n";
  out << a.gen.prime << elsa::generate(net, a.gen) << '\n';
  return kOk;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"ELSA LSTM accelerator simulator"};
  app.require_subcommand(1);

  detail::AmCheckArgs am;
  auto* am_cmd = app.add_subcommand("am-check", "Verify the approximate multiplier");
  am_cmd->add_option("--bits", am.bits, "Operand width n")
      ->check(CLI::Range(kMinBits, kMaxBits))
      ->required();
  am_cmd->add_flag("--fast", am.fast_only,
                   "Only check the accelerated multiplier against the original");
  am_cmd->add_option("--samples", am.samples,
                     "Sampled pairs when n > 10 (smaller widths are exhaustive)")
      ->capture_default_str();
  am_cmd->add_option("--seed", am.seed, "Seed for sampled pairs")->capture_default_str();

  detail::SimArgs sim;
  auto* sim_cmd = app.add_subcommand("sim", "Simulate one random layer");
  sim_cmd->add_option("--bits", sim.bits, "Operand width n")
      ->check(CLI::Range(kMinBits, kMaxBits))
      ->capture_default_str();
  sim_cmd->add_option("--hidden", sim.hidden, "Hidden size N")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sim_cmd->add_option("--input-dim", sim.input_dim, "Input size M (default N)")
      ->check(CLI::PositiveNumber);
  sim_cmd->add_option("--timesteps", sim.timesteps, "Time steps T")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "Seed")->capture_default_str();
  sim_cmd->add_flag("--no-pipeline", sim.no_pipeline, "Use the sequential schedule");
  sim_cmd->add_flag("--zero", sim.zero, "All-zero weights, biases and inputs");
  sim_cmd->add_option("--trace", sim.trace_path, "Write per-state cycle records");

  detail::SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Pipelined vs sequential speedup grid");
  sweep_cmd->add_option("--bits", sw.bits, "Widths")
      ->delimiter(',')
      ->check(CLI::Range(kMinBits, kMaxBits))
      ->capture_default_str();
  sweep_cmd->add_option("--hidden", sw.hidden, "Hidden sizes")
      ->delimiter(',')
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sweep_cmd->add_option("--timesteps", sw.timesteps, "Sequence lengths")
      ->delimiter(',')
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sweep_cmd->add_option("--seed", sw.seed, "Seed")->capture_default_str();
  sweep_cmd->add_option("--out", sw.out_path, "Report path (default stdout)");

  detail::AccuracyArgs acc;
  auto* acc_cmd = app.add_subcommand("accuracy", "MSE and relative error reports");
  acc_cmd->add_option("--bits-list", acc.bits, "Widths")
      ->delimiter(',')
      ->check(CLI::Range(kMinBits, kMaxBits))
      ->capture_default_str();
  acc_cmd->add_option("--timesteps", acc.timesteps, "Time steps for the MSE series")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  acc_cmd->add_option("--hidden", acc.hidden, "Hidden size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  acc_cmd->add_option("--samples", acc.samples, "Samples per relative-error level")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  acc_cmd->add_option("--seed", acc.seed, "Seed")->capture_default_str();
  acc_cmd->add_option("--out", acc.out_dir, "Output directory")->capture_default_str();

  detail::GenerateArgs gen;
  auto* gen_cmd = app.add_subcommand("generate", "Generate text with a character LSTM");
  gen_cmd->add_option("--weights", gen.weights, "Weight file")
      ->required()
      ->check(CLI::ExistingFile);
  gen_cmd->add_option("--vocab", gen.vocab, "Vocabulary file")
      ->required()
      ->check(CLI::ExistingFile);
  gen_cmd->add_option("--prime", gen.gen.prime, "Prime text")->required();
  gen_cmd->add_option("--length", gen.gen.length, "Characters to generate")
      ->capture_default_str();
  gen_cmd->add_option("--top-k", gen.gen.top_k, "Sample from the k most likely")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen_cmd->add_option("--temperature", gen.gen.temperature, "Softmax temperature")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.gen.seed, "Seed")->capture_default_str();
  gen_cmd->add_option("--bits", gen.bits, "Operand width n")
      ->check(CLI::Range(kMinBits, kMaxBits))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    if (e.get_exit_code() != 0) {
      const CLI::App* failed = &app;
      for (CLI::App* sub : app.get_subcommands()) failed = sub;
      err << failed->help();
    }
    return e.get_exit_code() == 0 ? kOk : kUsage;
  }

  try {
    if (*am_cmd) return detail::am_check(am, out);
    if (*sim_cmd) return detail::sim(sim, out, err);
    if (*sweep_cmd) return detail::sweep(sw, out);
    if (*acc_cmd) return detail::accuracy(acc, out);
    if (*gen_cmd) return detail::generate(gen, out, err);
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

}  // namespace elsa::cli
