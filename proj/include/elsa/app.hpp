#pragma once

// Character-level language model on top of the accelerator datapath: stacked
// LSTM layers, a real-valued FC layer and softmax, with text weight and
// vocabulary files.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "elsa/error.hpp"
#include "elsa/fxp.hpp"
#include "elsa/layer.hpp"
#include "elsa/matrix.hpp"
#include "elsa/rng.hpp"
#include "elsa/sched.hpp"
#include "elsa/workload.hpp"

namespace elsa {

struct NetworkSpec {
  std::vector<char> vocab;  // class index -> character
  std::vector<LayerParams> layers;
  Matrix<double> fc;  // V x N_last
  std::vector<double> fc_bias;
  int bits = 8;
  int guard = kDefaultGuardBits;
  std::size_t clamped = 0;  // weights and biases clamped while quantizing

  std::size_t vocab_size() const { return vocab.size(); }

  std::optional<std::size_t> index_of(char c) const {
    const auto it = std::find(vocab.begin(), vocab.end(), c);
    if (it == vocab.end()) return std::nullopt;
    return static_cast<std::size_t>(it - vocab.begin());
  }
};

inline void validate(const NetworkSpec& net) {
  require(!net.vocab.empty(), "network: empty vocabulary");
  require(!net.layers.empty(), "network: no LSTM layers");
  std::size_t in = net.vocab.size();
  for (const LayerParams& p : net.layers) {
    validate(p);
    require(p.input_dim == in, "network: layer dimensions do not chain");
    require(p.bits == net.bits && p.guard == net.guard,
            "network: layer width differs from network");
    in = p.hidden_dim;
  }
  require(net.fc.rows() == net.vocab.size() && net.fc.cols() == in,
          "network: FC shape must be V x N");
  require(net.fc_bias.size() == net.vocab.size(), "network: FC bias length must be V");
}

// ---------------------------------------------------------------------------
// Vocabulary files

namespace app_detail {

inline std::string escape_char(char c) {
  switch (c) {
    case '\n': return "\\n";
    case '\t': return "\\t";
    case '\\': return "\\\\";
    case ' ': return "\\s";
    default: return std::string(1, c);
  }
}

inline char unescape_line(const std::string& line, std::size_t line_no) {
  if (line.size() == 1 && line[0] != '\\') return line[0];
  if (line.size() == 2 && line[0] == '\\') {
    switch (line[1]) {
      case 'n': return '\n';
      case 't': return '\t';
      case '\\': return '\\';
      case 's': return ' ';
      default: break;
    }
  }
  throw FormatError("vocabulary entry must be one character or an escape, got '" +
                        line + "'",
                    line_no);
}

// Line-oriented tokenizer that remembers where it is for error messages.
class LineReader {
 public:
  LineReader(std::istream& in, std::string source)
      : in_(in), source_(std::move(source)) {}

  std::size_t line() const { return line_; }

  // Next non-blank line split on whitespace; `what` names the expected item.
  std::vector<std::string_view> next(const std::string& what) {
    while (std::getline(in_, current_)) {
      ++line_;
      if (!current_.empty() && current_.back() == '\r') current_.pop_back();
      auto tokens = split(current_);
      if (!tokens.empty()) return tokens;
    }
    throw FormatError(source_ + ": unexpected end of file, expected " + what,
                      line_ + 1);
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw FormatError(source_ + ": " + message, line_);
  }

  std::size_t parse_size(std::string_view tok, const std::string& what) const {
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
      fail("bad " + what + " '" + std::string(tok) + "'");
    return v;
  }

  double parse_real(std::string_view tok, const std::string& what) const {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size() || !std::isfinite(v))
      fail("bad value '" + std::string(tok) + "' in " + what);
    return v;
  }

 private:
  static std::vector<std::string_view> split(const std::string& s) {
    std::vector<std::string_view> out;
    std::size_t k = 0;
    while (k < s.size()) {
      while (k < s.size() && (s[k] == ' ' || s[k] == '\t')) ++k;
      const std::size_t start = k;
      while (k < s.size() && s[k] != ' ' && s[k] != '\t') ++k;
      if (k > start) out.emplace_back(s.data() + start, k - start);
    }
    return out;
  }

  std::istream& in_;
  std::string source_;
  std::string current_;
  std::size_t line_ = 0;
};

inline Matrix<double> read_matrix(LineReader& r, const std::string& name,
                                  std::size_t rows, std::size_t cols) {
  const auto head = r.next("matrix " + name);
  if (head.size() != 3 || head[0] != name)
    r.fail("expected header '" + name + " <rows> <cols>'");
  const std::size_t got_rows = r.parse_size(head[1], "row count of " + name);
  const std::size_t got_cols = r.parse_size(head[2], "column count of " + name);
  if (got_rows != rows || got_cols != cols)
    r.fail("matrix " + name + " is " + std::to_string(got_rows) + "x" +
           std::to_string(got_cols) + ", expected " + std::to_string(rows) + "x" +
           std::to_string(cols));
  Matrix<double> m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto toks = r.next("row " + std::to_string(i + 1) + " of " + name);
    if (toks.size() != cols)
      r.fail("matrix " + name + " row " + std::to_string(i + 1) + " has " +
             std::to_string(toks.size()) + " columns, expected " +
             std::to_string(cols));
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = r.parse_real(toks[j], name);
  }
  return m;
}

inline std::vector<double> read_vector(LineReader& r, const std::string& name,
                                       std::size_t len) {
  const auto head = r.next("vector " + name);
  if (head.size() != 2 || head[0] != name)
    r.fail("expected header '" + name + " <len>'");
  const std::size_t got = r.parse_size(head[1], "length of " + name);
  if (got != len)
    r.fail("vector " + name + " has length " + std::to_string(got) +
           ", expected " + std::to_string(len));
  const auto toks = r.next("values of " + name);
  if (toks.size() != len)
    r.fail("vector " + name + " has " + std::to_string(toks.size()) +
           " values, expected " + std::to_string(len));
  std::vector<double> v(len);
  for (std::size_t j = 0; j < len; ++j) v[j] = r.parse_real(toks[j], name);
  return v;
}

inline void write_real(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

inline void write_matrix(std::ostream& out, const std::string& name,
                         const Matrix<double>& m) {
  out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ' ';
      write_real(out, m(i, j));
    }
    out << '\n';
  }
}

inline void write_vector(std::ostream& out, const std::string& name,
                         const std::vector<double>& v) {
  out << name << ' ' << v.size() << '\n';
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (j > 0) out << ' ';
    write_real(out, v[j]);
  }
  out << '\n';
}

template <class T>
Matrix<double> to_real_matrix(const Matrix<T>& m) {
  Matrix<double> out(m.rows(), m.cols());
  for (std::size_t k = 0; k < m.data().size(); ++k)
    out.data()[k] = m.data()[k].to_real();
  return out;
}

template <class T>
std::vector<double> to_real_vector(const std::vector<T>& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const T& e : v) out.push_back(e.to_real());
  return out;
}

}  // namespace app_detail

inline std::vector<char> read_vocab(std::istream& in) {
  std::vector<char> vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const char c = app_detail::unescape_line(line, line_no);
    if (std::find(vocab.begin(), vocab.end(), c) != vocab.end())
      throw FormatError("duplicate vocabulary entry '" + app_detail::escape_char(c) +
                            "'",
                        line_no);
    vocab.push_back(c);
  }
  if (vocab.empty()) throw FormatError("vocabulary file is empty", 1);
  return vocab;
}

inline std::vector<char> load_vocab(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open vocabulary file " + path);
  return read_vocab(in);
}

inline void write_vocab(std::ostream& out, const std::vector<char>& vocab) {
  for (char c : vocab) out << app_detail::escape_char(c) << '\n';
}

inline void save_vocab(const std::string& path, const std::vector<char>& vocab) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write vocabulary file " + path);
  write_vocab(out, vocab);
}

// ---------------------------------------------------------------------------
// Weight files

inline constexpr int kWeightFormatVersion = 1;

inline NetworkSpec read_network(std::istream& weights, std::vector<char> vocab,
                                int bits, int guard = kDefaultGuardBits,
                                const std::string& source = "weights") {
  fxp_detail::check_bits(bits);
  fxp_detail::check_guard(guard);
  app_detail::LineReader r(weights, source);

  const auto header = r.next("header 'ELSAW 1'");
  if (header.size() != 2 || header[0] != "ELSAW")
    r.fail("missing 'ELSAW <version>' header");
  if (header[1] != std::to_string(kWeightFormatVersion))
    r.fail("unsupported weight format version " + std::string(header[1]) +
           " (expected " + std::to_string(kWeightFormatVersion) + ")");

  NetworkSpec net;
  net.vocab = std::move(vocab);
  net.bits = bits;
  net.guard = guard;
  const std::size_t v = net.vocab.size();
  std::size_t in_dim = v;

  for (;;) {
    const auto head = r.next("'lstm' or 'fc' section");
    if (head[0] == "fc") {
      if (head.size() != 3) r.fail("expected header 'fc <rows> <cols>'");
      if (net.layers.empty()) r.fail("no LSTM layers before 'fc'");
      const std::size_t rows = r.parse_size(head[1], "row count of fc");
      const std::size_t cols = r.parse_size(head[2], "column count of fc");
      if (rows != v || cols != in_dim)
        r.fail("matrix fc is " + std::to_string(rows) + "x" + std::to_string(cols) +
               ", expected " + std::to_string(v) + "x" + std::to_string(in_dim));
      net.fc = Matrix<double>(rows, cols);
      for (std::size_t i = 0; i < rows; ++i) {
        const auto toks = r.next("row " + std::to_string(i + 1) + " of fc");
        if (toks.size() != cols)
          r.fail("matrix fc row " + std::to_string(i + 1) + " has " +
                 std::to_string(toks.size()) + " columns, expected " +
                 std::to_string(cols));
        for (std::size_t j = 0; j < cols; ++j)
          net.fc(i, j) = r.parse_real(toks[j], "fc");
      }
      net.fc_bias = app_detail::read_vector(r, "b_fc", v);
      break;
    }
    if (head[0] != "lstm" || head.size() != 4)
      r.fail("expected 'lstm <index> <input_dim> <hidden_dim>' or 'fc <rows> <cols>'");
    const std::size_t index = r.parse_size(head[1], "layer index");
    if (index != net.layers.size() + 1)
      r.fail("layer index " + std::to_string(index) + " out of order");
    const std::size_t m = r.parse_size(head[2], "input_dim");
    const std::size_t n = r.parse_size(head[3], "hidden_dim");
    if (m != in_dim)
      r.fail("layer " + std::to_string(index) + " input_dim " + std::to_string(m) +
             " does not match the previous width " + std::to_string(in_dim));
    if (n == 0) r.fail("layer " + std::to_string(index) + " has hidden_dim 0");

    FloatLayer f;
    f.input_dim = m;
    f.hidden_dim = n;
    GateWeights<double, double>* gates[] = {&f.input, &f.output, &f.forget,
                                            &f.candidate};
    const char suffix[] = {'i', 'o', 'f', 'c'};
    for (int g = 0; g < 4; ++g) {
      gates[g]->wx = app_detail::read_matrix(r, std::string("W_x") + suffix[g], n, m);
      gates[g]->wh = app_detail::read_matrix(r, std::string("W_h") + suffix[g], n, n);
    }
    for (int g = 0; g < 4; ++g)
      gates[g]->bias = app_detail::read_vector(r, std::string("b_") + suffix[g], n);
    net.layers.push_back(quantize_layer(f, bits, guard, &net.clamped));
    in_dim = n;
  }
  return net;
}

inline NetworkSpec load_network(const std::string& weights_path,
                                const std::string& vocab_path, int bits,
                                int guard = kDefaultGuardBits) {
  std::vector<char> vocab = load_vocab(vocab_path);
  std::ifstream in(weights_path);
  if (!in) throw FormatError("cannot open weights file " + weights_path);
  return read_network(in, std::move(vocab), bits, guard, weights_path);
}

// Writes the quantized weights; reading them back at the same width gives
// identical LayerParams.
inline void write_network(std::ostream& out, const NetworkSpec& net) {
  validate(net);
  out << "ELSAW " << kWeightFormatVersion << '\n';
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    const LayerParams& p = net.layers[k];
    out << "lstm " << k + 1 << ' ' << p.input_dim << ' ' << p.hidden_dim << '\n';
    const GateWeights<Fraction, WideValue>* gates[] = {&p.input, &p.output,
                                                       &p.forget, &p.candidate};
    const char suffix[] = {'i', 'o', 'f', 'c'};
    for (int g = 0; g < 4; ++g) {
      app_detail::write_matrix(out, std::string("W_x") + suffix[g],
                               app_detail::to_real_matrix(gates[g]->wx));
      app_detail::write_matrix(out, std::string("W_h") + suffix[g],
                               app_detail::to_real_matrix(gates[g]->wh));
    }
    for (int g = 0; g < 4; ++g)
      app_detail::write_vector(out, std::string("b_") + suffix[g],
                               app_detail::to_real_vector(gates[g]->bias));
  }
  app_detail::write_matrix(out, "fc", net.fc);
  app_detail::write_vector(out, "b_fc", net.fc_bias);
}

inline void save_network(const std::string& path, const NetworkSpec& net) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write weights file " + path);
  write_network(out, net);
}

// Random network for demos and statistical baselines: LSTM weights uniform in
// [-1/sqrt(N), 1/sqrt(N)], FC weights uniform in [-fc_scale, fc_scale].
inline NetworkSpec random_network(std::vector<char> vocab,
                                  const std::vector<std::size_t>& hidden, int bits,
                                  SplitMix64& rng, double fc_scale = 1.0,
                                  int guard = kDefaultGuardBits) {
  require(!hidden.empty(), "random_network: no layers");
  NetworkSpec net;
  net.vocab = std::move(vocab);
  net.bits = bits;
  net.guard = guard;
  std::size_t in = net.vocab.size();
  for (std::size_t n : hidden) {
    net.layers.push_back(
        quantize_layer(random_float_layer(in, n, rng), bits, guard, &net.clamped));
    in = n;
  }
  net.fc = Matrix<double>(net.vocab.size(), in);
  for (double& w : net.fc.data()) w = rng.uniform(-fc_scale, fc_scale);
  net.fc_bias.resize(net.vocab.size());
  for (double& b : net.fc_bias) b = rng.uniform(-fc_scale, fc_scale);
  return net;
}

// ---------------------------------------------------------------------------
// Inference

struct NetworkState {
  std::vector<LayerState> layers;
};

inline NetworkState initial_state(const NetworkSpec& net) {
  NetworkState s;
  for (const LayerParams& p : net.layers)
    s.layers.push_back(LayerState::zero(p.hidden_dim, p.bits));
  return s;
}

struct StepOutput {
  std::vector<double> logits;
  std::vector<CycleTrace> traces;  // one per layer
};

inline std::vector<Fraction> one_hot(std::size_t size, std::size_t index, int bits) {
  require(index < size, "one_hot: index out of range");
  std::vector<Fraction> x(size, Fraction::zero(bits));
  x[index] = Fraction::max(bits);
  return x;
}

inline StepOutput forward_step(const NetworkSpec& net, NetworkState& state,
                               std::size_t char_index,
                               SimOptions options = {.keep_records = false}) {
  require(char_index < net.vocab_size(), "forward_step: character index out of range");
  require(state.layers.size() == net.layers.size(),
          "forward_step: state does not match the network");
  StepOutput out;
  std::vector<std::vector<Fraction>> x{one_hot(net.vocab_size(), char_index, net.bits)};
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    LayerRun run = run_pipelined(net.layers[k], x, state.layers[k], options);
    state.layers[k] = run.states.front();
    x.front() = state.layers[k].h;
    out.traces.push_back(std::move(run.trace));
  }
  const std::vector<Fraction>& h = x.front();
  out.logits = net.fc_bias;
  for (std::size_t v = 0; v < net.fc.rows(); ++v)
    for (std::size_t j = 0; j < net.fc.cols(); ++j)
      out.logits[v] += net.fc(v, j) * h[j].to_real();
  return out;
}

inline std::vector<double> softmax(const std::vector<double>& logits) {
  require(!logits.empty(), "softmax: empty input");
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(logits[k] - top);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

// Indices of the k largest logits, largest first; ties go to the lower index.
inline std::vector<std::size_t> top_k_indices(const std::vector<double>& logits,
                                              std::size_t k) {
  require(k >= 1 && k <= logits.size(), "top_k: k must be in [1, V]");
  std::vector<std::size_t> idx(logits.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return logits[a] > logits[b];
  });
  idx.resize(k);
  return idx;
}

struct GenerationConfig {
  std::string prime;
  std::size_t length = 0;
  std::size_t top_k = 1;
  std::uint64_t seed = 0;
  double temperature = 1.0;
};

inline std::size_t vocab_index(const NetworkSpec& net, char c) {
  const auto idx = net.index_of(c);
  if (!idx)
    throw InputError("character '" + app_detail::escape_char(c) +
                     "' is not in the vocabulary");
  return *idx;
}

// Feeds the prime text, then samples `length` characters. Each draw takes the
// top_k logits, scales them by 1/temperature, applies softmax and picks with
// one uniform01() draw against the cumulative probabilities. top_k = 1 never
// touches the generator. Returns only the continuation.
inline std::string generate(const NetworkSpec& net, const GenerationConfig& cfg) {
  validate(net);
  if (cfg.prime.empty()) throw InputError("prime text is empty");
  if (cfg.top_k < 1 || cfg.top_k > net.vocab_size())
    throw InputError("top_k must be in [1, " + std::to_string(net.vocab_size()) + "]");
  if (!(cfg.temperature > 0.0) || !std::isfinite(cfg.temperature))
    throw InputError("temperature must be a positive real");
  std::vector<std::size_t> prime;
  for (char c : cfg.prime) prime.push_back(vocab_index(net, c));

  SplitMix64 rng(cfg.seed);
  NetworkState state = initial_state(net);
  std::vector<double> logits;
  for (std::size_t idx : prime) logits = forward_step(net, state, idx).logits;

  std::string text;
  text.reserve(cfg.length);
  for (std::size_t k = 0; k < cfg.length; ++k) {
    const std::vector<std::size_t> top = top_k_indices(logits, cfg.top_k);
    std::size_t pick = top.front();
    if (top.size() > 1) {
      std::vector<double> scaled;
      scaled.reserve(top.size());
      for (std::size_t idx : top) scaled.push_back(logits[idx] / cfg.temperature);
      const std::vector<double> p = softmax(scaled);
      const double u = rng.uniform01();
      double acc = 0.0;
      pick = top.back();
      for (std::size_t r = 0; r < top.size(); ++r) {
        acc += p[r];
        if (u < acc) {
          pick = top[r];
          break;
        }
      }
    }
    text.push_back(net.vocab[pick]);
    if (k + 1 < cfg.length) logits = forward_step(net, state, pick).logits;
  }
  return text;
}

// Fraction of positions whose true next character ranks within the k largest
// logits (strictly larger logits count against it; ties do not).
inline double topk_accuracy(const NetworkSpec& net, const std::string& corpus,
                            std::size_t k) {
  validate(net);
  if (corpus.size() < 2)
    throw InputError("corpus needs at least two characters");
  if (k < 1 || k > net.vocab_size())
    throw InputError("k must be in [1, " + std::to_string(net.vocab_size()) + "]");
  std::vector<std::size_t> ids;
  ids.reserve(corpus.size());
  for (char c : corpus) ids.push_back(vocab_index(net, c));

  NetworkState state = initial_state(net);
  std::size_t hits = 0;
  for (std::size_t p = 0; p + 1 < ids.size(); ++p) {
    const std::vector<double> logits = forward_step(net, state, ids[p]).logits;
    const double target = logits[ids[p + 1]];
    const auto above = std::count_if(logits.begin(), logits.end(),
                                     [&](double l) { return l > target; });
    if (static_cast<std::size_t>(above) < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ids.size() - 1);
}

}  // namespace elsa
