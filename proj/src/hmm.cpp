#include "spamhmm/hmm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "spamhmm/error.hpp"
#include "spamhmm/parallel.hpp"
#include "spamhmm/rng.hpp"

namespace spamhmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kProbSlack = 1e-9;

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

struct LogParams {
  std::array<double, 2> log_pi;
  std::array<std::array<double, 2>, 2> log_trans;
  std::array<double, 2> log_rate;
  std::array<double, 2> rate;

  explicit LogParams(const HmmParams& p) {
    for (int j = 0; j < 2; ++j) {
      log_pi[j] = safe_log(p.pi[j]);
      log_rate[j] = std::log(p.rates[j]);
      rate[j] = p.rates[j];
      for (int k = 0; k < 2; ++k) log_trans[j][k] = safe_log(p.trans[j][k]);
    }
  }
  double emit(int j, double delta) const { return log_rate[j] - rate[j] * delta; }
};

void check_deltas(std::span<const double> deltas) {
  if (deltas.empty()) throw EmptySequenceError("sequence has no inter-arrival times");
  for (double d : deltas)
    if (!(d >= 0.0) || !std::isfinite(d)) throw DomainError("inter-arrival time must be finite and >= 0");
}

void check_distribution(std::span<const double> p, const char* what) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError(std::string(what) + " has an entry outside [0,1]");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kProbSlack) throw DomainError(std::string(what) + " does not sum to 1");
}

// Per-sequence sufficient statistics of one E-step.
struct SeqStats {
  double log_likelihood = 0.0;
  std::array<double, 2> first{};
  std::array<double, 2> occupancy{};
  std::array<double, 2> weighted_time{};
  std::array<std::array<double, 2>, 2> transitions{};
};

SeqStats expect(std::span<const double> deltas, const LogParams& lp) {
  const std::size_t n = deltas.size();
  std::vector<std::array<double, 2>> emit(n), alpha(n), beta(n);
  for (std::size_t i = 0; i < n; ++i)
    for (int j = 0; j < 2; ++j) emit[i][j] = lp.emit(j, deltas[i]);

  for (int j = 0; j < 2; ++j) alpha[0][j] = lp.log_pi[j] + emit[0][j];
  for (std::size_t i = 1; i < n; ++i)
    for (int j = 0; j < 2; ++j)
      alpha[i][j] = emit[i][j] + log_add(alpha[i - 1][0] + lp.log_trans[0][j], alpha[i - 1][1] + lp.log_trans[1][j]);

  beta[n - 1] = {0.0, 0.0};
  for (std::size_t i = n - 1; i-- > 0;)
    for (int k = 0; k < 2; ++k)
      beta[i][k] = log_add(lp.log_trans[k][0] + emit[i + 1][0] + beta[i + 1][0],
                           lp.log_trans[k][1] + emit[i + 1][1] + beta[i + 1][1]);

  SeqStats s;
  s.log_likelihood = log_add(alpha[n - 1][0], alpha[n - 1][1]);
  const double ll = s.log_likelihood;
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double g = std::exp(alpha[i][j] + beta[i][j] - ll);
      if (i == 0) s.first[j] = g;
      s.occupancy[j] += g;
      s.weighted_time[j] += g * deltas[i];
    }
    if (i == 0) continue;
    for (int k = 0; k < 2; ++k)
      for (int j = 0; j < 2; ++j)
        s.transitions[k][j] += std::exp(alpha[i - 1][k] + lp.log_trans[k][j] + emit[i][j] + beta[i][j] - ll);
  }
  return s;
}

}  // namespace

void HmmParams::validate() const {
  check_distribution(pi, "initial distribution");
  check_distribution(trans[0], "transition row 0");
  check_distribution(trans[1], "transition row 1");
  for (double r : rates)
    if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("emission rates must be positive and finite");
}

HmmParams HmmParams::swapped() const {
  HmmParams s;
  s.pi = {pi[1], pi[0]};
  s.rates = {rates[1], rates[0]};
  s.trans = {{{trans[1][1], trans[1][0]}, {trans[0][1], trans[0][0]}}};
  return s;
}

double exp_logpdf(double delta, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("rate must be positive");
  if (!(delta >= 0.0)) throw DomainError("inter-arrival time must be non-negative");
  return std::log(lambda) - lambda * delta;
}

double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (a == kNegInf) return kNegInf;
  return a + std::log1p(std::exp(b - a));
}

ViterbiTable viterbi_table(std::span<const double> deltas, const HmmParams& params) {
  check_deltas(deltas);
  params.validate();
  const LogParams lp(params);
  ViterbiTable t;
  t.delta.resize(deltas.size());
  t.back.resize(deltas.size());
  for (int j = 0; j < 2; ++j) {
    t.delta[0][j] = lp.log_pi[j] + lp.emit(j, deltas[0]);
    t.back[0][j] = 0;
  }
  for (std::size_t i = 1; i < deltas.size(); ++i) {
    for (int j = 0; j < 2; ++j) {
      const double from0 = t.delta[i - 1][0] + lp.log_trans[0][j];
      const double from1 = t.delta[i - 1][1] + lp.log_trans[1][j];
      const bool take1 = from1 > from0;
      t.back[i][j] = take1 ? 1 : 0;
      t.delta[i][j] = lp.emit(j, deltas[i]) + (take1 ? from1 : from0);
    }
  }
  return t;
}

StateSequence viterbi_decode(std::span<const double> deltas, const HmmParams& params) {
  const ViterbiTable t = viterbi_table(deltas, params);
  const std::size_t n = deltas.size();
  StateSequence out;
  out.states.resize(n);
  const auto& last = t.delta[n - 1];
  std::uint8_t q = last[1] > last[0] ? 1 : 0;
  out.log_joint = last[q];
  for (std::size_t i = n; i-- > 0;) {
    out.states[i] = q;
    q = t.back[i][q];
  }
  return out;
}

StateSequence viterbi_decode(const UserSequence& seq, const HmmParams& params) {
  return viterbi_decode(std::span<const double>(seq.deltas), params);
}

double ForwardTable::log_likelihood() const {
  if (alpha.empty()) throw EmptySequenceError("empty forward table");
  return log_add(alpha.back()[0], alpha.back()[1]);
}

ForwardTable forward_table(std::span<const double> deltas, const HmmParams& params) {
  check_deltas(deltas);
  params.validate();
  const LogParams lp(params);
  ForwardTable t;
  t.alpha.resize(deltas.size());
  for (int j = 0; j < 2; ++j) t.alpha[0][j] = lp.log_pi[j] + lp.emit(j, deltas[0]);
  for (std::size_t i = 1; i < deltas.size(); ++i)
    for (int j = 0; j < 2; ++j)
      t.alpha[i][j] = lp.emit(j, deltas[i]) +
                      log_add(t.alpha[i - 1][0] + lp.log_trans[0][j], t.alpha[i - 1][1] + lp.log_trans[1][j]);
  return t;
}

double forward_loglik(std::span<const double> deltas, const HmmParams& params) {
  return forward_table(deltas, params).log_likelihood();
}

double forward_loglik(const UserSequence& seq, const HmmParams& params) {
  return forward_loglik(std::span<const double>(seq.deltas), params);
}

double path_log_joint(std::span<const double> deltas, std::span<const std::uint8_t> states, const HmmParams& params) {
  check_deltas(deltas);
  if (states.size() != deltas.size()) throw DomainError("state path length differs from sequence length");
  const LogParams lp(params);
  double lj = lp.log_pi[states[0]] + lp.emit(states[0], deltas[0]);
  for (std::size_t i = 1; i < deltas.size(); ++i)
    lj += lp.log_trans[states[i - 1]][states[i]] + lp.emit(states[i], deltas[i]);
  return lj;
}

KMeans2Result kmeans2_log_intervals(std::span<const double> deltas) {
  if (deltas.size() < 2) throw InsufficientDataError("k-means needs at least 2 intervals");
  std::vector<double> x(deltas.size());
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0) || !std::isfinite(deltas[i])) throw DomainError("intervals must be positive for log scale");
    x[i] = std::log10(deltas[i]);
  }
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  std::array<double, 2> centroid{*hi, *lo};
  KMeans2Result res;
  res.assignments.assign(x.size(), 0);
  for (int iter = 0; iter < 1000; ++iter) {
    bool changed = iter == 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const std::uint8_t a = std::abs(x[i] - centroid[1]) < std::abs(x[i] - centroid[0]) ? 1 : 0;
      if (a != res.assignments[i]) changed = true;
      res.assignments[i] = a;
    }
    if (!changed) break;
    std::array<double, 2> sum{}, count{};
    for (std::size_t i = 0; i < x.size(); ++i) {
      sum[res.assignments[i]] += x[i];
      count[res.assignments[i]] += 1;
    }
    for (int c = 0; c < 2; ++c)
      if (count[c] > 0) centroid[c] = sum[c] / count[c];
  }
  std::array<double, 2> raw_sum{}, count{};
  for (std::size_t i = 0; i < x.size(); ++i) {
    raw_sum[res.assignments[i]] += deltas[i];
    count[res.assignments[i]] += 1;
  }
  std::array<double, 2> mean{};
  for (int c = 0; c < 2; ++c) mean[c] = count[c] > 0 ? raw_sum[c] / count[c] : 0.0;
  if (count[1] == 0) mean[1] = mean[0];
  if (count[0] == 0) mean[0] = mean[1];
  if (mean[0] < mean[1]) {
    std::swap(mean[0], mean[1]);
    for (auto& a : res.assignments) a = 1 - a;
  }
  res.mean_slow = mean[0];
  res.mean_fast = mean[1];
  return res;
}

HmmParams initial_params(std::span<const UserSequence> sequences) {
  std::vector<double> pooled;
  for (const auto& s : sequences) pooled.insert(pooled.end(), s.deltas.begin(), s.deltas.end());
  if (pooled.empty()) throw InsufficientDataError("no inter-arrival times to fit");
  HmmParams p;
  p.pi = {0.5, 0.5};
  p.trans = {{{0.9, 0.1}, {0.1, 0.9}}};
  if (pooled.size() == 1) {
    p.rates = {1.0 / pooled[0], 1.0 / pooled[0]};
  } else {
    const auto km = kmeans2_log_intervals(pooled);
    p.rates = {1.0 / km.mean_slow, 1.0 / km.mean_fast};
  }
  return p;
}

BaumWelchResult baum_welch(std::span<const UserSequence> sequences, const BaumWelchConfig& config) {
  std::vector<std::span<const double>> usable;
  for (const auto& s : sequences)
    if (!s.deltas.empty()) usable.emplace_back(s.deltas);
  if (usable.empty()) throw InsufficientDataError("no sequence has an inter-arrival time");
  for (auto d : usable) check_deltas(d);
  if (config.max_iter < 0) throw ConfigError("max_iter must be >= 0");
  if (!(config.tol >= 0.0)) throw ConfigError("tol must be >= 0");

  BaumWelchResult res;
  res.params = config.init ? *config.init : initial_params(sequences);
  res.params.validate();

  std::vector<SeqStats> stats(usable.size());
  for (int iter = 0;; ++iter) {
    const LogParams lp(res.params);
    parallel_for(usable.size(), config.threads, [&](std::size_t i) { stats[i] = expect(usable[i], lp); });

    SeqStats total;
    for (const auto& s : stats) {
      total.log_likelihood += s.log_likelihood;
      for (int j = 0; j < 2; ++j) {
        total.first[j] += s.first[j];
        total.occupancy[j] += s.occupancy[j];
        total.weighted_time[j] += s.weighted_time[j];
        for (int k = 0; k < 2; ++k) total.transitions[j][k] += s.transitions[j][k];
      }
    }
    res.log_likelihood.push_back(total.log_likelihood);
    if (iter > 0) {
      const double prev = res.log_likelihood[iter - 1];
      if (std::abs(total.log_likelihood - prev) <= config.tol * std::abs(prev)) {
        res.converged = true;
        break;
      }
    }
    if (iter == config.max_iter) break;

    HmmParams next = res.params;
    const double first_sum = total.first[0] + total.first[1];
    for (int j = 0; j < 2; ++j) {
      next.pi[j] = total.first[j] / first_sum;
      if (total.occupancy[j] > 0.0 && total.weighted_time[j] > 0.0)
        next.rates[j] = total.occupancy[j] / total.weighted_time[j];
    }
    if (!config.fixed_transitions) {
      for (int k = 0; k < 2; ++k) {
        const double row = total.transitions[k][0] + total.transitions[k][1];
        if (row > 0.0) next.trans[k] = {total.transitions[k][0] / row, total.transitions[k][1] / row};
      }
    }
    res.params = next;
    ++res.iterations;
  }
  if (!res.params.ordered()) res.params = res.params.swapped();
  return res;
}

HmmParams baum_welch_fit(std::span<const UserSequence> sequences, const BaumWelchConfig& config) {
  return baum_welch(sequences, config).params;
}

SampledSequence sample_sequence(const HmmParams& params, std::size_t length, std::uint64_t seed) {
  params.validate();
  if (length == 0) throw DomainError("sample length must be >= 1");
  Rng rng(seed);
  SampledSequence out;
  out.deltas.reserve(length);
  out.states.reserve(length);
  std::uint8_t q = rng.uniform() < params.pi[0] ? 0 : 1;
  for (std::size_t i = 0; i < length; ++i) {
    if (i > 0) q = rng.uniform() < params.trans[q][0] ? 0 : 1;
    out.states.push_back(q);
    out.deltas.push_back(rng.exponential(params.rates[q]));
  }
  return out;
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

void write_params(std::ostream& out, const HmmParams& p, const std::string& prefix) {
  out << prefix << "pi = " << format_double(p.pi[0]) << ' ' << format_double(p.pi[1]) << '\n';
  out << prefix << "trans = " << format_double(p.trans[0][0]) << ' ' << format_double(p.trans[0][1]) << ' '
      << format_double(p.trans[1][0]) << ' ' << format_double(p.trans[1][1]) << '\n';
  out << prefix << "rates = " << format_double(p.rates[0]) << ' ' << format_double(p.rates[1]) << '\n';
}

KeyValues read_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = values'");
    std::string key = line.substr(0, eq);
    key.erase(key.find_last_not_of(" \t") + 1);
    key.erase(0, key.find_first_not_of(" \t"));
    std::istringstream values(line.substr(eq + 1));
    std::vector<double> v;
    std::string tok;
    while (values >> tok) {
      double d = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), d);
      if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw ParseError(line_no, "not a number: '" + tok + "'");
      v.push_back(d);
    }
    if (key.empty()) throw ParseError(line_no, "empty key");
    if (!kv.emplace(key, std::move(v)).second) throw ParseError(line_no, "duplicate key '" + key + "'");
  }
  return kv;
}

HmmParams params_from_keys(const KeyValues& kv, const std::string& prefix) {
  auto get = [&](const std::string& key, std::size_t n) -> const std::vector<double>& {
    auto it = kv.find(prefix + key);
    if (it == kv.end()) throw ValidationError("parameter file is missing '" + prefix + key + "'");
    if (it->second.size() != n)
      throw ValidationError("'" + prefix + key + "' needs " + std::to_string(n) + " values");
    return it->second;
  };
  HmmParams p;
  const auto& pi = get("pi", 2);
  const auto& tr = get("trans", 4);
  const auto& rt = get("rates", 2);
  p.pi = {pi[0], pi[1]};
  p.trans = {{{tr[0], tr[1]}, {tr[2], tr[3]}}};
  p.rates = {rt[0], rt[1]};
  p.validate();
  return p;
}

HmmParams read_params(std::istream& in) { return params_from_keys(read_key_values(in)); }

}  // namespace spamhmm
