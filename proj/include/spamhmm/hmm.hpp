#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spamhmm/datamodel.hpp"

namespace spamhmm {

/// Hidden posting mode. Slow = inactive (long gaps), Fast = active (bursts).
inline constexpr int kSlow = 0;
inline constexpr int kFast = 1;

// Two-mode HMM with exponential emissions. State 1 is the fast (active) mode,
// so a fitted model has rates[1] >= rates[0].
struct HmmParams {
  std::array<double, 2> pi{0.5, 0.5};
  std::array<std::array<double, 2>, 2> trans{{{0.9, 0.1}, {0.1, 0.9}}};
  std::array<double, 2> rates{1.0, 1.0};  // 1/seconds

  /// Throws DomainError unless pi and every row of trans are distributions and rates are positive and finite.
  void validate() const;
  /// True when the fast-state convention rates[1] >= rates[0] holds.
  bool ordered() const { return rates[1] >= rates[0]; }
  /// Relabels states 0 <-> 1, permuting pi, trans and rates together.
  HmmParams swapped() const;

  friend bool operator==(const HmmParams&, const HmmParams&) = default;
};

/// log(lambda) - lambda * delta. Throws DomainError for lambda <= 0 or delta < 0.
double exp_logpdf(double delta, double lambda);

/// log(exp(a) + exp(b)) without overflow; handles -inf operands.
double log_add(double a, double b);

struct StateSequence {
  std::vector<std::uint8_t> states;  // Q_1..Q_T
  double log_joint = 0.0;            // log P(Q_{1:T}, deltas) on the decoded path
};

struct ViterbiTable {
  std::vector<std::array<double, 2>> delta;        // log-domain best-path scores
  std::vector<std::array<std::uint8_t, 2>> back;   // back[i][j]: best predecessor of state j at step i
};

struct ForwardTable {
  std::vector<std::array<double, 2>> alpha;  // log P(deltas_{1:i}, Q_i = j)
  double log_likelihood() const;
};

ViterbiTable viterbi_table(std::span<const double> deltas, const HmmParams& params);
/// Most likely hidden path; ties go to state 0. Throws EmptySequenceError when deltas is empty.
StateSequence viterbi_decode(std::span<const double> deltas, const HmmParams& params);
StateSequence viterbi_decode(const UserSequence& seq, const HmmParams& params);

ForwardTable forward_table(std::span<const double> deltas, const HmmParams& params);
/// log P(deltas) with hidden states summed out. Throws EmptySequenceError when deltas is empty.
double forward_loglik(std::span<const double> deltas, const HmmParams& params);
double forward_loglik(const UserSequence& seq, const HmmParams& params);

/// Log of the joint probability of one explicit path, emission at step 1 included.
double path_log_joint(std::span<const double> deltas, std::span<const std::uint8_t> states, const HmmParams& params);

struct KMeans2Result {
  double mean_slow = 0.0;  // arithmetic mean of raw deltas in the slow cluster (cluster 0)
  double mean_fast = 0.0;  // same for the fast cluster (cluster 1)
  std::vector<std::uint8_t> assignments;
};

/// Two-cluster Lloyd's algorithm on log10(delta). Cluster 0 starts at the max,
/// cluster 1 at the min; ties in distance go to cluster 0. An empty cluster
/// reports the back-transformed centroid as its mean.
KMeans2Result kmeans2_log_intervals(std::span<const double> deltas);

struct BaumWelchConfig {
  int max_iter = 200;
  double tol = 1e-6;                 // relative change of the total log-likelihood
  bool fixed_transitions = false;    // keep trans at its initial value (uniform-transition ablation)
  std::optional<HmmParams> init;     // default: rates from kmeans2_log_intervals, sticky trans, uniform pi
  unsigned threads = 1;              // 0 = hardware concurrency; result does not depend on it
};

struct BaumWelchResult {
  HmmParams params;
  std::vector<double> log_likelihood;  // total log-likelihood of each evaluated iterate
  int iterations = 0;                  // number of M-steps applied
  bool converged = false;
};

/// Joint EM over all sequences with at least one delta. Throws
/// InsufficientDataError when there are no deltas at all.
BaumWelchResult baum_welch(std::span<const UserSequence> sequences, const BaumWelchConfig& config = {});
HmmParams baum_welch_fit(std::span<const UserSequence> sequences, const BaumWelchConfig& config = {});

/// Default EM starting point for a pool of deltas.
HmmParams initial_params(std::span<const UserSequence> sequences);

struct SampledSequence {
  std::vector<double> deltas;
  std::vector<std::uint8_t> states;
};

SampledSequence sample_sequence(const HmmParams& params, std::size_t length, std::uint64_t seed);

/// "pi = a b", "trans = a00 a01 a10 a11", "rates = l0 l1" with 17 significant digits.
void write_params(std::ostream& out, const HmmParams& params, const std::string& prefix = "");
HmmParams read_params(std::istream& in);
std::string format_double(double x);

using KeyValues = std::map<std::string, std::vector<double>>;
/// Parses "key = v1 v2 ..." lines; blank lines and '#' comments are skipped.
KeyValues read_key_values(std::istream& in);
HmmParams params_from_keys(const KeyValues& kv, const std::string& prefix = "");

}  // namespace spamhmm
