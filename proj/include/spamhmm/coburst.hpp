#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "spamhmm/datamodel.hpp"
#include "spamhmm/hmm.hpp"
#include "spamhmm/lhmm.hpp"

namespace spamhmm {

inline constexpr std::int64_t kDefaultOmegaSeconds = 3 * 24 * 3600;

struct CoburstConfig {
  std::int64_t omega = kDefaultOmegaSeconds;  // reviews co-burst when |t_i - t_j| < omega
  unsigned threads = 1;

  void validate() const;
};

/// Dataset plus the decoded hidden state of every review (same indexing as dataset.reviews()).
struct StateAnnotatedDataset {
  Dataset dataset;
  std::vector<std::uint8_t> states;
};

/// Decodes every user with Viterbi. Review i >= 1 of a user takes Q_i, the
/// first review takes Q_1, and a single-review user's review gets state 0.
StateAnnotatedDataset annotate_states(Dataset ds, const HmmParams& params, unsigned threads = 1);
/// Same, decoding each user with the class model the LHMM assigns it to.
StateAnnotatedDataset annotate_states(Dataset ds, const LhmmParams& params, unsigned threads = 1);
/// Attaches externally supplied states (e.g. synthetic ground truth).
StateAnnotatedDataset annotate_with(Dataset ds, std::vector<std::uint8_t> states);

/// Maps one user's decoded interval states onto that user's reviews.
std::vector<std::uint8_t> review_states_from_path(std::span<const std::uint8_t> path, std::size_t n_reviews);

// Read-only time index over one restaurant's reviews, sorted by timestamp.
class TimeIndex {
 public:
  struct Entry {
    std::int64_t timestamp;
    std::size_t review;
  };

  TimeIndex() = default;
  explicit TimeIndex(std::vector<Entry> entries);

  /// Entries with lo <= timestamp <= hi.
  std::span<const Entry> range(std::int64_t lo, std::int64_t hi) const;
  /// Entries strictly within omega of t.
  std::span<const Entry> within(std::int64_t t, std::int64_t omega) const { return range(t - omega + 1, t + omega - 1); }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<Entry> entries_;
};

struct UserEdge {
  std::size_t a = 0;  // indices into nodes, a < b
  std::size_t b = 0;
  std::uint64_t weight = 0;

  friend bool operator==(const UserEdge&, const UserEdge&) = default;
};

// Sparse symmetric user-user graph. Nodes are the users incident to at least
// one edge, sorted by id; edges are sorted by (a, b).
struct UserGraph {
  std::vector<std::string> nodes;
  std::vector<UserEdge> edges;

  std::uint64_t weight(const std::string& u, const std::string& v) const;
  friend bool operator==(const UserGraph&, const UserGraph&) = default;
};

using CoburstGraph = UserGraph;

/// Pair-counting via per-restaurant time indexes: each unordered pair of
/// active reviews from distinct users at one restaurant with |dt| < omega adds 1.
CoburstGraph build_coburst_graph(const StateAnnotatedDataset& ads, const CoburstConfig& config = {});

/// Literal double loop over all review pairs; reference for build_coburst_graph.
CoburstGraph naive_coburst_oracle(const StateAnnotatedDataset& ads, const CoburstConfig& config = {});

/// Weight = number of distinct restaurants reviewed by both users.
UserGraph build_coreview_graph(const Dataset& ds);

/// TSV with header "user_a<TAB>user_b<TAB>weight", rows sorted, user_a < user_b.
void write_graph_tsv(std::ostream& out, const UserGraph& g);
UserGraph read_graph_tsv(std::istream& in);

/// Review-level CSV: review_id,user_id,restaurant_id,timestamp,state.
void write_states_csv(std::ostream& out, const StateAnnotatedDataset& ads);

}  // namespace spamhmm
