#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spamhmm/coburst.hpp"
#include "spamhmm/datamodel.hpp"

namespace spamhmm {

// Undirected weighted graph in adjacency-list form. Self-loops are only
// produced internally by Louvain aggregation; loop weight counts twice in the
// degree, matching A_ii = 2w.
class WeightedGraph {
 public:
  struct Arc {
    std::size_t to;
    double weight;
  };

  explicit WeightedGraph(std::size_t n = 0) : adj_(n), loops_(n, 0.0) {}
  static WeightedGraph from_user_graph(const UserGraph& g);

  /// Adds an undirected edge; u == v adds a self-loop. Weight must be > 0.
  void add_edge(std::size_t u, std::size_t v, double w);

  std::size_t size() const { return adj_.size(); }
  const std::vector<Arc>& neighbors(std::size_t u) const { return adj_[u]; }
  double loop(std::size_t u) const { return loops_[u]; }
  double degree(std::size_t u) const;
  /// Sum of all degrees (2m).
  double total_weight() const;

 private:
  std::vector<std::vector<Arc>> adj_;
  std::vector<double> loops_;
};

/// Node -> community id, ids compacted to 0..k-1 in order of first appearance.
using Clustering = std::vector<std::size_t>;

std::size_t cluster_count(std::span<const std::size_t> clustering);
Clustering canonical_clustering(std::span<const std::size_t> clustering);

/// Newman-Girvan modularity at resolution 1. Throws DomainError on a graph with zero total weight.
double modularity(const WeightedGraph& g, std::span<const std::size_t> clustering);

struct LouvainResult {
  Clustering clustering;
  std::vector<double> level_modularity;  // modularity after each aggregation level
};

/// Multi-level Louvain: local moving followed by aggregation until no move
/// improves modularity by more than 1e-12. Visiting order is a seed-keyed
/// shuffle of node order, so the result is deterministic given the seed.
LouvainResult louvain_levels(const WeightedGraph& g, std::uint64_t seed);
Clustering louvain(const WeightedGraph& g, std::uint64_t seed);

/// Class id per node; nullopt marks an unlabeled node, excluded from the metrics.
using LabelAssignment = std::vector<std::optional<std::size_t>>;

struct ClusterQuality {
  double purity = 0.0;
  double entropy = 0.0;  // bits
  std::size_t n_clusters = 0;
  std::size_t n_labeled = 0;
};

double purity(std::span<const std::size_t> clustering, std::span<const std::optional<std::size_t>> labels);
double entropy(std::span<const std::size_t> clustering, std::span<const std::optional<std::size_t>> labels);
ClusterQuality cluster_quality(std::span<const std::size_t> clustering,
                               std::span<const std::optional<std::size_t>> labels);

/// Labels graph nodes from user labels: spam -> 0, genuine -> 1, unknown -> nullopt.
LabelAssignment label_nodes(const std::vector<std::string>& nodes, const std::map<std::string, Label>& labels);

/// TSV "user_id<TAB>cluster_id" sorted by user id (nodes are already sorted).
void write_clustering_tsv(std::ostream& out, const std::vector<std::string>& nodes, std::span<const std::size_t> clustering);
void write_quality(std::ostream& out, const ClusterQuality& q);

}  // namespace spamhmm
