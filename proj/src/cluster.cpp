#include "spamhmm/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

#include "spamhmm/error.hpp"
#include "spamhmm/hmm.hpp"
#include "spamhmm/rng.hpp"

namespace spamhmm {

WeightedGraph WeightedGraph::from_user_graph(const UserGraph& g) {
  WeightedGraph wg(g.nodes.size());
  for (const auto& e : g.edges) wg.add_edge(e.a, e.b, static_cast<double>(e.weight));
  return wg;
}

void WeightedGraph::add_edge(std::size_t u, std::size_t v, double w) {
  if (u >= adj_.size() || v >= adj_.size()) throw DomainError("edge endpoint out of range");
  if (!(w > 0.0)) throw DomainError("edge weight must be positive");
  if (u == v) {
    loops_[u] += w;
    return;
  }
  adj_[u].push_back({v, w});
  adj_[v].push_back({u, w});
}

double WeightedGraph::degree(std::size_t u) const {
  double d = 2.0 * loops_[u];
  for (const auto& a : adj_[u]) d += a.weight;
  return d;
}

double WeightedGraph::total_weight() const {
  double t = 0.0;
  for (std::size_t u = 0; u < size(); ++u) t += degree(u);
  return t;
}

Clustering canonical_clustering(std::span<const std::size_t> clustering) {
  std::map<std::size_t, std::size_t> ids;
  Clustering out(clustering.size());
  for (std::size_t i = 0; i < clustering.size(); ++i) {
    auto [it, fresh] = ids.emplace(clustering[i], ids.size());
    out[i] = it->second;
  }
  return out;
}

std::size_t cluster_count(std::span<const std::size_t> clustering) {
  std::vector<std::size_t> c(clustering.begin(), clustering.end());
  std::sort(c.begin(), c.end());
  return static_cast<std::size_t>(std::unique(c.begin(), c.end()) - c.begin());
}

double modularity(const WeightedGraph& g, std::span<const std::size_t> clustering) {
  if (clustering.size() != g.size()) throw DomainError("clustering does not cover every node");
  const double m2 = g.total_weight();
  if (!(m2 > 0.0)) throw DomainError("modularity is undefined for a graph with zero total weight");
  const Clustering c = canonical_clustering(clustering);
  const std::size_t k = cluster_count(c);
  std::vector<double> in(k, 0.0), tot(k, 0.0);
  for (std::size_t u = 0; u < g.size(); ++u) {
    tot[c[u]] += g.degree(u);
    in[c[u]] += 2.0 * g.loop(u);
    for (const auto& a : g.neighbors(u))
      if (c[a.to] == c[u]) in[c[u]] += a.weight;
  }
  double q = 0.0;
  for (std::size_t i = 0; i < k; ++i) q += in[i] / m2 - (tot[i] / m2) * (tot[i] / m2);
  return q;
}

namespace {

constexpr double kMinGain = 1e-12;

// Local moving phase on one level; fills comm and reports whether any node changed community.
bool local_moving(const WeightedGraph& g, double m2, Rng& rng, std::vector<std::size_t>& comm) {
  const std::size_t n = g.size();
  comm.resize(n);
  std::iota(comm.begin(), comm.end(), std::size_t{0});
  std::vector<double> deg(n), tot(n);
  for (std::size_t u = 0; u < n; ++u) tot[u] = deg[u] = g.degree(u);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);

  std::vector<double> link(n, 0.0);
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> touched;
  bool any = false;
  for (bool moved = true; moved;) {
    moved = false;
    for (auto u : order) {
      const std::size_t own = comm[u];
      const double ku = deg[u];
      touched.clear();
      touched.push_back(own);
      seen[own] = 1;
      for (const auto& a : g.neighbors(u)) {
        const std::size_t c = comm[a.to];
        if (!seen[c]) {
          seen[c] = 1;
          touched.push_back(c);
        }
        link[c] += a.weight;
      }
      tot[own] -= ku;
      auto score = [&](std::size_t c) { return link[c] - tot[c] * ku / m2; };
      std::size_t best = own;
      double best_score = score(own);
      for (auto c : touched) {
        const double s = score(c);
        // Moving u from `best` to c changes modularity by 2 (s - best_score) / m2.
        if (2.0 * (s - best_score) / m2 > kMinGain) {
          best = c;
          best_score = s;
        }
      }
      tot[best] += ku;
      comm[u] = best;
      if (best != own) moved = any = true;
      for (auto c : touched) {
        link[c] = 0.0;
        seen[c] = 0;
      }
    }
  }
  return any;
}

}  // namespace

LouvainResult louvain_levels(const WeightedGraph& g, std::uint64_t seed) {
  if (g.size() == 0) throw DomainError("louvain needs a non-empty graph");
  LouvainResult res;
  res.clustering.resize(g.size());
  std::iota(res.clustering.begin(), res.clustering.end(), std::size_t{0});
  const double m2 = g.total_weight();
  if (!(m2 > 0.0)) return res;

  Rng rng(seed);
  WeightedGraph level = g;
  while (true) {
    std::vector<std::size_t> comm;
    if (!local_moving(level, m2, rng, comm)) break;
    const Clustering compact = canonical_clustering(comm);
    const std::size_t k = cluster_count(compact);
    for (auto& c : res.clustering) c = compact[c];
    res.level_modularity.push_back(modularity(g, res.clustering));

    WeightedGraph next(k);
    std::map<std::pair<std::size_t, std::size_t>, double> between;
    std::vector<double> loops(k, 0.0);
    for (std::size_t u = 0; u < level.size(); ++u) {
      loops[compact[u]] += level.loop(u);
      for (const auto& a : level.neighbors(u)) {
        if (a.to < u) continue;
        const std::size_t cu = compact[u], cv = compact[a.to];
        if (cu == cv)
          loops[cu] += a.weight;
        else
          between[{std::min(cu, cv), std::max(cu, cv)}] += a.weight;
      }
    }
    for (std::size_t c = 0; c < k; ++c)
      if (loops[c] > 0.0) next.add_edge(c, c, loops[c]);
    for (const auto& [key, w] : between) next.add_edge(key.first, key.second, w);
    if (k == level.size()) break;
    level = std::move(next);
  }
  res.clustering = canonical_clustering(res.clustering);
  return res;
}

Clustering louvain(const WeightedGraph& g, std::uint64_t seed) { return louvain_levels(g, seed).clustering; }

namespace {

// counts[cluster][label] over labeled nodes.
std::vector<std::map<std::size_t, std::size_t>> contingency(std::span<const std::size_t> clustering,
                                                            std::span<const std::optional<std::size_t>> labels,
                                                            std::size_t& n_labeled) {
  if (clustering.size() != labels.size()) throw DomainError("clustering and labels differ in length");
  const Clustering c = canonical_clustering(clustering);
  std::vector<std::map<std::size_t, std::size_t>> table(cluster_count(c));
  n_labeled = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!labels[i]) continue;
    ++table[c[i]][*labels[i]];
    ++n_labeled;
  }
  if (n_labeled == 0) throw InsufficientDataError("no labeled node to score the clustering against");
  return table;
}

}  // namespace

double purity(std::span<const std::size_t> clustering, std::span<const std::optional<std::size_t>> labels) {
  std::size_t n = 0;
  const auto table = contingency(clustering, labels, n);
  std::size_t hit = 0;
  for (const auto& row : table) {
    std::size_t best = 0;
    for (const auto& [label, count] : row) best = std::max(best, count);
    hit += best;
  }
  return static_cast<double>(hit) / static_cast<double>(n);
}

double entropy(std::span<const std::size_t> clustering, std::span<const std::optional<std::size_t>> labels) {
  std::size_t n = 0;
  const auto table = contingency(clustering, labels, n);
  double h = 0.0;
  for (const auto& row : table) {
    std::size_t nk = 0;
    for (const auto& [label, count] : row) nk += count;
    if (nk == 0) continue;
    double hk = 0.0;
    for (const auto& [label, count] : row) {
      const double p = static_cast<double>(count) / static_cast<double>(nk);
      if (p > 0.0) hk -= p * std::log2(p);
    }
    h += static_cast<double>(nk) / static_cast<double>(n) * hk;
  }
  return h;
}

ClusterQuality cluster_quality(std::span<const std::size_t> clustering,
                               std::span<const std::optional<std::size_t>> labels) {
  ClusterQuality q;
  q.purity = purity(clustering, labels);
  q.entropy = entropy(clustering, labels);
  q.n_clusters = cluster_count(clustering);
  for (const auto& l : labels) q.n_labeled += l ? 1 : 0;
  return q;
}

LabelAssignment label_nodes(const std::vector<std::string>& nodes, const std::map<std::string, Label>& labels) {
  LabelAssignment out(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    auto it = labels.find(nodes[i]);
    if (it != labels.end()) out[i] = it->second == Label::Spam ? 0 : 1;
  }
  return out;
}

void write_clustering_tsv(std::ostream& out, const std::vector<std::string>& nodes,
                          std::span<const std::size_t> clustering) {
  std::vector<std::size_t> order(nodes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return nodes[a] < nodes[b]; });
  out << "user_id\tcluster_id\n";
  for (auto i : order) out << nodes[i] << '\t' << clustering[i] << '\n';
}

void write_quality(std::ostream& out, const ClusterQuality& q) {
  out << "purity = " << format_double(q.purity) << '\n'
      << "entropy = " << format_double(q.entropy) << '\n'
      << "n_clusters = " << q.n_clusters << '\n'
      << "n_labeled = " << q.n_labeled << '\n';
}

}  // namespace spamhmm
