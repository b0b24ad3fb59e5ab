#include <doctest.h>

#include <cmath>
#include <sstream>

#include "spamhmm/cluster.hpp"
#include "spamhmm/error.hpp"
#include "spamhmm/rng.hpp"

using namespace spamhmm;

namespace {

WeightedGraph cliques(std::size_t count, std::size_t size) {
  WeightedGraph g(count * size);
  for (std::size_t c = 0; c < count; ++c)
    for (std::size_t i = 0; i < size; ++i)
      for (std::size_t j = i + 1; j < size; ++j) g.add_edge(c * size + i, c * size + j, 1.0);
  return g;
}

WeightedGraph planted(std::size_t block, double p_in, double p_out, std::uint64_t seed) {
  Rng rng(seed);
  WeightedGraph g(2 * block);
  for (std::size_t i = 0; i < 2 * block; ++i)
    for (std::size_t j = i + 1; j < 2 * block; ++j)
      if (rng.bernoulli((i < block) == (j < block) ? p_in : p_out)) g.add_edge(i, j, 1.0);
  return g;
}

LabelAssignment labels_of(std::initializer_list<int> xs) {
  LabelAssignment out;
  for (int x : xs) out.push_back(x < 0 ? std::nullopt : std::optional<std::size_t>(static_cast<std::size_t>(x)));
  return out;
}

}  // namespace

TEST_CASE("modularity hand values") {
  WeightedGraph two(4);
  two.add_edge(0, 1, 1.0);
  two.add_edge(2, 3, 1.0);
  const Clustering comps{0, 0, 1, 1};
  CHECK(modularity(two, comps) == doctest::Approx(0.5));

  const Clustering one{0, 0, 0, 0};
  CHECK(modularity(two, one) == doctest::Approx(0.0).epsilon(1e-15));

  WeightedGraph tri(3);
  tri.add_edge(0, 1, 1.0);
  tri.add_edge(1, 2, 1.0);
  tri.add_edge(0, 2, 1.0);
  const Clustering singles{0, 1, 2};
  CHECK(modularity(tri, singles) == doctest::Approx(-1.0 / 3.0));

  CHECK_THROWS_AS(modularity(WeightedGraph(3), singles), DomainError);
}

TEST_CASE("one cluster has zero modularity on random graphs") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = planted(10 + rng.below(20), 0.3, 0.1, rng.next());
    if (g.total_weight() == 0.0) continue;
    const Clustering all(g.size(), 0);
    CHECK(std::abs(modularity(g, all)) < 1e-12);
  }
}

TEST_CASE("self-loops count twice in the degree") {
  WeightedGraph g(2);
  g.add_edge(0, 0, 2.0);
  g.add_edge(0, 1, 1.0);
  CHECK(g.degree(0) == 5.0);
  CHECK(g.degree(1) == 1.0);
  CHECK(g.total_weight() == 6.0);
}

TEST_CASE("louvain separates disjoint cliques") {
  const auto g = cliques(2, 4);
  const auto c = louvain(g, 1);
  CHECK(cluster_count(c) == 2);
  CHECK(c == Clustering{0, 0, 0, 0, 1, 1, 1, 1});
}

TEST_CASE("louvain recovers planted blocks") {
  const auto g = planted(50, 0.3, 0.01, 2024);
  const auto c = louvain(g, 7);
  LabelAssignment truth;
  for (std::size_t i = 0; i < 100; ++i) truth.emplace_back(i < 50 ? 0 : 1);
  CHECK(purity(c, truth) >= 0.95);
}

TEST_CASE("louvain modularity never drops") {
  Rng rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const auto g = planted(5 + rng.below(40), 0.2 + 0.3 * rng.uniform(), 0.05 * rng.uniform(), rng.next());
    if (g.total_weight() == 0.0) continue;
    const auto res = louvain_levels(g, rng.next());
    Clustering singles(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) singles[i] = i;
    const double q0 = modularity(g, singles);
    REQUIRE(!res.level_modularity.empty());
    CHECK(res.level_modularity.front() >= q0 - 1e-12);
    for (std::size_t i = 1; i < res.level_modularity.size(); ++i)
      CHECK(res.level_modularity[i] >= res.level_modularity[i - 1] - 1e-12);
    CHECK(modularity(g, res.clustering) == doctest::Approx(res.level_modularity.back()));
    CHECK(res.clustering == canonical_clustering(res.clustering));
  }
}

TEST_CASE("louvain is deterministic per seed") {
  const auto g = planted(40, 0.2, 0.05, 5);
  CHECK(louvain(g, 42) == louvain(g, 42));
}

TEST_CASE("purity hand values") {
  const Clustering c{0, 0, 0, 1, 1};
  const auto y = labels_of({0, 0, 1, 1, 1});
  CHECK(purity(c, y) == doctest::Approx(0.8));
  CHECK(purity(c, labels_of({0, 0, 0, 1, 1})) == 1.0);

  Clustering one(10, 0);
  LabelAssignment seven_three;
  for (int i = 0; i < 10; ++i) seven_three.emplace_back(i < 7 ? 0 : 1);
  CHECK(purity(one, seven_three) == doctest::Approx(0.7));

  CHECK(purity(c, labels_of({0, 0, 1, -1, 1})) == doctest::Approx(0.75));
  CHECK_THROWS_AS(purity(c, labels_of({-1, -1, -1, -1, -1})), InsufficientDataError);
}

TEST_CASE("entropy hand values") {
  const Clustering c{0, 0, 0, 1, 1};
  CHECK(entropy(c, labels_of({0, 0, 0, 1, 1})) == 0.0);
  const Clustering one{0, 0, 0, 0};
  CHECK(entropy(one, labels_of({0, 0, 1, 1})) == doctest::Approx(1.0));
  CHECK(entropy(c, labels_of({0, 0, 1, 1, 1})) == doctest::Approx(0.550977500432694));
  CHECK_THROWS_AS(entropy(c, labels_of({-1, -1, -1, -1, -1})), InsufficientDataError);
}

TEST_CASE("quality metric properties") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(60);
    const std::size_t k = 1 + rng.below(8);
    Clustering c(n);
    LabelAssignment y(n);
    for (std::size_t i = 0; i < n; ++i) {
      c[i] = rng.below(k);
      y[i] = rng.bernoulli(0.1) ? std::nullopt : std::optional<std::size_t>(rng.below(3));
    }
    if (std::none_of(y.begin(), y.end(), [](const auto& v) { return v.has_value(); })) y[0] = 0;

    Clustering relabeled(n);
    for (std::size_t i = 0; i < n; ++i) relabeled[i] = 100 - c[i];
    CHECK(purity(relabeled, y) == doctest::Approx(purity(c, y)));
    CHECK(entropy(relabeled, y) == doctest::Approx(entropy(c, y)));

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    Clustering pc(n);
    LabelAssignment py(n);
    for (std::size_t i = 0; i < n; ++i) {
      pc[i] = c[order[i]];
      py[i] = y[order[i]];
    }
    CHECK(purity(pc, py) == doctest::Approx(purity(c, y)));
    CHECK(entropy(pc, py) == doctest::Approx(entropy(c, y)));

    Clustering refined(n);
    for (std::size_t i = 0; i < n; ++i) refined[i] = c[i] * 2 + rng.below(2);
    CHECK(purity(refined, y) >= purity(c, y) - 1e-12);

    Clustering singles(n);
    for (std::size_t i = 0; i < n; ++i) singles[i] = i;
    CHECK(purity(singles, y) == 1.0);
    CHECK(entropy(singles, y) == 0.0);
    const double pu = purity(c, y);
    CHECK(pu > 0.0);
    CHECK(pu <= 1.0);
    CHECK(entropy(c, y) >= 0.0);
  }
}

TEST_CASE("graph conversion and output") {
  UserGraph ug;
  ug.nodes = {"a", "b", "c"};
  ug.edges = {{0, 1, 3}, {1, 2, 1}};
  const auto g = WeightedGraph::from_user_graph(ug);
  CHECK(g.size() == 3);
  CHECK(g.degree(1) == 4.0);
  std::map<std::string, Label> labels{{"a", Label::Spam}, {"c", Label::Genuine}};
  const auto y = label_nodes(ug.nodes, labels);
  CHECK(y == LabelAssignment{0, std::nullopt, 1});

  std::ostringstream out;
  write_clustering_tsv(out, ug.nodes, Clustering{0, 0, 1});
  CHECK(out.str() == "user_id\tcluster_id\na\t0\nb\t0\nc\t1\n");
}
