#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "spamhmm/analysis.hpp"
#include "spamhmm/error.hpp"
#include "spamhmm/synth.hpp"

using namespace spamhmm;

namespace {

Review rv(std::string id, std::string user, std::string rest, std::int64_t t, std::optional<Label> label = {}) {
  return Review{std::move(id), std::move(user), std::move(rest), t, label};
}

Dataset user_with_times(const std::vector<std::int64_t>& times, const std::string& user = "u") {
  std::vector<Review> reviews;
  for (std::size_t i = 0; i < times.size(); ++i) reviews.push_back(rv(user + std::to_string(i), user, "s", times[i]));
  return Dataset(std::move(reviews));
}

}  // namespace

TEST_CASE("histogram hand binning") {
  const auto ds = user_with_times({0, 10, 20, 1020});
  const auto h = interarrival_histogram(ds, 2, false);
  CHECK(h.total == std::vector<std::size_t>{2, 1});
  CHECK(h.log10_edges.front() == doctest::Approx(1.0));
  CHECK(h.log10_edges.back() == doctest::Approx(3.0));
  CHECK_THROWS_AS(interarrival_histogram(user_with_times({5}), 2, false), InsufficientDataError);
  CHECK_THROWS_AS(interarrival_histogram(Dataset(std::vector<Review>{}), 2, false), InsufficientDataError);
}

TEST_CASE("histogram label split sums to the total") {
  SynthConfig cfg;
  cfg.n_genuine = 100;
  cfg.n_spammers = 30;
  cfg.n_groups = 3;
  const auto t = gen_dataset(cfg);
  const auto h = interarrival_histogram(t.dataset, 30, true);
  std::size_t sum = 0;
  for (std::size_t b = 0; b < h.total.size(); ++b) {
    CHECK(h.spam[b] + h.genuine[b] == h.total[b]);
    sum += h.total[b];
  }
  std::size_t deltas = 0;
  for (const auto& s : build_user_sequences(t.dataset)) deltas += s.length();
  CHECK(sum == deltas);
  std::ostringstream out;
  write_histogram_csv(out, h);
  const std::string csv = out.str();
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 31);
}

TEST_CASE("histogram peaks") {
  CHECK(histogram_peaks({1, 3, 2, 2, 5, 0}) == std::vector<std::size_t>{1, 4});
  CHECK(histogram_peaks({4, 3, 3}) == std::vector<std::size_t>{0});
}

TEST_CASE("state means per user") {
  const auto ds = user_with_times({0, 100, 300});
  const auto ads = annotate_with(ds, {1, 1, 0});
  const auto rows = user_state_means(ads);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].mean_active == 100.0);
  CHECK(rows[0].mean_inactive == 200.0);

  const auto active = user_state_means(annotate_with(ds, {1, 1, 1}));
  CHECK_FALSE(active[0].mean_inactive.has_value());
  CHECK(active[0].mean_active == 150.0);
}

TEST_CASE("genuine active intervals are longer than spam ones") {
  const auto t = gen_dataset(SynthConfig{});
  const auto rows = user_state_means(annotate_with(t.dataset, t.true_state));
  double sum[2] = {0, 0};
  int n[2] = {0, 0};
  for (const auto& r : rows) {
    if (!r.mean_active) continue;
    const int c = r.label == Label::Spam ? 0 : 1;
    sum[c] += *r.mean_active;
    ++n[c];
  }
  REQUIRE(n[0] > 0);
  REQUIRE(n[1] > 0);
  CHECK(sum[1] / n[1] > sum[0] / n[0]);
}

TEST_CASE("consecutive pairs") {
  const auto ds = Dataset([] {
    std::vector<Review> r;
    for (auto [i, t] : std::vector<std::pair<int, std::int64_t>>{{0, 0}, {1, 10}, {2, 30}, {3, 60}})
      r.push_back(rv("a" + std::to_string(i), "a", "s", t, Label::Spam));
    r.push_back(rv("b0", "b", "s", 0));
    r.push_back(rv("b1", "b", "s", 5));
    return r;
  }());
  const auto rows = consecutive_pairs(ds);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].previous == 10.0);
  CHECK(rows[0].current == 20.0);
  CHECK(rows[1].previous == 20.0);
  CHECK(rows[1].current == 30.0);
  CHECK(rows[0].label == Label::Spam);
  CHECK_THROWS_AS(consecutive_pairs(user_with_times({0, 1})), InsufficientDataError);

  SynthConfig cfg;
  cfg.n_genuine = 50;
  cfg.n_spammers = 10;
  cfg.n_groups = 2;
  const auto t = gen_dataset(cfg);
  std::size_t expected = 0;
  for (const auto& s : build_user_sequences(t.dataset)) expected += s.length() >= 2 ? s.length() - 1 : 0;
  CHECK(consecutive_pairs(t.dataset).size() == expected);
}

TEST_CASE("moving average and pearson") {
  CHECK(moving_average({1, 2, 3, 4}, 2) == std::vector<double>{1.5, 2.5, 3.5});
  CHECK(moving_average({1, 2}, 3).empty());
  const std::vector<double> x{1, 2, 4, 8, 3};
  std::vector<double> y, z;
  for (double v : x) {
    y.push_back(3 * v + 1);
    z.push_back(10 - v);
  }
  CHECK(pearson(x, y) == doctest::Approx(1.0));
  CHECK(pearson(x, z) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(pearson(x, std::vector<double>(5, 2.0)), DomainError);
}

TEST_CASE("restaurant correlation") {
  std::vector<Review> reviews;
  int id = 0;
  for (std::int64_t day = 0; day < 60; ++day) {
    const int k = static_cast<int>((day * 7) % 5);
    for (int j = 0; j < k; ++j) {
      reviews.push_back(rv(std::to_string(id++), "u", "a", day * 86400 + j));
      reviews.push_back(rv(std::to_string(id++), "v", "b", day * 86400 + j));
    }
    for (int j = 0; j < 4 - k; ++j) reviews.push_back(rv(std::to_string(id++), "w", "c", day * 86400 + 200 + j));
  }
  const Dataset ds(std::move(reviews));
  CHECK(restaurant_correlation(ds, "a", "b", 3) == doctest::Approx(1.0));
  CHECK(restaurant_correlation(ds, "a", "c", 3) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(restaurant_correlation(ds, "a", "zzz", 3), InsufficientDataError);
  CHECK_THROWS_AS(restaurant_correlation(ds, "a", "b", 59), InsufficientDataError);
}

TEST_CASE("co-targeted restaurants are correlated") {
  const auto t = gen_dataset(SynthConfig{});
  // Burst ids are consecutive per group; group g owns ids [8g, 8g + 8).
  std::map<int, std::map<std::string, std::size_t>> hits;
  std::map<std::string, std::set<int>> groups_at;
  for (std::size_t i = 0; i < t.dataset.size(); ++i) {
    if (t.burst[i] < 0) continue;
    const int g = t.burst[i] / 8;
    hits[g][t.dataset[i].restaurant_id]++;
    groups_at[t.dataset[i].restaurant_id].insert(g);
  }
  int tested = 0;
  for (const auto& [g, counts] : hits) {
    std::vector<std::pair<std::size_t, std::string>> ranked;
    for (const auto& [rest, c] : counts)
      if (groups_at[rest].size() == 1) ranked.emplace_back(c, rest);
    if (ranked.size() < 2) continue;
    std::sort(ranked.rbegin(), ranked.rend());
    CHECK(restaurant_correlation(t.dataset, ranked[0].second, ranked[1].second) >= 0.8);
    ++tested;
  }
  CHECK(tested >= 5);
}
