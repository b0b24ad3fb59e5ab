#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "spamhmm/analysis.hpp"
#include "spamhmm/coburst.hpp"
#include "spamhmm/error.hpp"
#include "spamhmm/synth.hpp"

using namespace spamhmm;

namespace {

SynthConfig small_config(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.n_genuine = 300;
  cfg.n_spammers = 100;
  cfg.n_restaurants = 60;
  cfg.reviews_per_user = 30;
  cfg.n_groups = 8;
  return cfg;
}

std::string dump(const SynthTruth& t) {
  std::ostringstream out;
  write_reviews_csv(out, t.dataset);
  write_truth_users_csv(out, t);
  write_truth_states_csv(out, t);
  return out.str();
}

}  // namespace

TEST_CASE("generation is deterministic per seed") {
  const auto a = gen_dataset(small_config(3));
  const auto b = gen_dataset(small_config(3));
  CHECK(dump(a) == dump(b));
  CHECK(dump(gen_dataset(small_config(4))) != dump(a));
}

TEST_CASE("label counts match the configuration") {
  const auto t = gen_dataset(small_config(5));
  const auto labels = user_labels(t.dataset);
  std::size_t spam = 0, genuine = 0;
  for (const auto& [user, label] : labels) (label == Label::Spam ? spam : genuine)++;
  CHECK(spam == 100);
  CHECK(genuine == 300);
  CHECK(t.true_state.size() == t.dataset.size());
  CHECK(t.burst.size() == t.dataset.size());
  for (const auto& [user, g] : t.group) CHECK(labels.at(user) == Label::Spam);
  for (auto s : t.true_state) CHECK(s <= 1);
  std::size_t raised = 0;
  for (const auto& [user, r] : t.raised) raised += r;
  CHECK(raised == 40);
}

TEST_CASE("group members sharing a burst window co-burst") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto t = gen_dataset(small_config(seed));
    const auto ads = annotate_with(t.dataset, t.true_state);
    const auto g = naive_coburst_oracle(ads);
    std::map<int, std::set<std::string>> active_in_burst;
    for (std::size_t i = 0; i < t.dataset.size(); ++i)
      if (t.burst[i] >= 0 && t.true_state[i] == 1) active_in_burst[t.burst[i]].insert(t.dataset[i].user_id);
    std::size_t pairs = 0;
    for (const auto& [burst, users] : active_in_burst)
      for (auto u = users.begin(); u != users.end(); ++u)
        for (auto v = std::next(u); v != users.end(); ++v) {
          REQUIRE(t.group.at(*u) == t.group.at(*v));
          CHECK(g.weight(*u, *v) >= 1);
          ++pairs;
        }
    CHECK(pairs >= 50);
  }
}

TEST_CASE("pooled intervals are bimodal") {
  const auto t = gen_dataset(SynthConfig{});
  const auto h = interarrival_histogram(t.dataset, 20, false);
  auto peaks = histogram_peaks(h.total);
  REQUIRE(peaks.size() >= 2);
  std::sort(peaks.begin(), peaks.end(), [&](auto a, auto b) { return h.total[a] > h.total[b]; });
  auto lo = std::min(peaks[0], peaks[1]);
  auto hi = std::max(peaks[0], peaks[1]);
  const double center_lo = (h.log10_edges[lo] + h.log10_edges[lo + 1]) / 2.0;
  const double center_hi = (h.log10_edges[hi] + h.log10_edges[hi + 1]) / 2.0;
  CHECK(center_hi - center_lo >= 1.0);
  CHECK(std::abs(center_lo - std::log10(720.0)) < 1.0);
  CHECK(std::abs(center_hi - std::log10(2073600.0)) < 1.0);
}

TEST_CASE("genuine per-state means follow the rates") {
  SynthConfig cfg;
  const auto t = gen_dataset(cfg);
  const auto& ds = t.dataset;
  std::array<double, 2> sum{};
  std::array<std::size_t, 2> count{};
  for (const auto& [user, idx] : ds.by_user()) {
    if (t.group.count(user)) continue;
    if (ds[idx[0]].label != Label::Genuine) continue;
    for (std::size_t i = 1; i < idx.size(); ++i) {
      const auto q = t.true_state[idx[i]];
      sum[q] += static_cast<double>(ds[idx[i]].timestamp - ds[idx[i - 1]].timestamp);
      ++count[q];
    }
  }
  for (int q = 0; q < 2; ++q) {
    REQUIRE(count[q] > 1000);
    CHECK(std::abs(sum[q] / static_cast<double>(count[q]) * cfg.params_genuine.rates[q] - 1.0) < 0.05);
  }
}

TEST_CASE("raised accounts farm before they harvest") {
  const auto t = gen_dataset(SynthConfig{});
  const auto& ds = t.dataset;
  std::array<std::size_t, 2> prefix{}, suffix{};
  for (const auto& [user, raised] : t.raised) {
    if (!raised) continue;
    const auto& idx = ds.by_user().at(user);
    const std::size_t farm = idx.size() / 2;
    for (std::size_t i = 1; i < idx.size(); ++i) (i < farm ? prefix : suffix)[t.true_state[idx[i]]]++;
  }
  CHECK(prefix[0] > prefix[1]);
  CHECK(suffix[1] > suffix[0]);
}

TEST_CASE("infeasible configurations are rejected") {
  SynthConfig cfg = small_config(1);
  cfg.n_groups = cfg.n_spammers + 1;
  CHECK_THROWS_AS(gen_dataset(cfg), ConfigError);
  cfg = small_config(1);
  cfg.campaign.burst_window_seconds = 60;
  CHECK_THROWS_AS(gen_dataset(cfg), ConfigError);
  cfg = small_config(1);
  cfg.raised_fraction = 1.5;
  CHECK_THROWS_AS(gen_dataset(cfg), ConfigError);
  cfg = small_config(1);
  cfg.params_spam = cfg.params_spam.swapped();
  CHECK_THROWS_AS(gen_dataset(cfg), ConfigError);
}

TEST_CASE("truth sidecars") {
  SynthConfig cfg = small_config(2);
  cfg.n_genuine = 2;
  cfg.n_spammers = 1;
  cfg.n_groups = 1;
  const auto t = gen_dataset(cfg);
  std::ostringstream users;
  write_truth_users_csv(users, t);
  const auto text = users.str();
  CHECK(text.rfind("user_id,label,group_id,is_raised\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  std::ostringstream states;
  write_truth_states_csv(states, t);
  CHECK(states.str().rfind("review_id,true_state,burst_id\n", 0) == 0);
}
