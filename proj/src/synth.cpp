#include "spamhmm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "spamhmm/error.hpp"
#include "spamhmm/rng.hpp"

namespace spamhmm {

namespace {

// Stream ids for derive_seed.
constexpr std::uint64_t kRoleStream = 1;
constexpr std::uint64_t kGroupStream = 1ULL << 40;
constexpr std::uint64_t kUserStream = 2ULL << 40;
constexpr std::uint64_t kSampleStream = 3ULL << 40;
constexpr std::uint64_t kFarmStream = 4ULL << 40;

std::string padded(char prefix, std::size_t n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, n);
  return buf;
}

struct PlannedReview {
  double t;
  std::size_t restaurant;
  std::uint8_t state;
  int burst;
};

struct Group {
  std::vector<std::size_t> targets;
  std::vector<double> burst_start;
  int first_burst_id = 0;
  double start = 0.0;
};

// Reviews for a sequence of sampled intervals starting at time t0, restaurants uniform.
void emit_plain(std::vector<PlannedReview>& out, double t0, const SampledSequence& s, std::uint8_t first_state,
                std::size_t n_restaurants, Rng& rng) {
  double t = t0;
  out.push_back({t, static_cast<std::size_t>(rng.below(n_restaurants)), first_state, -1});
  for (std::size_t i = 0; i < s.deltas.size(); ++i) {
    t += s.deltas[i];
    out.push_back({t, static_cast<std::size_t>(rng.below(n_restaurants)), s.states[i], -1});
  }
}

}  // namespace

HmmParams default_spam_params() {
  HmmParams p;
  p.pi = {0.3, 0.7};
  p.trans = {{{0.5, 0.5}, {0.2, 0.8}}};
  p.rates = {1.0 / 2073600.0, 1.0 / 720.0};
  return p;
}

HmmParams default_genuine_params() {
  HmmParams p;
  p.pi = {0.7, 0.3};
  p.trans = {{{0.8, 0.2}, {0.4, 0.6}}};
  p.rates = {1.0 / (2.5 * 2073600.0), 1.0 / (2.5 * 720.0)};
  return p;
}

void SynthConfig::validate() const {
  if (n_genuine + n_spammers == 0) throw ConfigError("synthetic dataset needs at least one user");
  if (n_restaurants == 0) throw ConfigError("n_restaurants must be positive");
  if (reviews_per_user < 2) throw ConfigError("reviews_per_user must be at least 2");
  if (!(raised_fraction >= 0.0 && raised_fraction <= 1.0)) throw ConfigError("raised_fraction must lie in [0,1]");
  if (start_spread_seconds < 0 || start_time < 0) throw ConfigError("start time and spread must be non-negative");
  try {
    params_spam.validate();
    params_genuine.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("invalid generator parameters: ") + e.what());
  }
  if (!params_spam.ordered() || !params_genuine.ordered())
    throw ConfigError("generator parameters must have the fast rate in state 1");
  if (n_groups > n_spammers) throw ConfigError("more spam groups than spammers");
  if (n_groups > 0) {
    if (campaign.targets_per_group == 0 || campaign.targets_per_group > n_restaurants)
      throw ConfigError("targets_per_group must lie in [1, n_restaurants]");
    if (campaign.bursts_per_group == 0) throw ConfigError("bursts_per_group must be positive");
    const double fast_spacing = 1.0 / params_spam.rates[kFast];
    if (static_cast<double>(campaign.burst_window_seconds) < 2.0 * fast_spacing)
      throw ConfigError("burst window is shorter than two mean active-state intervals of the spam class");
  }
}

SynthTruth gen_dataset(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t n_users = cfg.n_genuine + cfg.n_spammers;
  const double slow_spam_mean = 1.0 / cfg.params_spam.rates[kSlow];
  const double window = static_cast<double>(cfg.campaign.burst_window_seconds);

  // Roles: user slot i is spammer iff role[i] < n_spammers.
  std::vector<std::size_t> role(n_users);
  std::iota(role.begin(), role.end(), std::size_t{0});
  {
    Rng rng(derive_seed(cfg.seed, kRoleStream));
    rng.shuffle(role);
  }
  const std::size_t n_raised =
      static_cast<std::size_t>(std::llround(cfg.raised_fraction * static_cast<double>(cfg.n_spammers)));

  std::vector<Group> groups(cfg.n_groups);
  int burst_ids = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    Rng rng(derive_seed(cfg.seed, kGroupStream + g));
    std::vector<std::size_t> all(cfg.n_restaurants);
    std::iota(all.begin(), all.end(), std::size_t{0});
    for (std::size_t k = 0; k < cfg.campaign.targets_per_group; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.below(all.size() - k));
      std::swap(all[k], all[j]);
      groups[g].targets.push_back(all[k]);
    }
    groups[g].start = static_cast<double>(cfg.start_time) + rng.uniform() * static_cast<double>(cfg.start_spread_seconds);
    double t = groups[g].start;
    groups[g].first_burst_id = burst_ids;
    for (std::size_t b = 0; b < cfg.campaign.bursts_per_group; ++b) {
      t += rng.exponential(1.0 / slow_spam_mean);
      groups[g].burst_start.push_back(t);
      t += window;
      ++burst_ids;
    }
  }

  SynthTruth truth;
  std::vector<Review> reviews;
  std::unordered_map<std::string, std::pair<std::uint8_t, int>> review_truth;
  std::size_t review_counter = 0;

  for (std::size_t slot = 0; slot < n_users; ++slot) {
    const std::string user = padded('u', slot + 1, 5);
    const bool spammer = role[slot] < cfg.n_spammers;
    Rng rng(derive_seed(cfg.seed, kUserStream + slot));
    const std::size_t n = 2 + static_cast<std::size_t>(rng.below(2 * cfg.reviews_per_user - 3));
    std::vector<PlannedReview> plan;

    if (!spammer) {
      const double t0 = static_cast<double>(cfg.start_time) + rng.uniform() * static_cast<double>(cfg.start_spread_seconds);
      const auto s = sample_sequence(cfg.params_genuine, n - 1, derive_seed(cfg.seed, kSampleStream + slot));
      emit_plain(plan, t0, s, s.states[0], cfg.n_restaurants, rng);
    } else {
      const std::size_t spam_index = role[slot];
      const bool raised = spam_index < n_raised;
      const Group* group = cfg.n_groups > 0 ? &groups[spam_index % cfg.n_groups] : nullptr;
      if (group) truth.group[user] = static_cast<int>(spam_index % cfg.n_groups);
      truth.raised[user] = raised;
      const double anchor = group ? group->start
                                  : static_cast<double>(cfg.start_time) +
                                        rng.uniform() * static_cast<double>(cfg.start_spread_seconds);

      std::size_t harvest = n;
      double t = anchor - rng.uniform() * slow_spam_mean;
      if (raised) {
        // Farming phase: genuine-looking activity ending one slow gap before the harvest starts.
        const std::size_t farm = n / 2;
        harvest = n - farm;
        std::vector<PlannedReview> farm_plan;
        if (farm >= 2) {
          const auto s = sample_sequence(cfg.params_genuine, farm - 1, derive_seed(cfg.seed, kFarmStream + slot));
          emit_plain(farm_plan, 0.0, s, s.states[0], cfg.n_restaurants, rng);
        } else {
          farm_plan.push_back({0.0, static_cast<std::size_t>(rng.below(cfg.n_restaurants)), kSlow, -1});
        }
        const double shift = t - rng.exponential(1.0 / slow_spam_mean) - farm_plan.back().t;
        for (auto& r : farm_plan) {
          r.t += shift;
          plan.push_back(r);
        }
      }

      std::vector<std::uint8_t> states;
      std::vector<double> deltas;
      if (harvest > 1) {
        const auto s = sample_sequence(cfg.params_spam, harvest - 1, derive_seed(cfg.seed, kSampleStream + slot));
        states = s.states;
        deltas = s.deltas;
      }
      auto is_fast = [&](std::size_t k) { return k < states.size() && states[k] == kFast; };

      std::size_t next_burst = 0;
      double window_end = -1.0;
      int burst_id = -1;
      std::size_t run_pos = 0;
      // Jumps the clock into the next burst window after time `now`; false when none is left.
      auto enter_burst = [&](double now) {
        if (!group) return false;
        while (next_burst < group->burst_start.size() && group->burst_start[next_burst] <= now) ++next_burst;
        if (next_burst == group->burst_start.size()) return false;
        t = group->burst_start[next_burst] + rng.uniform() * window / 2.0;
        window_end = group->burst_start[next_burst] + window;
        burst_id = group->first_burst_id + static_cast<int>(next_burst);
        ++next_burst;
        run_pos = 0;
        return true;
      };
      auto place = [&](std::uint8_t state) {
        PlannedReview r{t, static_cast<std::size_t>(rng.below(cfg.n_restaurants)), state, -1};
        if (burst_id >= 0 && t < window_end) {
          r.restaurant = group->targets[run_pos % group->targets.size()];
          r.burst = burst_id;
        }
        plan.push_back(r);
      };

      // The first harvest review carries Q_1, or the slow bridging gap after a farming phase.
      const std::uint8_t first_state = raised || states.empty() ? kSlow : states[0];
      if (is_fast(0)) enter_burst(t);
      place(first_state);
      for (std::size_t k = 0; k < deltas.size(); ++k) {
        const bool lead = !is_fast(k) && is_fast(k + 1);
        if (is_fast(k)) {
          t += deltas[k];
          ++run_pos;
          place(states[k]);
        } else if (lead && enter_burst(t + 1.0)) {
          place(states[k]);
        } else {
          t += deltas[k];
          burst_id = -1;
          place(states[k]);
        }
      }
    }

    std::int64_t prev = -1;
    const std::optional<Label> label = spammer ? Label::Spam : Label::Genuine;
    for (const auto& r : plan) {
      std::int64_t ts = std::max<std::int64_t>(std::llround(r.t), prev + 1);
      ts = std::max<std::int64_t>(ts, 0);
      prev = ts;
      Review rv;
      rv.review_id = padded('r', ++review_counter, 8);
      rv.user_id = user;
      rv.restaurant_id = padded('s', r.restaurant + 1, 4);
      rv.timestamp = ts;
      rv.label = label;
      review_truth.emplace(rv.review_id, std::pair{r.state, r.burst});
      reviews.push_back(std::move(rv));
    }
  }

  truth.dataset = Dataset(std::move(reviews));
  truth.true_state.reserve(truth.dataset.size());
  truth.burst.reserve(truth.dataset.size());
  for (const auto& r : truth.dataset.reviews()) {
    const auto& [state, burst] = review_truth.at(r.review_id);
    truth.true_state.push_back(state);
    truth.burst.push_back(burst);
  }
  return truth;
}

void write_truth_users_csv(std::ostream& out, const SynthTruth& truth) {
  out << "user_id,label,group_id,is_raised\n";
  const auto labels = user_labels(truth.dataset);
  for (const auto& [user, idx] : truth.dataset.by_user()) {
    auto g = truth.group.find(user);
    auto r = truth.raised.find(user);
    auto l = labels.find(user);
    out << csv_escape(user) << ',' << (l == labels.end() ? "" : to_string(l->second)) << ','
        << (g == truth.group.end() ? -1 : g->second) << ',' << (r != truth.raised.end() && r->second ? 1 : 0) << '\n';
  }
}

void write_truth_states_csv(std::ostream& out, const SynthTruth& truth) {
  out << "review_id,true_state,burst_id\n";
  for (std::size_t i = 0; i < truth.dataset.size(); ++i)
    out << csv_escape(truth.dataset[i].review_id) << ',' << static_cast<int>(truth.true_state[i]) << ','
        << truth.burst[i] << '\n';
}

}  // namespace spamhmm
