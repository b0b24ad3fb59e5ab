#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "spamhmm/datamodel.hpp"
#include "spamhmm/hmm.hpp"

namespace spamhmm {

/// Spam-class defaults: modes at 12 minutes and 24 days, mostly active.
HmmParams default_spam_params();
/// Genuine-class defaults: both modes 2.5x slower than spam, mostly inactive.
HmmParams default_genuine_params();

struct CampaignConfig {
  std::size_t targets_per_group = 3;
  std::int64_t burst_window_seconds = 2 * 24 * 3600;
  std::size_t bursts_per_group = 8;
};

// Knobs for the synthetic review ecosystem.
struct SynthConfig {
  std::uint64_t seed = 1;
  std::size_t n_genuine = 1600;
  std::size_t n_spammers = 400;
  std::size_t n_restaurants = 200;
  std::size_t reviews_per_user = 50;  // mean; per-user counts are uniform on [2, 2*mean - 2]
  HmmParams params_spam = default_spam_params();
  HmmParams params_genuine = default_genuine_params();
  std::size_t n_groups = 20;
  CampaignConfig campaign;
  double raised_fraction = 0.4;
  std::int64_t start_time = 1320105600;         // 2011-11-01 UTC
  std::int64_t start_spread_seconds = 365 * 24 * 3600;

  /// Throws ConfigError for infeasible settings.
  void validate() const;
};

struct SynthTruth {
  Dataset dataset;
  std::map<std::string, int> group;       // spammer -> group id; genuine users are absent
  std::map<std::string, bool> raised;     // spammer -> has a farming phase
  std::vector<std::uint8_t> true_state;   // per review, aligned with dataset.reviews()
  std::vector<int> burst;                 // per review: global burst id when posted inside a campaign window, else -1
};

SynthTruth gen_dataset(const SynthConfig& config);

/// user_id,label,group_id,is_raised (group_id -1 for users outside any group).
void write_truth_users_csv(std::ostream& out, const SynthTruth& truth);
/// review_id,true_state,burst_id.
void write_truth_states_csv(std::ostream& out, const SynthTruth& truth);

}  // namespace spamhmm
