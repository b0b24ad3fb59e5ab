#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spamhmm/coburst.hpp"
#include "spamhmm/datamodel.hpp"

namespace spamhmm {

// Histogram of inter-arrival times on log10-spaced bins over [min, max].
struct IntervalHistogram {
  std::vector<double> log10_edges;  // bins + 1 edges
  std::vector<std::size_t> total;
  std::vector<std::size_t> spam;     // intervals ending at a spam review
  std::vector<std::size_t> genuine;  // intervals ending at a genuine review
  bool split_by_label = false;
};

/// Throws InsufficientDataError when the dataset has no interval; bins must be >= 1.
IntervalHistogram interarrival_histogram(const Dataset& ds, std::size_t bins, bool split_by_label);
void write_histogram_csv(std::ostream& out, const IntervalHistogram& h);

/// Indices of local maxima (strictly above the left neighbour, at least the right one).
std::vector<std::size_t> histogram_peaks(const std::vector<std::size_t>& counts);

struct UserStateMeans {
  std::string user_id;
  std::optional<double> mean_inactive;  // seconds, over intervals decoded as state 0
  std::optional<double> mean_active;    // seconds, over intervals decoded as state 1
  std::optional<Label> label;
};

std::vector<UserStateMeans> user_state_means(const StateAnnotatedDataset& ads);
void write_state_means_csv(std::ostream& out, const std::vector<UserStateMeans>& rows);

struct IntervalPair {
  std::string user_id;
  double previous = 0.0;
  double current = 0.0;
  std::optional<Label> label;
};

/// One row per consecutive interval pair of every user; throws InsufficientDataError when no user has two intervals.
std::vector<IntervalPair> consecutive_pairs(const Dataset& ds);
void write_pairs_csv(std::ostream& out, const std::vector<IntervalPair>& rows, bool split_by_label);

/// Zero-filled daily review counts of one restaurant over [first_day, last_day].
std::vector<double> daily_counts(const Dataset& ds, const std::string& restaurant, std::int64_t first_day,
                                 std::int64_t last_day);
/// Width-w moving average keeping only fully covered positions (length n - w + 1).
std::vector<double> moving_average(const std::vector<double>& series, std::size_t width);
/// Pearson r; throws DomainError when either series has zero variance.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

/// Pearson correlation of the smoothed daily review counts of two restaurants over their union date range.
double restaurant_correlation(const Dataset& ds, const std::string& rest_a, const std::string& rest_b,
                              std::size_t smooth_days = 14);

}  // namespace spamhmm
