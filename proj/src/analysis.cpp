#include "spamhmm/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>

#include "spamhmm/error.hpp"
#include "spamhmm/hmm.hpp"

namespace spamhmm {

namespace {

constexpr std::int64_t kDay = 86400;

std::int64_t day_of(std::int64_t t) { return t / kDay; }

std::string optional_number(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

}  // namespace

IntervalHistogram interarrival_histogram(const Dataset& ds, std::size_t bins, bool split_by_label) {
  if (bins == 0) throw ConfigError("histogram needs at least one bin");
  struct Item {
    double x;
    std::optional<Label> label;
  };
  std::vector<Item> items;
  for (const auto& [user, idx] : ds.by_user())
    for (std::size_t i = 1; i < idx.size(); ++i) {
      const double d = std::max(static_cast<double>(ds[idx[i]].timestamp - ds[idx[i - 1]].timestamp), kMinDeltaSeconds);
      items.push_back({std::log10(d), ds[idx[i]].label});
    }
  if (items.empty()) throw InsufficientDataError("dataset has no inter-arrival interval");
  double lo = items[0].x, hi = items[0].x;
  for (const auto& it : items) {
    lo = std::min(lo, it.x);
    hi = std::max(hi, it.x);
  }
  IntervalHistogram h;
  h.split_by_label = split_by_label;
  h.total.assign(bins, 0);
  h.spam.assign(bins, 0);
  h.genuine.assign(bins, 0);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b <= bins; ++b) h.log10_edges.push_back(lo + width * static_cast<double>(b));
  h.log10_edges.back() = hi;
  for (const auto& it : items) {
    std::size_t b = width > 0.0 ? static_cast<std::size_t>(std::floor((it.x - lo) / width)) : 0;
    b = std::min(b, bins - 1);
    ++h.total[b];
    if (it.label) ++(*it.label == Label::Spam ? h.spam : h.genuine)[b];
  }
  return h;
}

void write_histogram_csv(std::ostream& out, const IntervalHistogram& h) {
  out << "bin,log10_lo,log10_hi,count";
  if (h.split_by_label) out << ",spam,genuine";
  out << '\n';
  for (std::size_t b = 0; b < h.total.size(); ++b) {
    out << b << ',' << format_double(h.log10_edges[b]) << ',' << format_double(h.log10_edges[b + 1]) << ','
        << h.total[b];
    if (h.split_by_label) out << ',' << h.spam[b] << ',' << h.genuine[b];
    out << '\n';
  }
}

std::vector<std::size_t> histogram_peaks(const std::vector<std::size_t>& counts) {
  std::vector<std::size_t> peaks;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const bool left = i == 0 || counts[i] > counts[i - 1];
    const bool right = i + 1 == counts.size() || counts[i] >= counts[i + 1];
    if (left && right && counts[i] > 0) peaks.push_back(i);
  }
  return peaks;
}

std::vector<UserStateMeans> user_state_means(const StateAnnotatedDataset& ads) {
  const Dataset& ds = ads.dataset;
  std::vector<UserStateMeans> out;
  for (const auto& [user, idx] : ds.by_user()) {
    std::array<double, 2> sum{};
    std::array<std::size_t, 2> count{};
    for (std::size_t i = 1; i < idx.size(); ++i) {
      const double d = std::max(static_cast<double>(ds[idx[i]].timestamp - ds[idx[i - 1]].timestamp), kMinDeltaSeconds);
      const std::uint8_t q = ads.states[idx[i]];
      sum[q] += d;
      ++count[q];
    }
    UserStateMeans m;
    m.user_id = user;
    m.label = majority_label(ds, idx);
    if (count[0] > 0) m.mean_inactive = sum[0] / static_cast<double>(count[0]);
    if (count[1] > 0) m.mean_active = sum[1] / static_cast<double>(count[1]);
    out.push_back(std::move(m));
  }
  return out;
}

void write_state_means_csv(std::ostream& out, const std::vector<UserStateMeans>& rows) {
  out << "user_id,mu_inactive,mu_active,label\n";
  for (const auto& r : rows)
    out << csv_escape(r.user_id) << ',' << optional_number(r.mean_inactive) << ',' << optional_number(r.mean_active)
        << ',' << (r.label ? to_string(*r.label) : "") << '\n';
}

std::vector<IntervalPair> consecutive_pairs(const Dataset& ds) {
  std::vector<IntervalPair> rows;
  for (const auto& seq : build_user_sequences(ds))
    for (std::size_t i = 1; i < seq.deltas.size(); ++i)
      rows.push_back({seq.user_id, seq.deltas[i - 1], seq.deltas[i], seq.label});
  if (rows.empty()) throw InsufficientDataError("no user has two consecutive intervals");
  return rows;
}

void write_pairs_csv(std::ostream& out, const std::vector<IntervalPair>& rows, bool split_by_label) {
  out << "user_id,previous,current";
  if (split_by_label) out << ",label";
  out << '\n';
  for (const auto& r : rows) {
    out << csv_escape(r.user_id) << ',' << format_double(r.previous) << ',' << format_double(r.current);
    if (split_by_label) out << ',' << (r.label ? to_string(*r.label) : "");
    out << '\n';
  }
}

std::vector<double> daily_counts(const Dataset& ds, const std::string& restaurant, std::int64_t first_day,
                                 std::int64_t last_day) {
  std::vector<double> counts(static_cast<std::size_t>(last_day - first_day + 1), 0.0);
  auto it = ds.by_restaurant().find(restaurant);
  if (it == ds.by_restaurant().end()) return counts;
  for (auto i : it->second) {
    const std::int64_t d = day_of(ds[i].timestamp);
    if (d >= first_day && d <= last_day) counts[static_cast<std::size_t>(d - first_day)] += 1.0;
  }
  return counts;
}

std::vector<double> moving_average(const std::vector<double>& series, std::size_t width) {
  if (width == 0) throw ConfigError("moving-average width must be positive");
  if (series.size() < width) return {};
  std::vector<double> out;
  out.reserve(series.size() - width + 1);
  double acc = 0.0;
  for (std::size_t i = 0; i < width; ++i) acc += series[i];
  out.push_back(acc / static_cast<double>(width));
  for (std::size_t i = width; i < series.size(); ++i) {
    acc += series[i] - series[i - width];
    out.push_back(acc / static_cast<double>(width));
  }
  return out;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("correlation needs two equal-length series of length >= 2");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw DomainError("correlation is undefined for a constant series");
  return sxy / std::sqrt(sxx * syy);
}

double restaurant_correlation(const Dataset& ds, const std::string& rest_a, const std::string& rest_b,
                              std::size_t smooth_days) {
  std::int64_t first = 0, last = 0;
  bool any = false;
  for (const auto* rest : {&rest_a, &rest_b}) {
    auto it = ds.by_restaurant().find(*rest);
    if (it == ds.by_restaurant().end() || it->second.empty())
      throw InsufficientDataError("restaurant '" + *rest + "' has no reviews");
    const std::int64_t lo = day_of(ds[it->second.front()].timestamp), hi = day_of(ds[it->second.back()].timestamp);
    first = any ? std::min(first, lo) : lo;
    last = any ? std::max(last, hi) : hi;
    any = true;
  }
  const auto span_days = static_cast<std::size_t>(last - first + 1);
  if (span_days < smooth_days + 2)
    throw InsufficientDataError("date range of " + std::to_string(span_days) + " days is too short for a " +
                                std::to_string(smooth_days) + "-day moving average");
  const auto a = moving_average(daily_counts(ds, rest_a, first, last), smooth_days);
  const auto b = moving_average(daily_counts(ds, rest_b, first, last), smooth_days);
  return pearson(a, b);
}

}  // namespace spamhmm
