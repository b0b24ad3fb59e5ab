#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spamhmm {

enum class Label { Spam, Genuine };

std::string_view to_string(Label label);
/// Accepts "spam" / "genuine" (case-insensitive); empty string maps to no label.
std::optional<Label> parse_label(std::string_view text);

struct Review {
  std::string review_id;
  std::string user_id;
  std::string restaurant_id;
  std::int64_t timestamp = 0;  // epoch seconds, UTC
  std::optional<Label> label;

  friend bool operator==(const Review&, const Review&) = default;
};

/// Smallest inter-arrival time in seconds; equal timestamps are clamped up to it.
inline constexpr double kMinDeltaSeconds = 1.0;

// Immutable review log. Reviews are held in canonical order (timestamp, then
// review_id), so two datasets built from the same records in any order compare
// equal and dump identically. Index lists inherit that order.
class Dataset {
 public:
  Dataset() = default;
  /// Validates and canonicalizes. Throws ValidationError on duplicate ids or negative timestamps.
  explicit Dataset(std::vector<Review> reviews);

  const std::vector<Review>& reviews() const { return reviews_; }
  std::size_t size() const { return reviews_.size(); }
  bool empty() const { return reviews_.empty(); }
  const Review& operator[](std::size_t i) const { return reviews_[i]; }

  /// user_id -> review indices, ascending by (timestamp, review_id).
  const std::map<std::string, std::vector<std::size_t>>& by_user() const { return by_user_; }
  const std::map<std::string, std::vector<std::size_t>>& by_restaurant() const { return by_restaurant_; }

  friend bool operator==(const Dataset& a, const Dataset& b) { return a.reviews_ == b.reviews_; }

 private:
  std::vector<Review> reviews_;
  std::map<std::string, std::vector<std::size_t>> by_user_;
  std::map<std::string, std::vector<std::size_t>> by_restaurant_;
};

enum class ReviewFormat { Csv, Jsonl };

/// CSV with header review_id,user_id,restaurant_id,timestamp,label (RFC 4180 quoting).
Dataset read_reviews_csv(std::istream& in);
/// One JSON object per line with the same field names as the CSV columns.
Dataset read_reviews_jsonl(std::istream& in);
Dataset read_reviews(std::istream& in, ReviewFormat format);
/// Picks JSONL for *.jsonl / *.json paths, CSV otherwise.
Dataset load_dataset(const std::string& path);

void write_reviews_csv(std::ostream& out, const Dataset& ds);
void write_reviews_jsonl(std::ostream& out, const Dataset& ds);

struct UserSequence {
  std::string user_id;
  std::vector<std::int64_t> timestamps;
  std::vector<double> deltas;  // deltas[i-1] = t_i - t_{i-1}, clamped to kMinDeltaSeconds
  std::optional<Label> label;

  std::size_t length() const { return deltas.size(); }
};

/// One sequence per user, ordered by user_id. The user label is the majority
/// of that user's review labels (ties go to Spam); unlabeled users get none.
std::vector<UserSequence> build_user_sequences(const Dataset& ds);

/// Majority label over a set of review labels, ties to Spam.
std::optional<Label> majority_label(const Dataset& ds, const std::vector<std::size_t>& review_indices);

/// user_id -> majority label, for users that have at least one labeled review.
std::map<std::string, Label> user_labels(const Dataset& ds);

// CSV helpers shared by the exporters.
std::string csv_escape(std::string_view field);
std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no);

}  // namespace spamhmm
