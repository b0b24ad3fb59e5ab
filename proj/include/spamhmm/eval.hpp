#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "spamhmm/datamodel.hpp"
#include "spamhmm/lhmm.hpp"

namespace spamhmm {

/// Seed-keyed shuffle then contiguous split; the first (n mod k) folds get one extra item.
std::vector<std::vector<std::string>> kfold_split(std::vector<std::string> ids, std::size_t k, std::uint64_t seed);

// Confusion counts with spam as the positive class.
struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t total() const { return tp + fp + fn + tn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct Metrics {
  ConfusionCounts counts;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;  // no positive predictions; precision reported as 0
  bool recall_undefined = false;     // no positive labels; recall reported as 0
};

Metrics metrics_from_counts(const ConfusionCounts& c);
/// Throws InsufficientDataError on empty input, DomainError on length mismatch.
Metrics classification_metrics(std::span<const Label> predicted, std::span<const Label> truth);

struct CrossValidationConfig {
  std::size_t folds = 5;
  std::uint64_t seed = 1;
  LhmmConfig model;
  unsigned threads = 1;  // folds run in parallel; output is identical for any value
};

struct CrossValidationReport {
  std::vector<Metrics> folds;
  Metrics mean;            // unweighted mean of per-fold metrics (counts field holds pooled counts)
  ConfusionCounts pooled;
  std::uint64_t seed_used = 0;  // split seed after stratification retries
  int attempts = 0;
};

/// k-fold cross-validation of the labeled HMM over the labeled users of ds.
/// Splits are re-drawn (up to 10 times) until every training part holds both
/// classes; otherwise throws InsufficientDataError.
CrossValidationReport cross_validate(const Dataset& ds, const CrossValidationConfig& config = {});
CrossValidationReport cross_validate(std::span<const UserSequence> sequences, const CrossValidationConfig& config = {});

void write_report_text(std::ostream& out, const CrossValidationReport& r);
void write_report_csv(std::ostream& out, const CrossValidationReport& r);

}  // namespace spamhmm
