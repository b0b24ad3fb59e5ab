#include "spamhmm/eval.hpp"

#include <algorithm>
#include <map>
#include <ostream>

#include "spamhmm/error.hpp"
#include "spamhmm/parallel.hpp"
#include "spamhmm/rng.hpp"

namespace spamhmm {

std::vector<std::vector<std::string>> kfold_split(std::vector<std::string> ids, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k-fold split needs k >= 2");
  if (ids.size() < k) throw InsufficientDataError("fewer items than folds");
  std::sort(ids.begin(), ids.end());
  Rng rng(seed);
  rng.shuffle(ids);
  std::vector<std::vector<std::string>> folds(k);
  const std::size_t base = ids.size() / k, extra = ids.size() % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t n = base + (f < extra ? 1 : 0);
    folds[f].assign(ids.begin() + static_cast<std::ptrdiff_t>(pos), ids.begin() + static_cast<std::ptrdiff_t>(pos + n));
    pos += n;
  }
  return folds;
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

Metrics metrics_from_counts(const ConfusionCounts& c) {
  if (c.total() == 0) throw InsufficientDataError("no predictions to score");
  Metrics m;
  m.counts = c;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  m.precision_undefined = c.tp + c.fp == 0;
  m.recall_undefined = c.tp + c.fn == 0;
  m.precision = m.precision_undefined ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  m.recall = m.recall_undefined ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

Metrics classification_metrics(std::span<const Label> predicted, std::span<const Label> truth) {
  if (predicted.size() != truth.size()) throw DomainError("predictions and labels differ in length");
  if (predicted.empty()) throw InsufficientDataError("no predictions to score");
  ConfusionCounts c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] == Label::Spam, t = truth[i] == Label::Spam;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return metrics_from_counts(c);
}

namespace {

constexpr int kMaxSplitAttempts = 10;

bool trainable(std::span<const UserSequence> seqs, const std::vector<std::size_t>& members) {
  bool spam = false, genuine = false;
  for (auto i : members) {
    if (seqs[i].deltas.size() < 2) continue;
    (*seqs[i].label == Label::Spam ? spam : genuine) = true;
  }
  return spam && genuine;
}

}  // namespace

CrossValidationReport cross_validate(std::span<const UserSequence> sequences, const CrossValidationConfig& config) {
  std::vector<std::size_t> labeled;
  std::map<std::string, std::size_t> position;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    if (!sequences[i].label) continue;
    labeled.push_back(i);
    position.emplace(sequences[i].user_id, i);
    ids.push_back(sequences[i].user_id);
  }
  if (position.size() != ids.size()) throw ValidationError("duplicate user id among sequences");

  CrossValidationReport report;
  std::vector<std::vector<std::size_t>> test_sets, train_sets;
  for (int attempt = 0; attempt < kMaxSplitAttempts; ++attempt) {
    const std::uint64_t seed = attempt == 0 ? config.seed : derive_seed(config.seed, static_cast<std::uint64_t>(attempt));
    const auto folds = kfold_split(ids, config.folds, seed);
    test_sets.assign(folds.size(), {});
    train_sets.assign(folds.size(), {});
    bool ok = true;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      for (const auto& id : folds[f]) test_sets[f].push_back(position.at(id));
      std::sort(test_sets[f].begin(), test_sets[f].end());
      for (std::size_t g = 0; g < folds.size(); ++g)
        if (g != f)
          for (const auto& id : folds[g]) train_sets[f].push_back(position.at(id));
      std::sort(train_sets[f].begin(), train_sets[f].end());
      ok = ok && trainable(sequences, train_sets[f]);
    }
    report.attempts = attempt + 1;
    report.seed_used = seed;
    if (ok) break;
    if (attempt + 1 == kMaxSplitAttempts)
      throw InsufficientDataError("could not draw folds whose training parts contain both classes");
  }

  LhmmConfig model = config.model;
  model.em.threads = 1;
  report.folds.resize(test_sets.size());
  parallel_for(test_sets.size(), config.threads, [&](std::size_t f) {
    std::vector<UserSequence> train;
    train.reserve(train_sets[f].size());
    for (auto i : train_sets[f]) train.push_back(sequences[i]);
    const LhmmParams params = lhmm_fit(train, model);
    std::vector<Label> predicted, truth;
    for (auto i : test_sets[f]) {
      predicted.push_back(lhmm_classify(sequences[i], params).predicted);
      truth.push_back(*sequences[i].label);
    }
    report.folds[f] = classification_metrics(predicted, truth);
  });

  for (const auto& m : report.folds) {
    report.pooled += m.counts;
    report.mean.accuracy += m.accuracy;
    report.mean.precision += m.precision;
    report.mean.recall += m.recall;
    report.mean.f1 += m.f1;
    report.mean.precision_undefined = report.mean.precision_undefined || m.precision_undefined;
    report.mean.recall_undefined = report.mean.recall_undefined || m.recall_undefined;
  }
  const double k = static_cast<double>(report.folds.size());
  report.mean.accuracy /= k;
  report.mean.precision /= k;
  report.mean.recall /= k;
  report.mean.f1 /= k;
  report.mean.counts = report.pooled;
  return report;
}

CrossValidationReport cross_validate(const Dataset& ds, const CrossValidationConfig& config) {
  const auto sequences = build_user_sequences(ds);
  return cross_validate(std::span<const UserSequence>(sequences), config);
}

void write_report_text(std::ostream& out, const CrossValidationReport& r) {
  auto line = [&](const std::string& prefix, const Metrics& m) {
    out << prefix << "accuracy = " << format_double(m.accuracy) << '\n'
        << prefix << "precision = " << format_double(m.precision) << '\n'
        << prefix << "recall = " << format_double(m.recall) << '\n'
        << prefix << "f1 = " << format_double(m.f1) << '\n';
  };
  out << "folds = " << r.folds.size() << '\n' << "seed_used = " << r.seed_used << '\n' << "attempts = " << r.attempts << '\n';
  line("mean.", r.mean);
  out << "pooled.tp = " << r.pooled.tp << '\n'
      << "pooled.fp = " << r.pooled.fp << '\n'
      << "pooled.fn = " << r.pooled.fn << '\n'
      << "pooled.tn = " << r.pooled.tn << '\n';
  for (std::size_t f = 0; f < r.folds.size(); ++f) line("fold" + std::to_string(f + 1) + ".", r.folds[f]);
}

void write_report_csv(std::ostream& out, const CrossValidationReport& r) {
  out << "fold,accuracy,precision,recall,f1,tp,fp,fn,tn,precision_undefined,recall_undefined\n";
  auto row = [&](const std::string& name, const Metrics& m) {
    out << name << ',' << format_double(m.accuracy) << ',' << format_double(m.precision) << ','
        << format_double(m.recall) << ',' << format_double(m.f1) << ',' << m.counts.tp << ',' << m.counts.fp << ','
        << m.counts.fn << ',' << m.counts.tn << ',' << (m.precision_undefined ? 1 : 0) << ','
        << (m.recall_undefined ? 1 : 0) << '\n';
  };
  for (std::size_t f = 0; f < r.folds.size(); ++f) row(std::to_string(f + 1), r.folds[f]);
  row("mean", r.mean);
}

}  // namespace spamhmm
