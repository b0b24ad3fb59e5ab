#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "spamhmm/datamodel.hpp"
#include "spamhmm/hmm.hpp"

namespace spamhmm {

// Labeled HMM: one two-mode HMM per class plus the class prior P(spam).
struct LhmmParams {
  double prior = 0.5;  // P(Y = spam)
  HmmParams spam;
  HmmParams genuine;

  void validate() const;
  friend bool operator==(const LhmmParams&, const LhmmParams&) = default;
};

struct LhmmConfig {
  BaumWelchConfig em;
  /// Replace both transition matrices by [[0.5,0.5],[0.5,0.5]] and keep them fixed during EM.
  bool uniform_transitions = false;
};

struct ClassificationResult {
  std::string user_id;
  Label predicted = Label::Spam;
  double log_posterior_spam = 0.0;     // log P(deltas | spam) + log P(spam), unnormalized
  double log_posterior_genuine = 0.0;
  double spam_log_odds = 0.0;          // log_posterior_spam - log_posterior_genuine

  /// Normalized P(spam | deltas).
  double spam_probability() const;
};

/// Prior = share of spam among labeled users; each class is fitted by
/// Baum-Welch on its own users. Unlabeled sequences are ignored. Throws
/// InsufficientDataError naming the class that has no sequence of length >= 2.
LhmmParams lhmm_fit(std::span<const UserSequence> sequences, const LhmmConfig& config = {});

/// Bayes decision over the two class-conditional forward likelihoods. An
/// empty sequence is decided by the prior alone; log-odds ties go to Spam.
ClassificationResult lhmm_classify(const UserSequence& seq, const LhmmParams& params);

std::vector<ClassificationResult> lhmm_classify_all(std::span<const UserSequence> sequences,
                                                    const LhmmParams& params, unsigned threads = 1);

void write_lhmm_params(std::ostream& out, const LhmmParams& params);
LhmmParams lhmm_params_from_keys(const KeyValues& kv);
LhmmParams read_lhmm_params(std::istream& in);

}  // namespace spamhmm
