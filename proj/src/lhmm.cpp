#include "spamhmm/lhmm.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "spamhmm/error.hpp"
#include "spamhmm/parallel.hpp"

namespace spamhmm {

namespace {

HmmParams fit_class(std::span<const UserSequence> sequences, Label label, const LhmmConfig& config) {
  std::vector<UserSequence> own;
  bool has_long = false;
  for (const auto& s : sequences) {
    if (s.label != label) continue;
    has_long = has_long || s.deltas.size() >= 2;
    own.push_back(s);
  }
  if (!has_long)
    throw InsufficientDataError("class '" + std::string(to_string(label)) +
                                "' has no user with at least two inter-arrival times");
  BaumWelchConfig em = config.em;
  if (config.uniform_transitions) {
    HmmParams init = em.init ? *em.init : initial_params(own);
    init.trans = {{{0.5, 0.5}, {0.5, 0.5}}};
    em.init = init;
    em.fixed_transitions = true;
  }
  return baum_welch_fit(own, em);
}

double safe_log(double p) { return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity(); }

}  // namespace

void LhmmParams::validate() const {
  if (!(prior >= 0.0 && prior <= 1.0)) throw DomainError("class prior must lie in [0,1]");
  spam.validate();
  genuine.validate();
}

double ClassificationResult::spam_probability() const { return 1.0 / (1.0 + std::exp(-spam_log_odds)); }

LhmmParams lhmm_fit(std::span<const UserSequence> sequences, const LhmmConfig& config) {
  std::size_t spam = 0, labeled = 0;
  for (const auto& s : sequences) {
    if (!s.label) continue;
    ++labeled;
    if (*s.label == Label::Spam) ++spam;
  }
  LhmmParams p;
  p.spam = fit_class(sequences, Label::Spam, config);
  p.genuine = fit_class(sequences, Label::Genuine, config);
  p.prior = static_cast<double>(spam) / static_cast<double>(labeled);
  return p;
}

ClassificationResult lhmm_classify(const UserSequence& seq, const LhmmParams& params) {
  params.validate();
  ClassificationResult r;
  r.user_id = seq.user_id;
  r.log_posterior_spam = safe_log(params.prior);
  r.log_posterior_genuine = safe_log(1.0 - params.prior);
  if (!seq.deltas.empty()) {
    r.log_posterior_spam += forward_loglik(seq, params.spam);
    r.log_posterior_genuine += forward_loglik(seq, params.genuine);
  }
  if (r.log_posterior_spam == r.log_posterior_genuine)
    r.spam_log_odds = 0.0;  // also covers -inf == -inf
  else
    r.spam_log_odds = r.log_posterior_spam - r.log_posterior_genuine;
  r.predicted = r.spam_log_odds >= 0.0 ? Label::Spam : Label::Genuine;
  return r;
}

std::vector<ClassificationResult> lhmm_classify_all(std::span<const UserSequence> sequences,
                                                    const LhmmParams& params, unsigned threads) {
  std::vector<ClassificationResult> out(sequences.size());
  parallel_for(sequences.size(), threads, [&](std::size_t i) { out[i] = lhmm_classify(sequences[i], params); });
  return out;
}

void write_lhmm_params(std::ostream& out, const LhmmParams& p) {
  out << "prior = " << format_double(p.prior) << '\n';
  write_params(out, p.spam, "spam.");
  write_params(out, p.genuine, "genuine.");
}

LhmmParams lhmm_params_from_keys(const KeyValues& kv) {
  auto it = kv.find("prior");
  if (it == kv.end() || it->second.size() != 1) throw ValidationError("parameter file needs a single 'prior' value");
  LhmmParams p;
  p.prior = it->second[0];
  p.spam = params_from_keys(kv, "spam.");
  p.genuine = params_from_keys(kv, "genuine.");
  p.validate();
  return p;
}

LhmmParams read_lhmm_params(std::istream& in) { return lhmm_params_from_keys(read_key_values(in)); }

}  // namespace spamhmm
