#ifndef MISSA_CORPUS_SYNTHETIC_HPP_
#define MISSA_CORPUS_SYNTHETIC_HPP_

#include <cstdint>
#include <string>
#include <string_view>

#include "missa/corpus/dialog.hpp"

namespace missa::corpus {

struct SyntheticOptions {
  int dialogs = 200;
  std::uint64_t seed = 1;
  // System turns sometimes re-elicit information the attacker already gave,
  // so a model trained on it produces rule-violating candidates.
  bool adversarial = false;
  // Probability of a rule-violating follow-up in adversarial mode.
  double violation_rate = 0.35;
};

// Template anti-scam dialogs under the default AntiScam taxonomy. The first
// system intent of every reply is a fixed function of the last human
// intent; system slots copy the human slot where the intent is slot-bearing.
Corpus make_synthetic_corpus(const SyntheticOptions& options);

// The fixed human-intent -> first-system-intent map the generator follows.
std::string_view synthetic_reply_intent(std::string_view human_intent);

}  // namespace missa::corpus

#endif  // MISSA_CORPUS_SYNTHETIC_HPP_
