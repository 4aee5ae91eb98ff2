#ifndef MISSA_DECODE_DECODE_HPP_
#define MISSA_DECODE_DECODE_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "missa/corpus/dialog.hpp"
#include "missa/model/checkpoint.hpp"

namespace missa::decode {

// Generation modes. missa-con and vanilla sample plain sentences and differ
// only in the checkpoint they run on.
enum class DecodeVariant { kMissa, kMissaCon, kVanilla };
std::string_view to_string(DecodeVariant v);
DecodeVariant parse_decode_variant(std::string_view text);

struct DecodeConfig {
  double p = 0.9;
  double temperature = 1.0;
  int K = 5;
  int max_sentences = 4;
  int max_tokens = 30;
  DecodeVariant variant = DecodeVariant::kMissa;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const DecodeConfig& c);
// Missing fields keep their defaults.
void from_json(const nlohmann::json& j, DecodeConfig& c);

struct Nucleus {
  std::vector<int> indices;  // descending probability, ties by index
  std::vector<double> probs;  // renormalized, aligned with `indices`
};

// Smallest probability-descending prefix with mass >= p, renormalized.
// p >= 1 keeps the full support in index order.
Nucleus nucleus_filter(std::span<const double> probs, double p);

struct SampleStep {
  int token = 0;
  int nucleus_size = 0;
  int allowed = 0;            // tokens left by the structural mask
  double probability = 0.0;   // before nucleus renormalization
  double max_excluded = 0.0;  // largest probability outside the nucleus
};

struct CandidateSentence {
  std::optional<std::string> intent;  // generated intent token
  std::string text;                   // relexicalized
  std::string delexicalized;
  std::optional<std::string> predicted_intent;
  std::optional<std::string> predicted_slot;
  bool disagreement = false;  // generated intent differs from the classifier

  // Generated intent when present, else the classifier's.
  std::string intent_label() const;
};

struct CandidateResponse {
  int index = 0;
  std::vector<CandidateSentence> sentences;
  std::vector<int> tokens;  // generated ids after the speaker token
  double log_prob = 0.0;
  std::vector<SampleStep> trace;
  bool degenerate = false;  // no sentence before <eos>
  // Next-utterance head at the candidate's <eos>; recorded, not used to rank.
  std::optional<double> next_utterance_score;
  std::vector<std::string> unresolved_slots;
  std::vector<std::string> violations;  // filled by the response filter

  std::string text() const;
  // Candidate as a system turn with its final labels.
  corpus::Turn as_turn(bool delexicalized = false) const;
};

void to_json(nlohmann::json& j, const CandidateResponse& c);

/// K system-turn candidates for `history`, each sampled from its own
/// stream of `config.seed`. History text is raw; it is delexicalized with
/// `lexicon` when the checkpoint expects it, and candidates are
/// relexicalized before return. Candidates come back classified.
std::vector<CandidateResponse> generate_turn(const model::Checkpoint& checkpoint,
                                             std::span<const corpus::Turn> history,
                                             const corpus::SlotLexicon& lexicon,
                                             const DecodeConfig& config);

// Fills predicted intents and slots from the system heads.
void classify_candidate(const model::Checkpoint& checkpoint,
                        std::span<const corpus::Turn> history,
                        const corpus::SlotLexicon& lexicon, CandidateResponse& candidate);

struct SentenceLabels {
  std::string intent;
  std::string slot;
};

// Classifier labels for every sentence of every turn, using the heads of
// the turn's speaker.
std::vector<std::vector<SentenceLabels>> predict_labels(const model::Checkpoint& checkpoint,
                                                        std::span<const corpus::Turn> turns,
                                                        const corpus::SlotLexicon& lexicon);

}  // namespace missa::decode

#endif  // MISSA_DECODE_DECODE_HPP_
