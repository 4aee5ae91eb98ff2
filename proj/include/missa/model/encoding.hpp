#ifndef MISSA_MODEL_ENCODING_HPP_
#define MISSA_MODEL_ENCODING_HPP_

#include <span>
#include <vector>

#include "missa/corpus/dialog.hpp"
#include "missa/corpus/vocabulary.hpp"

namespace missa::model {

// Dialog-state embedding ids.
enum class Region : int { kPrivateInfo = 0, kHuman = 1, kSystem = 2 };
inline constexpr int kRegionCount = 3;

inline Region region_of(corpus::Speaker s) {
  return s == corpus::Speaker::kHuman ? Region::kHuman : Region::kSystem;
}

struct SentenceEnd {
  int position = 0;  // index of the sentence's <sep>
  int anchor = 0;    // last <sep> of the previous turn, or the <bos> index
  corpus::Speaker speaker = corpus::Speaker::kHuman;
  int turn = 0;      // index among the turns kept in the sequence
  int intent = -1;   // taxonomy index, -1 when unsupervised
  int slot = -1;
  bool in_candidate = false;
};

/// Model input: <bos> private-info <sep> turns... [candidate] [<eos>].
struct TokenSequence {
  std::vector<int> tokens;
  std::vector<int> positions;
  std::vector<int> states;
  std::vector<SentenceEnd> sentence_ends;
  int candidate_start = -1;  // index of the candidate's speaker token
  int candidate_end = -1;    // index of <eos>
  int dropped_turns = 0;

  int size() const { return static_cast<int>(tokens.size()); }
};

struct EncodedExample {
  TokenSequence sequence;
  // lm_targets[i] is the token expected after position i; -1 outside the
  // candidate region and everywhere for distractors.
  std::vector<int> lm_targets;
  bool is_distractor = false;
};

struct EncoderOptions {
  int context_length = 512;
  bool intent_tokens = true;
};

class Encoder {
 public:
  Encoder(const corpus::Vocabulary& vocab, const corpus::Taxonomy& taxonomy,
          EncoderOptions options);

  const corpus::Vocabulary& vocab() const { return *vocab_; }
  const corpus::Taxonomy& taxonomy() const { return *taxonomy_; }
  const EncoderOptions& options() const { return options_; }

  // Prefix turns plus an appended candidate turn, terminated by <eos>. Turn
  // text must already be delexicalized when the model expects it. Oldest
  // prefix turns are dropped until the sequence fits.
  EncodedExample encode_example(const corpus::SlotLexicon& private_info,
                                std::span<const corpus::Turn> prefix,
                                const corpus::Turn& candidate, bool is_distractor) const;

  // Context followed by the next speaker's token, leaving `reserve` free
  // positions for generation.
  TokenSequence encode_prompt(const corpus::SlotLexicon& private_info,
                              std::span<const corpus::Turn> history, corpus::Speaker next,
                              int reserve) const;

  // All turns, no <eos>; used to read classifier heads over a history.
  TokenSequence encode_context(const corpus::SlotLexicon& private_info,
                               std::span<const corpus::Turn> turns) const;

  // Token block of one turn: speaker, then per sentence [intent] words <sep>.
  std::vector<int> turn_tokens(const corpus::Turn& turn) const;

 private:
  TokenSequence assemble(const corpus::SlotLexicon& private_info,
                         std::span<const corpus::Turn> turns, int trailing,
                         bool last_is_candidate, bool append_end, int tail_reserve) const;

  const corpus::Vocabulary* vocab_;
  const corpus::Taxonomy* taxonomy_;
  EncoderOptions options_;
};

class ContextOverflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace missa::model

#endif  // MISSA_MODEL_ENCODING_HPP_
