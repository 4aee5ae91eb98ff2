#include "missa/model/encoding.hpp"

#include <string>

#include "missa/corpus/text.hpp"

namespace missa::model {

using corpus::Speaker;
using corpus::Turn;
using corpus::Vocabulary;

Encoder::Encoder(const Vocabulary& vocab, const corpus::Taxonomy& taxonomy,
                 EncoderOptions options)
    : vocab_(&vocab), taxonomy_(&taxonomy), options_(options) {}

std::vector<int> Encoder::turn_tokens(const Turn& turn) const {
  std::vector<int> out{vocab_->speaker_id(turn.speaker)};
  for (const auto& sentence : turn.sentences) {
    // Plain-text corpora carry no intents; their sentences get no token.
    if (turn.speaker == Speaker::kSystem && options_.intent_tokens &&
        !sentence.intent.empty()) {
      out.push_back(vocab_->intent_id(sentence.intent));
    }
    for (int id : vocab_->encode(sentence.text)) out.push_back(id);
    out.push_back(Vocabulary::kSeparatorId);
  }
  return out;
}

TokenSequence Encoder::assemble(const corpus::SlotLexicon& private_info,
                                std::span<const Turn> turns, int trailing,
                                bool last_is_candidate, bool append_end,
                                int tail_reserve) const {
  TokenSequence seq;
  auto push = [&](int token, Region region) {
    seq.positions.push_back(seq.size());
    seq.tokens.push_back(token);
    seq.states.push_back(static_cast<int>(region));
  };
  push(Vocabulary::kBeginId, Region::kPrivateInfo);
  for (const auto& [slot, value] : private_info) {
    if (auto id = vocab_->find(corpus::slot_token(slot))) push(*id, Region::kPrivateInfo);
  }
  push(Vocabulary::kSeparatorId, Region::kPrivateInfo);

  std::vector<std::vector<int>> blocks;
  blocks.reserve(turns.size());
  for (const auto& turn : turns) blocks.push_back(turn_tokens(turn));

  const int limit = options_.context_length;
  const int fixed = seq.size() + (append_end ? 1 : 0) + trailing;
  auto total_from = [&](std::size_t first) {
    int n = fixed;
    for (std::size_t i = first; i < blocks.size(); ++i) n += static_cast<int>(blocks[i].size());
    return n;
  };
  std::size_t first = 0;
  while (first + 1 < blocks.size() && total_from(first) + tail_reserve > limit) ++first;
  if (total_from(first) > limit) {
    throw ContextOverflow("sequence of " + std::to_string(total_from(first)) +
                          " tokens exceeds the context length " + std::to_string(limit));
  }
  seq.dropped_turns = static_cast<int>(first);

  int anchor = 0;
  for (std::size_t t = first; t < turns.size(); ++t) {
    const Turn& turn = turns[t];
    const bool candidate = last_is_candidate && t + 1 == turns.size();
    const Region region = region_of(turn.speaker);
    const auto& block = blocks[t];
    if (candidate) seq.candidate_start = seq.size();
    std::size_t sentence = 0;
    int last_sep = anchor;
    for (int token : block) {
      push(token, region);
      if (token != Vocabulary::kSeparatorId) continue;
      const auto& s = turn.sentences[sentence++];
      SentenceEnd end;
      end.position = seq.size() - 1;
      end.anchor = anchor;
      end.speaker = turn.speaker;
      end.turn = static_cast<int>(t - first);
      end.intent = taxonomy_->intent_index(s.intent).value_or(-1);
      end.slot = taxonomy_->slot_index(s.slot).value_or(-1);
      end.in_candidate = candidate;
      seq.sentence_ends.push_back(end);
      last_sep = end.position;
    }
    anchor = last_sep;
  }
  if (append_end) {
    const Region region =
        turns.empty() ? Region::kPrivateInfo : region_of(turns.back().speaker);
    seq.candidate_end = seq.size();
    push(Vocabulary::kEndId, region);
  }
  return seq;
}

EncodedExample Encoder::encode_example(const corpus::SlotLexicon& private_info,
                                       std::span<const Turn> prefix, const Turn& candidate,
                                       bool is_distractor) const {
  std::vector<Turn> turns(prefix.begin(), prefix.end());
  turns.push_back(candidate);
  EncodedExample example;
  example.is_distractor = is_distractor;
  example.sequence = assemble(private_info, turns, 0, true, true, 0);
  auto& seq = example.sequence;
  example.lm_targets.assign(seq.tokens.size(), -1);
  if (is_distractor) {
    for (auto& end : seq.sentence_ends) end.intent = end.slot = -1;
    return example;
  }
  for (int i = seq.candidate_start; i < seq.candidate_end; ++i) {
    example.lm_targets[i] = seq.tokens[i + 1];
  }
  return example;
}

TokenSequence Encoder::encode_prompt(const corpus::SlotLexicon& private_info,
                                     std::span<const Turn> history, Speaker next,
                                     int reserve) const {
  TokenSequence seq = assemble(private_info, history, 1, false, false, reserve);
  seq.candidate_start = seq.size();
  seq.positions.push_back(seq.size());
  seq.tokens.push_back(vocab_->speaker_id(next));
  seq.states.push_back(static_cast<int>(region_of(next)));
  return seq;
}

TokenSequence Encoder::encode_context(const corpus::SlotLexicon& private_info,
                                      std::span<const Turn> turns) const {
  return assemble(private_info, turns, 0, false, false, 0);
}

}  // namespace missa::model
