#ifndef MISSA_CORPUS_TEXT_HPP_
#define MISSA_CORPUS_TEXT_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "missa/corpus/dialog.hpp"

namespace missa::corpus {

// Splits a raw turn at terminal punctuation (. ? !) followed by whitespace or
// end of input. Abbreviations (mr. mrs. dr. e.g. i.e.) and bracketed slot
// tokens never split. Whitespace-only input yields no sentences.
std::vector<std::string> segment_turn(std::string_view text);

// "<card_num>" for slot "card_num".
std::string slot_token(std::string_view slot);

// True for "<...>" tokens made of [a-z0-9_].
bool is_bracket_token(std::string_view token);

// Lowercased word / punctuation tokens; bracket tokens stay atomic.
std::vector<std::string> tokenize(std::string_view text);

// Inverse of tokenize up to case and spacing: no space before . , ? ! ; :
std::string detokenize(const std::vector<std::string>& tokens);

// detokenize(tokenize(text)).
std::string normalize_text(std::string_view text);

// Replaces every lexicon value with its slot token.
std::string delexicalize(std::string_view sentence, const SlotLexicon& lexicon);

struct Relexicalized {
  std::string text;
  // Slot tokens found in the input with no lexicon entry; left verbatim.
  std::vector<std::string> unresolved;
};

Relexicalized relexicalize(std::string_view sentence, const SlotLexicon& lexicon);

// Copy of the dialog with every sentence delexicalized by its private info.
AnnotatedDialog delexicalize_dialog(const AnnotatedDialog& dialog);

}  // namespace missa::corpus

#endif  // MISSA_CORPUS_TEXT_HPP_
