#ifndef MISSA_CORPUS_DIALOG_HPP_
#define MISSA_CORPUS_DIALOG_HPP_

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "missa/corpus/taxonomy.hpp"

namespace missa::corpus {

enum class Speaker { kHuman, kSystem };

std::string_view to_string(Speaker speaker);
Speaker parse_speaker(std::string_view text);
inline Speaker other(Speaker s) {
  return s == Speaker::kHuman ? Speaker::kSystem : Speaker::kHuman;
}

struct Sentence {
  std::string text;
  std::string intent;
  std::string slot;

  bool operator==(const Sentence&) const = default;
};

struct Turn {
  Speaker speaker = Speaker::kHuman;
  std::vector<Sentence> sentences;

  bool operator==(const Turn&) const = default;
};

/// Slot name -> concrete surface value. Ordered so iteration is deterministic.
using SlotLexicon = std::map<std::string, std::string>;

// Throws ValidationError if a value is empty, or two values coincide or
// contain one another.
void validate_lexicon(const SlotLexicon& lexicon);

struct AnnotatedDialog {
  std::string id;
  SlotLexicon private_info;
  std::vector<Turn> turns;
  std::map<std::string, std::string> outcome;

  bool operator==(const AnnotatedDialog&) const = default;
};

struct Corpus {
  Taxonomy taxonomy;
  std::vector<AnnotatedDialog> dialogs;

  std::size_t sentence_count() const;
  std::size_t turn_count() const;

  bool operator==(const Corpus&) const = default;
};

}  // namespace missa::corpus

#endif  // MISSA_CORPUS_DIALOG_HPP_
