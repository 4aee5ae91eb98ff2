#include "missa/corpus/dialog.hpp"

#include "missa/error.hpp"

namespace missa::corpus {

std::string_view to_string(Speaker speaker) {
  return speaker == Speaker::kHuman ? "human" : "system";
}

Speaker parse_speaker(std::string_view text) {
  if (text == "human") return Speaker::kHuman;
  if (text == "system") return Speaker::kSystem;
  throw ValidationError("unknown speaker '" + std::string(text) + "'");
}

void validate_lexicon(const SlotLexicon& lexicon) {
  for (auto it = lexicon.begin(); it != lexicon.end(); ++it) {
    if (it->second.empty()) {
      throw ValidationError("lexicon value for slot '" + it->first + "' is empty");
    }
    if (it->second.find_first_of("<>") != std::string::npos) {
      throw ValidationError("lexicon value for slot '" + it->first +
                            "' contains a reserved angle bracket");
    }
    for (auto jt = std::next(it); jt != lexicon.end(); ++jt) {
      const auto& a = it->second;
      const auto& b = jt->second;
      if (a.find(b) != std::string::npos || b.find(a) != std::string::npos) {
        throw ValidationError("lexicon values for slots '" + it->first + "' and '" +
                              jt->first + "' overlap");
      }
    }
  }
}

std::size_t Corpus::sentence_count() const {
  std::size_t n = 0;
  for (const auto& dialog : dialogs)
    for (const auto& turn : dialog.turns) n += turn.sentences.size();
  return n;
}

std::size_t Corpus::turn_count() const {
  std::size_t n = 0;
  for (const auto& dialog : dialogs) n += dialog.turns.size();
  return n;
}

}  // namespace missa::corpus
