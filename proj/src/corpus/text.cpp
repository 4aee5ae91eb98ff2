#include "missa/corpus/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace missa::corpus {

namespace {

constexpr std::array<std::string_view, 5> kAbbreviations = {"mr.", "mrs.", "dr.",
                                                            "e.g.", "i.e."};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_terminal(char c) { return c == '.' || c == '?' || c == '!'; }
bool is_token_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}
bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 ||
         static_cast<unsigned char>(c) >= 0x80;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Length of a bracket token starting at text[i], or 0.
std::size_t bracket_token_length(std::string_view text, std::size_t i) {
  if (text[i] != '<') return 0;
  std::size_t j = i + 1;
  while (j < text.size() && is_token_char(text[j])) ++j;
  if (j == i + 1 || j >= text.size() || text[j] != '>') return 0;
  return j - i + 1;
}

// Does the word ending at text[end] (inclusive, a '.') form an abbreviation?
bool ends_with_abbreviation(std::string_view text, std::size_t end) {
  std::size_t start = end;
  while (start > 0 && !is_space(text[start - 1])) --start;
  const std::string word = lower(text.substr(start, end - start + 1));
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), word) !=
         kAbbreviations.end();
}

}  // namespace

std::vector<std::string> segment_turn(std::string_view text) {
  std::vector<std::string> sentences;
  std::string current;
  auto flush = [&] {
    auto first = current.find_first_not_of(" \t\r\n\f\v");
    if (first != std::string::npos) {
      auto last = current.find_last_not_of(" \t\r\n\f\v");
      sentences.push_back(current.substr(first, last - first + 1));
    }
    current.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (auto n = bracket_token_length(text, i); n > 0) {
      current.append(text.substr(i, n));
      i += n - 1;
      continue;
    }
    const char c = text[i];
    if (is_space(c)) {
      // Collapse runs of whitespace inside a sentence.
      if (!current.empty() && current.back() != ' ') current.push_back(' ');
      continue;
    }
    current.push_back(c);
    if (!is_terminal(c)) continue;
    std::size_t j = i + 1;
    while (j < text.size() && is_terminal(text[j])) current.push_back(text[j++]);
    i = j - 1;
    const bool at_boundary = j >= text.size() || is_space(text[j]);
    if (at_boundary && !(c == '.' && ends_with_abbreviation(text, i))) flush();
  }
  flush();
  return sentences;
}

std::string slot_token(std::string_view slot) { return "<" + std::string(slot) + ">"; }

bool is_bracket_token(std::string_view token) {
  return token.size() > 2 && bracket_token_length(token, 0) == token.size();
}

std::vector<std::string> tokenize(std::string_view text) {
  const std::string lowered = lower(text);
  std::string_view s = lowered;
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    if (is_space(s[i])) {
      ++i;
      continue;
    }
    if (auto n = bracket_token_length(s, i); n > 0) {
      tokens.emplace_back(s.substr(i, n));
      i += n;
      continue;
    }
    if (is_word_char(s[i])) {
      std::size_t j = i;
      for (;;) {
        while (j < s.size() && is_word_char(s[j])) ++j;
        // Keep contractions such as "i'm" and "don't" whole.
        if (j + 1 < s.size() && s[j] == '\'' && is_word_char(s[j + 1])) {
          ++j;
          continue;
        }
        break;
      }
      tokens.emplace_back(s.substr(i, j - i));
      i = j;
      continue;
    }
    tokens.emplace_back(1, s[i]);
    ++i;
  }
  return tokens;
}

std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& token : tokens) {
    const bool attach = token.size() == 1 && std::string_view(".,?!;:").find(token[0]) !=
                                                 std::string_view::npos;
    if (!out.empty() && !attach) out.push_back(' ');
    out += token;
  }
  return out;
}

std::string normalize_text(std::string_view text) { return detokenize(tokenize(text)); }

std::string delexicalize(std::string_view sentence, const SlotLexicon& lexicon) {
  std::vector<std::pair<std::string, std::string>> entries(lexicon.begin(), lexicon.end());
  std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.second.size() > b.second.size();
  });
  std::string out(sentence);
  for (const auto& [slot, value] : entries) {
    const std::string token = slot_token(slot);
    std::size_t pos = 0;
    while ((pos = out.find(value, pos)) != std::string::npos) {
      out.replace(pos, value.size(), token);
      pos += token.size();
    }
  }
  return out;
}

Relexicalized relexicalize(std::string_view sentence, const SlotLexicon& lexicon) {
  Relexicalized result;
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    if (auto n = bracket_token_length(sentence, i); n > 0) {
      const std::string_view token = sentence.substr(i, n);
      const std::string slot(token.substr(1, n - 2));
      if (auto it = lexicon.find(slot); it != lexicon.end()) {
        result.text += it->second;
      } else {
        result.text += token;
        result.unresolved.emplace_back(token);
      }
      i += n - 1;
      continue;
    }
    result.text.push_back(sentence[i]);
  }
  return result;
}

AnnotatedDialog delexicalize_dialog(const AnnotatedDialog& dialog) {
  AnnotatedDialog out = dialog;
  for (auto& turn : out.turns)
    for (auto& sentence : turn.sentences)
      sentence.text = delexicalize(sentence.text, dialog.private_info);
  return out;
}

}  // namespace missa::corpus
