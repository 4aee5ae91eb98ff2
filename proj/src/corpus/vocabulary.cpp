#include "missa/corpus/vocabulary.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "missa/corpus/text.hpp"
#include "missa/error.hpp"

namespace missa::corpus {

std::string intent_token(std::string_view intent) {
  return "<i_" + std::string(intent) + ">";
}

Vocabulary::Vocabulary(const Taxonomy& taxonomy) {
  add(std::string(tokens::kBegin), TokenKind::kControl);
  add(std::string(tokens::kEnd), TokenKind::kControl);
  add(std::string(tokens::kSeparator), TokenKind::kControl);
  add(std::string(tokens::kPad), TokenKind::kControl);
  add(std::string(tokens::kUnknown), TokenKind::kControl);
  add(std::string(tokens::kHuman), TokenKind::kSpeaker);
  add(std::string(tokens::kSystem), TokenKind::kSpeaker);
  for (const auto& intent : taxonomy.intents()) {
    const int id = add(intent_token(intent.name), TokenKind::kIntent);
    intent_names_[id] = intent.name;
    intent_ids_.push_back(id);
  }
  for (const auto& slot : taxonomy.slots()) add(slot_token(slot.name), TokenKind::kSlot);
}

int Vocabulary::add(std::string token, TokenKind kind) {
  if (auto it = ids_.find(token); it != ids_.end()) {
    throw ValidationError("vocabulary token '" + token + "' reserved twice");
  }
  const int id = size();
  ids_.emplace(token, id);
  tokens_.push_back(std::move(token));
  kinds_.push_back(kind);
  return id;
}

void Vocabulary::add_word(std::string_view token) {
  if (!ids_.contains(std::string(token))) add(std::string(token), TokenKind::kWord);
}

std::optional<int> Vocabulary::find(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

int Vocabulary::id(std::string_view token) const { return find(token).value_or(kUnknownId); }

int Vocabulary::intent_id(std::string_view intent) const {
  auto found = find(intent_token(intent));
  if (!found) throw ValidationError("no intent token for '" + std::string(intent) + "'");
  return *found;
}

std::optional<std::string> Vocabulary::intent_of(int id) const {
  auto it = intent_names_.find(id);
  if (it == intent_names_.end()) return std::nullopt;
  return it->second;
}

std::vector<int> Vocabulary::encode(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& token : tokenize(text)) ids.push_back(id(token));
  return ids;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
  std::vector<std::string> words;
  words.reserve(ids.size());
  for (int id : ids) words.push_back(token(id));
  return detokenize(words);
}

void Vocabulary::save(std::ostream& out) const {
  for (int i = 0; i < size(); ++i) out << tokens_[i] << '\t' << i << '\n';
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write vocabulary " + path.string());
  save(out);
}

Vocabulary Vocabulary::load(std::istream& in, const Taxonomy& taxonomy) {
  Vocabulary vocab(taxonomy);
  std::string line;
  int expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw ValidationError("malformed vocabulary line: " + line);
    const std::string token = line.substr(0, tab);
    const int id = std::stoi(line.substr(tab + 1));
    if (id != expected++) throw ValidationError("vocabulary ids are not contiguous at " + token);
    if (id < vocab.size()) {
      if (vocab.token(id) != token) {
        throw ValidationError("vocabulary reserved token mismatch at id " +
                              std::to_string(id) + ": " + token);
      }
      continue;
    }
    vocab.add_word(token);
    if (vocab.id(token) != id) throw ValidationError("duplicate vocabulary token " + token);
  }
  return vocab;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path, const Taxonomy& taxonomy) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read vocabulary " + path.string());
  return load(in, taxonomy);
}

Vocabulary build_vocabulary(const std::vector<AnnotatedDialog>& train,
                            const Taxonomy& taxonomy, int min_freq, bool delexicalized) {
  if (min_freq < 1) throw ValidationError("min_freq must be >= 1");
  std::map<std::string, int> counts;
  for (const auto& dialog : train) {
    for (const auto& turn : dialog.turns) {
      for (const auto& sentence : turn.sentences) {
        const std::string text = delexicalized
                                     ? delexicalize(sentence.text, dialog.private_info)
                                     : sentence.text;
        for (auto& token : tokenize(text)) ++counts[token];
      }
    }
  }
  std::vector<std::pair<std::string, int>> ordered(counts.begin(), counts.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary vocab(taxonomy);
  for (const auto& [token, count] : ordered) {
    if (count >= min_freq) vocab.add_word(token);
  }
  return vocab;
}

}  // namespace missa::corpus
