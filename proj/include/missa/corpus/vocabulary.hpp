#ifndef MISSA_CORPUS_VOCABULARY_HPP_
#define MISSA_CORPUS_VOCABULARY_HPP_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "missa/corpus/dialog.hpp"

namespace missa::corpus {

namespace tokens {
inline constexpr std::string_view kBegin = "<bos>";
inline constexpr std::string_view kEnd = "<eos>";
inline constexpr std::string_view kSeparator = "<sep>";
inline constexpr std::string_view kPad = "<pad>";
inline constexpr std::string_view kUnknown = "<unk>";
inline constexpr std::string_view kHuman = "<human>";
inline constexpr std::string_view kSystem = "<system>";
}  // namespace tokens

// Intent tokens are prefixed so they cannot collide with slot tokens.
std::string intent_token(std::string_view intent);

enum class TokenKind { kControl, kSpeaker, kIntent, kSlot, kWord };

class Vocabulary {
 public:
  static constexpr int kBeginId = 0;
  static constexpr int kEndId = 1;
  static constexpr int kSeparatorId = 2;
  static constexpr int kPadId = 3;
  static constexpr int kUnknownId = 4;
  static constexpr int kHumanId = 5;
  static constexpr int kSystemId = 6;

  // Reserved tokens only.
  explicit Vocabulary(const Taxonomy& taxonomy);

  int size() const { return static_cast<int>(tokens_.size()); }
  int id(std::string_view token) const;  // kUnknownId if absent
  std::optional<int> find(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(id); }
  TokenKind kind(int id) const { return kinds_.at(id); }
  bool is_word(int id) const { return kind(id) == TokenKind::kWord || kind(id) == TokenKind::kSlot; }

  int speaker_id(Speaker speaker) const {
    return speaker == Speaker::kHuman ? kHumanId : kSystemId;
  }
  int intent_id(std::string_view intent) const;
  // Intent name for an intent-token id.
  std::optional<std::string> intent_of(int id) const;
  const std::vector<int>& intent_ids() const { return intent_ids_; }

  std::vector<int> encode(std::string_view text) const;
  std::string decode(const std::vector<int>& ids) const;

  void add_word(std::string_view token);

  // Newline-delimited "token<TAB>id".
  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(std::istream& in, const Taxonomy& taxonomy);
  static Vocabulary load(const std::filesystem::path& path, const Taxonomy& taxonomy);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  Vocabulary() = default;
  int add(std::string token, TokenKind kind);

  std::vector<std::string> tokens_;
  std::vector<TokenKind> kinds_;
  std::unordered_map<std::string, int> ids_;
  std::unordered_map<int, std::string> intent_names_;
  std::vector<int> intent_ids_;
};

// Words of the train split with frequency >= min_freq, ordered by descending
// frequency then lexicographically. Text is delexicalized first when asked.
Vocabulary build_vocabulary(const std::vector<AnnotatedDialog>& train,
                            const Taxonomy& taxonomy, int min_freq,
                            bool delexicalized = true);

}  // namespace missa::corpus

#endif  // MISSA_CORPUS_VOCABULARY_HPP_
