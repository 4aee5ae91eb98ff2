#ifndef MISSA_CORPUS_INTENT_MAPPING_HPP_
#define MISSA_CORPUS_INTENT_MAPPING_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include <json.hpp>

#include "missa/corpus/dialog.hpp"

namespace missa::corpus {

// Static table from a source dataset's dialog-act names to taxonomy intents,
// e.g. PersuasionForGood acts onto the hierarchical intent set.
class IntentMapping {
 public:
  // {"task": str, "map": {act: intent}}; every target must be in `taxonomy`.
  static IntentMapping from_json(const nlohmann::json& j, const Taxonomy& taxonomy);
  static IntentMapping load(const std::filesystem::path& path, const Taxonomy& taxonomy);

  const std::string& task() const { return task_; }
  std::size_t size() const { return table_.size(); }

  // Throws ValidationError for an unmapped act.
  const std::string& map(std::string_view act) const;

  // Rewrites each sentence's intent field, which holds a source act name.
  AnnotatedDialog apply(const AnnotatedDialog& dialog) const;

 private:
  std::string task_;
  std::map<std::string, std::string, std::less<>> table_;
};

}  // namespace missa::corpus

#endif  // MISSA_CORPUS_INTENT_MAPPING_HPP_
