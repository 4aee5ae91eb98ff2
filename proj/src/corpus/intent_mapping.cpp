#include "missa/corpus/intent_mapping.hpp"

#include <fstream>

#include "missa/error.hpp"

namespace missa::corpus {

IntentMapping IntentMapping::from_json(const nlohmann::json& j, const Taxonomy& taxonomy) {
  IntentMapping mapping;
  mapping.task_ = j.at("task").get<std::string>();
  for (const auto& [act, intent] : j.at("map").items()) {
    const auto target = intent.get<std::string>();
    if (!taxonomy.intent_index(target)) {
      throw ValidationError("act '" + act + "' maps to unknown intent '" + target + "'");
    }
    mapping.table_.emplace(act, target);
  }
  return mapping;
}

IntentMapping IntentMapping::load(const std::filesystem::path& path, const Taxonomy& taxonomy) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open intent mapping " + path.string());
  return from_json(nlohmann::json::parse(in), taxonomy);
}

const std::string& IntentMapping::map(std::string_view act) const {
  auto it = table_.find(act);
  if (it == table_.end()) throw ValidationError("unmapped dialog act '" + std::string(act) + "'");
  return it->second;
}

AnnotatedDialog IntentMapping::apply(const AnnotatedDialog& dialog) const {
  AnnotatedDialog out = dialog;
  for (auto& turn : out.turns)
    for (auto& sentence : turn.sentences) sentence.intent = map(sentence.intent);
  return out;
}

}  // namespace missa::corpus
