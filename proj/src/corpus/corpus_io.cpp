#include "missa/corpus/corpus_io.hpp"

#include <fstream>

#include "missa/error.hpp"

namespace missa::corpus {

using nlohmann::json;

json to_json(const Taxonomy& taxonomy) {
  json intents = json::array();
  for (const auto& intent : taxonomy.intents()) {
    intents.push_back({{"name", intent.name}, {"category", to_string(intent.category)}});
  }
  json slots = json::array();
  for (const auto& slot : taxonomy.slots()) slots.push_back(slot.name);
  return {{"intents", intents}, {"slots", slots}};
}

Taxonomy taxonomy_from_json(const json& j, const std::string& task) {
  std::vector<IntentLabel> intents;
  for (const auto& item : j.at("intents")) {
    intents.push_back({item.at("name").get<std::string>(),
                       parse_intent_category(item.at("category").get<std::string>())});
  }
  std::vector<SlotLabel> slots;
  for (const auto& item : j.at("slots")) slots.push_back({item.get<std::string>()});
  return Taxonomy(task, std::move(intents), std::move(slots));
}

json to_json(const AnnotatedDialog& dialog) {
  json turns = json::array();
  for (const auto& turn : dialog.turns) {
    json sentences = json::array();
    for (const auto& s : turn.sentences) {
      sentences.push_back({{"text", s.text}, {"intent", s.intent}, {"slot", s.slot}});
    }
    turns.push_back({{"speaker", to_string(turn.speaker)}, {"sentences", sentences}});
  }
  json out = {{"id", dialog.id}, {"private_info", dialog.private_info}, {"turns", turns}};
  if (!dialog.outcome.empty()) out["outcome"] = dialog.outcome;
  return out;
}

AnnotatedDialog dialog_from_json(const json& j) {
  AnnotatedDialog dialog;
  dialog.id = j.at("id").get<std::string>();
  if (j.contains("private_info")) {
    dialog.private_info = j.at("private_info").get<SlotLexicon>();
  }
  if (j.contains("outcome")) {
    dialog.outcome = j.at("outcome").get<std::map<std::string, std::string>>();
  }
  for (const auto& t : j.at("turns")) {
    Turn turn;
    turn.speaker = parse_speaker(t.at("speaker").get<std::string>());
    for (const auto& s : t.at("sentences")) {
      turn.sentences.push_back({s.at("text").get<std::string>(),
                                s.at("intent").get<std::string>(),
                                s.at("slot").get<std::string>()});
    }
    dialog.turns.push_back(std::move(turn));
  }
  return dialog;
}

json to_json(const Corpus& corpus) {
  json dialogs = json::array();
  for (const auto& dialog : corpus.dialogs) dialogs.push_back(to_json(dialog));
  return {{"task", corpus.taxonomy.task()},
          {"taxonomy", to_json(corpus.taxonomy)},
          {"dialogs", dialogs}};
}

void validate_dialog(const AnnotatedDialog& dialog, Taxonomy& taxonomy,
                     const LoadOptions& options, LoadReport* report) {
  auto fail = [&](const std::string& what) {
    throw ValidationError("dialog '" + dialog.id + "': " + what);
  };
  auto unknown = [&](const std::string& kind, const std::string& label) {
    const std::string message = "unknown " + kind + " label '" + label + "'";
    if (!options.lenient) fail(message);
    if (report != nullptr) report->warnings.push_back("dialog '" + dialog.id + "': " + message);
  };
  if (dialog.turns.empty()) fail("no turns");
  try {
    validate_lexicon(dialog.private_info);
  } catch (const ValidationError& e) {
    fail(e.what());
  }
  for (std::size_t t = 0; t < dialog.turns.size(); ++t) {
    const auto& turn = dialog.turns[t];
    if (t > 0 && turn.speaker == dialog.turns[t - 1].speaker) {
      fail("turn " + std::to_string(t) + " does not alternate speakers");
    }
    if (turn.sentences.empty()) fail("turn " + std::to_string(t) + " has no sentences");
    for (const auto& sentence : turn.sentences) {
      if (!taxonomy.intent_index(sentence.intent)) {
        unknown("intent", sentence.intent);
        taxonomy.add_intent({sentence.intent, IntentCategory::kOffTaskGeneral});
      }
      if (!taxonomy.has_slot(sentence.slot)) {
        unknown("slot", sentence.slot);
        taxonomy.add_slot({sentence.slot});
      }
    }
  }
}

Corpus parse_corpus(const json& j, const Taxonomy& taxonomy, const LoadOptions& options,
                    LoadReport* report) {
  Corpus corpus;
  corpus.taxonomy = taxonomy;
  LoadReport local;
  LoadReport& rep = report != nullptr ? *report : local;
  rep = LoadReport{};
  try {
    for (const auto& item : j.at("dialogs")) {
      AnnotatedDialog dialog = dialog_from_json(item);
      validate_dialog(dialog, corpus.taxonomy, options, &rep);
      corpus.dialogs.push_back(std::move(dialog));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("corpus does not match the schema: ") + e.what());
  }
  rep.dialogs = corpus.dialogs.size();
  rep.sentences = corpus.sentence_count();
  return corpus;
}

Corpus parse_corpus(const json& j, const LoadOptions& options, LoadReport* report) {
  Taxonomy taxonomy;
  try {
    taxonomy = taxonomy_from_json(j.at("taxonomy"), j.at("task").get<std::string>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("corpus taxonomy does not match the schema: ") + e.what());
  }
  return parse_corpus(j, taxonomy, options, report);
}

namespace {

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open corpus " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("corpus " + path.string() + " is not valid JSON: " + e.what());
  }
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path, const Taxonomy& taxonomy,
                   const LoadOptions& options, LoadReport* report) {
  return parse_corpus(read_json(path), taxonomy, options, report);
}

Corpus load_corpus(const std::filesystem::path& path, const LoadOptions& options,
                   LoadReport* report) {
  return parse_corpus(read_json(path), options, report);
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write corpus " + path.string());
  out << to_json(corpus).dump(1) << '\n';
}

}  // namespace missa::corpus
