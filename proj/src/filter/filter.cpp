#include "missa/filter/filter.hpp"

#include <algorithm>
#include <fstream>

#include "missa/error.hpp"

namespace missa::filter {

using corpus::Speaker;
using decode::CandidateResponse;

StateSchema schema_for(std::string_view task) {
  StateSchema schema;
  if (task == "persuasion") {
    schema.provide_intents.insert("provide_donation_amount");
    schema.elicit_intents.insert("ask_donation_amount");
  }
  return schema;
}

DialogState update_state(DialogState state, const corpus::Turn& turn, const StateSchema& schema) {
  auto& mine = state.of(turn.speaker);
  for (const auto& s : turn.sentences) {
    state.history.push_back({turn.speaker, s.intent, s.slot});
    if (s.slot.empty() || s.slot == corpus::kOthersSlot) continue;
    if (schema.provide_intents.contains(s.intent)) mine.provided.insert(s.slot);
    if (schema.elicit_intents.contains(s.intent)) ++mine.elicited[s.slot];
  }
  ++state.turns;
  return state;
}

void to_json(nlohmann::json& j, const DialogState& state) {
  auto speaker = [](const SpeakerState& s) {
    return nlohmann::json{{"provided", s.provided}, {"elicited", s.elicited}};
  };
  nlohmann::json history = nlohmann::json::array();
  for (const auto& e : state.history) {
    history.push_back({{"speaker", corpus::to_string(e.speaker)},
                       {"intent", e.intent},
                       {"slot", e.slot}});
  }
  j = {{"human", speaker(state.of(Speaker::kHuman))},
       {"system", speaker(state.of(Speaker::kSystem))},
       {"turns", state.turns},
       {"history", history}};
}

namespace {

// Slot-bearing sentences of the candidate whose intent is in `intents`.
std::vector<std::string> slots_with(const CandidateResponse& c,
                                    const std::set<std::string, std::less<>>& intents) {
  std::vector<std::string> out;
  for (const auto& s : c.sentences) {
    const std::string slot = s.predicted_slot.value_or("");
    if (slot.empty() || slot == corpus::kOthersSlot) continue;
    if (intents.contains(s.intent_label())) out.push_back(slot);
  }
  return out;
}

const StateSchema& schema_of(const RuleContext& context) {
  static const StateSchema kDefault;
  return context.schema != nullptr ? *context.schema : kDefault;
}

std::optional<std::string> r1(const CandidateResponse& c, const DialogState& state,
                              const RuleContext& context) {
  const auto& provided = state.of(Speaker::kHuman).provided;
  for (const auto& slot : slots_with(c, schema_of(context).elicit_intents)) {
    if (provided.contains(slot)) return "elicits " + slot + ", which the human already provided";
  }
  return std::nullopt;
}

std::optional<std::string> r2(const CandidateResponse& c, const DialogState& state,
                              const RuleContext& context) {
  const auto& elicited = state.of(Speaker::kSystem).elicited;
  for (const auto& slot : slots_with(c, schema_of(context).elicit_intents)) {
    auto it = elicited.find(slot);
    if (it != elicited.end() && it->second >= 2) {
      return "elicits " + slot + " after " + std::to_string(it->second) + " earlier requests";
    }
  }
  return std::nullopt;
}

std::optional<std::string> r3(const CandidateResponse& c, const DialogState& state,
                              const RuleContext& context) {
  const auto& provided = state.of(Speaker::kSystem).provided;
  for (const auto& slot : slots_with(c, schema_of(context).provide_intents)) {
    if (provided.contains(slot)) return "provides " + slot + " again";
  }
  return std::nullopt;
}

std::optional<std::string> r4(const CandidateResponse& c, const DialogState&,
                              const RuleContext& context) {
  if (c.degenerate && context.any_non_degenerate) return "empty response";
  return std::nullopt;
}

}  // namespace

std::vector<FilterRule> rule_catalog() {
  return {
      {"R1", "no elicitation of a slot the human already provided", r1, true},
      {"R2", "no elicitation of a slot already elicited twice", r2, true},
      {"R3", "no repeat of information the system already provided", r3, true},
      {"R4", "no empty response while a non-empty one exists", r4, true},
  };
}

std::vector<FilterRule> default_rules(std::string_view task) {
  auto rules = rule_catalog();
  if (task == "persuasion") {
    for (auto& r : rules) r.enabled = r.name == "R3" || r.name == "R4";
  }
  return rules;
}

std::vector<FilterRule> configure_rules(std::vector<FilterRule> base, const nlohmann::json& j) {
  try {
    for (const auto& entry : j.at("rules")) {
      const auto name = entry.at("name").get<std::string>();
      auto it = std::find_if(base.begin(), base.end(),
                             [&](const FilterRule& r) { return r.name == name; });
      if (it == base.end()) throw ValidationError("unknown filter rule '" + name + "'");
      it->enabled = entry.value("enabled", true);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("filter rules: ") + e.what());
  }
  return base;
}

std::vector<FilterRule> load_rules(const std::filesystem::path& path, std::string_view task) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("no rules file at " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("filter rules: ") + e.what());
  }
  return configure_rules(default_rules(task), j);
}

nlohmann::json rules_to_json(const std::vector<FilterRule>& rules) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& r : rules) {
    list.push_back({{"name", r.name}, {"enabled", r.enabled}, {"description", r.description}});
  }
  return {{"rules", list}};
}

void to_json(nlohmann::json& j, const FilterVerdict& v) {
  nlohmann::json candidates = nlohmann::json::array();
  for (const auto& c : v.candidates) {
    nlohmann::json results = nlohmann::json::array();
    for (const auto& r : c.results) {
      results.push_back({{"rule", r.rule}, {"passed", r.passed}, {"reason", r.reason}});
    }
    candidates.push_back(
        {{"candidate", c.candidate}, {"violations", c.violations}, {"results", results}});
  }
  j = {{"candidates", candidates},
       {"selected", v.selected},
       {"fallback", v.fallback},
       {"resampled", v.resampled}};
}

CandidateVerdict check(const CandidateResponse& candidate, const DialogState& state,
                       std::span<const FilterRule> rules, const RuleContext& context) {
  CandidateVerdict verdict;
  verdict.candidate = candidate.index;
  for (const auto& rule : rules) {
    if (!rule.enabled) continue;
    RuleResult result{rule.name, true, ""};
    if (auto reason = rule.predicate(candidate, state, context)) {
      result.passed = false;
      result.reason = std::move(*reason);
      ++verdict.violations;
    }
    verdict.results.push_back(std::move(result));
  }
  return verdict;
}

namespace {

void evaluate(Selection& s, const DialogState& state, std::span<const FilterRule> rules,
              const StateSchema& schema) {
  RuleContext context;
  context.schema = &schema;
  context.any_non_degenerate = std::any_of(s.pool.begin(), s.pool.end(),
                                           [](const auto& c) { return !c.degenerate; });
  s.verdict.candidates.clear();
  for (std::size_t i = 0; i < s.pool.size(); ++i) {
    auto& c = s.pool[i];
    c.index = static_cast<int>(i);
    auto verdict = check(c, state, rules, context);
    c.violations.clear();
    for (const auto& r : verdict.results) {
      if (!r.passed) c.violations.push_back(r.rule);
    }
    s.verdict.candidates.push_back(std::move(verdict));
  }
}

// Best index among passing candidates, or -1.
int best_passing(const Selection& s) {
  int best = -1;
  for (std::size_t i = 0; i < s.pool.size(); ++i) {
    if (s.verdict.candidates[i].violations > 0) continue;
    if (best < 0 || s.pool[i].log_prob > s.pool[best].log_prob) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace

Selection select(std::vector<CandidateResponse> candidates, const DialogState& state,
                 std::span<const FilterRule> rules, const StateSchema& schema,
                 const Resampler& resample) {
  if (candidates.empty()) throw ValidationError("select: no candidates");
  Selection s;
  s.pool = std::move(candidates);
  evaluate(s, state, rules, schema);
  int best = best_passing(s);
  if (best < 0 && resample) {
    for (auto& c : resample()) s.pool.push_back(std::move(c));
    s.verdict.resampled = true;
    evaluate(s, state, rules, schema);
    best = best_passing(s);
  }
  if (best < 0) {
    s.verdict.fallback = true;
    best = 0;
    for (std::size_t i = 1; i < s.pool.size(); ++i) {
      const int vi = s.verdict.candidates[i].violations;
      const int vb = s.verdict.candidates[best].violations;
      if (vi < vb || (vi == vb && s.pool[i].log_prob > s.pool[best].log_prob)) {
        best = static_cast<int>(i);
      }
    }
  }
  s.verdict.selected = best;
  return s;
}

}  // namespace missa::filter
