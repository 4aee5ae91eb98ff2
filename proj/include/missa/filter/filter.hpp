#ifndef MISSA_FILTER_FILTER_HPP_
#define MISSA_FILTER_FILTER_HPP_

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "missa/corpus/dialog.hpp"
#include "missa/decode/decode.hpp"

namespace missa::filter {

// Which intents count as giving or asking for a slot.
struct StateSchema {
  std::set<std::string, std::less<>> provide_intents{std::string(corpus::kProvidingInformation)};
  std::set<std::string, std::less<>> elicit_intents{std::string(corpus::kElicitation)};
};
StateSchema schema_for(std::string_view task);

struct SpeakerState {
  std::set<std::string> provided;
  std::map<std::string, int> elicited;  // slot -> count
  bool operator==(const SpeakerState&) const = default;
};

struct StateEntry {
  corpus::Speaker speaker;
  std::string intent;
  std::string slot;
  bool operator==(const StateEntry&) const = default;
};

struct DialogState {
  std::array<SpeakerState, 2> speakers;  // indexed by corpus::Speaker
  int turns = 0;
  std::vector<StateEntry> history;

  const SpeakerState& of(corpus::Speaker s) const { return speakers[static_cast<int>(s)]; }
  SpeakerState& of(corpus::Speaker s) { return speakers[static_cast<int>(s)]; }
  bool operator==(const DialogState&) const = default;
};

// Sentences with slot "others" only enter the history.
DialogState update_state(DialogState state, const corpus::Turn& turn,
                         const StateSchema& schema = {});

void to_json(nlohmann::json& j, const DialogState& state);

struct RuleContext {
  bool any_non_degenerate = false;
  const StateSchema* schema = nullptr;
};

// A pure predicate: the reason for a violation, or nothing on a pass.
using RulePredicate = std::function<std::optional<std::string>(
    const decode::CandidateResponse&, const DialogState&, const RuleContext&)>;

struct FilterRule {
  std::string name;
  std::string description;
  RulePredicate predicate;
  bool enabled = true;
};

// R1 re-elicits what the human provided, R2 elicits a slot the system has
// already asked for twice, R3 repeats information the system provided, R4
// returns an empty response while a non-empty one exists.
std::vector<FilterRule> rule_catalog();
// AntiScam enables R1-R4; persuasion enables R3 and R4.
std::vector<FilterRule> default_rules(std::string_view task);
// {"rules": [{"name": "R1", "enabled": true}, ...]} applied over `base`.
std::vector<FilterRule> configure_rules(std::vector<FilterRule> base, const nlohmann::json& j);
std::vector<FilterRule> load_rules(const std::filesystem::path& path, std::string_view task);
nlohmann::json rules_to_json(const std::vector<FilterRule>& rules);

struct RuleResult {
  std::string rule;
  bool passed = true;
  std::string reason;
};

struct CandidateVerdict {
  int candidate = 0;
  std::vector<RuleResult> results;  // enabled rules only
  int violations = 0;
};

struct FilterVerdict {
  std::vector<CandidateVerdict> candidates;
  int selected = 0;
  bool fallback = false;
  bool resampled = false;
};

void to_json(nlohmann::json& j, const FilterVerdict& v);

CandidateVerdict check(const decode::CandidateResponse& candidate, const DialogState& state,
                       std::span<const FilterRule> rules, const RuleContext& context);

struct Selection {
  FilterVerdict verdict;
  // Every candidate considered, resampled ones appended, with their
  // `violations` filled.
  std::vector<decode::CandidateResponse> pool;
  const decode::CandidateResponse& chosen() const { return pool.at(verdict.selected); }
};

using Resampler = std::function<std::vector<decode::CandidateResponse>()>;

/// Picks the highest log-probability candidate that passes every enabled
/// rule. When none passes, one resample round extends the pool; if still
/// none passes, the fewest-violation candidate wins (then log-probability,
/// then index) and the fallback flag is set.
Selection select(std::vector<decode::CandidateResponse> candidates, const DialogState& state,
                 std::span<const FilterRule> rules, const StateSchema& schema = {},
                 const Resampler& resample = {});

}  // namespace missa::filter

#endif  // MISSA_FILTER_FILTER_HPP_
