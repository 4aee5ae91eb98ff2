#ifndef MISSA_EVAL_PIPELINE_HPP_
#define MISSA_EVAL_PIPELINE_HPP_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "missa/corpus/dialog.hpp"
#include "missa/decode/decode.hpp"
#include "missa/filter/filter.hpp"
#include "missa/model/checkpoint.hpp"

namespace missa::eval {

// Response pipelines compared in evaluation and served in chat.
enum class Variant { kMissa, kMissaSel, kMissaCon, kVanilla, kHybrid };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view text);
std::span<const Variant> all_variants();
// Whether the variant runs the response filter (hybrid on its missa route).
bool filters(Variant v);

// Borrowed checkpoints; the missa entry must carry intent tokens, the
// missa-con entry must not.
struct CheckpointSet {
  const model::Checkpoint* missa = nullptr;
  const model::Checkpoint* con = nullptr;
  const model::Checkpoint* vanilla = nullptr;
};

// ValidationError when a checkpoint the variant needs is absent or of the
// wrong kind.
void check_checkpoints(Variant variant, const CheckpointSet& checkpoints);
bool supports(Variant variant, const CheckpointSet& checkpoints);

enum class Route { kMissa, kVanilla };
std::string_view to_string(Route r);

// kMissa iff any of the human sentence intents is on-task.
Route hybrid_route(std::span<const std::string> human_intents, const corpus::Taxonomy& taxonomy);

struct PipelineOptions {
  decode::DecodeConfig decode;
  std::vector<filter::FilterRule> rules;
  filter::StateSchema schema;
};

// Defaults for the task: its rules and state schema.
PipelineOptions pipeline_options(std::string_view task, const decode::DecodeConfig& decode = {});

struct TurnOutcome {
  std::vector<decode::CandidateResponse> pool;
  std::optional<filter::FilterVerdict> verdict;  // absent for unfiltered variants
  int selected = 0;
  std::optional<Route> route;  // hybrid only
  std::string checkpoint;      // which checkpoint generated the reply

  const decode::CandidateResponse& chosen() const { return pool.at(selected); }
};

void to_json(nlohmann::json& j, const TurnOutcome& o);

/// One system turn under `variant`. missa and missa-con sample K candidates
/// and filter them, missa-sel and vanilla sample one and keep it, hybrid
/// routes on the missa human-intent head. Every pooled candidate carries its
/// rule violations whether or not the variant filters.
TurnOutcome respond(Variant variant, const CheckpointSet& checkpoints,
                    std::span<const corpus::Turn> history, const corpus::SlotLexicon& lexicon,
                    const filter::DialogState& state, const PipelineOptions& options);

}  // namespace missa::eval

#endif  // MISSA_EVAL_PIPELINE_HPP_
