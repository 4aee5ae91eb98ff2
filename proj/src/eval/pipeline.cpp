#include "missa/eval/pipeline.hpp"

#include <array>

#include "missa/error.hpp"
#include "missa/rng.hpp"

namespace missa::eval {

namespace {

constexpr std::array<Variant, 5> kVariants{Variant::kMissa, Variant::kMissaSel,
                                           Variant::kMissaCon, Variant::kVanilla,
                                           Variant::kHybrid};

// Stream for the resample round of the filter.
constexpr std::uint64_t kResampleStream = 0x726573616d706c65ULL;

bool has_intent_tokens(const model::Checkpoint* ck) {
  return ck != nullptr && ck->model.config().intent_tokens;
}

void annotate(std::vector<decode::CandidateResponse>& pool, const filter::DialogState& state,
              const PipelineOptions& options) {
  filter::RuleContext context{false, &options.schema};
  for (const auto& c : pool) context.any_non_degenerate |= !c.degenerate;
  for (auto& c : pool) {
    c.violations.clear();
    for (const auto& r : filter::check(c, state, options.rules, context).results) {
      if (!r.passed) c.violations.push_back(r.rule);
    }
  }
}

TurnOutcome filtered(const model::Checkpoint& ck, decode::DecodeVariant mode,
                     std::span<const corpus::Turn> history, const corpus::SlotLexicon& lexicon,
                     const filter::DialogState& state, const PipelineOptions& options) {
  auto config = options.decode;
  config.variant = mode;
  auto candidates = decode::generate_turn(ck, history, lexicon, config);
  filter::Resampler resample = [&] {
    auto again = config;
    again.seed = mix_seed(config.seed, kResampleStream);
    return decode::generate_turn(ck, history, lexicon, again);
  };
  auto selection =
      filter::select(std::move(candidates), state, options.rules, options.schema, resample);
  TurnOutcome out;
  out.selected = selection.verdict.selected;
  out.verdict = std::move(selection.verdict);
  out.pool = std::move(selection.pool);
  return out;
}

TurnOutcome single(const model::Checkpoint& ck, decode::DecodeVariant mode,
                   std::span<const corpus::Turn> history, const corpus::SlotLexicon& lexicon,
                   const filter::DialogState& state, const PipelineOptions& options,
                   const model::Checkpoint* classifier) {
  auto config = options.decode;
  config.variant = mode;
  config.K = 1;
  TurnOutcome out;
  out.pool = decode::generate_turn(ck, history, lexicon, config);
  if (classifier != nullptr && classifier != &ck) {
    for (auto& c : out.pool) decode::classify_candidate(*classifier, history, lexicon, c);
  }
  annotate(out.pool, state, options);
  return out;
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kMissa: return "missa";
    case Variant::kMissaSel: return "missa-sel";
    case Variant::kMissaCon: return "missa-con";
    case Variant::kVanilla: return "vanilla";
    case Variant::kHybrid: return "hybrid";
  }
  return "missa";
}

Variant parse_variant(std::string_view text) {
  for (Variant v : kVariants) {
    if (to_string(v) == text) return v;
  }
  throw ValidationError("unknown variant '" + std::string(text) +
                        "' (expected missa, missa-sel, missa-con, vanilla or hybrid)");
}

std::span<const Variant> all_variants() { return kVariants; }

bool filters(Variant v) {
  return v == Variant::kMissa || v == Variant::kMissaCon || v == Variant::kHybrid;
}

std::string_view to_string(Route r) { return r == Route::kMissa ? "missa" : "vanilla"; }

void check_checkpoints(Variant variant, const CheckpointSet& cs) {
  auto need_missa = [&] {
    if (cs.missa == nullptr) {
      throw ValidationError(std::string(to_string(variant)) + " needs a missa checkpoint");
    }
    if (!has_intent_tokens(cs.missa)) {
      throw ValidationError("the missa checkpoint was trained without intent tokens");
    }
  };
  auto need_vanilla = [&] {
    if (cs.vanilla == nullptr) {
      throw ValidationError(std::string(to_string(variant)) + " needs a vanilla checkpoint");
    }
  };
  switch (variant) {
    case Variant::kMissa:
    case Variant::kMissaSel:
      need_missa();
      break;
    case Variant::kMissaCon:
      if (cs.con == nullptr) throw ValidationError("missa-con needs a missa-con checkpoint");
      if (has_intent_tokens(cs.con)) {
        throw ValidationError("the missa-con checkpoint was trained with intent tokens");
      }
      break;
    case Variant::kVanilla:
      need_vanilla();
      break;
    case Variant::kHybrid:
      need_missa();
      need_vanilla();
      break;
  }
}

bool supports(Variant variant, const CheckpointSet& checkpoints) {
  try {
    check_checkpoints(variant, checkpoints);
    return true;
  } catch (const ValidationError&) {
    return false;
  }
}

Route hybrid_route(std::span<const std::string> human_intents, const corpus::Taxonomy& taxonomy) {
  for (const auto& intent : human_intents) {
    if (taxonomy.is_on_task(intent)) return Route::kMissa;
  }
  return Route::kVanilla;
}

PipelineOptions pipeline_options(std::string_view task, const decode::DecodeConfig& decode) {
  return {decode, filter::default_rules(task), filter::schema_for(task)};
}

void to_json(nlohmann::json& j, const TurnOutcome& o) {
  j = {{"candidates", o.pool},
       {"selected", o.selected},
       {"checkpoint", o.checkpoint},
       {"verdict", nullptr},
       {"route", nullptr}};
  if (o.verdict) j["verdict"] = *o.verdict;
  if (o.route) j["route"] = to_string(*o.route);
}

TurnOutcome respond(Variant variant, const CheckpointSet& cs,
                    std::span<const corpus::Turn> history, const corpus::SlotLexicon& lexicon,
                    const filter::DialogState& state, const PipelineOptions& options) {
  check_checkpoints(variant, cs);
  options.decode.validate();
  TurnOutcome out;
  switch (variant) {
    case Variant::kMissa:
      out = filtered(*cs.missa, decode::DecodeVariant::kMissa, history, lexicon, state, options);
      out.checkpoint = "missa";
      break;
    case Variant::kMissaSel:
      out = single(*cs.missa, decode::DecodeVariant::kMissa, history, lexicon, state, options,
                   nullptr);
      out.checkpoint = "missa";
      break;
    case Variant::kMissaCon:
      out = filtered(*cs.con, decode::DecodeVariant::kMissaCon, history, lexicon, state, options);
      out.checkpoint = "missa-con";
      break;
    case Variant::kVanilla:
      out = single(*cs.vanilla, decode::DecodeVariant::kVanilla, history, lexicon, state, options,
                   cs.missa);
      out.checkpoint = "vanilla";
      break;
    case Variant::kHybrid: {
      std::vector<std::string> intents;
      if (!history.empty() && history.back().speaker == corpus::Speaker::kHuman) {
        const auto labels = decode::predict_labels(*cs.missa, history, lexicon);
        for (const auto& l : labels.back()) intents.push_back(l.intent);
      }
      const Route route = hybrid_route(intents, cs.missa->taxonomy);
      out = route == Route::kMissa
                ? respond(Variant::kMissa, cs, history, lexicon, state, options)
                : respond(Variant::kVanilla, cs, history, lexicon, state, options);
      out.route = route;
      break;
    }
  }
  return out;
}

}  // namespace missa::eval
