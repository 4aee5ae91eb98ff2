#ifndef MISSA_EVAL_REPORT_HPP_
#define MISSA_EVAL_REPORT_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "missa/corpus/dialog.hpp"
#include "missa/eval/metrics.hpp"
#include "missa/eval/pipeline.hpp"

namespace missa::eval {

struct TurnScore {
  std::string dialog;
  int turn = 0;  // index of the system turn in its dialog
  std::string human_intent;
  std::string human_slot;
  std::string gold_intent;
  std::string gold_slot;
  std::string predicted_intent;  // empty for a degenerate reply
  std::string predicted_slot;
  std::string response;
  std::vector<std::string> violations;
  bool fallback = false;
  double rip = 0.0;
  double rsp = 0.0;
  double erip = 0.0;
  double ersp = 0.0;

  bool operator==(const TurnScore&) const = default;
};

struct EvalReport {
  std::string variant;
  std::optional<double> ppl;  // not applicable to hybrid
  double rip = 0.0;
  double rsp = 0.0;
  double erip = 0.0;
  double ersp = 0.0;
  // Share of scored turns whose reply breaks an enabled rule.
  double violation_rate = 0.0;
  std::vector<TurnScore> turns;
  nlohmann::json config;
  std::string config_digest;  // FNV-1a of the serialized config, hex

  bool operator==(const EvalReport&) const = default;
};

void to_json(nlohmann::json& j, const TurnScore& t);
void from_json(const nlohmann::json& j, TurnScore& t);
void to_json(nlohmann::json& j, const EvalReport& r);
void from_json(const nlohmann::json& j, EvalReport& r);

struct EvalOptions {
  decode::DecodeConfig decode;
  // Task defaults when absent.
  std::optional<std::vector<filter::FilterRule>> rules;
};

/// Scores every test system turn that directly follows a human turn. The
/// reply is generated from the gold history, its primary labels come from
/// its first sentence and the transition tables come from `train`. Test
/// dialogs are raw; each uses its own private info as the lexicon.
EvalReport run_eval(const CheckpointSet& checkpoints, Variant variant,
                    std::span<const corpus::AnnotatedDialog> train,
                    std::span<const corpus::AnnotatedDialog> test, const EvalOptions& options);

struct ClassifierAccuracy {
  double human_intent = 0.0;
  double human_slot = 0.0;
  double system_intent = 0.0;
  double system_slot = 0.0;
  int human_sentences = 0;
  int system_sentences = 0;
};

// Sentence-level accuracy of the four heads over gold-annotated dialogs.
ClassifierAccuracy classifier_accuracy(const model::Checkpoint& checkpoint,
                                       std::span<const corpus::AnnotatedDialog> dialogs);

enum class TableFormat { kText, kCsv };

// One row per report: variant, PPL, RIP, RSP, ERIP, ERSP.
std::string format_table(std::span<const EvalReport> reports, TableFormat format);

}  // namespace missa::eval

#endif  // MISSA_EVAL_REPORT_HPP_
