#ifndef MISSA_APP_WORKFLOW_HPP_
#define MISSA_APP_WORKFLOW_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "missa/corpus/dialog.hpp"
#include "missa/corpus/split.hpp"
#include "missa/decode/decode.hpp"
#include "missa/eval/pipeline.hpp"
#include "missa/model/checkpoint.hpp"
#include "missa/model/trainer.hpp"

namespace missa::app {

// The three trained models behind the five variants.
enum class CheckpointKind { kMissa, kMissaCon, kVanilla };

std::string_view to_string(CheckpointKind k);
CheckpointKind parse_checkpoint_kind(std::string_view text);
CheckpointKind kind_of(const model::ModelConfig& config);
// Kinds a variant runs on: hybrid needs two.
std::vector<CheckpointKind> kinds_for(eval::Variant variant);

/// `base` with the switches of `kind`: missa-con drops intent tokens,
/// vanilla also drops delexicalization and the classifier losses.
model::ModelConfig config_for(CheckpointKind kind, model::ModelConfig base);

/// Everything a run reads from --config:
/// {"model": {...}, "optimizer": {...}, "train": {"epochs", "batch_size",
///  "pretrain_epochs"}, "decode": {...}, "rules": {"rules": [...]}}.
/// Missing sections keep their defaults.
struct RunConfig {
  model::ModelConfig model;
  nnet::OptimizerConfig optimizer;
  int epochs = 10;
  int batch_size = 8;
  int pretrain_epochs = 0;
  decode::DecodeConfig decode;
  nlohmann::json rules;  // null keeps the task defaults
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);
RunConfig load_run_config(const std::filesystem::path& path);

struct TrainedCheckpoint {
  std::unique_ptr<model::Checkpoint> checkpoint;
  model::TrainResult result;
};

/// Fresh model of `kind` trained on `split.train` with `split.validation`
/// for model selection. The vocabulary comes from the train split.
TrainedCheckpoint train_checkpoint(CheckpointKind kind, const corpus::Taxonomy& taxonomy,
                                   const corpus::Split& split, const RunConfig& config,
                                   std::uint64_t seed,
                                   std::optional<std::filesystem::path> metric_log = {});

/// Owned checkpoints behind a borrowed CheckpointSet.
struct CheckpointStore {
  std::unique_ptr<model::Checkpoint> missa;
  std::unique_ptr<model::Checkpoint> con;
  std::unique_ptr<model::Checkpoint> vanilla;

  eval::CheckpointSet set() const { return {missa.get(), con.get(), vanilla.get()}; }
  std::unique_ptr<model::Checkpoint>& slot(CheckpointKind k);
  const model::Checkpoint* any() const;
};

// `root` is either one checkpoint directory (kind read from its config) or
// a directory holding missa/, missa-con/ and vanilla/ checkpoints.
CheckpointStore load_checkpoint_store(const std::filesystem::path& root);

}  // namespace missa::app

#endif  // MISSA_APP_WORKFLOW_HPP_
