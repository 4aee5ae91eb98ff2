#ifndef MISSA_MODEL_TRAINER_HPP_
#define MISSA_MODEL_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "missa/corpus/dialog.hpp"
#include "missa/model/loss.hpp"
#include "missa/nnet/adam.hpp"

namespace missa::model {

// Delexicalizes every dialog when the model is configured for it.
std::vector<corpus::AnnotatedDialog> prepare_dialogs(
    std::span<const corpus::AnnotatedDialog> dialogs, const ModelConfig& config);

/// One group per system turn (or per turn of either speaker when
/// `all_speakers`). Distractors are turns of the same speaker drawn
/// uniformly from other dialogs.
std::vector<ExampleGroup> build_groups(const Encoder& encoder,
                                       std::span<const corpus::AnnotatedDialog> dialogs,
                                       int distractors, std::mt19937_64& rng,
                                       bool all_speakers = false);

struct PerplexityOptions {
  // Count separator, intent and end tokens as well as words.
  bool include_control = false;
};

double perplexity(const MissaModel& model, const corpus::Vocabulary& vocab,
                  std::span<const ExampleGroup> groups, PerplexityOptions options = {});
double perplexity(const MissaModel& model, const Encoder& encoder,
                  std::span<const corpus::AnnotatedDialog> dialogs,
                  PerplexityOptions options = {});

struct EpochRecord {
  int epoch = 0;
  int steps = 0;
  double train_loss = 0.0;  // mean of the batch totals
  std::optional<LossBreakdown> validation;
  std::optional<double> validation_perplexity;
};

void to_json(nlohmann::json& j, const EpochRecord& r);

struct TrainOptions {
  nnet::OptimizerConfig optimizer;
  int epochs = 10;
  int batch_size = 8;
  std::uint64_t seed = 1;
  bool all_speakers = false;
  // Overrides of the model config.
  std::optional<LossWeights> weights;
  std::optional<int> distractors;
  // JSON-lines, one record per epoch.
  std::optional<std::filesystem::path> metric_log;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  int best_epoch = 0;  // 0: the initialization
  int steps = 0;
  bool aborted = false;
  std::string abort_reason;
};

/// Multi-task training on prepared dialogs. On return the model holds the
/// parameters of the best validation epoch (train loss when there is no
/// validation split). A non-finite loss or gradient stops training and
/// restores the best parameters seen so far.
TrainResult train(MissaModel& model, const Encoder& encoder,
                  std::span<const corpus::AnnotatedDialog> train_dialogs,
                  std::span<const corpus::AnnotatedDialog> validation_dialogs,
                  const TrainOptions& options);

/// LM-only pass over turns of both speakers, for any plain dialog corpus.
TrainResult pretrain_lm(MissaModel& model, const Encoder& encoder,
                        std::span<const corpus::AnnotatedDialog> dialogs, TrainOptions options);

}  // namespace missa::model

#endif  // MISSA_MODEL_TRAINER_HPP_
