#include "missa/model/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "missa/corpus/text.hpp"
#include "missa/error.hpp"
#include "missa/rng.hpp"

namespace missa::model {

using corpus::AnnotatedDialog;
using corpus::Speaker;

std::vector<AnnotatedDialog> prepare_dialogs(std::span<const AnnotatedDialog> dialogs,
                                             const ModelConfig& config) {
  std::vector<AnnotatedDialog> out;
  out.reserve(dialogs.size());
  for (const auto& d : dialogs) out.push_back(config.delexicalize ? corpus::delexicalize_dialog(d) : d);
  return out;
}

std::vector<ExampleGroup> build_groups(const Encoder& encoder,
                                       std::span<const AnnotatedDialog> dialogs,
                                       int distractors, std::mt19937_64& rng,
                                       bool all_speakers) {
  struct TurnRef {
    std::size_t dialog;
    std::size_t turn;
  };
  std::vector<TurnRef> pool[2];
  for (std::size_t d = 0; d < dialogs.size(); ++d) {
    for (std::size_t t = 0; t < dialogs[d].turns.size(); ++t) {
      pool[static_cast<int>(dialogs[d].turns[t].speaker)].push_back({d, t});
    }
  }
  std::vector<ExampleGroup> groups;
  std::vector<const TurnRef*> others;
  for (std::size_t d = 0; d < dialogs.size(); ++d) {
    const auto& dialog = dialogs[d];
    for (std::size_t t = 0; t < dialog.turns.size(); ++t) {
      const auto& turn = dialog.turns[t];
      if (!all_speakers && turn.speaker != Speaker::kSystem) continue;
      const auto prefix = std::span(dialog.turns).first(t);
      ExampleGroup group;
      group.positive = encoder.encode_example(dialog.private_info, prefix, turn, false);
      if (distractors > 0) {
        others.clear();
        for (const auto& ref : pool[static_cast<int>(turn.speaker)]) {
          if (ref.dialog != d) others.push_back(&ref);
        }
        if (!others.empty()) {
          std::uniform_int_distribution<std::size_t> pick(0, others.size() - 1);
          for (int k = 0; k < distractors; ++k) {
            const TurnRef* ref = others[pick(rng)];
            group.distractors.push_back(encoder.encode_example(
                dialog.private_info, prefix, dialogs[ref->dialog].turns[ref->turn], true));
          }
        }
      }
      groups.push_back(std::move(group));
    }
  }
  return groups;
}

double perplexity(const MissaModel& model, const corpus::Vocabulary& vocab,
                  std::span<const ExampleGroup> groups, PerplexityOptions options) {
  double nll = 0.0;
  long count = 0;
  for (const auto& group : groups) {
    const auto& ex = group.positive;
    std::vector<int> rows, targets;
    for (int i = 0; i < ex.sequence.size(); ++i) {
      const int target = ex.lm_targets[i];
      if (target < 0) continue;
      if (!options.include_control && !vocab.is_word(target)) continue;
      rows.push_back(i);
      targets.push_back(target);
    }
    if (rows.empty()) continue;
    Graph graph(false);
    Var hidden = model.hidden_states(graph, ex.sequence);
    Var logits = model.lm_logits(graph, hidden, rows);
    nll += nnet::cross_entropy(logits, std::span<const int>(targets), nnet::Reduction::kSum).item();
    count += static_cast<long>(rows.size());
  }
  if (count == 0) throw ValidationError("perplexity: no evaluable tokens");
  return std::exp(nll / static_cast<double>(count));
}

double perplexity(const MissaModel& model, const Encoder& encoder,
                  std::span<const AnnotatedDialog> dialogs, PerplexityOptions options) {
  if (dialogs.empty()) throw ValidationError("perplexity: empty evaluation split");
  std::mt19937_64 rng(0);
  const auto groups = build_groups(encoder, dialogs, 0, rng);
  return perplexity(model, encoder.vocab(), groups, options);
}

void to_json(nlohmann::json& j, const EpochRecord& r) {
  j = {{"epoch", r.epoch}, {"steps", r.steps}, {"train_loss", r.train_loss}};
  j["validation"] = r.validation ? nlohmann::json(*r.validation) : nlohmann::json(nullptr);
  j["validation_perplexity"] =
      r.validation_perplexity ? nlohmann::json(*r.validation_perplexity) : nlohmann::json(nullptr);
}

namespace {

std::vector<Matrix> snapshot(const MissaModel& model) {
  std::vector<Matrix> out;
  for (const Param* p : model.parameters()) out.push_back(p->value);
  return out;
}

void restore(MissaModel& model, const std::vector<Matrix>& values) {
  auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

}  // namespace

TrainResult train(MissaModel& model, const Encoder& encoder,
                  std::span<const AnnotatedDialog> train_dialogs,
                  std::span<const AnnotatedDialog> validation_dialogs,
                  const TrainOptions& options) {
  options.optimizer.validate();
  if (options.epochs < 0) throw ValidationError("epochs must be >= 0");
  if (options.batch_size < 1) throw ValidationError("batch size must be >= 1");
  TrainResult result;
  if (options.epochs == 0) return result;
  if (train_dialogs.empty()) throw ValidationError("train: empty training split");

  const LossWeights weights = options.weights.value_or(model.config().weights);
  const int distractors = options.distractors.value_or(model.config().distractors);
  std::optional<std::ofstream> log;
  if (options.metric_log) {
    log.emplace(*options.metric_log);
    if (!*log) throw ValidationError("cannot write metric log " + options.metric_log->string());
  }

  std::vector<ExampleGroup> validation;
  if (!validation_dialogs.empty()) {
    auto rng = make_rng(options.seed, 0x76616c);
    validation = build_groups(encoder, validation_dialogs, distractors, rng,
                              options.all_speakers);
  }

  auto params = model.parameters();
  for (Param* p : params) p->reset_state();
  auto best = snapshot(model);
  double best_score = std::numeric_limits<double>::infinity();
  auto dropout_rng = make_rng(options.seed, 0x64726f70);

  for (int epoch = 1; epoch <= options.epochs && !result.aborted; ++epoch) {
    auto rng = make_rng(options.seed, static_cast<std::uint64_t>(epoch));
    auto groups = build_groups(encoder, train_dialogs, distractors, rng,
                               options.all_speakers);
    std::shuffle(groups.begin(), groups.end(), rng);

    EpochRecord record;
    record.epoch = epoch;
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < groups.size(); begin += options.batch_size) {
      const std::size_t n = std::min<std::size_t>(options.batch_size, groups.size() - begin);
      model.zero_grad();
      Graph graph;
      auto loss = composite_loss(graph, model, std::span(groups).subspan(begin, n),
                                 weights, &dropout_rng);
      if (!std::isfinite(loss.breakdown.total)) {
        result.aborted = true;
        result.abort_reason = "non-finite loss at step " + std::to_string(result.steps + 1);
        break;
      }
      graph.backward(loss.total);
      try {
        nnet::adam_step<Real>(params, options.optimizer, result.steps + 1);
      } catch (const nnet::NonFiniteGradient& e) {
        result.aborted = true;
        result.abort_reason = e.what();
        break;
      }
      ++result.steps;
      ++record.steps;
      loss_sum += loss.breakdown.total;
    }
    if (result.aborted) break;
    record.train_loss = record.steps > 0 ? loss_sum / record.steps : 0.0;

    double score = record.train_loss;
    if (!validation.empty()) {
      record.validation = evaluate_loss(model, validation, weights);
      record.validation_perplexity =
          perplexity(model, encoder.vocab(), validation, PerplexityOptions{});
      score = record.validation->total;
    }
    if (!std::isfinite(score)) {
      result.aborted = true;
      result.abort_reason = "non-finite validation loss at epoch " + std::to_string(epoch);
      break;
    }
    if (score < best_score) {
      best_score = score;
      best = snapshot(model);
      result.best_epoch = epoch;
    }
    if (log) *log << nlohmann::json(record).dump() << '\n' << std::flush;
    if (options.on_epoch) options.on_epoch(record);
    result.log.push_back(std::move(record));
  }
  restore(model, best);
  return result;
}

TrainResult pretrain_lm(MissaModel& model, const Encoder& encoder,
                        std::span<const AnnotatedDialog> dialogs, TrainOptions options) {
  options.all_speakers = true;
  options.distractors = 0;
  options.weights = LossWeights{1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  return train(model, encoder, dialogs, {}, options);
}

}  // namespace missa::model
