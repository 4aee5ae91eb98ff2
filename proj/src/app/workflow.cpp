#include "missa/app/workflow.hpp"

#include <fstream>

#include "missa/corpus/vocabulary.hpp"
#include "missa/error.hpp"

namespace missa::app {

std::string_view to_string(CheckpointKind k) {
  switch (k) {
    case CheckpointKind::kMissa: return "missa";
    case CheckpointKind::kMissaCon: return "missa-con";
    case CheckpointKind::kVanilla: return "vanilla";
  }
  return "missa";
}

CheckpointKind parse_checkpoint_kind(std::string_view text) {
  for (auto k : {CheckpointKind::kMissa, CheckpointKind::kMissaCon, CheckpointKind::kVanilla}) {
    if (to_string(k) == text) return k;
  }
  throw ValidationError("unknown checkpoint kind '" + std::string(text) + "'");
}

CheckpointKind kind_of(const model::ModelConfig& c) {
  if (c.intent_tokens) return CheckpointKind::kMissa;
  return c.delexicalize ? CheckpointKind::kMissaCon : CheckpointKind::kVanilla;
}

std::vector<CheckpointKind> kinds_for(eval::Variant v) {
  switch (v) {
    case eval::Variant::kMissa:
    case eval::Variant::kMissaSel: return {CheckpointKind::kMissa};
    case eval::Variant::kMissaCon: return {CheckpointKind::kMissaCon};
    case eval::Variant::kVanilla: return {CheckpointKind::kVanilla};
    case eval::Variant::kHybrid: return {CheckpointKind::kMissa, CheckpointKind::kVanilla};
  }
  return {};
}

model::ModelConfig config_for(CheckpointKind kind, model::ModelConfig base) {
  switch (kind) {
    case CheckpointKind::kMissa:
      base.intent_tokens = true;
      base.delexicalize = true;
      break;
    case CheckpointKind::kMissaCon:
      base.intent_tokens = false;
      base.delexicalize = true;
      break;
    case CheckpointKind::kVanilla:
      base.intent_tokens = false;
      base.delexicalize = false;
      base.weights.human_intent = 0.0;
      base.weights.human_slot = 0.0;
      base.weights.system_intent = 0.0;
      base.weights.system_slot = 0.0;
      break;
  }
  return base;
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = {{"model", c.model},
       {"optimizer",
        {{"learning_rate", c.optimizer.learning_rate},
         {"weight_decay", c.optimizer.weight_decay},
         {"beta1", c.optimizer.beta1},
         {"beta2", c.optimizer.beta2},
         {"epsilon", c.optimizer.epsilon}}},
       {"train",
        {{"epochs", c.epochs}, {"batch_size", c.batch_size}, {"pretrain_epochs", c.pretrain_epochs}}},
       {"decode", c.decode},
       {"rules", c.rules}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  if (!j.is_object()) throw ValidationError("run config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "model" && key != "optimizer" && key != "train" && key != "decode" &&
        key != "rules") {
      throw ValidationError("unknown run config section '" + key + "'");
    }
  }
  if (j.contains("model")) j.at("model").get_to(c.model);
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    c.optimizer.learning_rate = o.value("learning_rate", c.optimizer.learning_rate);
    c.optimizer.weight_decay = o.value("weight_decay", c.optimizer.weight_decay);
    c.optimizer.beta1 = o.value("beta1", c.optimizer.beta1);
    c.optimizer.beta2 = o.value("beta2", c.optimizer.beta2);
    c.optimizer.epsilon = o.value("epsilon", c.optimizer.epsilon);
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    c.epochs = t.value("epochs", c.epochs);
    c.batch_size = t.value("batch_size", c.batch_size);
    c.pretrain_epochs = t.value("pretrain_epochs", c.pretrain_epochs);
  }
  if (j.contains("decode")) j.at("decode").get_to(c.decode);
  if (j.contains("rules")) c.rules = j.at("rules");
  c.model.validate();
  c.optimizer.validate();
  c.decode.validate();
  if (c.epochs < 0 || c.pretrain_epochs < 0) throw ValidationError("epochs must be >= 0");
  if (c.batch_size < 1) throw ValidationError("batch_size must be >= 1");
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("config " + path.string() + " is not JSON: " + e.what());
  }
  return j.get<RunConfig>();
}

TrainedCheckpoint train_checkpoint(CheckpointKind kind, const corpus::Taxonomy& taxonomy,
                                   const corpus::Split& split, const RunConfig& config,
                                   std::uint64_t seed,
                                   std::optional<std::filesystem::path> metric_log) {
  const auto model_config = config_for(kind, config.model);
  auto vocab = corpus::build_vocabulary(split.train, taxonomy, 1, model_config.delexicalize);
  TrainedCheckpoint out;
  out.checkpoint = std::make_unique<model::Checkpoint>(
      model::init_checkpoint(model_config, taxonomy, std::move(vocab), seed));
  auto& ck = *out.checkpoint;
  const auto encoder = model::encoder_for(ck);
  const auto train = model::prepare_dialogs(split.train, model_config);
  const auto validation = model::prepare_dialogs(split.validation, model_config);

  model::TrainOptions options;
  options.optimizer = config.optimizer;
  options.batch_size = config.batch_size;
  options.seed = seed;
  if (config.pretrain_epochs > 0) {
    options.epochs = config.pretrain_epochs;
    model::pretrain_lm(ck.model, encoder, train, options);
  }
  options.epochs = config.epochs;
  options.metric_log = std::move(metric_log);
  out.result = model::train(ck.model, encoder, train, validation, options);
  ck.metadata = {{"kind", to_string(kind)},
                 {"seed", seed},
                 {"epochs", config.epochs},
                 {"pretrain_epochs", config.pretrain_epochs},
                 {"best_epoch", out.result.best_epoch},
                 {"steps", out.result.steps},
                 {"aborted", out.result.aborted},
                 {"train_dialogs", split.train.size()},
                 {"validation_dialogs", split.validation.size()}};
  return out;
}

std::unique_ptr<model::Checkpoint>& CheckpointStore::slot(CheckpointKind k) {
  switch (k) {
    case CheckpointKind::kMissaCon: return con;
    case CheckpointKind::kVanilla: return vanilla;
    default: return missa;
  }
}

const model::Checkpoint* CheckpointStore::any() const {
  if (missa) return missa.get();
  if (con) return con.get();
  return vanilla.get();
}

CheckpointStore load_checkpoint_store(const std::filesystem::path& root) {
  CheckpointStore store;
  auto put = [&](const std::filesystem::path& dir) {
    auto ck = std::make_unique<model::Checkpoint>(model::load_checkpoint(dir));
    store.slot(kind_of(ck->model.config())) = std::move(ck);
  };
  if (std::filesystem::exists(root / "model.json")) {
    put(root);
    return store;
  }
  for (auto k : {CheckpointKind::kMissa, CheckpointKind::kMissaCon, CheckpointKind::kVanilla}) {
    const auto dir = root / std::string(to_string(k));
    if (std::filesystem::exists(dir / "model.json")) put(dir);
  }
  if (store.any() == nullptr) throw NotFoundError("no checkpoint under " + root.string());
  return store;
}

}  // namespace missa::app
