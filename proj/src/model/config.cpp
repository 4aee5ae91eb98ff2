#include "missa/model/config.hpp"

#include "missa/error.hpp"

namespace missa::model {

void ModelConfig::validate() const {
  if (layers < 1 || heads < 1 || hidden < 1 || ffn < 1) {
    throw ValidationError("model dimensions must be positive");
  }
  if (hidden % heads != 0) throw ValidationError("hidden size must be divisible by heads");
  if (context_length < 32) throw ValidationError("context length must be >= 32");
  if (dropout < 0 || dropout >= 1) throw ValidationError("dropout must lie in [0, 1)");
  if (distractors < 0) throw ValidationError("distractor count must be >= 0");
  for (double w : {weights.lm, weights.human_intent, weights.human_slot, weights.system_intent,
                   weights.system_slot, weights.next_utterance}) {
    if (w < 0) throw ValidationError("loss weights must be >= 0");
  }
}

ModelConfig tiny_config() {
  ModelConfig c;
  c.layers = 2;
  c.heads = 2;
  c.hidden = 16;
  c.ffn = 32;
  c.context_length = 64;
  c.dropout = 0.0;
  return c;
}

void to_json(nlohmann::json& j, const LossWeights& w) {
  j = {{"lm", w.lm},
       {"human_intent", w.human_intent},
       {"human_slot", w.human_slot},
       {"system_intent", w.system_intent},
       {"system_slot", w.system_slot},
       {"next_utterance", w.next_utterance}};
}

void from_json(const nlohmann::json& j, LossWeights& w) {
  w.lm = j.value("lm", w.lm);
  w.human_intent = j.value("human_intent", w.human_intent);
  w.human_slot = j.value("human_slot", w.human_slot);
  w.system_intent = j.value("system_intent", w.system_intent);
  w.system_slot = j.value("system_slot", w.system_slot);
  w.next_utterance = j.value("next_utterance", w.next_utterance);
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"layers", c.layers},
       {"heads", c.heads},
       {"hidden", c.hidden},
       {"ffn", c.ffn},
       {"context_length", c.context_length},
       {"dropout", c.dropout},
       {"weights", c.weights},
       {"distractors", c.distractors},
       {"intent_tokens", c.intent_tokens},
       {"delexicalize", c.delexicalize},
       {"init_std", c.init_std}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  c.layers = j.value("layers", c.layers);
  c.heads = j.value("heads", c.heads);
  c.hidden = j.value("hidden", c.hidden);
  c.ffn = j.value("ffn", c.ffn);
  c.context_length = j.value("context_length", c.context_length);
  c.dropout = j.value("dropout", c.dropout);
  if (j.contains("weights")) c.weights = j.at("weights").get<LossWeights>();
  c.distractors = j.value("distractors", c.distractors);
  c.intent_tokens = j.value("intent_tokens", c.intent_tokens);
  c.delexicalize = j.value("delexicalize", c.delexicalize);
  c.init_std = j.value("init_std", c.init_std);
}

}  // namespace missa::model
