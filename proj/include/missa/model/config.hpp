#ifndef MISSA_MODEL_CONFIG_HPP_
#define MISSA_MODEL_CONFIG_HPP_

#include <json.hpp>

namespace missa::model {

// Per-task weights of the composite objective.
struct LossWeights {
  double lm = 2.0;
  double human_intent = 1.0;
  double human_slot = 1.0;
  double system_intent = 1.0;
  double system_slot = 1.0;
  double next_utterance = 1.0;
};

struct ModelConfig {
  int layers = 4;
  int heads = 4;
  int hidden = 128;
  int ffn = 512;
  int context_length = 512;
  double dropout = 0.1;
  LossWeights weights;
  int distractors = 1;
  // Intent tokens lead each system sentence (off for missa-con and vanilla).
  bool intent_tokens = true;
  // Train and decode on delexicalized text (off for vanilla).
  bool delexicalize = true;
  double init_std = 0.02;

  void validate() const;
};

// Smallest shape used by gradient checks: 2 layers, H=16.
ModelConfig tiny_config();

void to_json(nlohmann::json& j, const LossWeights& w);
void from_json(const nlohmann::json& j, LossWeights& w);
void to_json(nlohmann::json& j, const ModelConfig& c);
// Missing fields keep their defaults.
void from_json(const nlohmann::json& j, ModelConfig& c);

}  // namespace missa::model

#endif  // MISSA_MODEL_CONFIG_HPP_
