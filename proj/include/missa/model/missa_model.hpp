#ifndef MISSA_MODEL_MISSA_MODEL_HPP_
#define MISSA_MODEL_MISSA_MODEL_HPP_

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "missa/model/config.hpp"
#include "missa/model/encoding.hpp"
#include "missa/nnet/graph.hpp"

namespace missa::model {

using Real = double;
using Matrix = nnet::Tensor<Real>;
using RowVector = Eigen::Matrix<Real, 1, Eigen::Dynamic>;
using Param = nnet::Parameter<Real>;
using Graph = nnet::Graph<Real>;
using Var = nnet::Var<Real>;

enum class Head { kHumanIntent = 0, kHumanSlot = 1, kSystemIntent = 2, kSystemSlot = 3 };
inline constexpr int kHeadCount = 4;
std::string_view to_string(Head head);

inline Head intent_head(corpus::Speaker s) {
  return s == corpus::Speaker::kHuman ? Head::kHumanIntent : Head::kSystemIntent;
}
inline Head slot_head(corpus::Speaker s) {
  return s == corpus::Speaker::kHuman ? Head::kHumanSlot : Head::kSystemSlot;
}

struct TransformerBlock {
  Param ln1_gain, ln1_bias;
  Param qkv_weight, qkv_bias;
  Param attn_out_weight, attn_out_bias;
  Param ln2_gain, ln2_bias;
  Param ffn_in_weight, ffn_in_bias;
  Param ffn_out_weight, ffn_out_bias;
};

struct ForwardOutputs {
  Var hidden;     // [T, H] final-layer states
  Var lm_logits;  // [T, V]
  // Per sentence end, in sequence order: logits of the speaker's heads.
  std::vector<Var> intent_logits;
  std::vector<Var> slot_logits;
  Var next_utterance;  // [1, 1]; only when the sequence has an <eos>
  bool has_next_utterance = false;
};

/// Decoder-only transformer with token, position and dialog-state
/// embeddings, an LM head, four sentence classifiers and a next-utterance
/// head. Each classifier is a single weight of shape 2H x labels applied to
/// [h(anchor); h(sentence end)], with no bias.
class MissaModel {
 public:
  MissaModel() = default;
  MissaModel(const ModelConfig& config, int vocab_size, int intent_count, int slot_count,
             std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  int vocab_size() const { return vocab_size_; }
  int intent_count() const { return intent_count_; }
  int slot_count() const { return slot_count_; }
  int label_count(Head head) const;

  // Fixed order; names are unique and stable.
  std::vector<Param*> parameters();
  std::vector<const Param*> parameters() const;
  void zero_grad();

  Param& head(Head h) { return heads_[static_cast<int>(h)]; }
  const Param& head(Head h) const { return heads_[static_cast<int>(h)]; }
  Param& lm_head() { return lm_head_; }
  const Param& lm_head() const { return lm_head_; }

  // Final-layer hidden states [T, H]. Dropout is applied when `dropout_rng`
  // is non-null and the configured rate is positive.
  Var hidden_states(Graph& graph, const TokenSequence& seq,
                    std::mt19937_64* dropout_rng = nullptr) const;
  Var lm_logits(Graph& graph, const Var& hidden, std::span<const int> rows) const;
  Var classifier_logits(Graph& graph, const Var& hidden, Head head,
                        std::span<const int> anchors, std::span<const int> positions) const;
  Var next_utterance_logit(Graph& graph, const Var& hidden, int position) const;

  ForwardOutputs forward(Graph& graph, const TokenSequence& seq,
                         std::mt19937_64* dropout_rng = nullptr) const;

  bool operator==(const MissaModel& other) const;

 private:
  friend class IncrementalDecoder;
  Var parameter(Graph& graph, const Param& p) const;

  ModelConfig config_;
  int vocab_size_ = 0;
  int intent_count_ = 0;
  int slot_count_ = 0;
  Param token_embedding_, position_embedding_, state_embedding_;
  std::vector<TransformerBlock> blocks_;
  Param final_gain_, final_bias_;
  Param lm_head_;
  std::array<Param, kHeadCount> heads_;
  Param next_weight_, next_bias_;
};

/// Eval-mode forward pass one token at a time with cached keys and values.
/// Produces the same hidden states as MissaModel::hidden_states without
/// dropout.
class IncrementalDecoder {
 public:
  explicit IncrementalDecoder(const MissaModel& model);

  // Appends a token; returns its final-layer hidden state.
  RowVector push(int token, int position, int state);
  void push(const TokenSequence& seq);

  int length() const { return length_; }
  RowVector hidden(int position) const { return hidden_.row(position); }
  // LM logits at the most recent position.
  RowVector logits() const;
  RowVector classifier_logits(Head head, int anchor, int position) const;
  Real next_utterance_logit(int position) const;

 private:
  const MissaModel* model_;
  int length_ = 0;
  std::vector<Matrix> keys_, values_;
  Matrix hidden_;
};

}  // namespace missa::model

#endif  // MISSA_MODEL_MISSA_MODEL_HPP_
