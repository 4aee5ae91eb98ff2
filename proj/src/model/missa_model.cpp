#include "missa/model/missa_model.hpp"

#include <cmath>
#include <string>

#include "missa/error.hpp"

namespace missa::model {

std::string_view to_string(Head head) {
  switch (head) {
    case Head::kHumanIntent:
      return "human_intent";
    case Head::kHumanSlot:
      return "human_slot";
    case Head::kSystemIntent:
      return "system_intent";
    case Head::kSystemSlot:
      return "system_slot";
  }
  return "unknown";
}

namespace {

Matrix normal(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double std) {
  std::normal_distribution<double> dist(0.0, std);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Param zeros(std::string name, Eigen::Index rows, Eigen::Index cols) {
  return Param(std::move(name), Matrix::Zero(rows, cols));
}

Param ones(std::string name, Eigen::Index cols) {
  return Param(std::move(name), Matrix::Ones(1, cols));
}

}  // namespace

MissaModel::MissaModel(const ModelConfig& config, int vocab_size, int intent_count,
                       int slot_count, std::uint64_t seed)
    : config_(config),
      vocab_size_(vocab_size),
      intent_count_(intent_count),
      slot_count_(slot_count) {
  config_.validate();
  if (vocab_size < 1 || intent_count < 1 || slot_count < 1) {
    throw ValidationError("model needs a non-empty vocabulary and label sets");
  }
  std::mt19937_64 rng(seed);
  const int h = config_.hidden;
  const double std = config_.init_std;
  const double out_std = std / std::sqrt(2.0 * config_.layers);
  token_embedding_ = Param("token_embedding", normal(rng, vocab_size, h, std));
  position_embedding_ =
      Param("position_embedding", normal(rng, config_.context_length, h, std));
  state_embedding_ = Param("state_embedding", normal(rng, kRegionCount, h, std));
  for (int l = 0; l < config_.layers; ++l) {
    const std::string p = "blocks." + std::to_string(l) + ".";
    TransformerBlock b;
    b.ln1_gain = ones(p + "ln1.gain", h);
    b.ln1_bias = zeros(p + "ln1.bias", 1, h);
    b.qkv_weight = Param(p + "attn.qkv.weight", normal(rng, h, 3 * h, std));
    b.qkv_bias = zeros(p + "attn.qkv.bias", 1, 3 * h);
    b.attn_out_weight = Param(p + "attn.out.weight", normal(rng, h, h, out_std));
    b.attn_out_bias = zeros(p + "attn.out.bias", 1, h);
    b.ln2_gain = ones(p + "ln2.gain", h);
    b.ln2_bias = zeros(p + "ln2.bias", 1, h);
    b.ffn_in_weight = Param(p + "ffn.in.weight", normal(rng, h, config_.ffn, std));
    b.ffn_in_bias = zeros(p + "ffn.in.bias", 1, config_.ffn);
    b.ffn_out_weight = Param(p + "ffn.out.weight", normal(rng, config_.ffn, h, out_std));
    b.ffn_out_bias = zeros(p + "ffn.out.bias", 1, h);
    blocks_.push_back(std::move(b));
  }
  final_gain_ = ones("final_ln.gain", h);
  final_bias_ = zeros("final_ln.bias", 1, h);
  lm_head_ = Param("lm_head", normal(rng, h, vocab_size, std));
  for (int k = 0; k < kHeadCount; ++k) {
    const auto which = static_cast<Head>(k);
    heads_[k] = Param("heads." + std::string(to_string(which)),
                      normal(rng, 2 * h, label_count(which), std));
  }
  next_weight_ = Param("next_utterance.weight", normal(rng, h, 1, std));
  next_bias_ = zeros("next_utterance.bias", 1, 1);
}

int MissaModel::label_count(Head head) const {
  return head == Head::kHumanIntent || head == Head::kSystemIntent ? intent_count_ : slot_count_;
}

std::vector<Param*> MissaModel::parameters() {
  std::vector<Param*> out{&token_embedding_, &position_embedding_, &state_embedding_};
  for (auto& b : blocks_) {
    for (Param* p : {&b.ln1_gain, &b.ln1_bias, &b.qkv_weight, &b.qkv_bias, &b.attn_out_weight,
                     &b.attn_out_bias, &b.ln2_gain, &b.ln2_bias, &b.ffn_in_weight,
                     &b.ffn_in_bias, &b.ffn_out_weight, &b.ffn_out_bias}) {
      out.push_back(p);
    }
  }
  out.push_back(&final_gain_);
  out.push_back(&final_bias_);
  out.push_back(&lm_head_);
  for (auto& h : heads_) out.push_back(&h);
  out.push_back(&next_weight_);
  out.push_back(&next_bias_);
  return out;
}

std::vector<const Param*> MissaModel::parameters() const {
  auto mutable_params = const_cast<MissaModel*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

void MissaModel::zero_grad() {
  for (Param* p : parameters()) p->zero_grad();
}

bool MissaModel::operator==(const MissaModel& other) const {
  const auto a = parameters();
  const auto b = other.parameters();
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i]->name != b[i]->name || a[i]->value.rows() != b[i]->value.rows() ||
        a[i]->value.cols() != b[i]->value.cols() || a[i]->value != b[i]->value) {
      return false;
    }
  }
  return true;
}

Var MissaModel::parameter(Graph& graph, const Param& p) const {
  // Gradients flow into the Param; the graph needs a mutable handle.
  return graph.parameter(const_cast<Param&>(p));
}

Var MissaModel::hidden_states(Graph& graph, const TokenSequence& seq,
                              std::mt19937_64* dropout_rng) const {
  if (seq.size() == 0) throw ShapeError("hidden_states: empty sequence");
  if (seq.size() > config_.context_length) {
    throw ShapeError("hidden_states: sequence of " + std::to_string(seq.size()) +
                     " exceeds context " + std::to_string(config_.context_length));
  }
  const Real rate = dropout_rng != nullptr ? config_.dropout : 0.0;
  auto drop = [&](const Var& v) {
    return rate > 0 ? nnet::dropout(v, rate, *dropout_rng) : v;
  };
  Var x = nnet::gather_rows(parameter(graph, token_embedding_), std::span(seq.tokens)) +
          nnet::gather_rows(parameter(graph, position_embedding_), std::span(seq.positions));
  x = drop(x + nnet::gather_rows(parameter(graph, state_embedding_), std::span(seq.states)));

  const int h = config_.hidden;
  const int d = h / config_.heads;
  const Real scale = 1.0 / std::sqrt(static_cast<Real>(d));
  for (const auto& b : blocks_) {
    Var normed = nnet::layer_norm(x, parameter(graph, b.ln1_gain), parameter(graph, b.ln1_bias));
    Var qkv = nnet::matmul(normed, parameter(graph, b.qkv_weight)) + parameter(graph, b.qkv_bias);
    std::vector<Var> heads;
    heads.reserve(config_.heads);
    for (int k = 0; k < config_.heads; ++k) {
      Var q = nnet::slice_cols(qkv, k * d, d);
      Var key = nnet::slice_cols(qkv, h + k * d, d);
      Var value = nnet::slice_cols(qkv, 2 * h + k * d, d);
      Var attn = nnet::causal_softmax(nnet::matmul_nt(q, key) * scale);
      heads.push_back(nnet::matmul(attn, value));
    }
    Var merged = nnet::concat_cols(std::span<const Var>(heads));
    Var attn_out = nnet::matmul(merged, parameter(graph, b.attn_out_weight)) +
                   parameter(graph, b.attn_out_bias);
    x = x + drop(attn_out);
    Var normed2 = nnet::layer_norm(x, parameter(graph, b.ln2_gain), parameter(graph, b.ln2_bias));
    Var inner = nnet::gelu(nnet::matmul(normed2, parameter(graph, b.ffn_in_weight)) +
                           parameter(graph, b.ffn_in_bias));
    Var ffn_out = nnet::matmul(inner, parameter(graph, b.ffn_out_weight)) +
                  parameter(graph, b.ffn_out_bias);
    x = x + drop(ffn_out);
  }
  return nnet::layer_norm(x, parameter(graph, final_gain_), parameter(graph, final_bias_));
}

Var MissaModel::lm_logits(Graph& graph, const Var& hidden, std::span<const int> rows) const {
  return nnet::matmul(nnet::gather_rows(hidden, rows), parameter(graph, lm_head_));
}

Var MissaModel::classifier_logits(Graph& graph, const Var& hidden, Head which,
                                  std::span<const int> anchors,
                                  std::span<const int> positions) const {
  if (anchors.size() != positions.size()) {
    throw ShapeError("classifier_logits: anchors and positions differ in length");
  }
  Var features = nnet::concat_cols(
      {nnet::gather_rows(hidden, anchors), nnet::gather_rows(hidden, positions)});
  return nnet::matmul(features, parameter(graph, heads_[static_cast<int>(which)]));
}

Var MissaModel::next_utterance_logit(Graph& graph, const Var& hidden, int position) const {
  const int row[] = {position};
  return nnet::matmul(nnet::gather_rows(hidden, std::span<const int>(row)),
                      parameter(graph, next_weight_)) +
         parameter(graph, next_bias_);
}

ForwardOutputs MissaModel::forward(Graph& graph, const TokenSequence& seq,
                                   std::mt19937_64* dropout_rng) const {
  ForwardOutputs out;
  out.hidden = hidden_states(graph, seq, dropout_rng);
  std::vector<int> all(seq.tokens.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  out.lm_logits = lm_logits(graph, out.hidden, all);
  for (const auto& end : seq.sentence_ends) {
    const int anchor[] = {end.anchor};
    const int position[] = {end.position};
    out.intent_logits.push_back(
        classifier_logits(graph, out.hidden, intent_head(end.speaker), anchor, position));
    out.slot_logits.push_back(
        classifier_logits(graph, out.hidden, slot_head(end.speaker), anchor, position));
  }
  if (seq.candidate_end >= 0) {
    out.next_utterance = next_utterance_logit(graph, out.hidden, seq.candidate_end);
    out.has_next_utterance = true;
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

RowVector layer_norm_row(const RowVector& x, const Param& gain, const Param& bias) {
  const Real mean = x.mean();
  RowVector centered = x.array() - mean;
  const Real inv_std = 1.0 / std::sqrt(centered.squaredNorm() / x.size() + 1e-5);
  return (centered.array() * inv_std * gain.value.row(0).array() + bias.value.row(0).array())
      .matrix();
}

RowVector gelu_row(const RowVector& x) {
  constexpr Real kC = 0.7978845608028654;
  constexpr Real kK = 0.044715;
  const auto a = x.array();
  return (0.5 * a * (1.0 + (kC * (a + kK * a.cube())).tanh())).matrix();
}

}  // namespace

IncrementalDecoder::IncrementalDecoder(const MissaModel& model) : model_(&model) {
  const auto& c = model.config();
  keys_.assign(c.layers, Matrix(c.context_length, c.hidden));
  values_.assign(c.layers, Matrix(c.context_length, c.hidden));
  hidden_.resize(c.context_length, c.hidden);
}

RowVector IncrementalDecoder::push(int token, int position, int state) {
  const auto& m = *model_;
  const auto& c = m.config();
  if (length_ >= c.context_length) throw ShapeError("incremental decoder: context is full");
  if (token < 0 || token >= m.vocab_size_) throw ShapeError("incremental decoder: bad token id");
  const int h = c.hidden;
  const int d = h / c.heads;
  const Real scale = 1.0 / std::sqrt(static_cast<Real>(d));
  const int n = length_;

  RowVector x = m.token_embedding_.value.row(token) + m.position_embedding_.value.row(position);
  x += m.state_embedding_.value.row(state);
  for (std::size_t l = 0; l < m.blocks_.size(); ++l) {
    const auto& b = m.blocks_[l];
    RowVector normed = layer_norm_row(x, b.ln1_gain, b.ln1_bias);
    RowVector qkv = normed * b.qkv_weight.value + b.qkv_bias.value;
    keys_[l].row(n) = qkv.segment(h, h);
    values_[l].row(n) = qkv.segment(2 * h, h);
    RowVector merged(h);
    for (int k = 0; k < c.heads; ++k) {
      const auto q = qkv.segment(k * d, d);
      const auto keys = keys_[l].block(0, k * d, n + 1, d);
      RowVector scores = (q * keys.transpose()) * scale;
      scores = (scores.array() - scores.maxCoeff()).exp().matrix();
      scores /= scores.sum();
      merged.segment(k * d, d) = scores * values_[l].block(0, k * d, n + 1, d);
    }
    x += merged * b.attn_out_weight.value + b.attn_out_bias.value;
    RowVector normed2 = layer_norm_row(x, b.ln2_gain, b.ln2_bias);
    RowVector inner = gelu_row(normed2 * b.ffn_in_weight.value + b.ffn_in_bias.value);
    x += inner * b.ffn_out_weight.value + b.ffn_out_bias.value;
  }
  hidden_.row(n) = layer_norm_row(x, m.final_gain_, m.final_bias_);
  ++length_;
  return hidden_.row(n);
}

void IncrementalDecoder::push(const TokenSequence& seq) {
  for (int i = 0; i < seq.size(); ++i) push(seq.tokens[i], seq.positions[i], seq.states[i]);
}

RowVector IncrementalDecoder::logits() const {
  if (length_ == 0) throw std::logic_error("incremental decoder is empty");
  return hidden_.row(length_ - 1) * model_->lm_head_.value;
}

RowVector IncrementalDecoder::classifier_logits(Head which, int anchor, int position) const {
  const int h = model_->config().hidden;
  RowVector features(2 * h);
  features << hidden_.row(anchor), hidden_.row(position);
  return features * model_->heads_[static_cast<int>(which)].value;
}

Real IncrementalDecoder::next_utterance_logit(int position) const {
  return (hidden_.row(position) * model_->next_weight_.value)(0, 0) +
         model_->next_bias_.value(0, 0);
}

}  // namespace missa::model
