#include "missa/model/loss.hpp"

#include <optional>

#include "missa/error.hpp"

namespace missa::model {

std::string_view to_string(Component c) {
  switch (c) {
    case Component::kLm:
      return "lm";
    case Component::kHumanIntent:
      return "human_intent";
    case Component::kHumanSlot:
      return "human_slot";
    case Component::kSystemIntent:
      return "system_intent";
    case Component::kSystemSlot:
      return "system_slot";
    case Component::kNextUtterance:
      return "next_utterance";
  }
  return "unknown";
}

double weight_of(const LossWeights& w, Component c) {
  switch (c) {
    case Component::kLm:
      return w.lm;
    case Component::kHumanIntent:
      return w.human_intent;
    case Component::kHumanSlot:
      return w.human_slot;
    case Component::kSystemIntent:
      return w.system_intent;
    case Component::kSystemSlot:
      return w.system_slot;
    case Component::kNextUtterance:
      return w.next_utterance;
  }
  return 0.0;
}

double weighted_total(const LossBreakdown& loss, const LossWeights& weights) {
  double total = 0.0;
  for (int k = 0; k < kComponentCount; ++k) {
    if (loss.supervised[k]) total += weight_of(weights, static_cast<Component>(k)) * loss.values[k];
  }
  return total;
}

namespace {

// Running sum of summed cross-entropies and the number of supervised rows.
struct Accumulator {
  std::optional<Var> sum;
  int count = 0;

  void add(const Var& v, int n) {
    if (n == 0) return;
    sum = sum ? *sum + v : v;
    count += n;
  }
};

int supervised_rows(std::span<const int> targets) {
  int n = 0;
  for (int t : targets) n += t != nnet::kIgnoreIndex;
  return n;
}

Component intent_component(corpus::Speaker s) {
  return s == corpus::Speaker::kHuman ? Component::kHumanIntent : Component::kSystemIntent;
}

Component slot_component(corpus::Speaker s) {
  return s == corpus::Speaker::kHuman ? Component::kHumanSlot : Component::kSystemSlot;
}

std::array<int, kComponentCount> supervision_counts(const ExampleGroup& g) {
  std::array<int, kComponentCount> c{};
  const auto& seq = g.positive.sequence;
  c[static_cast<int>(Component::kLm)] = supervised_rows(g.positive.lm_targets);
  for (const auto& end : seq.sentence_ends) {
    if (end.intent >= 0) ++c[static_cast<int>(intent_component(end.speaker))];
    if (end.slot >= 0) ++c[static_cast<int>(slot_component(end.speaker))];
  }
  c[static_cast<int>(Component::kNextUtterance)] =
      !g.distractors.empty() && seq.candidate_end >= 0 ? 1 : 0;
  return c;
}

void add_classifier_terms(Graph& graph, const MissaModel& model, const Var& hidden,
                          const TokenSequence& seq,
                          std::array<Accumulator, kComponentCount>& acc) {
  for (auto speaker : {corpus::Speaker::kHuman, corpus::Speaker::kSystem}) {
    std::vector<int> anchors, positions, intents, slots;
    for (const auto& end : seq.sentence_ends) {
      if (end.speaker != speaker || (end.intent < 0 && end.slot < 0)) continue;
      anchors.push_back(end.anchor);
      positions.push_back(end.position);
      intents.push_back(end.intent);
      slots.push_back(end.slot);
    }
    if (positions.empty()) continue;
    if (int n = supervised_rows(intents)) {
      Var logits = model.classifier_logits(graph, hidden, intent_head(speaker), anchors, positions);
      acc[static_cast<int>(intent_component(speaker))].add(
          nnet::cross_entropy(logits, std::span<const int>(intents), nnet::Reduction::kSum), n);
    }
    if (int n = supervised_rows(slots)) {
      Var logits = model.classifier_logits(graph, hidden, slot_head(speaker), anchors, positions);
      acc[static_cast<int>(slot_component(speaker))].add(
          nnet::cross_entropy(logits, std::span<const int>(slots), nnet::Reduction::kSum), n);
    }
  }
}

}  // namespace

CompositeLoss composite_loss(Graph& graph, const MissaModel& model,
                             std::span<const ExampleGroup> batch, const LossWeights& weights,
                             std::mt19937_64* dropout_rng) {
  if (batch.empty()) throw ValidationError("composite_loss: empty batch");
  std::array<Accumulator, kComponentCount> acc;
  for (const auto& group : batch) {
    const auto& positive = group.positive;
    const auto& seq = positive.sequence;
    if (positive.is_distractor) throw ValidationError("composite_loss: group led by a distractor");
    Var hidden = model.hidden_states(graph, seq, dropout_rng);

    std::vector<int> rows, targets;
    for (int i = 0; i < seq.size(); ++i) {
      if (positive.lm_targets[i] == nnet::kIgnoreIndex) continue;
      rows.push_back(i);
      targets.push_back(positive.lm_targets[i]);
    }
    if (!rows.empty()) {
      Var logits = model.lm_logits(graph, hidden, rows);
      acc[static_cast<int>(Component::kLm)].add(
          nnet::cross_entropy(logits, std::span<const int>(targets), nnet::Reduction::kSum),
          static_cast<int>(rows.size()));
    }
    add_classifier_terms(graph, model, hidden, seq, acc);

    if (!group.distractors.empty() && seq.candidate_end >= 0) {
      std::vector<Var> scores{model.next_utterance_logit(graph, hidden, seq.candidate_end)};
      for (const auto& distractor : group.distractors) {
        const auto& dseq = distractor.sequence;
        Var dhidden = model.hidden_states(graph, dseq, dropout_rng);
        scores.push_back(model.next_utterance_logit(graph, dhidden, dseq.candidate_end));
      }
      const int target[] = {0};
      acc[static_cast<int>(Component::kNextUtterance)].add(
          nnet::cross_entropy(nnet::concat_cols(std::span<const Var>(scores)),
                              std::span<const int>(target), nnet::Reduction::kSum),
          1);
    }
  }

  CompositeLoss out;
  std::optional<Var> total;
  for (int k = 0; k < kComponentCount; ++k) {
    if (acc[k].count == 0) continue;
    Var mean = *acc[k].sum * (1.0 / acc[k].count);
    out.breakdown.values[k] = mean.item();
    out.breakdown.supervised[k] = true;
    Var term = mean * weight_of(weights, static_cast<Component>(k));
    total = total ? *total + term : term;
  }
  out.total = total ? *total : graph.constant(Matrix::Zero(1, 1));
  out.breakdown.total = out.total.item();
  return out;
}

LossBreakdown evaluate_loss(const MissaModel& model, std::span<const ExampleGroup> groups,
                            const LossWeights& weights) {
  if (groups.empty()) throw ValidationError("evaluate_loss: no examples");
  std::array<double, kComponentCount> sums{};
  std::array<int, kComponentCount> counts{};
  for (std::size_t i = 0; i < groups.size(); ++i) {
    Graph graph(false);
    const auto loss = composite_loss(graph, model, groups.subspan(i, 1), weights);
    const auto c = supervision_counts(groups[i]);
    for (int k = 0; k < kComponentCount; ++k) {
      if (!loss.breakdown.supervised[k]) continue;
      sums[k] += loss.breakdown.values[k] * c[k];
      counts[k] += c[k];
    }
  }
  LossBreakdown out;
  for (int k = 0; k < kComponentCount; ++k) {
    if (counts[k] == 0) continue;
    out.values[k] = sums[k] / counts[k];
    out.supervised[k] = true;
  }
  out.total = weighted_total(out, weights);
  return out;
}

void to_json(nlohmann::json& j, const LossBreakdown& loss) {
  j = nlohmann::json::object();
  for (int k = 0; k < kComponentCount; ++k) {
    const std::string name(to_string(static_cast<Component>(k)));
    j[name] = loss.supervised[k] ? nlohmann::json(loss.values[k]) : nlohmann::json(nullptr);
  }
  j["total"] = loss.total;
}

}  // namespace missa::model
