#ifndef MISSA_MODEL_LOSS_HPP_
#define MISSA_MODEL_LOSS_HPP_

#include <array>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "missa/model/missa_model.hpp"

namespace missa::model {

enum class Component {
  kLm = 0,
  kHumanIntent,
  kHumanSlot,
  kSystemIntent,
  kSystemSlot,
  kNextUtterance
};
inline constexpr int kComponentCount = 6;
std::string_view to_string(Component c);
double weight_of(const LossWeights& weights, Component c);

/// One positive example and the distractors sharing its prefix.
struct ExampleGroup {
  EncodedExample positive;
  std::vector<EncodedExample> distractors;
};

struct LossBreakdown {
  std::array<double, kComponentCount> values{};
  // False when the batch had nothing to supervise for that component; its
  // value is then 0 and it does not enter the total.
  std::array<bool, kComponentCount> supervised{};
  double total = 0.0;

  double operator[](Component c) const { return values[static_cast<int>(c)]; }
  bool has(Component c) const { return supervised[static_cast<int>(c)]; }
};

// Recomputes the weighted sum from the components.
double weighted_total(const LossBreakdown& loss, const LossWeights& weights);

struct CompositeLoss {
  Var total;
  LossBreakdown breakdown;
};

CompositeLoss composite_loss(Graph& graph, const MissaModel& model,
                             std::span<const ExampleGroup> batch, const LossWeights& weights,
                             std::mt19937_64* dropout_rng = nullptr);

// Forward-only evaluation; components are averaged over all supervised
// positions of `groups`, as a single batch would.
LossBreakdown evaluate_loss(const MissaModel& model, std::span<const ExampleGroup> groups,
                            const LossWeights& weights);

void to_json(nlohmann::json& j, const LossBreakdown& loss);

}  // namespace missa::model

#endif  // MISSA_MODEL_LOSS_HPP_
