#include "missa/eval/metrics.hpp"

#include "missa/error.hpp"

namespace missa::eval {

void TransitionTable::add(const std::string& given, const std::string& next, long count) {
  counts_[given][next] += count;
}

long TransitionTable::count(const std::string& given, const std::string& next) const {
  auto row = counts_.find(given);
  if (row == counts_.end()) return 0;
  auto cell = row->second.find(next);
  return cell == row->second.end() ? 0 : cell->second;
}

long TransitionTable::row_total(const std::string& given) const {
  auto row = counts_.find(given);
  if (row == counts_.end()) return 0;
  long total = 0;
  for (const auto& [next, n] : row->second) total += n;
  return total;
}

double TransitionTable::probability(const std::string& given, const std::string& next) const {
  const long total = row_total(given);
  if (total == 0) return 0.0;
  return static_cast<double>(count(given, next)) / static_cast<double>(total);
}

void to_json(nlohmann::json& j, const TransitionTable& t) {
  j = nlohmann::json::object();
  for (const auto& [given, row] : t.counts()) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [next, n] : row) {
      out[next] = {{"count", n}, {"probability", t.probability(given, next)}};
    }
    j[given] = out;
  }
}

TransitionTables build_transition_tables(std::span<const corpus::AnnotatedDialog> train) {
  TransitionTables tables;
  for (const auto& d : train) {
    for (std::size_t t = 1; t < d.turns.size(); ++t) {
      const auto& human = d.turns[t - 1];
      const auto& system = d.turns[t];
      if (human.speaker != corpus::Speaker::kHuman || system.speaker != corpus::Speaker::kSystem ||
          human.sentences.empty()) {
        continue;
      }
      const auto& cue = human.sentences.back();
      for (const auto& s : system.sentences) {
        tables.intent.add(cue.intent, s.intent);
        tables.slot.add(cue.slot, s.slot);
      }
    }
  }
  if (tables.intent.empty()) {
    throw ValidationError("transition table: no human -> system turn pairs in the split");
  }
  return tables;
}

namespace {

void check_sizes(std::size_t predicted, std::size_t gold) {
  if (predicted != gold) {
    throw ValidationError("metric: " + std::to_string(predicted) + " predictions for " +
                          std::to_string(gold) + " gold turns");
  }
  if (gold == 0) throw ValidationError("metric: empty evaluation set");
}

double mean(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

}  // namespace

Score match_rate(std::span<const std::string> predicted, std::span<const std::string> gold) {
  check_sizes(predicted.size(), gold.size());
  Score s;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    s.per_turn.push_back(!predicted[i].empty() && predicted[i] == gold[i] ? 1.0 : 0.0);
  }
  s.mean = mean(s.per_turn);
  return s;
}

Score expected_match_rate(std::span<const std::string> predicted,
                          std::span<const std::string> gold,
                          std::span<const std::string> human, const TransitionTable& table) {
  check_sizes(predicted.size(), gold.size());
  if (human.size() != gold.size()) {
    throw ValidationError("metric: human labels do not align with gold turns");
  }
  Score s;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (!predicted[i].empty() && predicted[i] == gold[i]) {
      s.per_turn.push_back(1.0);
    } else {
      s.per_turn.push_back(predicted[i].empty() ? 0.0 : table.probability(human[i], predicted[i]));
    }
  }
  s.mean = mean(s.per_turn);
  return s;
}

}  // namespace missa::eval
