#ifndef MISSA_EVAL_METRICS_HPP_
#define MISSA_EVAL_METRICS_HPP_

#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "missa/corpus/dialog.hpp"

namespace missa::eval {

enum class LabelFamily { kIntent, kSlot };

/// p(system label | human label) from bigram counts: the last sentence of a
/// human turn paired with every sentence of the system turn that follows.
class TransitionTable {
 public:
  void add(const std::string& given, const std::string& next, long count = 1);
  // 0 for an unseen conditioning label or pair.
  double probability(const std::string& given, const std::string& next) const;
  long count(const std::string& given, const std::string& next) const;
  long row_total(const std::string& given) const;
  const std::map<std::string, std::map<std::string, long>>& counts() const { return counts_; }
  bool empty() const { return counts_.empty(); }
  bool operator==(const TransitionTable&) const = default;

 private:
  std::map<std::string, std::map<std::string, long>> counts_;
};

void to_json(nlohmann::json& j, const TransitionTable& t);

struct TransitionTables {
  TransitionTable intent;
  TransitionTable slot;
  const TransitionTable& of(LabelFamily f) const { return f == LabelFamily::kIntent ? intent : slot; }
};

// Throws ValidationError when the split has no human -> system turn pair.
TransitionTables build_transition_tables(std::span<const corpus::AnnotatedDialog> train);

struct Score {
  double mean = 0.0;
  std::vector<double> per_turn;
};

// Per turn 1 on an exact match, else 0. An empty prediction never matches.
Score match_rate(std::span<const std::string> predicted, std::span<const std::string> gold);
// Per turn 1 on a match, else p(predicted | human label of that turn).
Score expected_match_rate(std::span<const std::string> predicted,
                          std::span<const std::string> gold,
                          std::span<const std::string> human, const TransitionTable& table);

inline Score rip(std::span<const std::string> p, std::span<const std::string> g) {
  return match_rate(p, g);
}
inline Score rsp(std::span<const std::string> p, std::span<const std::string> g) {
  return match_rate(p, g);
}
inline Score erip(std::span<const std::string> p, std::span<const std::string> g,
                  std::span<const std::string> h, const TransitionTables& t) {
  return expected_match_rate(p, g, h, t.intent);
}
inline Score ersp(std::span<const std::string> p, std::span<const std::string> g,
                  std::span<const std::string> h, const TransitionTables& t) {
  return expected_match_rate(p, g, h, t.slot);
}

}  // namespace missa::eval

#endif  // MISSA_EVAL_METRICS_HPP_
