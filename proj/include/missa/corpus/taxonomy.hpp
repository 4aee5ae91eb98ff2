#ifndef MISSA_CORPUS_TAXONOMY_HPP_
#define MISSA_CORPUS_TAXONOMY_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace missa::corpus {

enum class IntentCategory { kOnTask, kOffTaskGeneral, kOffTaskSocial };

std::string_view to_string(IntentCategory category);
IntentCategory parse_intent_category(std::string_view text);

struct IntentLabel {
  std::string name;
  IntentCategory category = IntentCategory::kOffTaskGeneral;

  bool operator==(const IntentLabel&) const = default;
};

struct SlotLabel {
  std::string name;

  bool operator==(const SlotLabel&) const = default;
};

inline constexpr std::string_view kOthersSlot = "others";
inline constexpr std::string_view kElicitation = "elicitation";
inline constexpr std::string_view kProvidingInformation = "providing_information";
inline constexpr std::string_view kRefusal = "refusal";

/// Label inventory for one task: hierarchical intents plus semantic slots.
///
/// Label order is significant: classifier heads index labels by position.
class Taxonomy {
 public:
  Taxonomy() = default;
  Taxonomy(std::string task, std::vector<IntentLabel> intents,
           std::vector<SlotLabel> slots);

  const std::string& task() const { return task_; }
  const std::vector<IntentLabel>& intents() const { return intents_; }
  const std::vector<SlotLabel>& slots() const { return slots_; }

  std::optional<int> intent_index(std::string_view name) const;
  std::optional<int> slot_index(std::string_view name) const;
  const IntentLabel* find_intent(std::string_view name) const;
  bool has_slot(std::string_view name) const { return slot_index(name).has_value(); }
  bool is_on_task(std::string_view intent) const;

  // Lenient-mode growth; no-op when the label already exists.
  void add_intent(IntentLabel label);
  void add_slot(SlotLabel label);

  // FNV-1a over the canonical label listing; stable across runs and builds.
  std::uint64_t hash() const;

  bool operator==(const Taxonomy&) const = default;

 private:
  void validate() const;

  std::string task_;
  std::vector<IntentLabel> intents_;
  std::vector<SlotLabel> slots_;
};

// The twelve task-independent intents: six general dialog acts, six social acts.
std::vector<IntentLabel> off_task_intents();

Taxonomy antiscam_taxonomy();
Taxonomy persuasion_taxonomy();
// "antiscam" or "persuasion".
Taxonomy default_taxonomy(std::string_view task);

std::uint64_t fnv1a(std::string_view bytes);

}  // namespace missa::corpus

#endif  // MISSA_CORPUS_TAXONOMY_HPP_
