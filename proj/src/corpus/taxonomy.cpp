#include "missa/corpus/taxonomy.hpp"

#include <algorithm>
#include <set>

#include "missa/error.hpp"

namespace missa::corpus {

std::string_view to_string(IntentCategory category) {
  switch (category) {
    case IntentCategory::kOnTask:
      return "on-task";
    case IntentCategory::kOffTaskGeneral:
      return "off-task-general";
    case IntentCategory::kOffTaskSocial:
      return "off-task-social";
  }
  return "off-task-general";
}

IntentCategory parse_intent_category(std::string_view text) {
  if (text == "on-task") return IntentCategory::kOnTask;
  if (text == "off-task-general") return IntentCategory::kOffTaskGeneral;
  if (text == "off-task-social") return IntentCategory::kOffTaskSocial;
  throw ValidationError("unknown intent category '" + std::string(text) + "'");
}

Taxonomy::Taxonomy(std::string task, std::vector<IntentLabel> intents,
                   std::vector<SlotLabel> slots)
    : task_(std::move(task)), intents_(std::move(intents)), slots_(std::move(slots)) {
  if (!has_slot(kOthersSlot)) slots_.push_back(SlotLabel{std::string(kOthersSlot)});
  validate();
}

void Taxonomy::validate() const {
  std::set<std::string> seen;
  for (const auto& intent : intents_) {
    if (intent.name.empty()) throw ValidationError("empty intent name");
    if (!seen.insert(intent.name).second) {
      throw ValidationError("duplicate intent '" + intent.name + "'");
    }
  }
  seen.clear();
  for (const auto& slot : slots_) {
    if (slot.name.empty()) throw ValidationError("empty slot name");
    if (!seen.insert(slot.name).second) {
      throw ValidationError("duplicate slot '" + slot.name + "'");
    }
  }
}

std::optional<int> Taxonomy::intent_index(std::string_view name) const {
  auto it = std::find_if(intents_.begin(), intents_.end(),
                         [&](const IntentLabel& l) { return l.name == name; });
  if (it == intents_.end()) return std::nullopt;
  return static_cast<int>(it - intents_.begin());
}

std::optional<int> Taxonomy::slot_index(std::string_view name) const {
  auto it = std::find_if(slots_.begin(), slots_.end(),
                         [&](const SlotLabel& l) { return l.name == name; });
  if (it == slots_.end()) return std::nullopt;
  return static_cast<int>(it - slots_.begin());
}

const IntentLabel* Taxonomy::find_intent(std::string_view name) const {
  auto index = intent_index(name);
  return index ? &intents_[*index] : nullptr;
}

bool Taxonomy::is_on_task(std::string_view intent) const {
  const auto* label = find_intent(intent);
  return label != nullptr && label->category == IntentCategory::kOnTask;
}

void Taxonomy::add_intent(IntentLabel label) {
  if (!intent_index(label.name)) intents_.push_back(std::move(label));
}

void Taxonomy::add_slot(SlotLabel label) {
  if (!slot_index(label.name)) slots_.push_back(std::move(label));
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::uint64_t Taxonomy::hash() const {
  std::string canonical = task_ + "\n";
  for (const auto& intent : intents_) {
    canonical += intent.name + "\t" + std::string(to_string(intent.category)) + "\n";
  }
  for (const auto& slot : slots_) canonical += slot.name + "\n";
  return fnv1a(canonical);
}

std::vector<IntentLabel> off_task_intents() {
  using C = IntentCategory;
  return {
      {"open_question", C::kOffTaskGeneral},
      {"yes_no_question", C::kOffTaskGeneral},
      {"positive_answer", C::kOffTaskGeneral},
      {"negative_answer", C::kOffTaskGeneral},
      {"responsive_statement", C::kOffTaskGeneral},
      {"nonresponsive_statement", C::kOffTaskGeneral},
      {"greeting", C::kOffTaskSocial},
      {"closing", C::kOffTaskSocial},
      {"apology", C::kOffTaskSocial},
      {"thanking", C::kOffTaskSocial},
      {"respond_to_thank", C::kOffTaskSocial},
      {"hold", C::kOffTaskSocial},
  };
}

namespace {

Taxonomy with_off_task(std::string task, std::vector<std::string> on_task,
                       std::vector<std::string> slots) {
  std::vector<IntentLabel> intents;
  for (auto& name : on_task) intents.push_back({std::move(name), IntentCategory::kOnTask});
  for (auto& label : off_task_intents()) intents.push_back(std::move(label));
  std::vector<SlotLabel> slot_labels;
  for (auto& name : slots) slot_labels.push_back({std::move(name)});
  return Taxonomy(std::move(task), std::move(intents), std::move(slot_labels));
}

}  // namespace

Taxonomy antiscam_taxonomy() {
  return with_off_task(
      "antiscam", {"elicitation", "providing_information", "refusal"},
      {"order_detail", "order_update", "payment", "name", "identity", "address",
       "phone_num", "card_info", "card_num", "card_cvs", "card_date",
       "account_detail", "others"});
}

Taxonomy persuasion_taxonomy() {
  return with_off_task(
      "persuasion",
      {"agree_donation", "disagree_donation", "disagree_donation_more",
       "ask_donation_amount", "ask_donate_more", "proposition_of_donation",
       "er_confirm_donation", "ee_confirm_donation", "provide_donation_amount"},
      {"donation_amount", "charity", "others"});
}

Taxonomy default_taxonomy(std::string_view task) {
  if (task == "antiscam") return antiscam_taxonomy();
  if (task == "persuasion") return persuasion_taxonomy();
  throw ValidationError("unknown task '" + std::string(task) + "'");
}

}  // namespace missa::corpus
