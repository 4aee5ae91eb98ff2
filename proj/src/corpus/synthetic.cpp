#include "missa/corpus/synthetic.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <random>
#include <set>

#include "missa/corpus/corpus_io.hpp"
#include "missa/error.hpp"

namespace missa::corpus {

namespace {

using Phrases = std::vector<std::string>;

const std::map<std::string, Phrases>& attacker_elicitations() {
  static const std::map<std::string, Phrases> table = {
      {"card_num", {"can i have your card number?", "please read me the credit card number.",
                    "what is the card number on file?"}},
      {"card_cvs", {"i need the cvs number on the back of the card.",
                    "what is the security code on your card?"}},
      {"card_date", {"can i have the expiration date?", "when does your card expire?"}},
      {"address", {"what is your billing address?", "can you confirm your address for me?"}},
      {"phone_num", {"what is your phone number?", "can i get a number to call you back?"}},
      {"name", {"can you give me your full name?", "what is the name on the account?"}},
  };
  return table;
}

const std::map<std::string, Phrases>& refusals() {
  static const std::map<std::string, Phrases> table = {
      {"card_num", {"i won't give out my card number.", "i'm not sharing my card number."}},
      {"card_cvs", {"i won't tell you the security code.", "the cvs stays with me."}},
      {"card_date", {"i won't share the expiration date.", "the expiry date is private."}},
      {"address", {"i'd rather not give my address.", "my address is private."}},
      {"phone_num", {"i won't give you my phone number.", "my number is private."}},
      {"name", {"i'd rather not say my name.", "you don't need my name."}},
  };
  return table;
}

// Follow-up questions the system asks about the attacker.
const std::map<std::string, Phrases>& system_elicitations() {
  static const std::map<std::string, Phrases> table = {
      {"name", {"what is your name?", "who am i speaking with?"}},
      {"phone_num", {"what number can i call you back on?", "can i have your phone number?"}},
      {"address", {"where are you calling from?", "what is your office address?"}},
  };
  return table;
}

const std::map<std::string, Phrases>& attacker_disclosures() {
  static const std::map<std::string, Phrases> table = {
      {"name", {"my name is jerry.", "i am norman from the billing team."}},
      {"phone_num", {"my phone number is on your caller id.", "you can call me at this number."}},
      {"address", {"our office is in seattle.", "i work at the amazon office downtown."}},
  };
  return table;
}

const std::array<std::string, 3> kAttackerSlots = {"name", "phone_num", "address"};

struct Generator {
  std::mt19937_64 rng;
  const SyntheticOptions& options;

  template <typename Seq>
  const auto& pick(const Seq& items) {
    std::uniform_int_distribution<std::size_t> d(0, items.size() - 1);
    return items[d(rng)];
  }
  bool chance(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }
  int between(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

  std::string digits(int n) {
    std::string s;
    for (int i = 0; i < n; ++i) s.push_back(static_cast<char>('0' + between(0, 9)));
    return s;
  }

  SlotLexicon persona() {
    static const std::array<std::string, 6> first = {"jim", "anna", "maria", "tom", "lee", "sara"};
    static const std::array<std::string, 6> last = {"lee", "park", "smith", "diaz", "cole", "wong"};
    static const std::array<std::string, 4> streets = {"el ave", "oak st", "pine rd", "lake dr"};
    SlotLexicon lexicon;
    lexicon["name"] = pick(first) + " " + pick(last);
    lexicon["card_num"] = digits(4) + "-xxxx-xxxx-" + digits(4);
    lexicon["card_cvs"] = "cvs " + digits(3);
    lexicon["card_date"] = digits(2) + "/" + digits(2);
    lexicon["phone_num"] = digits(3) + "-xxx-" + digits(4);
    lexicon["address"] = digits(3) + " " + pick(streets) + ", apt " + digits(2);
    return lexicon;
  }
};

struct State {
  std::set<std::string> attacker_provided;
  std::map<std::string, int> system_elicited;
};

std::optional<std::string> eligible_follow_up(Generator& gen, const State& state) {
  std::vector<std::string> eligible;
  for (const auto& slot : kAttackerSlots) {
    auto it = state.system_elicited.find(slot);
    const int asked = it == state.system_elicited.end() ? 0 : it->second;
    if (!state.attacker_provided.contains(slot) && asked < 2) eligible.push_back(slot);
  }
  if (eligible.empty()) return std::nullopt;
  return gen.pick(eligible);
}

// Appends an optional follow-up elicitation to a system turn.
void maybe_follow_up(Generator& gen, State& state, Turn& reply) {
  std::optional<std::string> slot;
  if (gen.options.adversarial && !state.attacker_provided.empty() &&
      gen.chance(gen.options.violation_rate)) {
    std::vector<std::string> provided(state.attacker_provided.begin(),
                                      state.attacker_provided.end());
    slot = gen.pick(provided);
  } else if (gen.chance(0.5)) {
    slot = eligible_follow_up(gen, state);
  }
  if (!slot) return;
  reply.sentences.push_back(
      {gen.pick(system_elicitations().at(*slot)), std::string(kElicitation), *slot});
  ++state.system_elicited[*slot];
}

AnnotatedDialog make_dialog(Generator& gen, int index) {
  AnnotatedDialog dialog;
  dialog.id = "synthetic-" + std::to_string(index);
  dialog.private_info = gen.persona();
  State state;
  auto human = [&](std::vector<Sentence> sentences) {
    dialog.turns.push_back({Speaker::kHuman, std::move(sentences)});
  };
  auto system = [&](Turn turn) { dialog.turns.push_back(std::move(turn)); };

  // Opening exchange.
  std::vector<Sentence> opening = {
      {gen.pick(Phrases{"hello there.", "hi, good afternoon.", "hello, how are you today?"}),
       "greeting", "others"}};
  if (gen.options.adversarial || gen.chance(0.3)) {
    const auto& disclosure = gen.pick(attacker_disclosures().at("name"));
    opening.push_back({disclosure, std::string(kProvidingInformation), "name"});
    state.attacker_provided.insert("name");
  }
  human(opening);
  {
    Turn reply{Speaker::kSystem, {}};
    if (opening.back().intent == "greeting") {
      reply.sentences.push_back({gen.pick(Phrases{"hello, this is " + dialog.private_info["name"] + ".",
                                                  "hi, " + dialog.private_info["name"] + " speaking."}),
                                 "greeting", "name"});
    } else {
      reply.sentences.push_back(
          {gen.pick(Phrases{"thanks for letting me know.", "thank you for telling me."}),
           "thanking", "others"});
      maybe_follow_up(gen, state, reply);
    }
    system(std::move(reply));
  }

  const int middle = gen.between(3, 5);
  std::vector<std::string> victim_slots;
  for (const auto& [slot, _] : attacker_elicitations()) victim_slots.push_back(slot);
  for (int m = 0; m < middle; ++m) {
    std::vector<std::string> disclosable;
    for (const auto& slot : kAttackerSlots)
      if (!state.attacker_provided.contains(slot)) disclosable.push_back(slot);
    const int roll = gen.between(0, 9);
    std::vector<Sentence> turn;
    Turn reply{Speaker::kSystem, {}};
    if (roll < 5) {
      const auto& slot = gen.pick(victim_slots);
      if (gen.chance(0.3)) {
        turn.push_back({"i am calling from amazon customer service.", "nonresponsive_statement",
                        "identity"});
      }
      turn.push_back({gen.pick(attacker_elicitations().at(slot)), std::string(kElicitation), slot});
      reply.sentences.push_back({gen.pick(refusals().at(slot)), std::string(kRefusal), slot});
      maybe_follow_up(gen, state, reply);
    } else if (roll < 6) {
      const bool order = gen.chance(0.5);
      const std::string slot = order ? "order_detail" : "account_detail";
      turn.push_back({order ? gen.pick(Phrases{"did you receive your order?",
                                               "is your package on its way?"})
                            : gen.pick(Phrases{"is this the account holder?",
                                               "do you have access to your account?"}),
                      "yes_no_question", slot});
      reply.sentences.push_back({order ? "yes, i am still waiting for the package."
                                       : "yes, this is my account.",
                                 "positive_answer", slot});
    } else if (roll < 7) {
      turn.push_back({gen.pick(Phrases{"how did you like your recent purchase?",
                                       "what did you order last week?"}),
                      "open_question", "order_detail"});
      reply.sentences.push_back({gen.pick(Phrases{"i bought a heater and it has not arrived.",
                                                  "i ordered a heater, it is late."}),
                                 "responsive_statement", "order_detail"});
    } else if (roll < 9 && !disclosable.empty()) {
      const auto& slot = gen.pick(disclosable);
      turn.push_back({gen.pick(attacker_disclosures().at(slot)),
                      std::string(kProvidingInformation), slot});
      state.attacker_provided.insert(slot);
      reply.sentences.push_back(
          {gen.pick(Phrases{"thanks for letting me know.", "thank you for telling me."}),
           "thanking", "others"});
      maybe_follow_up(gen, state, reply);
    } else {
      turn.push_back({gen.pick(Phrases{"thank you for your patience.", "thanks for your help."}),
                      "thanking", "others"});
      reply.sentences.push_back(
          {gen.pick(Phrases{"you're welcome.", "no problem."}), "respond_to_thank", "others"});
    }
    human(std::move(turn));
    system(std::move(reply));
  }

  human({{gen.pick(Phrases{"have a nice day.", "goodbye for now."}), "closing", "others"}});
  system({Speaker::kSystem, {{gen.pick(Phrases{"goodbye.", "bye, take care."}), "closing", "others"}}});
  return dialog;
}

}  // namespace

std::string_view synthetic_reply_intent(std::string_view human_intent) {
  static const std::map<std::string, std::string, std::less<>> table = {
      {"greeting", "greeting"},
      {"elicitation", "refusal"},
      {"yes_no_question", "positive_answer"},
      {"open_question", "responsive_statement"},
      {"providing_information", "thanking"},
      {"thanking", "respond_to_thank"},
      {"closing", "closing"},
  };
  auto it = table.find(human_intent);
  if (it == table.end()) throw ValidationError("no synthetic reply for '" + std::string(human_intent) + "'");
  return it->second;
}

Corpus make_synthetic_corpus(const SyntheticOptions& options) {
  Generator gen{std::mt19937_64(options.seed), options};
  Corpus corpus;
  corpus.taxonomy = antiscam_taxonomy();
  for (int i = 0; i < options.dialogs; ++i) {
    auto dialog = make_dialog(gen, i);
    validate_dialog(dialog, corpus.taxonomy, LoadOptions{}, nullptr);
    corpus.dialogs.push_back(std::move(dialog));
  }
  return corpus;
}

}  // namespace missa::corpus
