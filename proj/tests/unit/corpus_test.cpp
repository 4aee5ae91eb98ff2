#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "common/fixtures.hpp"
#include "missa/corpus/corpus_io.hpp"
#include "missa/corpus/intent_mapping.hpp"
#include "missa/corpus/split.hpp"
#include "missa/corpus/synthetic.hpp"
#include "missa/corpus/text.hpp"
#include "missa/corpus/vocabulary.hpp"
#include "missa/error.hpp"

using namespace missa::corpus;
using missa::ValidationError;
using missa::testing::default_persona;

namespace {

std::vector<AnnotatedDialog> numbered_dialogs(int n) {
  std::vector<AnnotatedDialog> out;
  for (int i = 0; i < n; ++i) {
    AnnotatedDialog d;
    d.id = "d" + std::to_string(i);
    d.turns.push_back({Speaker::kHuman, {{"hello .", "greeting", "others"}}});
    out.push_back(d);
  }
  return out;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : " ") + p;
  return out;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
    } else {
      if (space) out += ' ';
      space = false;
      out += c;
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("default taxonomy cardinalities") {
    const auto anti = antiscam_taxonomy();
    CHECK(anti.intents().size() == 15);
    CHECK(anti.slots().size() == 13);
    int on_task = 0;
    for (const auto& i : anti.intents()) on_task += i.category == IntentCategory::kOnTask;
    CHECK(on_task == 3);
    CHECK(anti.has_slot("others"));

    const auto pers = persuasion_taxonomy();
    on_task = 0;
    for (const auto& i : pers.intents()) on_task += i.category == IntentCategory::kOnTask;
    CHECK(on_task == 9);
    CHECK(pers.intents().size() == 21);
    CHECK(pers.has_slot("others"));
  }

  TEST_CASE("off-task intents are shared across tasks") {
    const auto anti = antiscam_taxonomy();
    const auto pers = persuasion_taxonomy();
    for (const auto& label : off_task_intents()) {
      CHECK(anti.find_intent(label.name) != nullptr);
      CHECK(*pers.find_intent(label.name) == label);
    }
  }

  TEST_CASE("taxonomy rejects duplicates and always carries others") {
    CHECK_THROWS_AS(Taxonomy("t", {{"a", IntentCategory::kOnTask}, {"a", IntentCategory::kOnTask}},
                             {}),
                    ValidationError);
    Taxonomy t("t", {{"a", IntentCategory::kOnTask}}, {{"x"}});
    CHECK(t.has_slot("others"));
  }

  TEST_CASE("taxonomy hash is stable and label-sensitive") {
    CHECK(antiscam_taxonomy().hash() == antiscam_taxonomy().hash());
    CHECK(antiscam_taxonomy().hash() != persuasion_taxonomy().hash());
  }

  TEST_CASE("segment_turn") {
    CHECK(segment_turn("I'm doing very well, thank you for asking. How did you enjoy your recent "
                       "Amazon purchase?")
              .size() == 2);
    CHECK(segment_turn("Hi.") == std::vector<std::string>{"Hi."});
    CHECK(segment_turn("Sure") == std::vector<std::string>{"Sure"});
    CHECK(segment_turn("   \t ").empty());
    CHECK(segment_turn("Dr. Smith called. Mr. Lee too!") ==
          std::vector<std::string>{"Dr. Smith called.", "Mr. Lee too!"});
    CHECK(segment_turn("Use e.g. this one. Ok?") ==
          std::vector<std::string>{"Use e.g. this one.", "Ok?"});
    CHECK(segment_turn("What?! Really...  yes") ==
          std::vector<std::string>{"What?!", "Really...", "yes"});
  }

  TEST_CASE("segmentation preserves text modulo whitespace") {
    std::mt19937_64 rng(4);
    const char* pieces[] = {"hello", "Mr.", "e.g.", "<card_num>", ".", "?", "!", "there", "a.b",
                            "  ", "\n", "x!y", "i.e."};
    for (int trial = 0; trial < 300; ++trial) {
      std::string text;
      std::uniform_int_distribution<int> pick(0, 12), len(1, 12);
      for (int k = len(rng); k > 0; --k) text += std::string(pieces[pick(rng)]) + " ";
      CHECK(join(segment_turn(text)) == collapse_whitespace(text));
    }
  }

  TEST_CASE("delexicalize and relexicalize") {
    const auto lex = default_persona();
    CHECK(delexicalize("Alright, it is 5110-xxxx-xxxx-8166.", lex) == "Alright, it is <card_num>.");
    CHECK(delexicalize("nothing to see", lex) == "nothing to see");
    CHECK(relexicalize("<card_num>", lex).text == "5110-xxxx-xxxx-8166");
    CHECK(relexicalize("no slots here", lex).text == "no slots here");
    CHECK(relexicalize("no slots here", lex).unresolved.empty());
    const auto flagged = relexicalize("<phone_num>", {});
    CHECK(flagged.text == "<phone_num>");
    CHECK(flagged.unresolved == std::vector<std::string>{"<phone_num>"});
  }

  TEST_CASE("relexicalize inverts delexicalize for non-overlapping lexicons") {
    std::mt19937_64 rng(8);
    const auto lex = default_persona();
    std::vector<std::string> parts{"my", "card", "is", ",", "call", "Jim", "Lee", "05/25",
                                   "380", "350-xxx-2988", "xxx El Ave, Apt 311, City, State, "
                                   "Zipcode", "5110-xxxx-xxxx-8166", "3805", "ok."};
    for (int trial = 0; trial < 500; ++trial) {
      std::string s;
      std::uniform_int_distribution<std::size_t> pick(0, parts.size() - 1);
      std::uniform_int_distribution<int> len(0, 10);
      for (int k = len(rng); k > 0; --k) s += parts[pick(rng)] + (trial % 2 ? " " : "");
      CHECK(relexicalize(delexicalize(s, lex), lex).text == s);
    }
  }

  TEST_CASE("lexicon validation") {
    CHECK_NOTHROW(validate_lexicon(default_persona()));
    CHECK_THROWS_AS(validate_lexicon({{"a", ""}}), ValidationError);
    CHECK_THROWS_AS(validate_lexicon({{"a", "12"}, {"b", "123"}}), ValidationError);
    CHECK_THROWS_AS(validate_lexicon({{"a", "x"}, {"b", "x"}}), ValidationError);
  }

  TEST_CASE("tokenize keeps bracket tokens atomic") {
    CHECK(tokenize("It is <card_num>, OK?") ==
          std::vector<std::string>{"it", "is", "<card_num>", ",", "ok", "?"});
    CHECK(tokenize("I'm here") == std::vector<std::string>{"i'm", "here"});
    CHECK(detokenize(tokenize("Hello , world !")) == "hello, world!");
  }

  TEST_CASE("split sizes and determinism") {
    auto s10 = split_corpus(numbered_dialogs(10), 1);
    CHECK(s10.train.size() == 8);
    CHECK(s10.validation.size() == 1);
    CHECK(s10.test.size() == 1);
    auto s220 = split_corpus(numbered_dialogs(220), 1);
    CHECK(s220.train.size() == 176);
    CHECK(s220.validation.size() == 22);
    CHECK(s220.test.size() == 22);
    CHECK_THROWS_AS(split_corpus(numbered_dialogs(9), 1), ValidationError);

    auto again = split_corpus(numbered_dialogs(220), 1);
    CHECK(again.train == s220.train);
    CHECK(again.test == s220.test);
  }

  TEST_CASE("split proportions hold for every size") {
    for (int n = 10; n <= 120; ++n) {
      const auto dialogs = numbered_dialogs(n);
      const auto s = split_corpus(dialogs, static_cast<std::uint64_t>(n));
      const auto tenth = static_cast<std::size_t>(std::floor(0.1 * n + 0.5));
      CHECK(s.test.size() == tenth);
      CHECK(s.validation.size() == tenth);
      std::set<std::string> ids;
      for (const auto* part : {&s.train, &s.validation, &s.test}) {
        for (const auto& d : *part) CHECK(ids.insert(d.id).second);
      }
      CHECK(ids.size() == static_cast<std::size_t>(n));
    }
  }

  TEST_CASE("vocabulary reserves every label token and applies the cutoff") {
    const auto tax = antiscam_taxonomy();
    AnnotatedDialog d;
    d.id = "v";
    d.turns.push_back({Speaker::kHuman, {{"hello hello rare", "greeting", "others"}}});
    const auto vocab = build_vocabulary({d}, tax, 2);
    for (const auto& intent : tax.intents()) CHECK(vocab.find(intent_token(intent.name)));
    for (const auto& slot : tax.slots()) CHECK(vocab.find(slot_token(slot.name)));
    CHECK(vocab.id("hello") != Vocabulary::kUnknownId);
    CHECK(vocab.id("rare") == Vocabulary::kUnknownId);

    std::stringstream buffer;
    vocab.save(buffer);
    const auto loaded = Vocabulary::load(buffer, tax);
    CHECK(loaded == vocab);
    CHECK(loaded.id("hello") == vocab.id("hello"));
  }

  TEST_CASE("loader validates labels and alternation") {
    const auto tax = antiscam_taxonomy();
    nlohmann::json doc = {{"task", "antiscam"}, {"dialogs", nlohmann::json::array()}};
    LoadReport report;
    auto empty = parse_corpus(doc, tax, {}, &report);
    CHECK(empty.dialogs.empty());
    CHECK(report.dialogs == 0);
    CHECK(report.sentences == 0);

    doc["dialogs"] = {{{"id", "bad-1"},
                       {"private_info", nlohmann::json::object()},
                       {"turns",
                        {{{"speaker", "human"},
                          {"sentences", {{{"text", "x"}, {"intent", "greeting"},
                                          {"slot", "order_ship"}}}}}}}}};
    try {
      parse_corpus(doc, tax);
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("order_ship") != std::string::npos);
      CHECK(std::string(e.what()).find("bad-1") != std::string::npos);
    }
    LoadReport lenient_report;
    auto lenient = parse_corpus(doc, tax, LoadOptions{true}, &lenient_report);
    CHECK(lenient.taxonomy.has_slot("order_ship"));
    CHECK(lenient_report.warnings.size() == 1);

    doc["dialogs"][0]["turns"][0]["sentences"][0]["slot"] = "others";
    doc["dialogs"][0]["turns"].push_back(doc["dialogs"][0]["turns"][0]);
    CHECK_THROWS_AS(parse_corpus(doc, tax), ValidationError);
  }

  TEST_CASE("sample corpus round-trips through serialization") {
    const auto corpus = missa::testing::sample_corpus();
    CHECK(corpus.dialogs.size() >= 10);
    const auto again = parse_corpus(to_json(corpus));
    CHECK(again == corpus);
  }

  TEST_CASE("persuasion act mapping covers its targets") {
    const auto tax = persuasion_taxonomy();
    const auto mapping =
        IntentMapping::load(missa::testing::source_dir() / "data" / "persuasion_act_map.json", tax);
    CHECK(mapping.size() > 0);
    CHECK(mapping.map("agree-donation") == "agree_donation");
    CHECK_THROWS_AS(mapping.map("no-such-act"), ValidationError);
  }

  TEST_CASE("synthetic corpus is valid, deterministic and follows its reply map") {
    SyntheticOptions options;
    options.dialogs = 30;
    const auto a = make_synthetic_corpus(options);
    const auto b = make_synthetic_corpus(options);
    CHECK(a == b);
    CHECK(a.dialogs.size() == 30);
    auto reparsed = parse_corpus(to_json(a));
    CHECK(reparsed == a);
    for (const auto& d : a.dialogs) {
      for (std::size_t t = 1; t < d.turns.size(); ++t) {
        if (d.turns[t].speaker != Speaker::kSystem) continue;
        const auto& human = d.turns[t - 1].sentences.back().intent;
        CHECK(d.turns[t].sentences.front().intent == synthetic_reply_intent(human));
      }
    }
  }
}
