#include <doctest.h>

#include <random>

#include "common/model_fixture.hpp"
#include "missa/decode/decode.hpp"
#include "missa/error.hpp"

using namespace missa::decode;
using missa::corpus::Speaker;
using missa::corpus::TokenKind;
using missa::corpus::Vocabulary;
using missa::testing::ModelFixture;
using missa::testing::sample_corpus;
using missa::testing::small_config;

namespace {

// (intent words+ sep)+ eos
bool parses_with_intents(const CandidateResponse& c, const Vocabulary& vocab) {
  enum { kStart, kAfterIntent, kWords } state = kStart;
  for (std::size_t i = 0; i < c.tokens.size(); ++i) {
    const int t = c.tokens[i];
    const bool last = i + 1 == c.tokens.size();
    switch (state) {
      case kStart:
        if (t == Vocabulary::kEndId) return last && i > 0;
        if (vocab.kind(t) != TokenKind::kIntent) return false;
        state = kAfterIntent;
        break;
      case kAfterIntent:
        if (!vocab.is_word(t)) return false;
        state = kWords;
        break;
      case kWords:
        if (t == Vocabulary::kSeparatorId) {
          state = kStart;
        } else if (!vocab.is_word(t)) {
          return false;
        }
        break;
    }
  }
  return false;
}

}  // namespace

TEST_SUITE("decode") {
  TEST_CASE("nucleus examples") {
    const double probs[] = {0.5, 0.3, 0.2};
    const auto n = nucleus_filter(probs, 0.7);
    CHECK(n.indices == std::vector<int>{0, 1});
    CHECK(n.probs[0] == 0.625);
    CHECK(n.probs[1] == 0.375);

    const auto full = nucleus_filter(probs, 1.0);
    CHECK(full.indices == std::vector<int>{0, 1, 2});
    CHECK(full.probs == std::vector<double>{0.5, 0.3, 0.2});

    const double skewed[] = {0.1, 0.6, 0.3};
    const auto tiny = nucleus_filter(skewed, 1e-12);
    CHECK(tiny.indices == std::vector<int>{1});
    CHECK(tiny.probs == std::vector<double>{1.0});

    const double tied[] = {0.25, 0.25, 0.25, 0.25};
    CHECK(nucleus_filter(tied, 0.4).indices == std::vector<int>{0, 1});
  }

  TEST_CASE("nucleus is the minimal top-p prefix") {
    std::mt19937_64 rng(17);
    std::gamma_distribution<double> gamma(0.3, 1.0);
    std::uniform_real_distribution<double> mass(0.01, 0.999);
    for (int trial = 0; trial < 2000; ++trial) {
      std::vector<double> probs(1 + trial % 40);
      double sum = 0;
      for (double& q : probs) sum += q = gamma(rng) + 1e-12;
      for (double& q : probs) q /= sum;
      const double p = mass(rng);
      const auto n = nucleus_filter(probs, p);
      double kept = 0, without_last = 0;
      double min_kept = 1;
      std::vector<char> in(probs.size(), 0);
      for (std::size_t k = 0; k < n.indices.size(); ++k) {
        kept += probs[n.indices[k]];
        if (k + 1 < n.indices.size()) without_last += probs[n.indices[k]];
        min_kept = std::min(min_kept, probs[n.indices[k]]);
        in[n.indices[k]] = 1;
      }
      CHECK(kept >= p - 1e-12);
      CHECK(without_last < p);
      for (std::size_t i = 0; i < probs.size(); ++i) {
        if (!in[i]) CHECK(probs[i] <= min_kept);
      }
      double total = 0;
      for (double q : n.probs) total += q;
      CHECK(std::abs(total - 1.0) < 1e-12);
    }
  }

  TEST_CASE("decode config JSON and validation") {
    DecodeConfig c;
    c.p = 0.5;
    c.K = 3;
    c.variant = DecodeVariant::kMissaCon;
    nlohmann::json j = c;
    CHECK(j.at("variant") == "missa-con");
    const auto back = j.get<DecodeConfig>();
    CHECK(back.p == 0.5);
    CHECK(back.K == 3);
    CHECK(back.variant == DecodeVariant::kMissaCon);
    c.p = 0;
    CHECK_THROWS_AS(c.validate(), missa::ValidationError);
    CHECK_THROWS_AS(parse_decode_variant("hybrid"), missa::ValidationError);
  }

  TEST_CASE("missa candidates start with an intent token and parse") {
    ModelFixture f(sample_corpus(), small_config(512));
    const auto& d = f.corpus.dialogs[0];
    DecodeConfig config;
    config.K = 8;
    config.max_tokens = 6;
    config.max_sentences = 3;
    config.seed = 3;
    const auto history = std::span(d.turns).first(1);
    const auto candidates = generate_turn(f.bundle, history, d.private_info, config);
    REQUIRE(candidates.size() == 8);
    for (const auto& c : candidates) {
      CHECK(f.vocab().kind(c.tokens.front()) == TokenKind::kIntent);
      CHECK(parses_with_intents(c, f.vocab()));
      CHECK_FALSE(c.degenerate);
      CHECK(c.sentences.size() <= 3);
      for (const auto& s : c.sentences) {
        CHECK(s.intent.has_value());
        CHECK(s.predicted_intent.has_value());
        CHECK(s.predicted_slot.has_value());
        CHECK(s.disagreement == (*s.intent != *s.predicted_intent));
      }
      int words = 0;
      for (int t : c.tokens) {
        if (f.vocab().is_word(t)) {
          CHECK(++words <= 6);
        } else {
          words = 0;
        }
      }
      for (const auto& step : c.trace) CHECK(step.probability >= step.max_excluded);
    }
    const auto again = generate_turn(f.bundle, history, d.private_info, config);
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      CHECK(nlohmann::json(candidates[k]).dump() == nlohmann::json(again[k]).dump());
    }
  }

  TEST_CASE("greedy decoding is deterministic across seeds") {
    ModelFixture f(sample_corpus(), small_config(512));
    const auto& d = f.corpus.dialogs[1];
    DecodeConfig config;
    config.K = 1;
    config.p = 1e-9;
    config.max_tokens = 8;
    config.seed = 1;
    const auto a = generate_turn(f.bundle, std::span(d.turns).first(3), d.private_info, config);
    config.seed = 99;
    const auto b = generate_turn(f.bundle, std::span(d.turns).first(3), d.private_info, config);
    CHECK(a[0].tokens == b[0].tokens);
    for (const auto& step : a[0].trace) CHECK(step.nucleus_size == 1);
  }

  TEST_CASE("plain variants emit no intent tokens and take intents from the classifier") {
    auto config = small_config(512);
    config.intent_tokens = false;
    ModelFixture f(sample_corpus(), config);
    const auto& d = f.corpus.dialogs[2];
    DecodeConfig decode;
    decode.variant = DecodeVariant::kMissaCon;
    decode.max_tokens = 5;
    decode.K = 6;
    const auto candidates = generate_turn(f.bundle, std::span(d.turns).first(1),
                                          d.private_info, decode);
    for (const auto& c : candidates) {
      for (int t : c.tokens) CHECK(f.vocab().kind(t) != TokenKind::kIntent);
      for (const auto& s : c.sentences) {
        CHECK_FALSE(s.intent.has_value());
        CHECK(s.intent_label() == *s.predicted_intent);
        CHECK_FALSE(s.disagreement);
      }
    }
    decode.variant = DecodeVariant::kMissa;
    CHECK_THROWS_AS(generate_turn(f.bundle, std::span(d.turns).first(1), d.private_info, decode),
                    missa::ValidationError);
  }

  TEST_CASE("classify_candidate agrees with the labels computed during generation") {
    ModelFixture f(sample_corpus(), small_config(512));
    const auto& d = f.corpus.dialogs[3];
    DecodeConfig config;
    config.K = 4;
    config.max_tokens = 6;
    const auto history = std::span(d.turns).first(3);
    auto candidates = generate_turn(f.bundle, history, d.private_info, config);
    for (auto& c : candidates) {
      auto copy = c;
      for (auto& s : copy.sentences) s.predicted_intent.reset();
      classify_candidate(f.bundle, history, d.private_info, copy);
      for (std::size_t k = 0; k < c.sentences.size(); ++k) {
        CHECK(copy.sentences[k].predicted_intent == c.sentences[k].predicted_intent);
        CHECK(copy.sentences[k].predicted_slot == c.sentences[k].predicted_slot);
      }
    }
  }

  TEST_CASE("classification keeps a disagreeing generated intent") {
    ModelFixture f(sample_corpus(), small_config(512));
    const auto& d = f.corpus.dialogs[0];
    f.model().head(missa::model::Head::kSystemIntent).value.setZero();
    // Zero weights tie every label, so the argmax is the first intent.
    const auto first = f.corpus.taxonomy.intents()[0].name;
    CandidateResponse c;
    CandidateSentence s;
    s.intent = "greeting";
    s.text = "hello there.";
    c.sentences.push_back(s);
    classify_candidate(f.bundle, std::span(d.turns).first(1), d.private_info, c);
    CHECK(*c.sentences[0].intent == "greeting");
    CHECK(*c.sentences[0].predicted_intent == first);
    CHECK(c.sentences[0].disagreement);
    CHECK(c.sentences[0].intent_label() == "greeting");
  }

  TEST_CASE("an empty candidate is left unchanged and flagged") {
    ModelFixture f(sample_corpus(), small_config(512));
    CandidateResponse c;
    c.log_prob = -1.5;
    classify_candidate(f.bundle, {}, {}, c);
    CHECK(c.degenerate);
    CHECK(c.sentences.empty());
    CHECK(c.log_prob == -1.5);
  }

  TEST_CASE("predict_labels covers every sentence") {
    ModelFixture f(sample_corpus(), small_config(512));
    const auto& d = f.corpus.dialogs[0];
    const auto labels = predict_labels(f.bundle, d.turns, d.private_info);
    REQUIRE(labels.size() == d.turns.size());
    for (std::size_t t = 0; t < d.turns.size(); ++t) {
      CHECK(labels[t].size() == d.turns[t].sentences.size());
    }
  }
}
