#include "missa/decode/decode.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "missa/corpus/text.hpp"
#include "missa/error.hpp"
#include "missa/rng.hpp"

namespace missa::decode {

using corpus::Speaker;
using corpus::Turn;
using corpus::Vocabulary;

std::string_view to_string(DecodeVariant v) {
  switch (v) {
    case DecodeVariant::kMissa:
      return "missa";
    case DecodeVariant::kMissaCon:
      return "missa-con";
    case DecodeVariant::kVanilla:
      return "vanilla";
  }
  return "unknown";
}

DecodeVariant parse_decode_variant(std::string_view text) {
  for (auto v : {DecodeVariant::kMissa, DecodeVariant::kMissaCon, DecodeVariant::kVanilla}) {
    if (text == to_string(v)) return v;
  }
  throw ValidationError("unknown decode variant '" + std::string(text) + "'");
}

void DecodeConfig::validate() const {
  if (!(p > 0 && p <= 1)) throw ValidationError("nucleus mass p must lie in (0, 1]");
  if (!(temperature > 0)) throw ValidationError("temperature must be > 0");
  if (K < 1) throw ValidationError("candidate count K must be >= 1");
  if (max_sentences < 1) throw ValidationError("max_sentences must be >= 1");
  if (max_tokens < 1) throw ValidationError("max_tokens must be >= 1");
}

void to_json(nlohmann::json& j, const DecodeConfig& c) {
  j = {{"p", c.p},
       {"temperature", c.temperature},
       {"K", c.K},
       {"max_sentences", c.max_sentences},
       {"max_tokens", c.max_tokens},
       {"variant", to_string(c.variant)},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, DecodeConfig& c) {
  c.p = j.value("p", c.p);
  c.temperature = j.value("temperature", c.temperature);
  c.K = j.value("K", c.K);
  c.max_sentences = j.value("max_sentences", c.max_sentences);
  c.max_tokens = j.value("max_tokens", c.max_tokens);
  if (j.contains("variant")) c.variant = parse_decode_variant(j.at("variant").get<std::string>());
  c.seed = j.value("seed", c.seed);
}

Nucleus nucleus_filter(std::span<const double> probs, double p) {
  Nucleus out;
  const int n = static_cast<int>(probs.size());
  if (n == 0) return out;
  if (p >= 1.0) {
    out.indices.resize(n);
    std::iota(out.indices.begin(), out.indices.end(), 0);
    out.probs.assign(probs.begin(), probs.end());
    return out;
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return probs[a] > probs[b] || (probs[a] == probs[b] && a < b);
  });
  double mass = 0.0;
  for (int i : order) {
    out.indices.push_back(i);
    mass += probs[i];
    if (mass >= p - 1e-12) break;
  }
  // The last member takes the residual so the support sums to exactly one.
  double assigned = 0.0;
  for (std::size_t k = 0; k + 1 < out.indices.size(); ++k) {
    out.probs.push_back(probs[out.indices[k]] / mass);
    assigned += out.probs.back();
  }
  out.probs.push_back(std::max(0.0, 1.0 - assigned));
  return out;
}

std::string CandidateSentence::intent_label() const {
  if (intent) return *intent;
  return predicted_intent.value_or("");
}

std::string CandidateResponse::text() const {
  std::string out;
  for (const auto& s : sentences) {
    if (s.text.empty()) continue;
    if (!out.empty()) out += ' ';
    out += s.text;
  }
  return out;
}

Turn CandidateResponse::as_turn(bool delexicalized) const {
  Turn turn{Speaker::kSystem, {}};
  for (const auto& s : sentences) {
    turn.sentences.push_back({delexicalized ? s.delexicalized : s.text, s.intent_label(),
                              s.predicted_slot.value_or(std::string(corpus::kOthersSlot))});
  }
  return turn;
}

void to_json(nlohmann::json& j, const CandidateResponse& c) {
  auto optional = [](const std::optional<std::string>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json sentences = nlohmann::json::array();
  for (const auto& s : c.sentences) {
    sentences.push_back({{"intent", optional(s.intent)},
                         {"text", s.text},
                         {"delexicalized", s.delexicalized},
                         {"predicted_intent", optional(s.predicted_intent)},
                         {"predicted_slot", optional(s.predicted_slot)},
                         {"disagreement", s.disagreement}});
  }
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& step : c.trace) {
    trace.push_back({{"token", step.token},
                     {"nucleus_size", step.nucleus_size},
                     {"allowed", step.allowed},
                     {"probability", step.probability},
                     {"max_excluded", step.max_excluded}});
  }
  j = {{"index", c.index},
       {"text", c.text()},
       {"sentences", sentences},
       {"log_prob", c.log_prob},
       {"degenerate", c.degenerate},
       {"next_utterance_score", c.next_utterance_score ? nlohmann::json(*c.next_utterance_score)
                                                       : nlohmann::json(nullptr)},
       {"trace", trace},
       {"unresolved_slots", c.unresolved_slots},
       {"violations", c.violations}};
}

namespace {

std::vector<Turn> prepare_history(const model::Checkpoint& ck, std::span<const Turn> history,
                                  const corpus::SlotLexicon& lexicon) {
  std::vector<Turn> out(history.begin(), history.end());
  if (!ck.model.config().delexicalize) return out;
  for (auto& turn : out) {
    for (auto& s : turn.sentences) s.text = corpus::delexicalize(s.text, lexicon);
  }
  return out;
}

void check_compatible(const model::Checkpoint& ck) {
  if (ck.vocab.size() != ck.model.vocab_size()) {
    throw ValidationError("vocabulary of " + std::to_string(ck.vocab.size()) +
                          " tokens does not match the model's " +
                          std::to_string(ck.model.vocab_size()));
  }
  if (static_cast<int>(ck.taxonomy.intents().size()) != ck.model.intent_count() ||
      static_cast<int>(ck.taxonomy.slots().size()) != ck.model.slot_count()) {
    throw ValidationError("taxonomy does not match the model's classifier heads");
  }
}

int argmax(const model::RowVector& row) {
  Eigen::Index best = 0;
  row.maxCoeff(&best);
  return static_cast<int>(best);
}

void label_sentence(const model::Checkpoint& ck, const model::IncrementalDecoder& dec, int anchor,
                    int position, CandidateSentence& s) {
  const auto& tax = ck.taxonomy;
  s.predicted_intent =
      tax.intents()[argmax(dec.classifier_logits(model::Head::kSystemIntent, anchor, position))]
          .name;
  s.predicted_slot =
      tax.slots()[argmax(dec.classifier_logits(model::Head::kSystemSlot, anchor, position))].name;
  s.disagreement = s.intent.has_value() && *s.intent != *s.predicted_intent;
}

enum class Phase { kSentenceStart, kWords };

struct TokenClasses {
  std::vector<int> words;    // words and slot tokens, ascending id
  std::vector<int> intents;  // ascending id
};

TokenClasses token_classes(const Vocabulary& vocab) {
  TokenClasses c;
  for (int id = 0; id < vocab.size(); ++id) {
    if (vocab.is_word(id) && id != Vocabulary::kUnknownId) c.words.push_back(id);
  }
  c.intents = vocab.intent_ids();
  std::sort(c.intents.begin(), c.intents.end());
  return c;
}

CandidateResponse sample_candidate(const model::Checkpoint& ck, model::IncrementalDecoder dec,
                                   int anchor, const TokenClasses& classes,
                                   const corpus::SlotLexicon& lexicon,
                                   const DecodeConfig& config, int index) {
  const auto& vocab = ck.vocab;
  const int context = ck.model.config().context_length;
  const bool intents = config.variant == DecodeVariant::kMissa;
  const int state = static_cast<int>(model::Region::kSystem);
  auto rng = make_rng(config.seed, static_cast<std::uint64_t>(index));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  CandidateResponse out;
  out.index = index;
  Phase phase = Phase::kSentenceStart;
  int words = 0;
  std::vector<int> sentence_words;
  std::optional<std::string> sentence_intent;
  std::vector<int> allowed;
  std::vector<double> probs;

  while (true) {
    const int remaining = context - dec.length();
    const int sentences = static_cast<int>(out.sentences.size());
    allowed.clear();
    if (phase == Phase::kSentenceStart) {
      if (sentences >= config.max_sentences || remaining <= 1) {
        allowed.push_back(Vocabulary::kEndId);
      } else {
        if (sentences > 0 || !intents) allowed.push_back(Vocabulary::kEndId);
        const auto& starts = intents ? classes.intents : classes.words;
        allowed.insert(allowed.end(), starts.begin(), starts.end());
      }
    } else if (words >= config.max_tokens || remaining <= 2) {
      allowed.push_back(Vocabulary::kSeparatorId);
    } else {
      if (words > 0) allowed.push_back(Vocabulary::kSeparatorId);
      allowed.insert(allowed.end(), classes.words.begin(), classes.words.end());
    }

    // Masked, temperature-scaled distribution over `allowed` (ascending ids).
    const model::RowVector logits = dec.logits();
    probs.resize(allowed.size());
    double max_logit = -std::numeric_limits<double>::infinity();
    for (int id : allowed) max_logit = std::max(max_logit, logits[id] / config.temperature);
    double norm = 0.0;
    for (std::size_t i = 0; i < allowed.size(); ++i) {
      probs[i] = std::exp(logits[allowed[i]] / config.temperature - max_logit);
      norm += probs[i];
    }
    for (double& q : probs) q /= norm;

    const Nucleus nucleus = nucleus_filter(probs, config.p);
    const double u = uniform(rng);
    std::size_t pick = nucleus.indices.size() - 1;
    double cumulative = 0.0;
    for (std::size_t k = 0; k < nucleus.indices.size(); ++k) {
      cumulative += nucleus.probs[k];
      if (u < cumulative) {
        pick = k;
        break;
      }
    }
    const int chosen = nucleus.indices[pick];
    const int token = allowed[chosen];
    SampleStep step;
    step.token = token;
    step.nucleus_size = static_cast<int>(nucleus.indices.size());
    step.allowed = static_cast<int>(allowed.size());
    step.probability = probs[chosen];
    std::vector<char> inside(allowed.size(), 0);
    for (int i : nucleus.indices) inside[i] = 1;
    for (std::size_t i = 0; i < allowed.size(); ++i) {
      if (!inside[i]) step.max_excluded = std::max(step.max_excluded, probs[i]);
    }
    out.trace.push_back(step);
    out.log_prob += std::log(probs[chosen]);
    out.tokens.push_back(token);
    if (token == Vocabulary::kEndId) {
      if (dec.length() < context) {
        dec.push(token, dec.length(), state);
        out.next_utterance_score = dec.next_utterance_logit(dec.length() - 1);
      }
      break;
    }

    dec.push(token, dec.length(), state);
    if (token == Vocabulary::kSeparatorId) {
      CandidateSentence s;
      s.intent = sentence_intent;
      s.delexicalized = vocab.decode(sentence_words);
      auto relex = corpus::relexicalize(s.delexicalized, lexicon);
      s.text = std::move(relex.text);
      for (auto& slot : relex.unresolved) out.unresolved_slots.push_back(std::move(slot));
      label_sentence(ck, dec, anchor, dec.length() - 1, s);
      out.sentences.push_back(std::move(s));
      sentence_words.clear();
      sentence_intent.reset();
      words = 0;
      phase = Phase::kSentenceStart;
    } else if (vocab.kind(token) == corpus::TokenKind::kIntent) {
      sentence_intent = vocab.intent_of(token);
      phase = Phase::kWords;
    } else {
      sentence_words.push_back(token);
      ++words;
      phase = Phase::kWords;
    }
  }
  out.degenerate = out.sentences.empty();
  return out;
}

}  // namespace

std::vector<CandidateResponse> generate_turn(const model::Checkpoint& checkpoint,
                                             std::span<const Turn> history,
                                             const corpus::SlotLexicon& lexicon,
                                             const DecodeConfig& config) {
  config.validate();
  check_compatible(checkpoint);
  if (config.variant == DecodeVariant::kMissa && !checkpoint.model.config().intent_tokens) {
    throw ValidationError("the missa decode variant needs a checkpoint trained with intent tokens");
  }
  const auto prepared = prepare_history(checkpoint, history, lexicon);
  const auto encoder = model::encoder_for(checkpoint);
  const int reserve = config.max_sentences * (config.max_tokens + 2) + 1;
  const auto prompt = encoder.encode_prompt(lexicon, prepared, Speaker::kSystem, reserve);
  model::IncrementalDecoder base(checkpoint.model);
  base.push(prompt);
  const int anchor = prompt.sentence_ends.empty() ? 0 : prompt.sentence_ends.back().position;
  const auto classes = token_classes(checkpoint.vocab);

  std::vector<CandidateResponse> out;
  out.reserve(config.K);
  for (int k = 0; k < config.K; ++k) {
    out.push_back(sample_candidate(checkpoint, base, anchor, classes, lexicon, config, k));
  }
  return out;
}

void classify_candidate(const model::Checkpoint& checkpoint, std::span<const Turn> history,
                        const corpus::SlotLexicon& lexicon, CandidateResponse& candidate) {
  if (candidate.sentences.empty()) {
    candidate.degenerate = true;
    return;
  }
  check_compatible(checkpoint);
  std::vector<Turn> raw(history.begin(), history.end());
  Turn turn{Speaker::kSystem, {}};
  for (const auto& s : candidate.sentences) turn.sentences.push_back({s.text, s.intent.value_or(""), ""});
  raw.push_back(std::move(turn));
  const auto turns = prepare_history(checkpoint, raw, lexicon);
  const auto encoder = model::encoder_for(checkpoint);
  const auto seq = encoder.encode_context(lexicon, turns);
  model::IncrementalDecoder dec(checkpoint.model);
  dec.push(seq);
  std::size_t k = 0;
  for (const auto& end : seq.sentence_ends) {
    if (end.turn != seq.sentence_ends.back().turn) continue;
    label_sentence(checkpoint, dec, end.anchor, end.position, candidate.sentences.at(k++));
  }
}

std::vector<std::vector<SentenceLabels>> predict_labels(const model::Checkpoint& checkpoint,
                                                        std::span<const Turn> turns,
                                                        const corpus::SlotLexicon& lexicon) {
  check_compatible(checkpoint);
  std::vector<std::vector<SentenceLabels>> out(turns.size());
  if (turns.empty()) return out;
  const auto prepared = prepare_history(checkpoint, turns, lexicon);
  const auto encoder = model::encoder_for(checkpoint);
  const auto seq = encoder.encode_context(lexicon, prepared);
  model::IncrementalDecoder dec(checkpoint.model);
  dec.push(seq);
  const std::size_t first = static_cast<std::size_t>(seq.dropped_turns);
  const auto& tax = checkpoint.taxonomy;
  // Turns dropped to fit the context keep empty labels.
  for (const auto& end : seq.sentence_ends) {
    const auto intent = dec.classifier_logits(model::intent_head(end.speaker), end.anchor,
                                              end.position);
    const auto slot = dec.classifier_logits(model::slot_head(end.speaker), end.anchor,
                                            end.position);
    out[first + end.turn].push_back(
        {tax.intents()[argmax(intent)].name, tax.slots()[argmax(slot)].name});
  }
  return out;
}

}  // namespace missa::decode
