// One PASS/FAIL line per acceptance criterion; exit status 1 when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "common/finite_difference.hpp"
#include "common/fixtures.hpp"
#include "missa/app/workflow.hpp"
#include "missa/corpus/corpus_io.hpp"
#include "missa/corpus/synthetic.hpp"
#include "missa/corpus/text.hpp"
#include "missa/corpus/vocabulary.hpp"
#include "missa/decode/decode.hpp"
#include "missa/eval/metrics.hpp"
#include "missa/eval/report.hpp"
#include "missa/filter/filter.hpp"
#include "missa/model/checkpoint.hpp"
#include "missa/model/loss.hpp"
#include "missa/model/trainer.hpp"
#include "missa/rng.hpp"

namespace {

using namespace missa;
using corpus::AnnotatedDialog;
using corpus::Speaker;
using corpus::Turn;
using corpus::Vocabulary;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = true;
  std::string detail;
};

// Collects failures; the first few are echoed in the detail line.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) failed_ << (failures_ > 1 ? "; " : "") << what;
  }
  long checks() const { return checks_; }
  Verdict verdict(const std::string& summary) const {
    if (failures_ == 0) return {true, summary};
    return {false, summary + "; " + std::to_string(failures_) + " of " + std::to_string(checks_) +
                       " checks failed: " + failed_.str()};
  }

 private:
  long checks_ = 0;
  long failures_ = 0;
  std::ostringstream failed_;
};

std::string fmt(double x, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << x;
  return s.str();
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::filesystem::path scratch(const std::string& name) {
  return testing::scratch_dir("acceptance-" + name);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Trained models shared by the learning, decoding and determinism checks.
struct Shared {
  corpus::Corpus synthetic;
  corpus::Split split;
  std::unique_ptr<model::Checkpoint> missa;
  std::unique_ptr<model::Checkpoint> con;
  double train_seconds = 0.0;
};

app::RunConfig desk_config(int hidden, int epochs) {
  app::RunConfig c;
  c.model.layers = 2;
  c.model.heads = 4;
  c.model.hidden = hidden;
  c.model.ffn = 4 * hidden;
  c.model.context_length = 512;
  c.model.dropout = 0.0;
  c.optimizer.learning_rate = 1e-3;
  c.optimizer.weight_decay = 0.01;
  c.epochs = epochs;
  c.batch_size = 8;
  return c;
}

Shared& shared() {
  static Shared s = [] {
    Shared out;
    out.synthetic = corpus::make_synthetic_corpus({.dialogs = 200, .seed = 1});
    out.split = corpus::split_corpus(out.synthetic.dialogs, 1);
    const auto start = Clock::now();
    out.missa = app::train_checkpoint(app::CheckpointKind::kMissa, out.synthetic.taxonomy,
                                      out.split, desk_config(64, 10), 1)
                    .checkpoint;
    out.train_seconds = seconds_since(start);
    out.con = app::train_checkpoint(app::CheckpointKind::kMissaCon, out.synthetic.taxonomy,
                                    out.split, desk_config(64, 2), 1)
                  .checkpoint;
    return out;
  }();
  return s;
}

std::vector<Turn> delexicalized(std::span<const Turn> turns, const corpus::SlotLexicon& lex) {
  std::vector<Turn> out(turns.begin(), turns.end());
  for (auto& t : out) {
    for (auto& s : t.sentences) s.text = corpus::delexicalize(s.text, lex);
  }
  return out;
}

// ---------------------------------------------------------------------------
// C1: every parameter group against central differences, eps 1e-5.

Verdict gradient_correctness() {
  const auto start = Clock::now();
  auto sample = testing::sample_corpus();
  std::vector<AnnotatedDialog> dialogs(sample.dialogs.begin(), sample.dialogs.begin() + 2);
  for (auto& d : dialogs) d.turns.resize(3);
  auto config = model::tiny_config();
  config.context_length = 96;
  config.dropout = 0.0;
  config.validate();
  auto ck = model::init_checkpoint(
      config, sample.taxonomy, corpus::build_vocabulary(dialogs, sample.taxonomy, 1, true), 3);
  const auto encoder = model::encoder_for(ck);
  const auto prepared = model::prepare_dialogs(dialogs, config);
  auto rng = make_rng(3, 0);
  auto groups = model::build_groups(encoder, prepared, 1, rng);
  auto& m = ck.model;
  const auto& weights = config.weights;

  model::LossBreakdown breakdown;
  m.zero_grad();
  {
    model::Graph g;
    auto loss = model::composite_loss(g, m, groups, weights);
    breakdown = loss.breakdown;
    g.backward(loss.total);
  }
  Checker check;
  for (int c = 0; c < model::kComponentCount; ++c) {
    check.expect(breakdown.supervised[c],
                 "component " + std::string(model::to_string(static_cast<model::Component>(c))) +
                     " unsupervised in the probe batch");
  }
  const std::function<double()> loss_value = [&] {
    model::Graph g(false);
    return model::composite_loss(g, m, groups, weights).breakdown.total;
  };
  double worst = 0.0;
  std::string worst_name;
  long coordinates = 0;
  int groups_checked = 0;
  std::vector<std::string> zero_groups;
  for (model::Param* p : m.parameters()) {
    const model::Matrix analytic = p->grad;
    const auto numeric = testing::numeric_gradient<double>(p->value, loss_value, 1e-5);
    coordinates += p->value.size();
    ++groups_checked;
    // Exactly zero gradients (a bias shared by all candidates) sit below the noise floor.
    if (std::max(analytic.norm(), numeric.norm()) < 1e-8) {
      zero_groups.push_back(p->name);
      continue;
    }
    const double err = testing::relative_error<double>(analytic, numeric);
    if (err > worst) {
      worst = err;
      worst_name = p->name;
    }
    check.expect(err < 1e-4, p->name + " relative error " + fmt(err));
  }
  const double elapsed = seconds_since(start);
  check.expect(elapsed < 120.0, "runtime " + fmt(elapsed) + " s exceeds 2 min");
  std::string zeros;
  for (const auto& name : zero_groups) zeros += (zeros.empty() ? "" : ", ") + name;
  return check.verdict(std::to_string(groups_checked) + " groups, " + std::to_string(coordinates) +
                       " coordinates, worst " + fmt(worst) + " (" + worst_name + ")" +
                       (zeros.empty() ? "" : ", zero gradient in " + zeros));
}

// ---------------------------------------------------------------------------
// C2: 300 Adam steps on one repeated batch.

Verdict memorization() {
  const auto start = Clock::now();
  const auto sample = testing::sample_corpus();
  auto config = model::tiny_config();
  config.hidden = 128;
  config.heads = 4;
  config.ffn = 512;
  config.context_length = 256;
  config.dropout = 0.0;
  auto ck = model::init_checkpoint(
      config, sample.taxonomy,
      corpus::build_vocabulary(sample.dialogs, sample.taxonomy, 1, true), 1);
  const auto encoder = model::encoder_for(ck);
  const auto prepared = model::prepare_dialogs(sample.dialogs, config);
  auto rng = make_rng(1, 0);
  auto groups = model::build_groups(encoder, prepared, 1, rng);
  groups.resize(4);

  nnet::OptimizerConfig optimizer;
  optimizer.learning_rate = 6.25e-4;
  optimizer.weight_decay = 0.01;
  auto params = ck.model.parameters();
  const double initial = model::evaluate_loss(ck.model, groups, config.weights).total;
  for (long step = 1; step <= 300; ++step) {
    ck.model.zero_grad();
    model::Graph g;
    auto loss = model::composite_loss(g, ck.model, groups, config.weights);
    g.backward(loss.total);
    nnet::adam_step<double>(params, optimizer, step);
  }
  const double final_loss = model::evaluate_loss(ck.model, groups, config.weights).total;
  const double ppl = model::perplexity(ck.model, ck.vocab, groups);
  const double elapsed = seconds_since(start);
  Checker check;
  check.expect(final_loss < 0.1 * initial,
               "final loss " + fmt(final_loss) + " not below 10% of " + fmt(initial));
  check.expect(ppl < 1.05, "batch perplexity " + fmt(ppl) + " not below 1.05");
  check.expect(elapsed < 300.0, "runtime " + fmt(elapsed) + " s exceeds 5 min");
  return check.verdict("loss " + fmt(initial) + " -> " + fmt(final_loss) + " (" +
                       fmt(100.0 * final_loss / initial, 3) + "%), perplexity " + fmt(ppl) +
                       ", " + fmt(elapsed, 3) + " s");
}

// ---------------------------------------------------------------------------
// C3, C4: metrics against exhaustive enumeration.

const std::vector<std::string> kIntentPool = {"elicitation", "refusal", "providing_information",
                                              "greeting", "thanking", "open_question"};
const std::vector<std::string> kSlotPool = {"name", "card_num", "address", "phone_num", "others"};

std::vector<AnnotatedDialog> random_dialogs(std::mt19937_64& rng) {
  auto pick = [&](const std::vector<std::string>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  std::vector<AnnotatedDialog> out(std::uniform_int_distribution<int>(1, 10)(rng));
  for (std::size_t d = 0; d < out.size(); ++d) {
    out[d].id = "d" + std::to_string(d);
    auto speaker = d == 0 || std::uniform_int_distribution<int>(0, 1)(rng) ? Speaker::kHuman
                                                                            : Speaker::kSystem;
    const int turns = std::uniform_int_distribution<int>(d == 0 ? 2 : 1, 8)(rng);
    for (int t = 0; t < turns; ++t) {
      Turn turn{speaker, {}};
      const int n = std::uniform_int_distribution<int>(1, 3)(rng);
      for (int k = 0; k < n; ++k) turn.sentences.push_back({"s", pick(kIntentPool), pick(kSlotPool)});
      out[d].turns.push_back(std::move(turn));
      speaker = corpus::other(speaker);
    }
  }
  return out;
}

// Bigram probability by scanning every ordered turn pair of every dialog.
double enumerate_probability(const std::vector<AnnotatedDialog>& dialogs, bool intents,
                             const std::string& given, const std::string& next) {
  long row = 0, hits = 0;
  for (const auto& d : dialogs) {
    for (std::size_t a = 0; a < d.turns.size(); ++a) {
      for (std::size_t b = 0; b < d.turns.size(); ++b) {
        const auto& h = d.turns[a];
        const auto& s = d.turns[b];
        if (b != a + 1 || h.speaker != Speaker::kHuman || s.speaker != Speaker::kSystem) continue;
        const auto& cue = h.sentences.back();
        const auto& label = intents ? cue.intent : cue.slot;
        if (label != given) continue;
        for (const auto& x : s.sentences) {
          ++row;
          hits += (intents ? x.intent : x.slot) == next;
        }
      }
    }
  }
  return row == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(row);
}

struct OracleScores {
  double exact = 0.0;
  double expected = 0.0;
};

OracleScores enumerate_scores(const std::vector<std::string>& pred,
                              const std::vector<std::string>& gold,
                              const std::vector<std::string>& human,
                              const std::vector<AnnotatedDialog>& train, bool intents) {
  double exact = 0.0, expected = 0.0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool match = !pred[i].empty() && pred[i] == gold[i];
    exact += match ? 1.0 : 0.0;
    expected += match ? 1.0
                      : (pred[i].empty() ? 0.0
                                         : enumerate_probability(train, intents, human[i], pred[i]));
  }
  const double n = static_cast<double>(gold.size());
  return {exact / n, expected / n};
}

std::vector<std::string> random_labels(std::mt19937_64& rng, std::size_t n,
                                       const std::vector<std::string>& pool) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = std::uniform_int_distribution<std::size_t>(0, pool.size())(rng);
    out.push_back(k == pool.size() ? std::string() : pool[k]);
  }
  return out;
}

Verdict metric_oracle() {
  Checker check;
  // Worked example: two refusals and two disclosures after an elicitation.
  std::vector<AnnotatedDialog> toy(2);
  toy[0].turns = {{Speaker::kHuman, {{"a", "elicitation", "card_num"}}},
                  {Speaker::kSystem,
                   {{"b", "refusal", "card_num"}, {"c", "providing_information", "name"}}}};
  toy[1].turns = {{Speaker::kHuman, {{"d", "greeting", "others"}, {"e", "elicitation", "name"}}},
                  {Speaker::kSystem,
                   {{"f", "refusal", "name"}, {"g", "providing_information", "name"}}}};
  const auto toy_tables = eval::build_transition_tables(toy);
  check.expect(toy_tables.intent.probability("elicitation", "refusal") == 0.5,
               "p(refusal|elicitation) != 0.5");
  const std::vector<std::string> p1 = {"providing_information"}, g1 = {"refusal"},
                                 h1 = {"elicitation"};
  const auto worked = eval::erip(p1, g1, h1, toy_tables);
  check.expect(worked.per_turn.size() == 1 && worked.per_turn[0] == 0.5,
               "worked ERIP per-turn score != 0.5");

  std::mt19937_64 rng(2024);
  int corpora = 0;
  while (corpora < 500) {
    const auto train = random_dialogs(rng);
    bool has_pair = false;
    for (const auto& d : train) {
      for (std::size_t t = 1; t < d.turns.size(); ++t) {
        has_pair |= d.turns[t - 1].speaker == Speaker::kHuman &&
                    d.turns[t].speaker == Speaker::kSystem;
      }
    }
    if (!has_pair) {
      bool threw = false;
      try {
        eval::build_transition_tables(train);
      } catch (const ValidationError&) {
        threw = true;
      }
      check.expect(threw, "pairless corpus accepted");
      continue;
    }
    ++corpora;
    const auto tables = eval::build_transition_tables(train);
    for (const auto& g : kIntentPool) {
      for (const auto& n : kIntentPool) {
        check.expect(tables.intent.probability(g, n) == enumerate_probability(train, true, g, n),
                     "intent table mismatch at " + g + "->" + n);
      }
    }
    for (const auto& g : kSlotPool) {
      for (const auto& n : kSlotPool) {
        check.expect(tables.slot.probability(g, n) == enumerate_probability(train, false, g, n),
                     "slot table mismatch at " + g + "->" + n);
      }
    }
    const std::size_t turns = std::uniform_int_distribution<std::size_t>(1, 25)(rng);
    const auto pi = random_labels(rng, turns, kIntentPool);
    const auto gi = random_labels(rng, turns, kIntentPool);
    const auto hi = random_labels(rng, turns, kIntentPool);
    const auto ps = random_labels(rng, turns, kSlotPool);
    const auto gs = random_labels(rng, turns, kSlotPool);
    const auto hs = random_labels(rng, turns, kSlotPool);
    const auto io = enumerate_scores(pi, gi, hi, train, true);
    const auto so = enumerate_scores(ps, gs, hs, train, false);
    check.expect(eval::rip(pi, gi).mean == io.exact, "rip mismatch");
    check.expect(eval::erip(pi, gi, hi, tables).mean == io.expected, "erip mismatch");
    check.expect(eval::rsp(ps, gs).mean == so.exact, "rsp mismatch");
    check.expect(eval::ersp(ps, gs, hs, tables).mean == so.expected, "ersp mismatch");
  }
  return check.verdict(std::to_string(corpora) + " random corpora of <= 10 dialogs, " +
                       std::to_string(check.checks()) + " exact comparisons");
}

Verdict metric_ordering() {
  Checker check;
  std::mt19937_64 rng(77);
  int trials = 0;
  while (trials < 2000) {
    const auto train = random_dialogs(rng);
    eval::TransitionTables tables;
    try {
      tables = eval::build_transition_tables(train);
    } catch (const ValidationError&) {
      continue;
    }
    ++trials;
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 40)(rng);
    const auto pi = random_labels(rng, n, kIntentPool);
    const auto gi = random_labels(rng, n, kIntentPool);
    const auto hi = random_labels(rng, n, kIntentPool);
    const auto ps = random_labels(rng, n, kSlotPool);
    const auto gs = random_labels(rng, n, kSlotPool);
    const auto hs = random_labels(rng, n, kSlotPool);
    const auto r = eval::rip(pi, gi), e = eval::erip(pi, gi, hi, tables);
    const auto rs = eval::rsp(ps, gs), es = eval::ersp(ps, gs, hs, tables);
    check.expect(e.mean >= r.mean, "ERIP < RIP");
    check.expect(es.mean >= rs.mean, "ERSP < RSP");
    for (std::size_t i = 0; i < n; ++i) {
      check.expect(e.per_turn[i] >= r.per_turn[i] && e.per_turn[i] <= 1.0, "per-turn ERIP order");
      check.expect(es.per_turn[i] >= rs.per_turn[i] && es.per_turn[i] <= 1.0,
                   "per-turn ERSP order");
    }
  }
  return check.verdict(std::to_string(trials) + " random assignments");
}

// ---------------------------------------------------------------------------
// C5: replays sampled candidates through the model and rebuilds each step's
// masked distribution from the turn grammar.

std::vector<int> allowed_tokens(const Vocabulary& vocab, bool intents, bool sentence_start,
                                int sentences, int words, int remaining,
                                const decode::DecodeConfig& config) {
  std::vector<int> out;
  auto add_words = [&] {
    for (int id = 0; id < vocab.size(); ++id) {
      if (vocab.is_word(id) && id != Vocabulary::kUnknownId) out.push_back(id);
    }
  };
  if (sentence_start) {
    if (sentences >= config.max_sentences || remaining <= 1) return {Vocabulary::kEndId};
    if (sentences > 0 || !intents) out.push_back(Vocabulary::kEndId);
    if (intents) {
      auto ids = vocab.intent_ids();
      std::sort(ids.begin(), ids.end());
      out.insert(out.end(), ids.begin(), ids.end());
    } else {
      add_words();
    }
  } else {
    if (words >= config.max_tokens || remaining <= 2) return {Vocabulary::kSeparatorId};
    if (words > 0) out.push_back(Vocabulary::kSeparatorId);
    add_words();
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct NucleusTally {
  long steps = 0;
  long outside = 0;
  long size_mismatch = 0;
  long nontrivial = 0;  // steps whose nucleus excluded something
};

void replay(const model::Checkpoint& ck, std::span<const Turn> history,
            const corpus::SlotLexicon& lexicon, const decode::DecodeConfig& config,
            NucleusTally& tally, Checker& check) {
  const auto candidates = decode::generate_turn(ck, history, lexicon, config);
  const auto encoder = model::encoder_for(ck);
  const int reserve = config.max_sentences * (config.max_tokens + 2) + 1;
  const auto prompt =
      encoder.encode_prompt(lexicon, delexicalized(history, lexicon), Speaker::kSystem, reserve);
  const bool intents = config.variant == decode::DecodeVariant::kMissa;
  const int context = ck.model.config().context_length;
  for (const auto& c : candidates) {
    model::IncrementalDecoder dec(ck.model);
    dec.push(prompt);
    bool start = true;
    int sentences = 0, words = 0;
    check.expect(c.trace.size() == c.tokens.size(), "trace length");
    for (std::size_t t = 0; t < c.tokens.size(); ++t) {
      const int token = c.tokens[t];
      const auto allowed =
          allowed_tokens(ck.vocab, intents, start, sentences, words, context - dec.length(), config);
      const auto logits = dec.logits();
      std::vector<double> probs(allowed.size());
      double top = -INFINITY, norm = 0.0;
      for (int id : allowed) top = std::max(top, logits[id] / config.temperature);
      for (std::size_t i = 0; i < allowed.size(); ++i) {
        probs[i] = std::exp(logits[allowed[i]] / config.temperature - top);
        norm += probs[i];
      }
      for (double& q : probs) q /= norm;
      std::vector<double> sorted = probs;
      std::sort(sorted.begin(), sorted.end(), std::greater<>());
      std::size_t size = 0;
      double mass = 0.0;
      while (size < sorted.size() && mass < config.p - 1e-12) mass += sorted[size++];
      const double threshold = sorted[size - 1];
      const auto at = std::find(allowed.begin(), allowed.end(), token);
      ++tally.steps;
      tally.nontrivial += size < allowed.size();
      if (at == allowed.end() || probs[at - allowed.begin()] < threshold) {
        ++tally.outside;
      }
      if (c.trace[t].nucleus_size != static_cast<int>(size) ||
          c.trace[t].allowed != static_cast<int>(allowed.size())) {
        ++tally.size_mismatch;
      }
      if (token == Vocabulary::kEndId) break;
      dec.push(token, dec.length(), static_cast<int>(model::Region::kSystem));
      if (token == Vocabulary::kSeparatorId) {
        ++sentences;
        words = 0;
        start = true;
      } else if (ck.vocab.kind(token) == corpus::TokenKind::kIntent) {
        start = false;
      } else {
        ++words;
        start = false;
      }
    }
  }
}

Verdict nucleus_soundness() {
  Checker check;
  const double example[] = {0.5, 0.3, 0.2};
  const auto n = decode::nucleus_filter(example, 0.7);
  check.expect(n.indices == std::vector<int>{0, 1}, "support of {0.5,0.3,0.2} at p=0.7");
  check.expect(n.probs.size() == 2 && n.probs[0] == 0.625 && n.probs[1] == 0.375,
               "renormalized {0.625, 0.375}");

  auto& s = shared();
  NucleusTally tally;
  std::uint64_t seed = 100;
  long budget = 0;
  for (double p : {0.9, 0.7, 0.5}) {
    budget += 4000;
    for (const auto& d : s.split.test) {
      for (std::size_t t = 1; t < d.turns.size() && tally.steps < budget; ++t) {
        if (d.turns[t].speaker != Speaker::kSystem) continue;
        decode::DecodeConfig config;
        config.p = p;
        config.temperature = p == 0.5 ? 1.3 : 1.0;
        config.seed = ++seed;
        replay(*s.missa, std::span(d.turns.data(), t), d.private_info, config, tally, check);
      }
    }
  }
  check.expect(tally.steps >= 10000, "only " + std::to_string(tally.steps) + " steps sampled");
  check.expect(tally.outside == 0, std::to_string(tally.outside) + " tokens outside the top-p set");
  check.expect(tally.size_mismatch == 0,
               std::to_string(tally.size_mismatch) + " traces disagree on the nucleus size");
  return check.verdict(std::to_string(tally.steps) + " sampled steps (" +
                       std::to_string(tally.nontrivial) + " with a truncated nucleus), " +
                       std::to_string(tally.outside) + " outside");
}

// ---------------------------------------------------------------------------
// C6: selection never returns a violating reply when a clean one exists;
// filtering removes the violations an adversarial corpus teaches.

decode::CandidateResponse random_candidate(std::mt19937_64& rng, int index) {
  static const std::vector<std::string> intents = {"elicitation", "providing_information",
                                                   "refusal", "greeting", "thanking"};
  static const std::vector<std::string> slots = {"name", "phone_num", "address", "card_num",
                                                 "others"};
  auto pick = [&](const std::vector<std::string>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  decode::CandidateResponse c;
  c.index = index;
  c.log_prob = -std::uniform_real_distribution<double>(0.0, 20.0)(rng);
  const int n = std::uniform_int_distribution<int>(0, 3)(rng);
  for (int k = 0; k < n; ++k) {
    decode::CandidateSentence s;
    s.intent = pick(intents);
    s.text = "x";
    s.predicted_slot = pick(slots);
    c.sentences.push_back(std::move(s));
  }
  c.degenerate = c.sentences.empty();
  return c;
}

Verdict filter_soundness() {
  Checker check;
  std::mt19937_64 rng(31);
  const auto rules = filter::default_rules("antiscam");
  const auto schema = filter::schema_for("antiscam");
  int with_clean = 0, trials = 0;
  for (; trials < 5000; ++trials) {
    filter::DialogState state;
    const int turns = std::uniform_int_distribution<int>(0, 6)(rng);
    for (int t = 0; t < turns; ++t) {
      auto c = random_candidate(rng, 0);
      Turn turn = c.as_turn();
      turn.speaker = t % 2 == 0 ? Speaker::kHuman : Speaker::kSystem;
      state = filter::update_state(std::move(state), turn, schema);
    }
    std::vector<decode::CandidateResponse> pool;
    const int k = std::uniform_int_distribution<int>(1, 6)(rng);
    for (int i = 0; i < k; ++i) pool.push_back(random_candidate(rng, i));
    std::vector<decode::CandidateResponse> extra;
    for (int i = 0; i < k; ++i) extra.push_back(random_candidate(rng, i));
    const bool with_resample = trials % 2 == 1;
    filter::Resampler resample;
    if (with_resample) resample = [&] { return extra; };

    auto everything = pool;
    if (with_resample) everything.insert(everything.end(), extra.begin(), extra.end());
    filter::RuleContext context{false, &schema};
    for (const auto& c : everything) context.any_non_degenerate |= !c.degenerate;
    bool clean_first = false, clean_any = false;
    for (std::size_t i = 0; i < everything.size(); ++i) {
      const bool clean = filter::check(everything[i], state, rules, context).violations == 0;
      clean_any |= clean;
      if (i < pool.size()) clean_first |= clean;
    }
    const auto selection = filter::select(pool, state, rules, schema, resample);
    // Rules see the pool they are judged in: a resample round can change R4.
    if (clean_first || (clean_any && with_resample)) {
      ++with_clean;
      check.expect(selection.chosen().violations.empty() && !selection.verdict.fallback,
                   "violating selection at trial " + std::to_string(trials));
    }
  }

  // Adversarial corpus: the training data re-elicits disclosed slots.
  const auto adversarial =
      corpus::make_synthetic_corpus({.dialogs = 100, .seed = 5, .adversarial = true});
  const auto split = corpus::split_corpus(adversarial.dialogs, 5);
  const auto trained = app::train_checkpoint(app::CheckpointKind::kMissa, adversarial.taxonomy,
                                             split, desk_config(48, 6), 5);
  std::vector<AnnotatedDialog> held_out = split.test;
  held_out.insert(held_out.end(), split.validation.begin(), split.validation.end());
  const eval::CheckpointSet set{trained.checkpoint.get(), nullptr, nullptr};
  eval::EvalOptions options;
  options.decode.seed = 3;
  const auto filtered = eval::run_eval(set, eval::Variant::kMissa, split.train, held_out, options);
  const auto unfiltered =
      eval::run_eval(set, eval::Variant::kMissaSel, split.train, held_out, options);
  check.expect(filtered.violation_rate == 0.0,
               "filtered violation rate " + fmt(filtered.violation_rate));
  check.expect(unfiltered.violation_rate > 0.0, "unfiltered variant produced no violation");
  return check.verdict(std::to_string(trials) + " random selections (" +
                       std::to_string(with_clean) + " with a clean candidate); adversarial " +
                       std::to_string(filtered.turns.size()) + " turns: missa " +
                       fmt(100.0 * filtered.violation_rate, 3) + "% vs missa-sel " +
                       fmt(100.0 * unfiltered.violation_rate, 3) + "%");
}

// ---------------------------------------------------------------------------
// C7: 200 template dialogs, held-out intent prediction and slot accuracy.

Verdict end_to_end() {
  const auto start = Clock::now();
  auto& s = shared();
  const eval::CheckpointSet set{s.missa.get(), nullptr, nullptr};
  eval::EvalOptions options;
  options.decode.seed = 7;
  const auto report = eval::run_eval(set, eval::Variant::kMissa, s.split.train, s.split.test,
                                     options);
  const auto accuracy = eval::classifier_accuracy(*s.missa, s.split.test);
  const double elapsed = s.train_seconds + seconds_since(start);
  Checker check;
  check.expect(report.rip >= 0.90, "RIP " + fmt(report.rip));
  check.expect(accuracy.system_slot >= 0.90, "system slot accuracy " + fmt(accuracy.system_slot));
  check.expect(accuracy.human_slot >= 0.90, "human slot accuracy " + fmt(accuracy.human_slot));
  check.expect(elapsed < 1800.0, "runtime " + fmt(elapsed) + " s exceeds 30 min");
  return check.verdict(std::to_string(s.split.test.size()) + " held-out dialogs, " +
                       std::to_string(report.turns.size()) + " turns: RIP " + fmt(report.rip) +
                       ", RSP " + fmt(report.rsp) + ", slot accuracy system " +
                       fmt(accuracy.system_slot) + " human " + fmt(accuracy.human_slot) +
                       ", PPL " + fmt(*report.ppl) + ", " + fmt(elapsed, 3) + " s");
}

// ---------------------------------------------------------------------------
// C8: generated token streams against the turn grammar.

// (intent word+ sep)+ eos
bool parses_with_intents(const std::vector<int>& tokens, const Vocabulary& vocab) {
  enum { kStart, kIntent, kWords } state = kStart;
  int sentences = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const int t = tokens[i];
    switch (state) {
      case kStart:
        if (t == Vocabulary::kEndId) return sentences > 0 && i + 1 == tokens.size();
        if (vocab.kind(t) != corpus::TokenKind::kIntent) return false;
        state = kIntent;
        break;
      case kIntent:
        if (!vocab.is_word(t)) return false;
        state = kWords;
        break;
      case kWords:
        if (t == Vocabulary::kSeparatorId) {
          ++sentences;
          state = kStart;
        } else if (!vocab.is_word(t)) {
          return false;
        }
        break;
    }
  }
  return false;
}

// (word+ sep)* eos, no intent token anywhere
bool parses_plain(const std::vector<int>& tokens, const Vocabulary& vocab) {
  bool in_sentence = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const int t = tokens[i];
    if (vocab.kind(t) == corpus::TokenKind::kIntent) return false;
    if (t == Vocabulary::kEndId) return !in_sentence && i + 1 == tokens.size();
    if (t == Vocabulary::kSeparatorId) {
      if (!in_sentence) return false;
      in_sentence = false;
    } else if (vocab.is_word(t)) {
      in_sentence = true;
    } else {
      return false;
    }
  }
  return false;
}

Verdict structural_validity() {
  auto& s = shared();
  Checker check;
  long missa_turns = 0, con_turns = 0, con_intents = 0;
  std::uint64_t seed = 500;
  for (const auto& d : s.split.test) {
    for (std::size_t t = 1; t < d.turns.size(); ++t) {
      if (d.turns[t].speaker != Speaker::kSystem) continue;
      const std::span history(d.turns.data(), t);
      decode::DecodeConfig config;
      config.seed = ++seed;
      for (const auto& c : decode::generate_turn(*s.missa, history, d.private_info, config)) {
        ++missa_turns;
        check.expect(parses_with_intents(c.tokens, s.missa->vocab),
                     "missa turn breaks the grammar: " + s.missa->vocab.decode(c.tokens));
        for (const auto& sentence : c.sentences) {
          check.expect(sentence.intent.has_value(), "missa sentence without an intent token");
        }
      }
      config.variant = decode::DecodeVariant::kMissaCon;
      for (const auto& c : decode::generate_turn(*s.con, history, d.private_info, config)) {
        ++con_turns;
        for (int token : c.tokens) {
          con_intents += s.con->vocab.kind(token) == corpus::TokenKind::kIntent;
        }
        check.expect(parses_plain(c.tokens, s.con->vocab),
                     "missa-con turn breaks the grammar: " + s.con->vocab.decode(c.tokens));
        for (const auto& sentence : c.sentences) {
          check.expect(!sentence.intent.has_value(), "missa-con sentence with an intent");
        }
      }
    }
  }
  check.expect(con_intents == 0, std::to_string(con_intents) + " intent tokens in missa-con turns");
  return check.verdict(std::to_string(missa_turns) + " missa turns parsed, " +
                       std::to_string(con_turns) + " missa-con turns with " +
                       std::to_string(con_intents) + " intent tokens");
}

// ---------------------------------------------------------------------------
// C9: two identical runs, byte for byte.

Verdict determinism() {
  Checker check;
  const auto corpus = corpus::make_synthetic_corpus({.dialogs = 40, .seed = 9});
  const auto split = corpus::split_corpus(corpus.dialogs, 9);
  const auto config = desk_config(32, 2);
  std::vector<std::filesystem::path> dirs;
  for (const char* run : {"first", "second"}) {
    const auto root = scratch("determinism-" + std::string(run));
    for (auto kind : {app::CheckpointKind::kMissa, app::CheckpointKind::kVanilla}) {
      const auto dir = root / std::string(app::to_string(kind));
      auto trained = app::train_checkpoint(kind, corpus.taxonomy, split, config, 9,
                                           root / (std::string(app::to_string(kind)) + ".jsonl"));
      const auto& ck = *trained.checkpoint;
      model::save_checkpoint(dir, ck.model, ck.vocab, ck.taxonomy, ck.metadata);
    }
    dirs.push_back(root);
  }
  int files = 0;
  for (const char* kind : {"missa", "vanilla"}) {
    for (const char* file : {"model.bin", "model.json", "vocab.tsv"}) {
      const auto a = slurp(dirs[0] / kind / file);
      check.expect(!a.empty() && a == slurp(dirs[1] / kind / file),
                   std::string(kind) + "/" + file + " differs");
      ++files;
    }
    const auto log = std::string(kind) + ".jsonl";
    check.expect(slurp(dirs[0] / log) == slurp(dirs[1] / log), log + " differs");
    ++files;
  }

  const auto first = app::load_checkpoint_store(dirs[0]);
  const auto second = app::load_checkpoint_store(dirs[1]);
  const auto& d = split.test.front();
  decode::DecodeConfig decode_config;
  decode_config.seed = 4;
  const std::span history(d.turns.data(), 1);
  const auto a = nlohmann::json(decode::generate_turn(*first.missa, history, d.private_info, decode_config));
  const auto b = nlohmann::json(decode::generate_turn(*second.missa, history, d.private_info, decode_config));
  check.expect(a.dump() == b.dump(), "candidate lists differ");
  decode_config.seed = 5;
  const auto c = nlohmann::json(decode::generate_turn(*first.missa, history, d.private_info, decode_config));
  check.expect(a.dump() != c.dump(), "a different seed reproduced the same candidates");

  int reports = 0;
  for (auto variant : eval::all_variants()) {
    if (variant == eval::Variant::kMissaCon) continue;
    eval::EvalOptions options;
    options.decode.seed = 6;
    const auto ra = eval::run_eval(first.set(), variant, split.train, split.test, options);
    const auto rb = eval::run_eval(second.set(), variant, split.train, split.test, options);
    check.expect(nlohmann::json(ra).dump() == nlohmann::json(rb).dump(),
                 std::string(eval::to_string(variant)) + " report differs");
    ++reports;
  }
  return check.verdict(std::to_string(files) + " checkpoint files, " +
                       std::to_string(a.size()) + " candidates, " + std::to_string(reports) +
                       " reports identical across runs");
}

// ---------------------------------------------------------------------------
// C10: the shipped sample corpus.

Verdict round_trips() {
  Checker check;
  const auto path = testing::source_dir() / "data" / "antiscam_sample.json";
  const auto corpus = corpus::load_corpus(path);
  long sentences = 0, slot_mentions = 0;
  for (const auto& d : corpus.dialogs) {
    for (const auto& t : d.turns) {
      for (const auto& s : t.sentences) {
        ++sentences;
        const auto delex = corpus::delexicalize(s.text, d.private_info);
        const auto relex = corpus::relexicalize(delex, d.private_info);
        check.expect(relex.text == s.text, "relexicalize(delexicalize) changed: " + s.text);
        check.expect(relex.unresolved.empty(), "unresolved slot in: " + s.text);
        check.expect(corpus::delexicalize(delex, d.private_info) == delex,
                     "delexicalization not idempotent: " + s.text);
        for (const auto& [slot, value] : d.private_info) {
          check.expect(delex.find(value) == std::string::npos,
                       "value of " + slot + " survives delexicalization: " + s.text);
          slot_mentions += delex != s.text && delex.find(corpus::slot_token(slot)) != std::string::npos;
        }
      }
    }
    check.expect(corpus::delexicalize_dialog(d).turns.size() == d.turns.size(), "dialog shape");
  }
  check.expect(corpus::parse_corpus(corpus::to_json(corpus)) == corpus, "JSON round trip");
  const auto copy = scratch("round-trip") / "copy.json";
  corpus::save_corpus(corpus, copy);
  const auto reloaded = corpus::load_corpus(copy);
  check.expect(reloaded == corpus, "file round trip");
  check.expect(corpus::to_json(reloaded).dump() == corpus::to_json(corpus).dump(),
               "serialization not stable");
  return check.verdict(std::to_string(corpus.dialogs.size()) + " dialogs, " +
                       std::to_string(sentences) + " sentences, " +
                       std::to_string(slot_mentions) + " slot mentions delexicalized");
}

}  // namespace

// An optional argument runs only the criteria whose label contains it.
int main(int argc, char** argv) {
  const std::string only = argc > 1 ? argv[1] : "";
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"C1  gradient correctness", gradient_correctness},
      {"C2  memorization", memorization},
      {"C3  metric oracle equivalence", metric_oracle},
      {"C4  metric ordering", metric_ordering},
      {"C5  nucleus soundness", nucleus_soundness},
      {"C6  filter soundness", filter_soundness},
      {"C7  scaled end-to-end learning", end_to_end},
      {"C8  structural validity", structural_validity},
      {"C9  determinism", determinism},
      {"C10 delexicalization and corpus round trips", round_trips},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    if (name.find(only) == std::string::npos) continue;
    const auto start = Clock::now();
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failed += v.pass ? 0 : 1;
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << " ["
              << std::fixed << std::setprecision(1) << seconds_since(start) << " s]"
              << std::defaultfloat << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
