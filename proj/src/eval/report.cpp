#include "missa/eval/report.hpp"

#include <cstdio>
#include <iomanip>
#include <sstream>

#include "missa/error.hpp"
#include "missa/model/trainer.hpp"
#include "missa/rng.hpp"

namespace missa::eval {

using corpus::Speaker;

void to_json(nlohmann::json& j, const TurnScore& t) {
  j = {{"dialog", t.dialog},
       {"turn", t.turn},
       {"human_intent", t.human_intent},
       {"human_slot", t.human_slot},
       {"gold_intent", t.gold_intent},
       {"gold_slot", t.gold_slot},
       {"predicted_intent", t.predicted_intent},
       {"predicted_slot", t.predicted_slot},
       {"response", t.response},
       {"violations", t.violations},
       {"fallback", t.fallback},
       {"rip", t.rip},
       {"rsp", t.rsp},
       {"erip", t.erip},
       {"ersp", t.ersp}};
}

void from_json(const nlohmann::json& j, TurnScore& t) {
  j.at("dialog").get_to(t.dialog);
  j.at("turn").get_to(t.turn);
  j.at("human_intent").get_to(t.human_intent);
  j.at("human_slot").get_to(t.human_slot);
  j.at("gold_intent").get_to(t.gold_intent);
  j.at("gold_slot").get_to(t.gold_slot);
  j.at("predicted_intent").get_to(t.predicted_intent);
  j.at("predicted_slot").get_to(t.predicted_slot);
  j.at("response").get_to(t.response);
  j.at("violations").get_to(t.violations);
  j.at("fallback").get_to(t.fallback);
  j.at("rip").get_to(t.rip);
  j.at("rsp").get_to(t.rsp);
  j.at("erip").get_to(t.erip);
  j.at("ersp").get_to(t.ersp);
}

void to_json(nlohmann::json& j, const EvalReport& r) {
  nlohmann::json per_turn = {{"rip", nlohmann::json::array()},
                             {"rsp", nlohmann::json::array()},
                             {"erip", nlohmann::json::array()},
                             {"ersp", nlohmann::json::array()}};
  for (const auto& t : r.turns) {
    per_turn["rip"].push_back(t.rip);
    per_turn["rsp"].push_back(t.rsp);
    per_turn["erip"].push_back(t.erip);
    per_turn["ersp"].push_back(t.ersp);
  }
  j = {{"variant", r.variant},
       {"ppl", r.ppl ? nlohmann::json(*r.ppl) : nlohmann::json(nullptr)},
       {"rip", r.rip},
       {"rsp", r.rsp},
       {"erip", r.erip},
       {"ersp", r.ersp},
       {"violation_rate", r.violation_rate},
       {"per_turn", per_turn},
       {"turns", r.turns},
       {"config", r.config},
       {"config_digest", r.config_digest}};
}

void from_json(const nlohmann::json& j, EvalReport& r) {
  j.at("variant").get_to(r.variant);
  r.ppl.reset();
  if (!j.at("ppl").is_null()) r.ppl = j.at("ppl").get<double>();
  j.at("rip").get_to(r.rip);
  j.at("rsp").get_to(r.rsp);
  j.at("erip").get_to(r.erip);
  j.at("ersp").get_to(r.ersp);
  j.at("violation_rate").get_to(r.violation_rate);
  j.at("turns").get_to(r.turns);
  r.config = j.at("config");
  j.at("config_digest").get_to(r.config_digest);
}

namespace {

const model::Checkpoint& scoring_checkpoint(Variant v, const CheckpointSet& cs) {
  switch (v) {
    case Variant::kMissaCon: return *cs.con;
    case Variant::kVanilla: return *cs.vanilla;
    default: return *cs.missa;
  }
}

std::string hex(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

}  // namespace

EvalReport run_eval(const CheckpointSet& cs, Variant variant,
                    std::span<const corpus::AnnotatedDialog> train,
                    std::span<const corpus::AnnotatedDialog> test, const EvalOptions& options) {
  check_checkpoints(variant, cs);
  options.decode.validate();
  const auto& primary = scoring_checkpoint(variant, cs);
  const auto& task = primary.taxonomy.task();
  PipelineOptions pipeline = pipeline_options(task, options.decode);
  if (options.rules) pipeline.rules = *options.rules;
  const auto tables = build_transition_tables(train);

  EvalReport report;
  report.variant = std::string(to_string(variant));
  report.config = {{"variant", report.variant},
                   {"decode", options.decode},
                   {"filtered", filters(variant)},
                   {"rules", filter::rules_to_json(pipeline.rules)},
                   {"taxonomy_hash", primary.taxonomy.hash()},
                   {"train_dialogs", train.size()},
                   {"test_dialogs", test.size()}};
  report.config_digest = hex(corpus::fnv1a(report.config.dump()));

  std::vector<std::string> pred_intent, pred_slot, gold_intent, gold_slot, human_intent,
      human_slot;
  int violating = 0;
  for (std::size_t d = 0; d < test.size(); ++d) {
    const auto& dialog = test[d];
    filter::DialogState state;
    for (std::size_t t = 0; t < dialog.turns.size(); ++t) {
      const auto& turn = dialog.turns[t];
      const bool scored = t > 0 && turn.speaker == Speaker::kSystem &&
                          dialog.turns[t - 1].speaker == Speaker::kHuman &&
                          !turn.sentences.empty() && !dialog.turns[t - 1].sentences.empty();
      if (scored) {
        const std::span<const corpus::Turn> history(dialog.turns.data(), t);
        auto turn_options = pipeline;
        turn_options.decode.seed = mix_seed(mix_seed(options.decode.seed, d), t);
        const auto outcome =
            respond(variant, cs, history, dialog.private_info, state, turn_options);
        const auto& reply = outcome.chosen();
        TurnScore s;
        s.dialog = dialog.id;
        s.turn = static_cast<int>(t);
        const auto& cue = dialog.turns[t - 1].sentences.back();
        s.human_intent = cue.intent;
        s.human_slot = cue.slot;
        s.gold_intent = turn.sentences.front().intent;
        s.gold_slot = turn.sentences.front().slot;
        if (!reply.sentences.empty()) {
          s.predicted_intent = reply.sentences.front().intent_label();
          s.predicted_slot = reply.sentences.front().predicted_slot.value_or("");
        }
        s.response = reply.text();
        s.violations = reply.violations;
        s.fallback = outcome.verdict && outcome.verdict->fallback;
        violating += s.violations.empty() ? 0 : 1;
        pred_intent.push_back(s.predicted_intent);
        pred_slot.push_back(s.predicted_slot);
        gold_intent.push_back(s.gold_intent);
        gold_slot.push_back(s.gold_slot);
        human_intent.push_back(s.human_intent);
        human_slot.push_back(s.human_slot);
        report.turns.push_back(std::move(s));
      }
      state = filter::update_state(std::move(state), turn, pipeline.schema);
    }
  }
  if (report.turns.empty()) {
    throw ValidationError("evaluation: no system turn follows a human turn in the test split");
  }

  const auto ri = rip(pred_intent, gold_intent);
  const auto rs = rsp(pred_slot, gold_slot);
  const auto eri = erip(pred_intent, gold_intent, human_intent, tables);
  const auto ers = ersp(pred_slot, gold_slot, human_slot, tables);
  for (std::size_t i = 0; i < report.turns.size(); ++i) {
    report.turns[i].rip = ri.per_turn[i];
    report.turns[i].rsp = rs.per_turn[i];
    report.turns[i].erip = eri.per_turn[i];
    report.turns[i].ersp = ers.per_turn[i];
  }
  report.rip = ri.mean;
  report.rsp = rs.mean;
  report.erip = eri.mean;
  report.ersp = ers.mean;
  report.violation_rate =
      static_cast<double>(violating) / static_cast<double>(report.turns.size());

  if (variant != Variant::kHybrid) {
    const auto encoder = model::encoder_for(primary);
    const auto prepared = model::prepare_dialogs(test, primary.model.config());
    report.ppl = model::perplexity(primary.model, encoder, prepared);
  }
  return report;
}

ClassifierAccuracy classifier_accuracy(const model::Checkpoint& checkpoint,
                                       std::span<const corpus::AnnotatedDialog> dialogs) {
  ClassifierAccuracy acc;
  for (const auto& dialog : dialogs) {
    const auto labels = decode::predict_labels(checkpoint, dialog.turns, dialog.private_info);
    for (std::size_t t = 0; t < dialog.turns.size(); ++t) {
      const auto& turn = dialog.turns[t];
      const bool human = turn.speaker == Speaker::kHuman;
      for (std::size_t k = 0; k < turn.sentences.size(); ++k) {
        const auto& gold = turn.sentences[k];
        const bool have = k < labels[t].size();
        const double intent_hit = have && labels[t][k].intent == gold.intent ? 1.0 : 0.0;
        const double slot_hit = have && labels[t][k].slot == gold.slot ? 1.0 : 0.0;
        if (human) {
          acc.human_intent += intent_hit;
          acc.human_slot += slot_hit;
          ++acc.human_sentences;
        } else {
          acc.system_intent += intent_hit;
          acc.system_slot += slot_hit;
          ++acc.system_sentences;
        }
      }
    }
  }
  if (acc.human_sentences + acc.system_sentences == 0) {
    throw ValidationError("classifier accuracy: no annotated sentences");
  }
  auto norm = [](double& x, int n) { x = n > 0 ? x / n : 0.0; };
  norm(acc.human_intent, acc.human_sentences);
  norm(acc.human_slot, acc.human_sentences);
  norm(acc.system_intent, acc.system_sentences);
  norm(acc.system_slot, acc.system_sentences);
  return acc;
}

std::string format_table(std::span<const EvalReport> reports, TableFormat format) {
  std::ostringstream out;
  if (format == TableFormat::kCsv) {
    out << "variant,ppl,rip,rsp,erip,ersp\n";
    out << std::setprecision(6) << std::fixed;
    for (const auto& r : reports) {
      out << r.variant << ',';
      if (r.ppl) out << *r.ppl;
      out << ',' << r.rip << ',' << r.rsp << ',' << r.erip << ',' << r.ersp << '\n';
    }
    return out.str();
  }
  auto pct = [](double x) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(1) << 100.0 * x << '%';
    return s.str();
  };
  out << std::left << std::setw(12) << "Model" << std::right << std::setw(10) << "PPL"
      << std::setw(9) << "RIP" << std::setw(9) << "RSP" << std::setw(9) << "ERIP"
      << std::setw(9) << "ERSP" << '\n';
  for (const auto& r : reports) {
    std::ostringstream ppl;
    if (r.ppl) {
      ppl << std::fixed << std::setprecision(2) << *r.ppl;
    } else {
      ppl << '-';
    }
    out << std::left << std::setw(12) << r.variant << std::right << std::setw(10) << ppl.str()
        << std::setw(9) << pct(r.rip) << std::setw(9) << pct(r.rsp) << std::setw(9)
        << pct(r.erip) << std::setw(9) << pct(r.ersp) << '\n';
  }
  return out.str();
}

}  // namespace missa::eval
