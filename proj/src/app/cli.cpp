#include "missa/app/cli.hpp"

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "missa/app/server.hpp"
#include "missa/app/session.hpp"
#include "missa/app/workflow.hpp"
#include "missa/corpus/corpus_io.hpp"
#include "missa/corpus/synthetic.hpp"
#include "missa/error.hpp"
#include "missa/eval/report.hpp"

namespace missa::app {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Flags {
  std::string task;
  std::string variant;
  std::uint64_t seed = 1;
  std::string config;
  std::string data_dir;
  std::string checkpoint;
  std::string data;
  std::string out;
  std::string static_dir;
  std::string host = "127.0.0.1";
  std::optional<std::uint64_t> split_seed;
  std::vector<std::string> reports;
  int dialogs = 200;
  bool adversarial = false;
  bool lenient = false;
  bool csv = false;
  bool trace = false;
};

RunConfig run_config(const Flags& f) {
  return f.config.empty() ? RunConfig{} : load_run_config(f.config);
}

corpus::Corpus load_data(const Flags& f) {
  auto c = corpus::load_corpus(f.data, corpus::LoadOptions{f.lenient});
  if (!f.task.empty() && c.taxonomy.task() != f.task) {
    throw ValidationError("corpus task '" + c.taxonomy.task() + "' does not match --task " +
                          f.task);
  }
  return c;
}

std::string store_task(const CheckpointStore& store, const Flags& f) {
  const auto& task = store.any()->taxonomy.task();
  if (!f.task.empty() && task != f.task) {
    throw ValidationError("checkpoint task '" + task + "' does not match --task " + f.task);
  }
  return task;
}

std::optional<std::vector<filter::FilterRule>> configured_rules(const RunConfig& c,
                                                               std::string_view task) {
  if (c.rules.is_null()) return std::nullopt;
  return filter::configure_rules(filter::default_rules(task), c.rules);
}

int cmd_train(const Flags& f, std::ostream& out) {
  const auto config = run_config(f);
  const auto corpus = load_data(f);
  const auto split = corpus::split_corpus(corpus.dialogs, f.seed);
  std::vector<CheckpointKind> kinds = {CheckpointKind::kMissa, CheckpointKind::kMissaCon,
                                       CheckpointKind::kVanilla};
  if (!f.variant.empty()) kinds = kinds_for(eval::parse_variant(f.variant));
  for (auto kind : kinds) {
    const fs::path dir = fs::path(f.checkpoint) / std::string(to_string(kind));
    fs::create_directories(dir);
    fs::remove(dir / "metrics.jsonl");
    auto trained =
        train_checkpoint(kind, corpus.taxonomy, split, config, f.seed, dir / "metrics.jsonl");
    auto& ck = *trained.checkpoint;
    ck.metadata["split_seed"] = f.seed;
    ck.metadata["run_config"] = config;
    model::save_checkpoint(dir, ck.model, ck.vocab, ck.taxonomy, ck.metadata);
    out << to_string(kind) << ": " << trained.result.steps << " steps, best epoch "
        << trained.result.best_epoch;
    if (trained.result.aborted) out << ", aborted: " << trained.result.abort_reason;
    out << " -> " << dir.string() << '\n';
  }
  return 0;
}

int cmd_eval(const Flags& f, std::ostream& out) {
  const auto config = run_config(f);
  const auto store = load_checkpoint_store(f.checkpoint);
  const auto task = store_task(store, f);
  const auto corpus = load_data(f);
  std::uint64_t split_seed = 1;
  if (f.split_seed) {
    split_seed = *f.split_seed;
  } else if (store.any()->metadata.contains("split_seed")) {
    split_seed = store.any()->metadata.at("split_seed").get<std::uint64_t>();
  }
  const auto split = corpus::split_corpus(corpus.dialogs, split_seed);
  eval::EvalOptions options;
  options.decode = config.decode;
  options.decode.seed = f.seed;
  options.rules = configured_rules(config, task);
  const auto variant = eval::parse_variant(f.variant.empty() ? "missa" : f.variant);
  const auto report = eval::run_eval(store.set(), variant, split.train, split.test, options);
  const auto text = json(report).dump(2);
  if (f.out.empty()) {
    out << text << '\n';
  } else {
    std::ofstream file(f.out);
    file << text << '\n';
    if (!file) throw std::runtime_error("cannot write " + f.out);
    const std::vector<eval::EvalReport> one = {report};
    out << eval::format_table(one, eval::TableFormat::kText);
  }
  return 0;
}

int cmd_table(const Flags& f, std::ostream& out) {
  std::vector<eval::EvalReport> reports;
  for (const auto& path : f.reports) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open report " + path);
    reports.push_back(json::parse(in).get<eval::EvalReport>());
  }
  out << eval::format_table(reports, f.csv ? eval::TableFormat::kCsv : eval::TableFormat::kText);
  return 0;
}

int cmd_synth(const Flags& f, std::ostream& out) {
  corpus::SyntheticOptions options;
  options.dialogs = f.dialogs;
  options.seed = f.seed;
  options.adversarial = f.adversarial;
  const auto corpus = corpus::make_synthetic_corpus(options);
  corpus::save_corpus(corpus, f.out);
  out << corpus.dialogs.size() << " dialogs, " << corpus.sentence_count() << " sentences -> "
      << f.out << '\n';
  return 0;
}

ServiceConfig service_config(const Flags& f, const CheckpointStore& store) {
  const auto config = run_config(f);
  ServiceConfig s;
  s.task = store_task(store, f);
  s.checkpoints = store.set();
  s.decode = config.decode;
  s.rules = configured_rules(config, s.task);
  if (!f.data_dir.empty()) s.data_dir = f.data_dir;
  return s;
}

int cmd_chat(const Flags& f, std::istream& in, std::ostream& out) {
  const auto store = load_checkpoint_store(f.checkpoint);
  SessionManager sessions(service_config(f, store));
  CreateRequest request;
  if (!f.variant.empty()) request.variant = eval::parse_variant(f.variant);
  request.seed = f.seed;
  const auto session = sessions.create(request);
  out << "session " << session.id << " (" << eval::to_string(session.variant)
      << "); empty line or EOF ends the chat\n";
  std::string line;
  while (out << "you> " << std::flush, std::getline(in, line) && !line.empty()) {
    try {
      const auto e = sessions.post_message(session.id, line);
      out << "system> " << e.reply << '\n';
      if (f.trace) out << e.trace.dump(2) << '\n';
    } catch (const ValidationError& e) {
      out << "error: " << e.what() << '\n';
    }
  }
  const auto final = sessions.get(session.id);
  out << "\nlength " << final.length() << ", task success " << final.task_success() << '\n';
  return 0;
}

Server* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

int cmd_serve(const Flags& f, std::ostream& out) {
  const auto store = load_checkpoint_store(f.checkpoint);
  auto config = service_config(f, store);
  if (!config.data_dir) config.data_dir = "missa-data";
  SessionManager sessions(std::move(config));
  ServerOptions options;
  options.host = f.host;
  options.port = port_from_environment();
  if (!f.static_dir.empty()) options.static_dir = f.static_dir;
  Server server(sessions, options);
  const int port = server.bind();
  out << "serving " << sessions.config().task << " on http://" << f.host << ':' << port
      << std::endl;
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.listen();
  g_server = nullptr;
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"missa: intent-conditioned dialog models for non-collaborative tasks"};
  app.require_subcommand(1);
  Flags f;

  auto task = [&](CLI::App* c) {
    c->add_option("--task", f.task, "Task the data or checkpoint must belong to")
        ->check(CLI::IsMember({"antiscam", "persuasion"}));
  };
  auto variant = [&](CLI::App* c) {
    c->add_option("--variant", f.variant, "missa, missa-sel, missa-con, vanilla or hybrid")
        ->check(CLI::IsMember({"missa", "missa-sel", "missa-con", "vanilla", "hybrid"}));
  };
  auto seed = [&](CLI::App* c) { c->add_option("--seed", f.seed, "Random seed"); };
  auto config = [&](CLI::App* c) {
    c->add_option("--config", f.config, "Run configuration JSON")->check(CLI::ExistingFile);
  };

  auto* train = app.add_subcommand("train", "Train checkpoints on an annotated corpus");
  train->add_option("--data", f.data, "Corpus JSON")->required()->check(CLI::ExistingFile);
  train->add_option("--checkpoint", f.checkpoint, "Output directory")->required();
  train->add_flag("--lenient", f.lenient, "Admit labels outside the taxonomy");
  task(train);
  variant(train);
  seed(train);
  config(train);

  auto* ev = app.add_subcommand("eval", "Score a variant on the test split");
  ev->add_option("--data", f.data, "Corpus JSON")->required()->check(CLI::ExistingFile);
  ev->add_option("--checkpoint", f.checkpoint, "Checkpoint directory")->required();
  ev->add_option("--out", f.out, "Write the report JSON here");
  ev->add_option("--split-seed", f.split_seed, "Split seed (default: the training seed)");
  ev->add_flag("--lenient", f.lenient, "Admit labels outside the taxonomy");
  task(ev);
  variant(ev);
  seed(ev);
  config(ev);

  auto* chat = app.add_subcommand("chat", "Chat with a variant in the terminal");
  chat->add_option("--checkpoint", f.checkpoint, "Checkpoint directory")->required();
  chat->add_option("--data-dir", f.data_dir, "Persist the session here");
  chat->add_flag("--trace", f.trace, "Print each turn's trace");
  task(chat);
  variant(chat);
  seed(chat);
  config(chat);

  auto* serve = app.add_subcommand("serve", "HTTP chat service (port from MISSA_PORT)");
  serve->add_option("--checkpoint", f.checkpoint, "Checkpoint directory")->required();
  serve->add_option("--data-dir", f.data_dir, "Session logs (default ./missa-data)");
  serve->add_option("--static-dir", f.static_dir, "Chat client bundle served at /");
  serve->add_option("--host", f.host, "Bind address");
  task(serve);
  config(serve);

  auto* table = app.add_subcommand("table", "Grid of stored reports");
  table->add_option("reports", f.reports, "Report JSON files")->required()->check(CLI::ExistingFile);
  table->add_flag("--csv", f.csv, "CSV instead of aligned text");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic AntiScam corpus");
  synth->add_option("--out", f.out, "Output corpus JSON")->required();
  synth->add_option("--dialogs", f.dialogs, "Number of dialogs")->check(CLI::PositiveNumber);
  synth->add_flag("--adversarial", f.adversarial, "Add rule-violating system turns");
  seed(synth);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*train) return cmd_train(f, out);
    if (*ev) return cmd_eval(f, out);
    if (*chat) return cmd_chat(f, in, out);
    if (*serve) return cmd_serve(f, out);
    if (*table) return cmd_table(f, out);
    if (*synth) return cmd_synth(f, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace missa::app
