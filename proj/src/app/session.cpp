#include "missa/app/session.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>

#include "missa/corpus/text.hpp"
#include "missa/error.hpp"
#include "missa/rng.hpp"

namespace missa::app {

using corpus::Speaker;
using corpus::Turn;
using nlohmann::json;

corpus::SlotLexicon default_persona(std::string_view task) {
  if (task == "persuasion") {
    return {{"charity", "Save the Children"}, {"donation_amount", "$2"}};
  }
  return {{"name", "Jim Lee"},
          {"card_num", "5110-xxxx-xxxx-8166"},
          {"card_cvs", "380"},
          {"card_date", "05/25"},
          {"phone_num", "350-xxx-2988"},
          {"address", "xxx El Ave, Apt 311, City, State, Zipcode"}};
}

void Ratings::validate() const {
  for (auto [name, value] : {std::pair{"fluency", fluency}, std::pair{"coherence", coherence},
                             std::pair{"engagement", engagement}}) {
    if (value < 1 || value > 5) {
      throw ValidationError(std::string(name) + " rating must be an integer in 1..5");
    }
  }
}

void to_json(json& j, const Ratings& r) {
  j = {{"fluency", r.fluency}, {"coherence", r.coherence}, {"engagement", r.engagement}};
}

void from_json(const json& j, Ratings& r) {
  if (!j.is_object()) throw ValidationError("ratings must be a JSON object");
  for (const char* key : {"fluency", "coherence", "engagement"}) {
    if (!j.contains(key) || !j.at(key).is_number_integer()) {
      throw ValidationError(std::string(key) + " rating must be an integer in 1..5");
    }
  }
  r.fluency = j.at("fluency").get<int>();
  r.coherence = j.at("coherence").get<int>();
  r.engagement = j.at("engagement").get<int>();
}

namespace {

json turn_json(const Turn& t) {
  json sentences = json::array();
  for (const auto& s : t.sentences) {
    sentences.push_back({{"text", s.text}, {"intent", s.intent}, {"slot", s.slot}});
  }
  return {{"speaker", corpus::to_string(t.speaker)}, {"sentences", sentences}};
}

Turn turn_from_json(const json& j) {
  Turn t{corpus::parse_speaker(j.at("speaker").get<std::string>()), {}};
  for (const auto& s : j.at("sentences")) {
    t.sentences.push_back({s.at("text").get<std::string>(), s.at("intent").get<std::string>(),
                           s.at("slot").get<std::string>()});
  }
  return t;
}

// Checkpoint whose human heads label the human's sentences.
const model::Checkpoint& labeller(eval::Variant v, const eval::CheckpointSet& cs) {
  if (v == eval::Variant::kMissaCon) return *cs.con;
  if (cs.missa != nullptr) return *cs.missa;
  return v == eval::Variant::kVanilla ? *cs.vanilla : *cs.con;
}

}  // namespace

int Session::task_success() const {
  const auto& provided = state.of(Speaker::kHuman).provided;
  return static_cast<int>(std::count_if(provided.begin(), provided.end(), [](const auto& slot) {
    return slot == "name" || slot == "address" || slot == "phone_num";
  }));
}

json to_json(const Session& s) {
  json transcript = json::array();
  for (const auto& t : s.transcript) transcript.push_back(turn_json(t));
  return {{"id", s.id},
          {"task", s.task},
          {"variant", eval::to_string(s.variant)},
          {"seed", s.seed},
          {"blind", s.blind},
          {"lexicon", s.lexicon},
          {"state", s.state},
          {"transcript", transcript},
          {"traces", s.traces},
          {"ratings", s.ratings ? json(*s.ratings) : json(nullptr)},
          {"length", s.length()},
          {"task_success", s.task_success()}};
}

CreateRequest create_request_from_json(const json& j) {
  CreateRequest r;
  if (j.is_null()) return r;
  if (!j.is_object()) throw ValidationError("session request must be a JSON object");
  if (j.contains("variant") && !j.at("variant").is_null()) {
    if (!j.at("variant").is_string()) throw ValidationError("variant must be a string");
    r.variant = eval::parse_variant(j.at("variant").get<std::string>());
  }
  if (j.contains("seed") && !j.at("seed").is_null()) {
    if (!j.at("seed").is_number_unsigned()) {
      throw ValidationError("seed must be a non-negative integer");
    }
    r.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("blind")) {
    if (!j.at("blind").is_boolean()) throw ValidationError("blind must be a boolean");
    r.blind = j.at("blind").get<bool>();
  }
  if (j.contains("persona") && !j.at("persona").is_null()) {
    r.persona = j.at("persona").get<corpus::SlotLexicon>();
    corpus::validate_lexicon(*r.persona);
  }
  return r;
}

json to_json(const Exchange& e) {
  return {{"human", turn_json(e.human)},
          {"system", turn_json(e.system)},
          {"reply", e.reply},
          {"trace", e.trace}};
}

void to_json(json& j, const VariantAggregate& a) {
  j = {{"sessions", a.sessions},
       {"rated", a.rated},
       {"fluency", a.fluency},
       {"coherence", a.coherence},
       {"engagement", a.engagement},
       {"length", a.length},
       {"task_success", a.task_success}};
}

SessionManager::SessionManager(ServiceConfig config)
    : config_(std::move(config)), pipeline_(eval::pipeline_options(config_.task, config_.decode)) {
  config_.decode.validate();
  if (config_.rules) pipeline_.rules = *config_.rules;
  if (variants().empty()) throw ValidationError("no checkpoint serves any variant");
  if (config_.data_dir) {
    std::filesystem::create_directories(*config_.data_dir / "sessions");
    load();
  }
}

std::vector<eval::Variant> SessionManager::variants() const {
  std::vector<eval::Variant> out;
  for (auto v : eval::all_variants()) {
    if (eval::supports(v, config_.checkpoints)) out.push_back(v);
  }
  return out;
}

std::string SessionManager::fresh_id() {
  static thread_local std::random_device device;
  const std::uint64_t x = mix_seed((std::uint64_t{device()} << 32) ^ device(), ++counter_);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

Session SessionManager::create(const CreateRequest& request) {
  const auto variant = request.variant.value_or(eval::Variant::kMissa);
  eval::check_checkpoints(variant, config_.checkpoints);
  Session s;
  s.task = config_.task;
  s.variant = variant;
  s.blind = request.blind;
  s.lexicon = request.persona.value_or(default_persona(config_.task));
  auto entry = std::make_shared<Entry>();
  {
    std::unique_lock lock(mutex_);
    do {
      s.id = fresh_id();
    } while (sessions_.contains(s.id));
    s.seed = request.seed.value_or(mix_seed(counter_, std::random_device{}()));
    entry->session = s;
    sessions_.emplace(s.id, entry);
  }
  append(s, {{"event", "created"},
             {"id", s.id},
             {"task", s.task},
             {"variant", eval::to_string(s.variant)},
             {"seed", s.seed},
             {"blind", s.blind},
             {"lexicon", s.lexicon}});
  return s;
}

std::shared_ptr<SessionManager::Entry> SessionManager::find(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("no session '" + id + "'");
  return it->second;
}

Session SessionManager::get(const std::string& id) const {
  auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  return entry->session;
}

std::vector<std::string> SessionManager::ids() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, _] : sessions_) out.push_back(id);
  return out;
}

Exchange SessionManager::post_message(const std::string& id, const std::string& text) {
  auto entry = find(id);
  std::unique_lock lock(entry->mutex, std::try_to_lock);
  if (!lock.owns_lock()) {
    throw ConflictError("session '" + id + "' is already answering a message");
  }
  Session& s = entry->session;
  const auto started = std::chrono::steady_clock::now();

  const auto sentences = corpus::segment_turn(text);
  if (sentences.empty()) throw ValidationError("message is empty");
  Turn human{Speaker::kHuman, {}};
  for (const auto& sentence : sentences) human.sentences.push_back({sentence, "", ""});

  auto history = s.transcript;
  history.push_back(human);
  const auto labels = decode::predict_labels(labeller(s.variant, config_.checkpoints), history,
                                             s.lexicon);
  json human_labels = json::array();
  for (std::size_t k = 0; k < human.sentences.size(); ++k) {
    if (k < labels.back().size()) {
      human.sentences[k].intent = labels.back()[k].intent;
      human.sentences[k].slot = labels.back()[k].slot;
    }
    human_labels.push_back({{"intent", human.sentences[k].intent},
                            {"slot", human.sentences[k].slot}});
  }
  history.back() = human;
  auto state = filter::update_state(s.state, human, pipeline_.schema);

  auto options = pipeline_;
  options.decode.seed = mix_seed(s.seed, static_cast<std::uint64_t>(s.exchanges()));
  const auto outcome =
      eval::respond(s.variant, config_.checkpoints, history, s.lexicon, state, options);
  const auto& chosen = outcome.chosen();
  Turn system = chosen.as_turn();
  state = filter::update_state(std::move(state), system, pipeline_.schema);

  json trace = outcome;
  trace["exchange"] = s.exchanges();
  trace["human_labels"] = human_labels;
  trace["state"] = state;
  trace["elapsed_ms"] = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - started)
                            .count();

  Exchange e{human, system, chosen.text(), trace};
  append(s, {{"event", "exchange"},
             {"human", turn_json(human)},
             {"system", turn_json(system)},
             {"trace", trace}});
  s.transcript.push_back(std::move(human));
  s.transcript.push_back(std::move(system));
  s.traces.push_back(std::move(trace));
  s.state = std::move(state);
  return e;
}

Session SessionManager::rate(const std::string& id, const Ratings& ratings) {
  ratings.validate();
  auto entry = find(id);
  std::unique_lock lock(entry->mutex, std::try_to_lock);
  if (!lock.owns_lock()) {
    throw ConflictError("session '" + id + "' is already answering a message");
  }
  Session& s = entry->session;
  if (s.exchanges() == 0) throw ValidationError("a session needs one exchange before rating");
  append(s, {{"event", "rating"}, {"ratings", ratings}});
  s.ratings = ratings;
  return s;
}

std::map<std::string, VariantAggregate> SessionManager::aggregate() const {
  std::vector<std::shared_ptr<Entry>> entries;
  {
    std::shared_lock lock(mutex_);
    for (const auto& [_, e] : sessions_) entries.push_back(e);
  }
  std::map<std::string, VariantAggregate> out;
  for (auto v : variants()) out[std::string(eval::to_string(v))];
  for (const auto& e : entries) {
    Session s;
    {
      std::lock_guard lock(e->mutex);
      s = e->session;
    }
    auto& a = out[std::string(eval::to_string(s.variant))];
    ++a.sessions;
    if (!s.ratings) continue;
    ++a.rated;
    a.fluency += s.ratings->fluency;
    a.coherence += s.ratings->coherence;
    a.engagement += s.ratings->engagement;
    a.length += s.length();
    a.task_success += s.task_success();
  }
  for (auto& [_, a] : out) {
    if (a.rated == 0) continue;
    for (double* x : {&a.fluency, &a.coherence, &a.engagement, &a.length, &a.task_success}) {
      *x /= a.rated;
    }
  }
  return out;
}

void SessionManager::append(const Session& s, const json& event) const {
  if (!config_.data_dir) return;
  std::ofstream out(*config_.data_dir / "sessions" / (s.id + ".jsonl"), std::ios::app);
  out << event.dump() << '\n';
  if (!out) throw std::runtime_error("cannot write the log of session '" + s.id + "'");
}

void SessionManager::load() {
  std::vector<std::filesystem::path> logs;
  for (const auto& f : std::filesystem::directory_iterator(*config_.data_dir / "sessions")) {
    if (f.path().extension() == ".jsonl") logs.push_back(f.path());
  }
  std::sort(logs.begin(), logs.end());
  for (const auto& path : logs) {
    std::ifstream in(path);
    std::string line;
    auto entry = std::make_shared<Entry>();
    Session& s = entry->session;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto event = json::parse(line);
      const auto kind = event.at("event").get<std::string>();
      if (kind == "created") {
        s.id = event.at("id").get<std::string>();
        s.task = event.at("task").get<std::string>();
        s.variant = eval::parse_variant(event.at("variant").get<std::string>());
        s.seed = event.at("seed").get<std::uint64_t>();
        s.blind = event.at("blind").get<bool>();
        s.lexicon = event.at("lexicon").get<corpus::SlotLexicon>();
      } else if (kind == "exchange") {
        for (const char* key : {"human", "system"}) {
          s.transcript.push_back(turn_from_json(event.at(key)));
          s.state = filter::update_state(std::move(s.state), s.transcript.back(),
                                         pipeline_.schema);
        }
        s.traces.push_back(event.at("trace"));
      } else if (kind == "rating") {
        s.ratings = event.at("ratings").get<Ratings>();
      } else {
        throw ValidationError("unknown event '" + kind + "' in " + path.string());
      }
    }
    if (s.id.empty()) throw ValidationError("session log without a creation event: " + path.string());
    sessions_.emplace(s.id, std::move(entry));
  }
}

}  // namespace missa::app
