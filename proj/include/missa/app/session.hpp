#ifndef MISSA_APP_SESSION_HPP_
#define MISSA_APP_SESSION_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "missa/corpus/dialog.hpp"
#include "missa/eval/pipeline.hpp"
#include "missa/filter/filter.hpp"

namespace missa::app {

// The system's private information for a task. AntiScam mirrors the user
// card handed to the human study participants.
corpus::SlotLexicon default_persona(std::string_view task);

struct Ratings {
  int fluency = 0;
  int coherence = 0;
  int engagement = 0;

  void validate() const;  // each in 1..5
  bool operator==(const Ratings&) const = default;
};

void to_json(nlohmann::json& j, const Ratings& r);
void from_json(const nlohmann::json& j, Ratings& r);

struct Session {
  std::string id;
  std::string task;
  eval::Variant variant = eval::Variant::kMissa;
  std::uint64_t seed = 0;
  bool blind = false;  // clients hide traces
  corpus::SlotLexicon lexicon;
  filter::DialogState state;
  std::vector<corpus::Turn> transcript;  // human first, alternating
  std::vector<nlohmann::json> traces;    // one per exchange
  std::optional<Ratings> ratings;

  int length() const { return static_cast<int>(transcript.size()); }
  int exchanges() const { return static_cast<int>(traces.size()); }
  // Distinct name, address and phone number slots the human provided.
  int task_success() const;

  bool operator==(const Session&) const = default;
};

nlohmann::json to_json(const Session& s);

struct CreateRequest {
  std::optional<eval::Variant> variant;  // missa when absent
  std::optional<std::uint64_t> seed;
  bool blind = false;
  std::optional<corpus::SlotLexicon> persona;
};

CreateRequest create_request_from_json(const nlohmann::json& j);

struct Exchange {
  corpus::Turn human;  // labelled by the human heads
  corpus::Turn system;
  std::string reply;
  nlohmann::json trace;
};

nlohmann::json to_json(const Exchange& e);

struct VariantAggregate {
  int sessions = 0;
  int rated = 0;
  // Means over rated sessions.
  double fluency = 0.0;
  double coherence = 0.0;
  double engagement = 0.0;
  double length = 0.0;
  double task_success = 0.0;
};

void to_json(nlohmann::json& j, const VariantAggregate& a);

struct ServiceConfig {
  std::string task = "antiscam";
  eval::CheckpointSet checkpoints;
  decode::DecodeConfig decode;
  std::optional<std::vector<filter::FilterRule>> rules;
  // Append-only JSON-lines logs live under <data_dir>/sessions.
  std::optional<std::filesystem::path> data_dir;
};

/// Session lifecycle over shared read-only checkpoints. Each session admits
/// one request at a time; a post that finds its session busy fails with
/// ConflictError instead of waiting.
class SessionManager {
 public:
  explicit SessionManager(ServiceConfig config);

  Session create(const CreateRequest& request);
  Session get(const std::string& id) const;
  std::vector<std::string> ids() const;
  Exchange post_message(const std::string& id, const std::string& text);
  Session rate(const std::string& id, const Ratings& ratings);
  std::map<std::string, VariantAggregate> aggregate() const;
  std::vector<eval::Variant> variants() const;
  const ServiceConfig& config() const { return config_; }

 private:
  struct Entry {
    std::mutex mutex;
    Session session;
  };

  std::shared_ptr<Entry> find(const std::string& id) const;
  void append(const Session& s, const nlohmann::json& event) const;
  void load();
  std::string fresh_id();

  ServiceConfig config_;
  eval::PipelineOptions pipeline_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::uint64_t counter_ = 0;
};

}  // namespace missa::app

#endif  // MISSA_APP_SESSION_HPP_
