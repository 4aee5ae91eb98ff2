#include "missa/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "missa/corpus/corpus_io.hpp"
#include "missa/error.hpp"

namespace missa::model {

static_assert(std::endian::native == std::endian::little, "checkpoints assume little-endian");

namespace {

constexpr char kMagic[4] = {'M', 'S', 'S', 'A'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw ValidationError("checkpoint: truncated parameter file");
  }
  return value;
}

}  // namespace

void write_parameters(std::ostream& out, const MissaModel& model) {
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  const auto params = model.parameters();
  put<std::uint64_t>(out, params.size());
  for (const Param* p : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(p->value.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(p->value.cols()));
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(Real)));
  }
  if (!out) throw ValidationError("checkpoint: write failed");
}

void read_parameters(std::istream& in, MissaModel& model) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw ValidationError("checkpoint: not a parameter file");
  }
  if (const auto version = get<std::uint32_t>(in); version != kCheckpointVersion) {
    throw ValidationError("checkpoint: unsupported version " + std::to_string(version));
  }
  auto params = model.parameters();
  if (get<std::uint64_t>(in) != params.size()) {
    throw ValidationError("checkpoint: parameter count differs from the model");
  }
  for (Param* p : params) {
    std::string name(get<std::uint32_t>(in), '\0');
    in.read(name.data(), static_cast<std::streamsize>(name.size()));
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    if (name != p->name || rows != static_cast<std::uint64_t>(p->value.rows()) ||
        cols != static_cast<std::uint64_t>(p->value.cols())) {
      throw ValidationError("checkpoint: expected " + p->name + nnet::shape_string(p->value) +
                            ", found " + name + "[" + std::to_string(rows) + "x" +
                            std::to_string(cols) + "]");
    }
    if (!in.read(reinterpret_cast<char*>(p->value.data()),
                 static_cast<std::streamsize>(p->value.size() * sizeof(Real)))) {
      throw ValidationError("checkpoint: truncated values of " + name);
    }
    p->reset_state();
  }
}

Checkpoint init_checkpoint(const ModelConfig& config, corpus::Taxonomy taxonomy,
                           corpus::Vocabulary vocab, std::uint64_t seed) {
  MissaModel model(config, vocab.size(), static_cast<int>(taxonomy.intents().size()),
                   static_cast<int>(taxonomy.slots().size()), seed);
  return Checkpoint{std::move(taxonomy), std::move(vocab), std::move(model),
                    nlohmann::json::object()};
}

Encoder encoder_for(const Checkpoint& checkpoint) {
  const auto& config = checkpoint.model.config();
  return Encoder(checkpoint.vocab, checkpoint.taxonomy,
                 EncoderOptions{config.context_length, config.intent_tokens});
}

void save_checkpoint(const std::filesystem::path& dir, const MissaModel& model,
                     const corpus::Vocabulary& vocab, const corpus::Taxonomy& taxonomy,
                     const nlohmann::json& metadata) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "model.bin", std::ios::binary);
    if (!out) throw ValidationError("cannot write " + (dir / "model.bin").string());
    write_parameters(out, model);
  }
  vocab.save(dir / "vocab.tsv");
  nlohmann::json sidecar = {
      {"format_version", kCheckpointVersion},
      {"config", model.config()},
      {"task", taxonomy.task()},
      {"taxonomy", corpus::to_json(taxonomy)},
      {"taxonomy_hash", taxonomy.hash()},
      {"vocabulary", "vocab.tsv"},
      {"vocabulary_size", vocab.size()},
      {"metadata", metadata},
  };
  std::ofstream out(dir / "model.json");
  out << sidecar.dump(2) << '\n';
  if (!out) throw ValidationError("cannot write " + (dir / "model.json").string());
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream sidecar_in(dir / "model.json");
  if (!sidecar_in) throw NotFoundError("no checkpoint at " + dir.string());
  nlohmann::json sidecar;
  try {
    sidecar = nlohmann::json::parse(sidecar_in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("checkpoint: " + std::string(e.what()));
  }
  auto taxonomy = corpus::taxonomy_from_json(sidecar.at("taxonomy"), sidecar.at("task").get<std::string>());
  if (taxonomy.hash() != sidecar.at("taxonomy_hash").get<std::uint64_t>()) {
    throw ValidationError("checkpoint: taxonomy hash mismatch");
  }
  auto vocab = corpus::Vocabulary::load(dir / sidecar.at("vocabulary").get<std::string>(), taxonomy);
  if (vocab.size() != sidecar.at("vocabulary_size").get<int>()) {
    throw ValidationError("checkpoint: vocabulary size mismatch");
  }
  const auto config = sidecar.at("config").get<ModelConfig>();
  MissaModel model(config, vocab.size(), static_cast<int>(taxonomy.intents().size()),
                   static_cast<int>(taxonomy.slots().size()), 0);
  std::ifstream bin(dir / "model.bin", std::ios::binary);
  if (!bin) throw NotFoundError("checkpoint: missing model.bin in " + dir.string());
  read_parameters(bin, model);
  return Checkpoint{std::move(taxonomy), std::move(vocab), std::move(model),
                    sidecar.value("metadata", nlohmann::json::object())};
}

}  // namespace missa::model
