#ifndef MISSA_MODEL_CHECKPOINT_HPP_
#define MISSA_MODEL_CHECKPOINT_HPP_

#include <filesystem>
#include <iosfwd>

#include <json.hpp>

#include "missa/corpus/taxonomy.hpp"
#include "missa/corpus/vocabulary.hpp"
#include "missa/model/missa_model.hpp"

namespace missa::model {

// Binary parameter file: magic "MSSA", format version, parameter count, then
// per parameter its name, rows, cols and row-major little-endian doubles.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_parameters(std::ostream& out, const MissaModel& model);
// Shapes and names must match the model's own layout.
void read_parameters(std::istream& in, MissaModel& model);

struct Checkpoint {
  corpus::Taxonomy taxonomy;
  corpus::Vocabulary vocab;
  MissaModel model;
  nlohmann::json metadata;  // training metadata, free-form
};

// Fresh model over `taxonomy` and `vocab`.
Checkpoint init_checkpoint(const ModelConfig& config, corpus::Taxonomy taxonomy,
                           corpus::Vocabulary vocab, std::uint64_t seed);

// Encoder bound to the checkpoint's vocabulary and taxonomy; the checkpoint
// must outlive it and stay in place.
Encoder encoder_for(const Checkpoint& checkpoint);

/// Directory with model.bin, model.json (config, taxonomy, taxonomy hash,
/// vocabulary size, metadata) and vocab.tsv.
void save_checkpoint(const std::filesystem::path& dir, const MissaModel& model,
                     const corpus::Vocabulary& vocab, const corpus::Taxonomy& taxonomy,
                     const nlohmann::json& metadata = nlohmann::json::object());
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace missa::model

#endif  // MISSA_MODEL_CHECKPOINT_HPP_
