#ifndef MISSA_TESTS_MODEL_FIXTURE_HPP_
#define MISSA_TESTS_MODEL_FIXTURE_HPP_

#include "common/fixtures.hpp"
#include "missa/corpus/vocabulary.hpp"
#include "missa/model/checkpoint.hpp"
#include "missa/model/trainer.hpp"

namespace missa::testing {

inline model::ModelConfig small_config(int context = 256) {
  auto c = model::tiny_config();
  c.context_length = context;
  return c;
}

/// A corpus, its prepared dialogs and a freshly initialized model with an
/// encoder over them. Constructed in place; not movable.
struct ModelFixture {
  corpus::Corpus corpus;
  std::vector<corpus::AnnotatedDialog> dialogs;
  model::Checkpoint bundle;
  model::Encoder encoder;

  ModelFixture(corpus::Corpus c, const model::ModelConfig& config, std::uint64_t seed = 1)
      : corpus(std::move(c)),
        dialogs(model::prepare_dialogs(corpus.dialogs, config)),
        bundle(model::init_checkpoint(
            config, corpus.taxonomy,
            corpus::build_vocabulary(corpus.dialogs, corpus.taxonomy, 1, config.delexicalize),
            seed)),
        encoder(model::encoder_for(bundle)) {}
  ModelFixture(const ModelFixture&) = delete;
  ModelFixture& operator=(const ModelFixture&) = delete;

  model::MissaModel& model() { return bundle.model; }
  const corpus::Vocabulary& vocab() const { return bundle.vocab; }
};

}  // namespace missa::testing

#endif  // MISSA_TESTS_MODEL_FIXTURE_HPP_
