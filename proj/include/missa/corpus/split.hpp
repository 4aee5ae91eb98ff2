#ifndef MISSA_CORPUS_SPLIT_HPP_
#define MISSA_CORPUS_SPLIT_HPP_

#include <cstdint>
#include <vector>

#include "missa/corpus/dialog.hpp"

namespace missa::corpus {

struct Split {
  std::vector<AnnotatedDialog> train;
  std::vector<AnnotatedDialog> validation;
  std::vector<AnnotatedDialog> test;
};

// Dialog-level 80/10/10 split. Validation and test each get round(N/10)
// dialogs, train the remainder. Deterministic per seed; each part keeps
// corpus order.
Split split_corpus(const std::vector<AnnotatedDialog>& dialogs, std::uint64_t seed);

}  // namespace missa::corpus

#endif  // MISSA_CORPUS_SPLIT_HPP_
