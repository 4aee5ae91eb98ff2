#include "missa/corpus/split.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "missa/error.hpp"

namespace missa::corpus {

Split split_corpus(const std::vector<AnnotatedDialog>& dialogs, std::uint64_t seed) {
  const std::size_t n = dialogs.size();
  if (n < 10) {
    throw ValidationError("split needs at least 10 dialogs, got " + std::to_string(n));
  }
  const std::size_t held_out = (n + 5) / 10;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  auto take = [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> part(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                  order.begin() + static_cast<std::ptrdiff_t>(end));
    std::sort(part.begin(), part.end());
    std::vector<AnnotatedDialog> out;
    out.reserve(part.size());
    for (auto i : part) out.push_back(dialogs[i]);
    return out;
  };
  Split split;
  split.test = take(0, held_out);
  split.validation = take(held_out, 2 * held_out);
  split.train = take(2 * held_out, n);
  return split;
}

}  // namespace missa::corpus
