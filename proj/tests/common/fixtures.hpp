#ifndef MISSA_TESTS_FIXTURES_HPP_
#define MISSA_TESTS_FIXTURES_HPP_

#include <filesystem>
#include <string>

#include "missa/corpus/corpus_io.hpp"
#include "missa/corpus/dialog.hpp"

namespace missa::testing {

inline std::filesystem::path source_dir() { return MISSA_SOURCE_DIR; }

inline corpus::Corpus sample_corpus() {
  return corpus::load_corpus(source_dir() / "data" / "antiscam_sample.json");
}

inline corpus::SlotLexicon default_persona() {
  return {{"name", "Jim Lee"},
          {"card_num", "5110-xxxx-xxxx-8166"},
          {"card_cvs", "380"},
          {"card_date", "05/25"},
          {"phone_num", "350-xxx-2988"},
          {"address", "xxx El Ave, Apt 311, City, State, Zipcode"}};
}

inline corpus::Turn turn(corpus::Speaker speaker,
                         std::initializer_list<corpus::Sentence> sentences) {
  return corpus::Turn{speaker, std::vector<corpus::Sentence>(sentences)};
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("missa-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace missa::testing

#endif  // MISSA_TESTS_FIXTURES_HPP_
