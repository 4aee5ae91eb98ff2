#ifndef MISSA_CORPUS_CORPUS_IO_HPP_
#define MISSA_CORPUS_CORPUS_IO_HPP_

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "missa/corpus/dialog.hpp"

namespace missa::corpus {

struct LoadOptions {
  // Admit labels outside the taxonomy (adding them) instead of failing.
  bool lenient = false;
};

struct LoadReport {
  std::size_t dialogs = 0;
  std::size_t sentences = 0;
  std::vector<std::string> warnings;
};

nlohmann::json to_json(const Corpus& corpus);
nlohmann::json to_json(const AnnotatedDialog& dialog);
AnnotatedDialog dialog_from_json(const nlohmann::json& j);
Taxonomy taxonomy_from_json(const nlohmann::json& j, const std::string& task);
nlohmann::json to_json(const Taxonomy& taxonomy);

// Validates labels against `taxonomy` and speaker alternation.
Corpus parse_corpus(const nlohmann::json& j, const Taxonomy& taxonomy,
                    const LoadOptions& options = {}, LoadReport* report = nullptr);
// Uses the taxonomy embedded in the document.
Corpus parse_corpus(const nlohmann::json& j, const LoadOptions& options = {},
                    LoadReport* report = nullptr);

Corpus load_corpus(const std::filesystem::path& path, const Taxonomy& taxonomy,
                   const LoadOptions& options = {}, LoadReport* report = nullptr);
Corpus load_corpus(const std::filesystem::path& path, const LoadOptions& options = {},
                   LoadReport* report = nullptr);

void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

// Label-level checks shared by the loader and the synthetic generator.
void validate_dialog(const AnnotatedDialog& dialog, Taxonomy& taxonomy,
                     const LoadOptions& options, LoadReport* report);

}  // namespace missa::corpus

#endif  // MISSA_CORPUS_CORPUS_IO_HPP_
