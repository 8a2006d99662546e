#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "wr/config.hpp"
#include "wr/corpus.hpp"
#include "wr/descriptor.hpp"
#include "wr/embed.hpp"
#include "wr/evaluate.hpp"
#include "wr/image.hpp"
#include "wr/retrieval.hpp"

namespace wr::cli {

/// crop -> downscale -> optional deskew.
GrayImage preprocess_image(const GrayImage& img, const RunConfig& cfg);

/// Loads, preprocesses (unless `skip_preprocess`) and describes every
/// manifest entry, in manifest order.
descriptor::FeatureSet extract_corpus(const corpus::CorpusManifest& manifest, const RunConfig& cfg, unsigned workers,
                                      bool skip_preprocess = false);

/// Writes preprocessed PNGs and a matching manifest into out_dir.
corpus::CorpusManifest preprocess_corpus(const corpus::CorpusManifest& manifest, const RunConfig& cfg,
                                         const std::filesystem::path& out_dir, unsigned workers);

/// Embedding store plus "<path>.meta.json" with fit mode and degenerate count.
void write_embeddings(const embed::EmbeddingBatch& batch, const std::filesystem::path& path);

struct ModeResult {
  embed::FitMode mode;
  evaluate::ReportBundle bundle;
  std::filesystem::path matrix_path;
};

/// Whole pipeline on cfg.manifest for each requested PCA mode. Writes
/// descriptors, models, embeddings, matrices, "report.json" (all modes) and
/// the run log under cfg.out_dir.
std::vector<ModeResult> run_all(const RunConfig& cfg, std::ostream& log);

/// Hex SHA-256 of a file's bytes.
std::string file_digest(const std::filesystem::path& path);

/// Writes "<out_dir>/run_log.<command>.json": command, configuration, input
/// digests, version and timestamp. Re-running a command replaces its log.
void write_run_log(const std::filesystem::path& out_dir, const std::string& command, const RunConfig& cfg,
                   const std::vector<std::filesystem::path>& inputs);

inline constexpr const char* kVersion = "1.0.0";

}  // namespace wr::cli
