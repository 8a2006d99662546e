#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wr/descriptor.hpp"
#include "wr/embed.hpp"
#include "wr/retrieval.hpp"

namespace wr::cli {

/// Every tunable of a pipeline run. Defaults are the competition baseline:
/// 42 px crop, 2000 px max side, LBP radii 1..12, PCA to 200, Manhattan.
struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path train_manifest;     // classification-mode PCA source (images)
  std::filesystem::path train_descriptors;  // ... or an existing descriptor store
  std::filesystem::path out_dir = "wr_out";

  int crop_margin = 42;
  int resize_target = 2000;
  bool deskew = false;

  descriptor::LbpConfig lbp;

  std::size_t pca_dim = 200;
  std::vector<embed::FitMode> pca_modes = {embed::FitMode::retrieval};
  bool whiten = false;

  retrieval::Metric metric = retrieval::Metric::manhattan;
  std::size_t tile = 256;
  retrieval::MatrixFormat matrix_format = retrieval::MatrixFormat::binary;
  std::string subsets;  // "NAME=tag,tag;NAME=tag"

  std::uint64_t seed = 1;
  int synth_writers = 50;
  int synth_pages = 5;
  int synth_distractors = 100;
  int synth_width = 420;
  int synth_height = 320;
  int synth_train_writers = 40;
  int synth_train_pages = 3;

  std::optional<unsigned> workers;  // unset: WR_WORKERS, then hardware threads
};

/// Known keys in canonical order.
const std::vector<std::string>& config_keys();

/// Sets one key from its text form. Throws Error(usage) for unknown keys or
/// values that do not parse or validate.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);
void apply_settings(RunConfig& cfg, const std::map<std::string, std::string>& settings);

/// "key = value" lines; '#' starts a comment; blank lines ignored.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

/// Canonical text form of every key, suitable for read_config_file.
std::map<std::string, std::string> to_settings(const RunConfig& cfg);
std::string to_config_text(const RunConfig& cfg);

/// Flag value, else WR_WORKERS, else hardware threads.
unsigned resolve_workers(const RunConfig& cfg);

}  // namespace wr::cli
