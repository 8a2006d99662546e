#include "wr/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "wr/error.hpp"
#include "wr/parallel.hpp"

namespace wr::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error(Errc::usage, "config '" + key + "': '" + value + "' is not a valid number");
  }
  return out;
}

int parse_int(const std::string& key, const std::string& value, int min) {
  const int v = parse_number<int>(key, value);
  if (v < min) throw Error(Errc::usage, fmt::format("config '{}': must be >= {}, got {}", key, min, v));
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw Error(Errc::usage, "config '" + key + "': expected true/false, got '" + value + "'");
}

// "1-12" or "1,2,4" or a mix like "1-3,8".
std::vector<int> parse_radii(const std::string& value) {
  std::vector<int> radii;
  std::stringstream ss(value);
  for (std::string part; std::getline(ss, part, ',');) {
    part = trim(part);
    if (part.empty()) continue;
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      radii.push_back(parse_int("lbp_radii", part, 1));
    } else {
      const int lo = parse_int("lbp_radii", trim(part.substr(0, dash)), 1);
      const int hi = parse_int("lbp_radii", trim(part.substr(dash + 1)), 1);
      if (hi < lo) throw Error(Errc::usage, "config 'lbp_radii': empty range '" + part + "'");
      for (int r = lo; r <= hi; ++r) radii.push_back(r);
    }
  }
  return radii;
}

std::string radii_text(const std::vector<int>& radii) {
  bool contiguous = !radii.empty();
  for (std::size_t i = 1; i < radii.size(); ++i) contiguous = contiguous && radii[i] == radii[i - 1] + 1;
  if (contiguous && radii.size() > 1) return fmt::format("{}-{}", radii.front(), radii.back());
  return fmt::format("{}", fmt::join(radii, ","));
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "manifest",        "train_manifest", "train_descriptors", "out_dir",       "crop_margin",
      "resize_target",   "deskew",         "lbp_radii",         "lbp_sampling",  "use_mask",
      "mask_dilation",   "pca_dim",        "pca_mode",          "whiten",        "metric",
      "tile",            "matrix_format",  "subsets",           "seed",          "synth_writers",
      "synth_pages",     "synth_distractors", "synth_width",    "synth_height",  "synth_train_writers",
      "synth_train_pages", "workers"};
  return keys;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "manifest") cfg.manifest = value;
  else if (key == "train_manifest") cfg.train_manifest = value;
  else if (key == "train_descriptors") cfg.train_descriptors = value;
  else if (key == "out_dir") {
    if (value.empty()) throw Error(Errc::usage, "config 'out_dir' must not be empty");
    cfg.out_dir = value;
  } else if (key == "crop_margin") cfg.crop_margin = parse_int(key, value, 0);
  else if (key == "resize_target") cfg.resize_target = parse_int(key, value, 1);
  else if (key == "deskew") cfg.deskew = parse_bool(key, value);
  else if (key == "lbp_radii") {
    descriptor::LbpConfig probe = cfg.lbp;
    probe.radii = parse_radii(value);
    try {
      probe.validate();
    } catch (const Error& e) {
      throw Error(Errc::usage, std::string("config 'lbp_radii': ") + e.what());
    }
    cfg.lbp = probe;
  } else if (key == "lbp_sampling") {
    if (value == "bilinear") cfg.lbp.sampling = descriptor::Sampling::bilinear;
    else if (value == "nearest") cfg.lbp.sampling = descriptor::Sampling::nearest;
    else throw Error(Errc::usage, "config 'lbp_sampling': expected bilinear or nearest, got '" + value + "'");
  } else if (key == "use_mask") cfg.lbp.use_mask = parse_bool(key, value);
  else if (key == "mask_dilation") cfg.lbp.mask_dilation = parse_int(key, value, 0);
  else if (key == "pca_dim") cfg.pca_dim = static_cast<std::size_t>(parse_int(key, value, 1));
  else if (key == "pca_mode") {
    if (value == "both") cfg.pca_modes = {embed::FitMode::classification, embed::FitMode::retrieval};
    else cfg.pca_modes = {embed::parse_fit_mode(value)};
  } else if (key == "whiten") cfg.whiten = parse_bool(key, value);
  else if (key == "metric") cfg.metric = retrieval::parse_metric(value);
  else if (key == "tile") cfg.tile = static_cast<std::size_t>(parse_int(key, value, 1));
  else if (key == "matrix_format") {
    if (value == "binary") cfg.matrix_format = retrieval::MatrixFormat::binary;
    else if (value == "csv") cfg.matrix_format = retrieval::MatrixFormat::csv;
    else throw Error(Errc::usage, "config 'matrix_format': expected binary or csv, got '" + value + "'");
  } else if (key == "subsets") cfg.subsets = value;
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "synth_writers") cfg.synth_writers = parse_int(key, value, 1);
  else if (key == "synth_pages") cfg.synth_pages = parse_int(key, value, 1);
  else if (key == "synth_distractors") cfg.synth_distractors = parse_int(key, value, 0);
  else if (key == "synth_width") cfg.synth_width = parse_int(key, value, 64);
  else if (key == "synth_height") cfg.synth_height = parse_int(key, value, 64);
  else if (key == "synth_train_writers") cfg.synth_train_writers = parse_int(key, value, 1);
  else if (key == "synth_train_pages") cfg.synth_train_pages = parse_int(key, value, 1);
  else if (key == "workers") cfg.workers = static_cast<unsigned>(parse_int(key, value, 1));
  else throw Error(Errc::usage, "unknown config key '" + key + "'");
}

void apply_settings(RunConfig& cfg, const std::map<std::string, std::string>& settings) {
  for (const auto& [k, v] : settings) apply_setting(cfg, k, v);
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::stringstream ss(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(ss, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::usage, fmt::format("config line {}: expected 'key = value'", line_no));
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::map<std::string, std::string> to_settings(const RunConfig& cfg) {
  std::map<std::string, std::string> s;
  s["manifest"] = cfg.manifest.string();
  s["train_manifest"] = cfg.train_manifest.string();
  s["train_descriptors"] = cfg.train_descriptors.string();
  s["out_dir"] = cfg.out_dir.string();
  s["crop_margin"] = std::to_string(cfg.crop_margin);
  s["resize_target"] = std::to_string(cfg.resize_target);
  s["deskew"] = cfg.deskew ? "true" : "false";
  s["lbp_radii"] = radii_text(cfg.lbp.radii);
  s["lbp_sampling"] = cfg.lbp.sampling == descriptor::Sampling::bilinear ? "bilinear" : "nearest";
  s["use_mask"] = cfg.lbp.use_mask ? "true" : "false";
  s["mask_dilation"] = std::to_string(cfg.lbp.mask_dilation);
  s["pca_dim"] = std::to_string(cfg.pca_dim);
  s["pca_mode"] = cfg.pca_modes.size() == 2 ? "both" : std::string(embed::fit_mode_name(cfg.pca_modes.front()));
  s["whiten"] = cfg.whiten ? "true" : "false";
  s["metric"] = std::string(retrieval::metric_name(cfg.metric));
  s["tile"] = std::to_string(cfg.tile);
  s["matrix_format"] = cfg.matrix_format == retrieval::MatrixFormat::binary ? "binary" : "csv";
  s["subsets"] = cfg.subsets;
  s["seed"] = std::to_string(cfg.seed);
  s["synth_writers"] = std::to_string(cfg.synth_writers);
  s["synth_pages"] = std::to_string(cfg.synth_pages);
  s["synth_distractors"] = std::to_string(cfg.synth_distractors);
  s["synth_width"] = std::to_string(cfg.synth_width);
  s["synth_height"] = std::to_string(cfg.synth_height);
  s["synth_train_writers"] = std::to_string(cfg.synth_train_writers);
  s["synth_train_pages"] = std::to_string(cfg.synth_train_pages);
  if (cfg.workers) s["workers"] = std::to_string(*cfg.workers);
  return s;
}

std::string to_config_text(const RunConfig& cfg) {
  const auto s = to_settings(cfg);
  std::string out;
  for (const auto& key : config_keys()) {
    auto it = s.find(key);
    if (it != s.end()) out += key + " = " + it->second + "\n";
  }
  return out;
}

unsigned resolve_workers(const RunConfig& cfg) {
  if (cfg.workers) return *cfg.workers;
  if (const char* env = std::getenv("WR_WORKERS"); env && *env) {
    const std::string v(env);
    unsigned n = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
    if (ec != std::errc() || ptr != v.data() + v.size() || n == 0) {
      throw Error(Errc::usage, "WR_WORKERS must be a positive integer, got '" + v + "'");
    }
    return n;
  }
  return hardware_workers();
}

}  // namespace wr::cli
