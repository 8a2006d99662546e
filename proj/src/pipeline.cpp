#include "wr/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <ostream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "wr/error.hpp"
#include "wr/parallel.hpp"
#include "wr/preprocess.hpp"

namespace wr::cli {

namespace {

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw Error(Errc::io, "cannot create directory: " + dir.string());
}

}  // namespace

GrayImage preprocess_image(const GrayImage& img, const RunConfig& cfg) {
  GrayImage out = preprocess::resize_max_dim(preprocess::crop_border(img, cfg.crop_margin), cfg.resize_target);
  if (cfg.deskew) out = preprocess::deskew_projection(out).image;
  return out;
}

descriptor::FeatureSet extract_corpus(const corpus::CorpusManifest& manifest, const RunConfig& cfg, unsigned workers,
                                      bool skip_preprocess) {
  const descriptor::LbpExtractor extractor(cfg.lbp);
  std::vector<descriptor::TextureDescriptor> rows(manifest.size());
  parallel_for(manifest.size(), workers, [&](std::size_t i) {
    const auto& entry = manifest[i];
    GrayImage img = load_gray(entry.path);
    if (!skip_preprocess) img = preprocess_image(img, cfg);
    rows[i] = extractor.extract(img, entry.image_id);
  });
  descriptor::FeatureSet set;
  set.dim = extractor.length();
  set.data.reserve(manifest.size() * set.dim);
  for (const auto& row : rows) set.append(row.image_id, row.values);
  return set;
}

corpus::CorpusManifest preprocess_corpus(const corpus::CorpusManifest& manifest, const RunConfig& cfg,
                                         const std::filesystem::path& out_dir, unsigned workers) {
  ensure_dir(out_dir);
  std::vector<corpus::ManifestEntry> entries(manifest.entries());
  parallel_for(entries.size(), workers, [&](std::size_t i) {
    const GrayImage img = preprocess_image(load_gray(manifest[i].path), cfg);
    entries[i].path = out_dir / (manifest[i].image_id + ".png");
    save_png(img, entries[i].path);
  });
  corpus::CorpusManifest out(std::move(entries));
  corpus::write_manifest(out, out_dir / "manifest.csv");
  return out;
}

void write_embeddings(const embed::EmbeddingBatch& batch, const std::filesystem::path& path) {
  descriptor::write_feature_store(batch.to_feature_set(), path);
  nlohmann::json meta;
  meta["fit_mode"] = embed::fit_mode_name(batch.fit_mode);
  meta["fit_corpus_id"] = batch.fit_corpus_id;
  meta["dim"] = batch.dim;
  meta["count"] = batch.items.size();
  meta["degenerate"] = batch.degenerate_count();
  auto meta_path = path;
  meta_path += ".meta.json";
  std::ofstream out(meta_path, std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write " + meta_path.string());
  out << meta.dump(2) << '\n';
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open for digest: " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error(Errc::io, "sha256 init failed");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::string hex;
  for (unsigned i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

void write_run_log(const std::filesystem::path& out_dir, const std::string& command, const RunConfig& cfg,
                   const std::vector<std::filesystem::path>& inputs) {
  ensure_dir(out_dir);
  nlohmann::json log;
  log["command"] = command;
  log["version"] = kVersion;
  log["timestamp"] = fmt::format("{}", std::chrono::duration_cast<std::chrono::seconds>(
                                           std::chrono::system_clock::now().time_since_epoch())
                                           .count());
  log["config"] = to_settings(cfg);
  log["workers"] = resolve_workers(cfg);
  auto digests = nlohmann::json::object();
  for (const auto& p : inputs) {
    if (!p.empty() && std::filesystem::is_regular_file(p)) digests[p.string()] = file_digest(p);
  }
  log["inputs"] = std::move(digests);
  const auto path = out_dir / ("run_log." + command + ".json");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << log.dump(2) << '\n';
}

std::vector<ModeResult> run_all(const RunConfig& cfg, std::ostream& log) {
  // Validate everything before touching any data.
  if (cfg.manifest.empty()) throw Error(Errc::usage, "run-all needs a manifest");
  const bool needs_external =
      std::find(cfg.pca_modes.begin(), cfg.pca_modes.end(), embed::FitMode::classification) != cfg.pca_modes.end();
  if (needs_external && cfg.train_manifest.empty() && cfg.train_descriptors.empty()) {
    throw Error(Errc::usage, "classification PCA mode needs train_manifest or train_descriptors");
  }
  const auto subset_defs = evaluate::parse_subset_defs(cfg.subsets);
  const unsigned workers = resolve_workers(cfg);

  ensure_dir(cfg.out_dir);
  const auto manifest = corpus::load_manifest(cfg.manifest);
  log << fmt::format("manifest: {} images\n", manifest.size());

  const auto descriptors = extract_corpus(manifest, cfg, workers);
  descriptor::write_feature_store(descriptors, cfg.out_dir / "descriptors.bin");
  log << fmt::format("extracted {} descriptors of length {}\n", descriptors.size(), descriptors.dim);

  descriptor::FeatureSet training;
  if (needs_external) {
    if (!cfg.train_descriptors.empty()) {
      training = descriptor::read_feature_store(cfg.train_descriptors);
    } else {
      training = extract_corpus(corpus::load_manifest(cfg.train_manifest), cfg, workers);
      descriptor::write_feature_store(training, cfg.out_dir / "train_descriptors.bin");
    }
    log << fmt::format("training set: {} descriptors\n", training.size());
  }

  std::vector<ModeResult> results;
  const embed::EmbedOptions eopts{cfg.pca_dim, cfg.whiten, workers};
  for (embed::FitMode mode : cfg.pca_modes) {
    const std::string name(embed::fit_mode_name(mode));
    embed::PcaModel model;
    const auto batch = embed::embed_corpus(descriptors, mode, needs_external ? &training : nullptr, eopts, &model);
    embed::write_model(model, cfg.out_dir / ("pca_" + name + ".bin"));
    write_embeddings(batch, cfg.out_dir / ("embeddings_" + name + ".bin"));

    const auto matrix = retrieval::compute_distance_matrix(batch.to_feature_set(), cfg.metric, {cfg.tile, workers});
    const auto matrix_path =
        cfg.out_dir / ("distances_" + name + (cfg.matrix_format == retrieval::MatrixFormat::binary ? ".bin" : ".csv"));
    retrieval::write_matrix(matrix, matrix_path, cfg.matrix_format);

    evaluate::ReportBundle bundle;
    bundle.label = name;
    bundle.full = evaluate::evaluate_matrix(matrix, manifest, {workers});
    bundle.subsets = evaluate::evaluate_subsets(matrix, manifest, subset_defs, {workers});
    results.push_back({mode, std::move(bundle), matrix_path});
    log << fmt::format("{}: k = {}, degenerate embeddings = {}\n", name, model.k, batch.degenerate_count());
  }

  std::vector<evaluate::ReportBundle> bundles;
  for (const auto& r : results) bundles.push_back(r.bundle);
  evaluate::write_report(bundles, cfg.out_dir / "report.json");
  evaluate::print_side_by_side(log, bundles);
  write_run_log(cfg.out_dir, "run-all", cfg, {cfg.manifest, cfg.train_manifest, cfg.train_descriptors});
  return results;
}

}  // namespace wr::cli
