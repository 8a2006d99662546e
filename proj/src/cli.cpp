#include "wr/cli.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "wr/config.hpp"
#include "wr/pipeline.hpp"

namespace wr::cli {

namespace {

using Settings = std::map<std::string, std::string>;

struct Command {
  CLI::App* app = nullptr;
  std::string config_file;
  Settings overrides;
};

std::string dashed(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

void add_keys(Command& cmd, const std::vector<std::string>& keys) {
  for (const auto& key : keys) {
    cmd.app->add_option_function<std::string>(
        "--" + dashed(key), [&cmd, key](const std::string& v) { cmd.overrides[key] = v; },
        "config key '" + key + "'");
  }
}

Command* make_command(CLI::App& app, std::vector<std::unique_ptr<Command>>& all, const std::string& name,
                      const std::string& description, const std::vector<std::string>& keys) {
  auto cmd = std::make_unique<Command>();
  cmd->app = app.add_subcommand(name, description);
  cmd->app->add_option("-c,--config", cmd->config_file, "flat key = value config file; flags override it");
  add_keys(*cmd, keys);
  add_keys(*cmd, {"out_dir", "workers"});
  all.push_back(std::move(cmd));
  return all.back().get();
}

RunConfig resolve(const Command& cmd) {
  RunConfig cfg;
  if (!cmd.config_file.empty()) apply_settings(cfg, read_config_file(cmd.config_file));
  apply_settings(cfg, cmd.overrides);
  return cfg;
}

std::filesystem::path or_default(const std::string& given, const std::filesystem::path& fallback) {
  return given.empty() ? fallback : std::filesystem::path(given);
}

void require_file(const std::filesystem::path& p, const std::string& what) {
  if (p.empty()) throw Error(Errc::usage, what + " is required");
  if (!std::filesystem::exists(p)) throw Error(Errc::io, what + " not found: " + p.string());
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::io, "cannot create directory: " + dir.string());
}

const std::vector<std::string> kPreprocessKeys = {"crop_margin", "resize_target", "deskew"};
const std::vector<std::string> kLbpKeys = {"lbp_radii", "lbp_sampling", "use_mask", "mask_dilation"};

std::vector<std::string> concat(std::initializer_list<std::vector<std::string>> parts) {
  std::vector<std::string> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace

ExitCode exit_code_for(Errc code) noexcept {
  switch (code) {
    case Errc::usage:
    case Errc::invalid_argument:
      return kUsage;
    case Errc::io:
    case Errc::parse:
    case Errc::duplicate_id:
    case Errc::unknown_id:
    case Errc::unknown_tag:
    case Errc::dimension:
    case Errc::bad_magic:
    case Errc::truncated:
    case Errc::id_mismatch:
    case Errc::empty_input:
    case Errc::negative_input:
      return kInputData;
    case Errc::undefined_ap:
    case Errc::out_of_range:
      return kInternal;
  }
  return kInternal;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Writer retrieval for historical document images: LBP texture embedding, "
               "PCA + Hellinger normalization, distance matrices and mAP evaluation."};
  app.name(args.empty() ? "wr" : std::filesystem::path(args[0]).filename().string());
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::vector<std::unique_ptr<Command>> commands;

  std::string synth_out;
  bool synth_train = false;
  auto* synth = make_command(app, commands, "synth", "generate a deterministic synthetic corpus",
                             {"seed", "synth_writers", "synth_pages", "synth_distractors", "synth_width", "synth_height",
                              "synth_train_writers", "synth_train_pages"});
  synth->app->add_option("-o,--out", synth_out, "output directory (default <out_dir>/corpus)");
  synth->app->add_flag("--train", synth_train, "generate the disjoint training corpus instead (seed + 1000)");

  std::string pre_manifest, pre_out;
  auto* prep = make_command(app, commands, "preprocess", "crop, downscale and optionally deskew every image",
                            kPreprocessKeys);
  prep->app->add_option("-m,--manifest", pre_manifest, "input manifest");
  prep->app->add_option("-o,--out", pre_out, "output directory (default <out_dir>/preprocessed)");

  std::string ex_manifest, ex_output;
  bool ex_skip = false;
  auto* extract = make_command(app, commands, "extract", "compute LBP page descriptors",
                               concat({kPreprocessKeys, kLbpKeys}));
  extract->app->add_option("-m,--manifest", ex_manifest, "input manifest");
  extract->app->add_option("-o,--output", ex_output, "descriptor store (default <out_dir>/descriptors.bin)");
  extract->app->add_flag("--skip-preprocess", ex_skip, "images are already cropped and resized");

  std::string fit_desc, fit_output;
  auto* fit = make_command(app, commands, "fit-pca", "fit a PCA model on a descriptor store", {"pca_dim", "pca_mode"});
  fit->app->add_option("-d,--descriptors", fit_desc, "descriptor store to fit on");
  fit->app->add_option("-o,--output", fit_output, "model file (default <out_dir>/pca_<mode>.bin)");

  std::string emb_desc, emb_train, emb_model, emb_output;
  auto* emb = make_command(app, commands, "embed", "project descriptors, apply Hellinger map and l2 norm",
                           {"pca_dim", "pca_mode", "whiten", "train_descriptors"});
  emb->app->add_option("-d,--descriptors", emb_desc, "corpus descriptor store");
  emb->app->add_option("--model", emb_model, "use this PCA model instead of fitting");
  emb->app->add_option("-o,--output", emb_output, "embedding store (default <out_dir>/embeddings_<mode>.bin)");

  std::string dm_emb, dm_output;
  auto* dm = make_command(app, commands, "distmat", "compute the pairwise distance matrix",
                          {"metric", "tile", "matrix_format"});
  dm->app->add_option("-e,--embeddings", dm_emb, "embedding or descriptor store");
  dm->app->add_option("-o,--output", dm_output, "matrix file (default <out_dir>/distances.bin or .csv)");

  std::string ev_matrix, ev_manifest, ev_report;
  auto* ev = make_command(app, commands, "evaluate", "leave-one-image-out mAP / Top-1 of a distance matrix",
                          {"subsets"});
  ev->app->add_option("-x,--matrix", ev_matrix, "distance matrix (binary or csv)");
  ev->app->add_option("-m,--manifest", ev_manifest, "ground-truth manifest");
  ev->app->add_option("-r,--report", ev_report, "report file (default <out_dir>/report.json)");

  auto* all = make_command(app, commands, "run-all", "preprocess, extract, embed, distmat and evaluate",
                           concat({{"manifest", "train_manifest", "train_descriptors"}, kPreprocessKeys, kLbpKeys,
                                   {"pca_dim", "pca_mode", "whiten", "metric", "tile", "matrix_format", "subsets"}}));

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  const Command* active = nullptr;
  for (const auto& c : commands) {
    if (c->app->parsed()) active = c.get();
  }
  if (!active) return kUsage;
  const std::string name = active->app->get_name();

  try {
    const RunConfig cfg = resolve(*active);
    const unsigned workers = resolve_workers(cfg);

    if (active == synth) {
      corpus::SynthParams params;
      params.num_writers = synth_train ? cfg.synth_train_writers : cfg.synth_writers;
      params.pages_per_writer = synth_train ? cfg.synth_train_pages : cfg.synth_pages;
      params.num_distractors = synth_train ? 0 : cfg.synth_distractors;
      params.seed = synth_train ? cfg.seed + 1000 : cfg.seed;
      params.width = cfg.synth_width;
      params.height = cfg.synth_height;
      params.id_prefix = synth_train ? "train" : "img";
      const auto dir = or_default(synth_out, cfg.out_dir / (synth_train ? "train" : "corpus"));
      const auto manifest = corpus::synth_corpus(params, dir, workers);
      write_run_log(dir, name, cfg, {});
      out << fmt::format("wrote {} images and {}\n", manifest.size(), (dir / "manifest.csv").string());
    } else if (active == prep) {
      const auto manifest_path = or_default(pre_manifest, cfg.manifest);
      require_file(manifest_path, "--manifest");
      const auto dir = or_default(pre_out, cfg.out_dir / "preprocessed");
      const auto result = preprocess_corpus(corpus::load_manifest(manifest_path), cfg, dir, workers);
      write_run_log(dir, name, cfg, {manifest_path});
      out << fmt::format("preprocessed {} images into {}\n", result.size(), dir.string());
    } else if (active == extract) {
      const auto manifest_path = or_default(ex_manifest, cfg.manifest);
      require_file(manifest_path, "--manifest");
      const auto output = or_default(ex_output, cfg.out_dir / "descriptors.bin");
      ensure_dir(output.parent_path().empty() ? "." : output.parent_path());
      const auto set = extract_corpus(corpus::load_manifest(manifest_path), cfg, workers, ex_skip);
      descriptor::write_feature_store(set, output);
      write_run_log(cfg.out_dir, name, cfg, {manifest_path});
      out << fmt::format("wrote {} descriptors of length {} to {}\n", set.size(), set.dim, output.string());
    } else if (active == fit) {
      require_file(fit_desc, "--descriptors");
      if (cfg.pca_modes.size() != 1) throw Error(Errc::usage, "fit-pca takes a single pca_mode");
      const auto mode = cfg.pca_modes.front();
      const auto output =
          or_default(fit_output, cfg.out_dir / ("pca_" + std::string(embed::fit_mode_name(mode)) + ".bin"));
      ensure_dir(output.parent_path().empty() ? "." : output.parent_path());
      const auto model = embed::fit_pca(descriptor::read_feature_store(fit_desc), cfg.pca_dim, mode,
                                        std::filesystem::path(fit_desc).filename().string());
      embed::write_model(model, output);
      write_run_log(cfg.out_dir, name, cfg, {fit_desc});
      out << fmt::format("fitted {}-component {} model to {}\n", model.k, embed::fit_mode_name(mode), output.string());
    } else if (active == emb) {
      require_file(emb_desc, "--descriptors");
      if (cfg.pca_modes.size() != 1) throw Error(Errc::usage, "embed takes a single pca_mode");
      const auto mode = cfg.pca_modes.front();
      const embed::EmbedOptions opts{cfg.pca_dim, cfg.whiten, workers};
      const auto corpus_set = descriptor::read_feature_store(emb_desc);
      embed::EmbeddingBatch batch;
      if (!emb_model.empty()) {
        require_file(emb_model, "--model");
        batch = embed::embed_with_model(corpus_set, embed::read_model(emb_model), opts);
      } else if (mode == embed::FitMode::classification) {
        if (cfg.train_descriptors.empty()) {
          throw Error(Errc::usage, "classification mode needs --train-descriptors (external training store) or --model");
        }
        require_file(cfg.train_descriptors, "--train-descriptors");
        const auto training = descriptor::read_feature_store(cfg.train_descriptors);
        batch = embed::embed_corpus(corpus_set, mode, &training, opts);
      } else {
        batch = embed::embed_corpus(corpus_set, mode, nullptr, opts);
      }
      const auto output = or_default(
          emb_output, cfg.out_dir / ("embeddings_" + std::string(embed::fit_mode_name(batch.fit_mode)) + ".bin"));
      ensure_dir(output.parent_path().empty() ? "." : output.parent_path());
      write_embeddings(batch, output);
      write_run_log(cfg.out_dir, name, cfg, {emb_desc, emb_model, cfg.train_descriptors});
      out << fmt::format("wrote {} {}-d embeddings ({} mode, {} degenerate) to {}\n", batch.items.size(), batch.dim,
                         embed::fit_mode_name(batch.fit_mode), batch.degenerate_count(), output.string());
    } else if (active == dm) {
      require_file(dm_emb, "--embeddings");
      const bool binary = cfg.matrix_format == retrieval::MatrixFormat::binary;
      const auto output = or_default(dm_output, cfg.out_dir / (binary ? "distances.bin" : "distances.csv"));
      ensure_dir(output.parent_path().empty() ? "." : output.parent_path());
      const auto matrix =
          retrieval::compute_distance_matrix(descriptor::read_feature_store(dm_emb), cfg.metric, {cfg.tile, workers});
      retrieval::write_matrix(matrix, output, cfg.matrix_format);
      write_run_log(cfg.out_dir, name, cfg, {dm_emb});
      out << fmt::format("wrote {0}x{0} {1} matrix to {2}\n", matrix.size(), retrieval::metric_name(cfg.metric),
                         output.string());
    } else if (active == ev) {
      require_file(ev_matrix, "--matrix");
      const auto manifest_path = or_default(ev_manifest, cfg.manifest);
      require_file(manifest_path, "--manifest");
      const auto defs = evaluate::parse_subset_defs(cfg.subsets);
      const auto manifest = corpus::load_manifest(manifest_path);
      const auto matrix = retrieval::read_matrix(ev_matrix);
      evaluate::ReportBundle bundle;
      bundle.label = std::filesystem::path(ev_matrix).filename().string();
      bundle.full = evaluate::evaluate_matrix(matrix, manifest, {workers});
      bundle.subsets = evaluate::evaluate_subsets(matrix, manifest, defs, {workers});
      const auto report = or_default(ev_report, cfg.out_dir / "report.json");
      ensure_dir(report.parent_path().empty() ? "." : report.parent_path());
      evaluate::write_report(std::span(&bundle, 1), report);
      write_run_log(cfg.out_dir, name, cfg, {ev_matrix, manifest_path});
      evaluate::print_report(out, bundle);
    } else if (active == all) {
      run_all(cfg, out);
    }
    return kOk;
  } catch (const Error& e) {
    err << fmt::format("{}: {} error: {}\n", app.get_name(), errc_name(e.code()), e.what());
    return exit_code_for(e.code());
  } catch (const std::bad_alloc&) {
    err << fmt::format("{}: internal error: out of memory\n", app.get_name());
    return kInternal;
  } catch (const std::exception& e) {
    err << fmt::format("{}: internal error: {}\n", app.get_name(), e.what());
    return kInternal;
  }
}

}  // namespace wr::cli
