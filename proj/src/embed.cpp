#include "wr/embed.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "wr/error.hpp"
#include "wr/parallel.hpp"

namespace wr::embed {

namespace {

constexpr char kPcaMagic[6] = {'W', 'R', 'P', 'C', 'A', '1'};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
bool read_pod(std::istream& in, T& v) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof v));
}

}  // namespace

std::string_view fit_mode_name(FitMode mode) noexcept {
  return mode == FitMode::classification ? "classification" : "retrieval";
}

FitMode parse_fit_mode(std::string_view name) {
  if (name == "classification") return FitMode::classification;
  if (name == "retrieval") return FitMode::retrieval;
  throw Error(Errc::usage, "unknown PCA mode '" + std::string(name) + "' (expected classification or retrieval)");
}

PcaModel fit_pca(const descriptor::FeatureSet& samples, std::size_t dim, FitMode mode, std::string fit_corpus_id) {
  const std::size_t n = samples.size();
  if (n < 2) throw Error(Errc::empty_input, "PCA needs at least 2 samples, got " + std::to_string(n));
  if (dim < 1) throw Error(Errc::invalid_argument, "PCA dimension must be >= 1");
  const std::size_t d = samples.dim;

  Eigen::Map<const RowMatrix> data(samples.data.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  Eigen::RowVectorXd mean = data.colwise().mean();
  // Constant columns get their exact value so identical samples centre to zero.
  for (Eigen::Index j = 0; j < mean.size(); ++j) {
    if ((data.col(j).array() == data(0, j)).all()) mean[j] = data(0, j);
  }
  const Eigen::MatrixXd centred = data.rowwise() - mean;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centred, Eigen::ComputeThinV);
  const Eigen::MatrixXd& v = svd.matrixV();
  const Eigen::VectorXd& s = svd.singularValues();

  PcaModel model;
  model.input_dim = d;
  model.k = std::min({dim, n - 1, d});
  model.fit_mode = mode;
  model.fit_corpus_id = std::move(fit_corpus_id);
  model.mean.assign(mean.data(), mean.data() + d);
  model.components.resize(model.k * d);
  model.variances.resize(model.k);
  for (std::size_t c = 0; c < model.k; ++c) {
    Eigen::VectorXd axis = v.col(static_cast<Eigen::Index>(c));
    Eigen::Index pivot = 0;
    for (Eigen::Index j = 1; j < axis.size(); ++j) {
      if (std::abs(axis[j]) > std::abs(axis[pivot])) pivot = j;
    }
    if (axis[pivot] < 0) axis = -axis;
    std::copy(axis.data(), axis.data() + d, model.components.begin() + static_cast<std::ptrdiff_t>(c * d));
    const double sv = c < static_cast<std::size_t>(s.size()) ? s[static_cast<Eigen::Index>(c)] : 0.0;
    model.variances[c] = sv * sv / static_cast<double>(n - 1);
  }
  return model;
}

std::vector<double> project(const PcaModel& model, std::span<const double> d, bool whiten) {
  if (d.size() != model.input_dim) {
    throw Error(Errc::dimension, "descriptor length " + std::to_string(d.size()) + " does not match model input " +
                                     std::to_string(model.input_dim));
  }
  std::vector<double> centred(d.size());
  for (std::size_t j = 0; j < d.size(); ++j) centred[j] = d[j] - model.mean[j];
  std::vector<double> out(model.k, 0.0);
  for (std::size_t c = 0; c < model.k; ++c) {
    const auto axis = model.component(c);
    double acc = 0.0;
    for (std::size_t j = 0; j < centred.size(); ++j) acc += axis[j] * centred[j];
    if (whiten) acc = model.variances[c] > 0.0 ? acc / std::sqrt(model.variances[c]) : 0.0;
    out[c] = acc;
  }
  return out;
}

Embedding hellinger_l2(std::span<const double> v, std::string image_id) {
  Embedding e{std::move(image_id), std::vector<double>(v.size(), 0.0), false};
  double norm_sq = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double r = std::sqrt(std::abs(v[i]));
    e.values[i] = v[i] < 0.0 ? -r : r;
    norm_sq += std::abs(v[i]);
  }
  if (!(norm_sq > 0.0)) {
    std::fill(e.values.begin(), e.values.end(), 0.0);
    e.degenerate = true;
    return e;
  }
  const double norm = std::sqrt(norm_sq);
  for (double& x : e.values) x /= norm;
  return e;
}

descriptor::FeatureSet EmbeddingBatch::to_feature_set() const {
  descriptor::FeatureSet set;
  set.dim = dim;
  for (const auto& item : items) set.append(item.image_id, item.values);
  return set;
}

std::size_t EmbeddingBatch::degenerate_count() const noexcept {
  std::size_t count = 0;
  for (const auto& item : items) count += item.degenerate ? 1 : 0;
  return count;
}

EmbeddingBatch embed_with_model(const descriptor::FeatureSet& corpus, const PcaModel& model, const EmbedOptions& opts) {
  if (corpus.size() > 0 && corpus.dim != model.input_dim) {
    throw Error(Errc::dimension, "corpus descriptors have length " + std::to_string(corpus.dim) +
                                     " but the PCA model expects " + std::to_string(model.input_dim));
  }
  EmbeddingBatch batch;
  batch.fit_mode = model.fit_mode;
  batch.fit_corpus_id = model.fit_corpus_id;
  batch.dim = model.k;
  batch.items.resize(corpus.size());
  parallel_for(corpus.size(), opts.workers, [&](std::size_t i) {
    batch.items[i] = hellinger_l2(project(model, corpus.row(i), opts.whiten), corpus.ids[i]);
  });
  return batch;
}

EmbeddingBatch embed_corpus(const descriptor::FeatureSet& corpus, FitMode mode, const descriptor::FeatureSet* external,
                            const EmbedOptions& opts, PcaModel* fitted) {
  const descriptor::FeatureSet* source = &corpus;
  std::string source_id = "self";
  if (mode == FitMode::classification) {
    if (external == nullptr) {
      throw Error(Errc::usage, "classification mode needs an external training descriptor set");
    }
    if (external->size() > 0 && corpus.size() > 0 && external->dim != corpus.dim) {
      throw Error(Errc::dimension, "training descriptors have length " + std::to_string(external->dim) +
                                       " but corpus descriptors have length " + std::to_string(corpus.dim));
    }
    source = external;
    source_id = "external";
  }
  PcaModel model = fit_pca(*source, opts.dim, mode, source_id);
  EmbeddingBatch batch = embed_with_model(corpus, model, opts);
  if (fitted) *fitted = std::move(model);
  return batch;
}

void write_model(const PcaModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write PCA model: " + path.string());
  out.write(kPcaMagic, sizeof kPcaMagic);
  write_pod(out, static_cast<std::uint32_t>(model.input_dim));
  write_pod(out, static_cast<std::uint32_t>(model.k));
  write_pod(out, static_cast<std::uint8_t>(model.fit_mode == FitMode::classification ? 0 : 1));
  out.write(reinterpret_cast<const char*>(model.mean.data()), static_cast<std::streamsize>(model.mean.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(model.components.data()),
            static_cast<std::streamsize>(model.components.size() * sizeof(double)));
  write_pod(out, static_cast<std::uint32_t>(model.fit_corpus_id.size()));
  out.write(model.fit_corpus_id.data(), static_cast<std::streamsize>(model.fit_corpus_id.size()));
  out.write(reinterpret_cast<const char*>(model.variances.data()),
            static_cast<std::streamsize>(model.variances.size() * sizeof(double)));
  if (!out) throw Error(Errc::io, "failed writing PCA model: " + path.string());
}

PcaModel read_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open PCA model: " + path.string());
  char magic[sizeof kPcaMagic];
  if (!in.read(magic, sizeof magic)) throw Error(Errc::truncated, "PCA model header truncated");
  if (std::memcmp(magic, kPcaMagic, sizeof magic) != 0) throw Error(Errc::bad_magic, "not a PCA model: " + path.string());
  std::uint32_t input_dim = 0;
  std::uint32_t k = 0;
  std::uint8_t mode = 0;
  if (!read_pod(in, input_dim) || !read_pod(in, k) || !read_pod(in, mode)) {
    throw Error(Errc::truncated, "PCA model header truncated");
  }
  if (mode > 1) throw Error(Errc::parse, "PCA model has unknown fit mode " + std::to_string(mode));
  PcaModel model;
  model.input_dim = input_dim;
  model.k = k;
  model.fit_mode = mode == 0 ? FitMode::classification : FitMode::retrieval;
  model.mean.resize(input_dim);
  model.components.resize(static_cast<std::size_t>(k) * input_dim);
  if (!in.read(reinterpret_cast<char*>(model.mean.data()), static_cast<std::streamsize>(model.mean.size() * sizeof(double))) ||
      !in.read(reinterpret_cast<char*>(model.components.data()),
               static_cast<std::streamsize>(model.components.size() * sizeof(double)))) {
    throw Error(Errc::truncated, "PCA model payload truncated");
  }
  std::uint32_t id_len = 0;
  model.variances.assign(k, 1.0);
  if (read_pod(in, id_len)) {
    model.fit_corpus_id.resize(id_len);
    if (!in.read(model.fit_corpus_id.data(), id_len) ||
        !in.read(reinterpret_cast<char*>(model.variances.data()),
                 static_cast<std::streamsize>(model.variances.size() * sizeof(double)))) {
      throw Error(Errc::truncated, "PCA model trailer truncated");
    }
  }
  return model;
}

}  // namespace wr::embed
