#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wr/descriptor.hpp"

namespace wr::embed {

/// Where the principal components come from: an external training set
/// (classification) or the evaluated corpus itself (retrieval).
enum class FitMode { classification, retrieval };

std::string_view fit_mode_name(FitMode mode) noexcept;
FitMode parse_fit_mode(std::string_view name);

inline constexpr std::size_t kDefaultDim = 200;

struct PcaModel {
  std::vector<double> mean;        // input_dim
  std::vector<double> components;  // k rows of input_dim, orthonormal
  std::vector<double> variances;   // per component, sample variance (1/(n-1))
  std::size_t input_dim = 0;
  std::size_t k = 0;
  FitMode fit_mode = FitMode::retrieval;
  std::string fit_corpus_id;

  std::span<const double> component(std::size_t i) const {
    return std::span(components).subspan(i * input_dim, input_dim);
  }
};

/// Principal components of the mean-centred samples via SVD of the data
/// matrix, ordered by decreasing variance. k = min(dim, n - 1, input_dim).
/// Each component is signed so its largest-magnitude coordinate (first one on
/// ties) is positive.
PcaModel fit_pca(const descriptor::FeatureSet& samples, std::size_t dim = kDefaultDim,
                 FitMode mode = FitMode::retrieval, std::string fit_corpus_id = {});

/// components * (d - mean); with `whiten` each coordinate is divided by its
/// component's standard deviation (zero-variance coordinates stay zero).
std::vector<double> project(const PcaModel& model, std::span<const double> d, bool whiten = false);

struct Embedding {
  std::string image_id;
  std::vector<double> values;
  bool degenerate = false;  // zero input, left as the zero vector
};

/// Signed square root sign(x)*sqrt(|x|) per element, then unit l2 norm.
Embedding hellinger_l2(std::span<const double> v, std::string image_id = {});

struct EmbeddingBatch {
  FitMode fit_mode = FitMode::retrieval;
  std::string fit_corpus_id;
  std::size_t dim = 0;
  std::vector<Embedding> items;

  descriptor::FeatureSet to_feature_set() const;
  std::size_t degenerate_count() const noexcept;
};

struct EmbedOptions {
  std::size_t dim = kDefaultDim;
  bool whiten = false;
  unsigned workers = 1;
};

/// Classification mode needs `external` (the training descriptors); retrieval
/// mode fits on `corpus` itself and ignores `external`.
EmbeddingBatch embed_corpus(const descriptor::FeatureSet& corpus, FitMode mode,
                            const descriptor::FeatureSet* external, const EmbedOptions& opts = {},
                            PcaModel* fitted = nullptr);

/// Projects with an existing model.
EmbeddingBatch embed_with_model(const descriptor::FeatureSet& corpus, const PcaModel& model,
                                const EmbedOptions& opts = {});

/// Model file: magic "WRPCA1", u32 input_dim, u32 k, u8 fit_mode
/// (0 classification, 1 retrieval), float64 mean[input_dim], float64
/// components[k * input_dim] row-major; then a trailer with u32 length +
/// UTF-8 fit corpus id and float64 variances[k].
void write_model(const PcaModel& model, const std::filesystem::path& path);
PcaModel read_model(const std::filesystem::path& path);

}  // namespace wr::embed
