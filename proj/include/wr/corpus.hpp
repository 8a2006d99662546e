#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace wr::corpus {

enum class SubsetTag { manuscripts, letters_a, letters_b, charters, synthetic };

std::string_view tag_name(SubsetTag tag) noexcept;
SubsetTag parse_tag(std::string_view name);
const std::set<SubsetTag>& all_tags();

struct ManifestEntry {
  std::string image_id;
  std::filesystem::path path;
  std::string writer_id;  // singleton writers (distractors) carry unique labels
  SubsetTag subset = SubsetTag::synthetic;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// Ordered image list. The order fixes row/column order of every matrix
/// derived from the corpus.
class CorpusManifest {
 public:
  CorpusManifest() = default;
  /// Throws duplicate_id if two entries share an image_id.
  explicit CorpusManifest(std::vector<ManifestEntry> entries);

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<ManifestEntry>& entries() const noexcept { return entries_; }
  const ManifestEntry& operator[](std::size_t i) const { return entries_[i]; }

  std::optional<std::size_t> find(std::string_view image_id) const;
  /// Throws unknown_id.
  std::size_t index_of(std::string_view image_id) const;
  std::vector<std::string> ids() const;

  friend bool operator==(const CorpusManifest& a, const CorpusManifest& b) { return a.entries_ == b.entries_; }

 private:
  std::vector<ManifestEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Parses the UTF-8 CSV manifest: header "image_id,path,writer_id,subset",
/// one entry per line, '#' comment lines and blank lines ignored. Relative
/// paths are resolved against the manifest's directory.
CorpusManifest load_manifest(const std::filesystem::path& path);
CorpusManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir = {});

/// Paths are written relative to the manifest directory when they lie below it.
void write_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);

/// Other entries with the same writer_id (leave-one-out R).
std::size_t relevant_count(const CorpusManifest& manifest, std::string_view image_id);
/// R for every position, in manifest order.
std::vector<std::size_t> relevant_counts(const CorpusManifest& manifest);

/// Entries whose tag is in `tags`, relative order kept.
CorpusManifest subset_select(const CorpusManifest& manifest, const std::set<SubsetTag>& tags);
/// Manifest positions selected by subset_select.
std::vector<std::size_t> subset_indices(const CorpusManifest& manifest, const std::set<SubsetTag>& tags);

struct SynthParams {
  int num_writers = 2;
  int pages_per_writer = 2;
  int num_distractors = 0;
  std::uint64_t seed = 7;
  int width = 420;
  int height = 320;
  std::string id_prefix = "img";
};

/// Writes deterministic grayscale PNG pages plus "manifest.csv" into out_dir.
/// Each writer gets a fixed procedural hand (stroke slant, stroke width,
/// letter height, line spacing, glyph rhythm, ink and paper tone) drawn from
/// the seed; pages of one writer differ in layout jitter and noise. Distractors
/// are single-page writers. Same params give bit-identical files.
CorpusManifest synth_corpus(const SynthParams& params, const std::filesystem::path& out_dir, unsigned workers = 1);

}  // namespace wr::corpus
