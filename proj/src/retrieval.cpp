#include "wr/retrieval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "wr/error.hpp"
#include "wr/parallel.hpp"

namespace wr::retrieval {

namespace {

constexpr char kDistMagic[7] = {'W', 'R', 'D', 'I', 'S', 'T', '1'};

void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(Errc::dimension, "vector lengths differ: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

DistanceMatrix read_binary(std::ifstream& in, const std::filesystem::path& path) {
  std::uint32_t n = 0;
  if (!in.read(reinterpret_cast<char*>(&n), sizeof n)) throw Error(Errc::truncated, "matrix header truncated: " + path.string());
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::uint32_t len = 0;
    if (!in.read(reinterpret_cast<char*>(&len), sizeof len)) throw Error(Errc::truncated, "matrix id index truncated");
    std::string id(len, '\0');
    if (!in.read(id.data(), len)) throw Error(Errc::truncated, "matrix id index truncated");
    ids.push_back(std::move(id));
  }
  const std::size_t count = static_cast<std::size_t>(n) * n;
  std::vector<float> values(count);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(count * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(float)) {
    throw Error(Errc::truncated, "matrix payload truncated: expected " + std::to_string(count * sizeof(float)) +
                                     " bytes, got " + std::to_string(in.gcount()));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(Errc::id_mismatch, "matrix payload longer than n*n for n = " + std::to_string(n));
  }
  return DistanceMatrix(std::move(ids), std::move(values));
}

DistanceMatrix read_csv(std::ifstream& in, const std::filesystem::path& path) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  };
  if (!next_line()) throw Error(Errc::parse, "empty matrix csv: " + path.string());
  auto header = split_csv(line);
  if (header.empty() || header[0] != "query_id") {
    throw Error(Errc::parse, path.string() + ":1: header must start with query_id");
  }
  std::vector<std::string> ids(header.begin() + 1, header.end());
  const std::size_t n = ids.size();
  std::vector<float> values(n * n);
  std::size_t row = 0;
  while (next_line()) {
    auto fields = split_csv(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (row >= n) throw Error(Errc::id_mismatch, where + ": more rows than ids in the header");
    if (fields.size() != n + 1) throw Error(Errc::parse, where + ": expected " + std::to_string(n + 1) + " fields");
    if (fields[0] != ids[row]) throw Error(Errc::id_mismatch, where + ": row id '" + fields[0] + "' does not match column order");
    for (std::size_t j = 0; j < n; ++j) {
      const std::string& f = fields[j + 1];
      float v = 0.0f;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size()) throw Error(Errc::parse, where + ": bad number '" + f + "'");
      values[row * n + j] = v;
    }
    ++row;
  }
  if (row != n) throw Error(Errc::id_mismatch, path.string() + ": " + std::to_string(row) + " rows for " + std::to_string(n) + " ids");
  return DistanceMatrix(std::move(ids), std::move(values));
}

}  // namespace

std::string_view metric_name(Metric m) noexcept {
  switch (m) {
    case Metric::manhattan: return "manhattan";
    case Metric::euclidean: return "euclidean";
    case Metric::chi_square: return "chi_square";
  }
  return "unknown";
}

Metric parse_metric(std::string_view name) {
  if (name == "manhattan" || name == "l1") return Metric::manhattan;
  if (name == "euclidean" || name == "l2") return Metric::euclidean;
  if (name == "chi_square" || name == "chi2") return Metric::chi_square;
  throw Error(Errc::usage, "unknown metric '" + std::string(name) + "' (expected manhattan, euclidean or chi_square)");
}

double distance(std::span<const double> a, std::span<const double> b, Metric m) {
  check_lengths(a, b);
  double acc = 0.0;
  switch (m) {
    case Metric::manhattan:
      for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
      return acc;
    case Metric::euclidean:
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
      }
      return std::sqrt(acc);
    case Metric::chi_square:
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] < 0.0 || b[i] < 0.0) throw Error(Errc::negative_input, "chi-square distance needs non-negative inputs");
        const double s = a[i] + b[i];
        if (s > 0.0) {
          const double d = a[i] - b[i];
          acc += d * d / s;
        }
      }
      return acc;
  }
  return acc;
}

DistanceMatrix::DistanceMatrix(std::vector<std::string> ids)
    : ids_(std::move(ids)), values_(ids_.size() * ids_.size(), 0.0f) {}

DistanceMatrix::DistanceMatrix(std::vector<std::string> ids, std::vector<float> values)
    : ids_(std::move(ids)), values_(std::move(values)) {
  if (values_.size() != ids_.size() * ids_.size()) {
    throw Error(Errc::id_mismatch, "matrix has " + std::to_string(values_.size()) + " values for " +
                                       std::to_string(ids_.size()) + " ids");
  }
}

DistanceMatrix DistanceMatrix::submatrix(std::span<const std::size_t> indices) const {
  std::vector<std::string> ids;
  ids.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= size()) throw Error(Errc::out_of_range, "submatrix index out of range");
    ids.push_back(ids_[i]);
  }
  DistanceMatrix out(std::move(ids));
  for (std::size_t r = 0; r < indices.size(); ++r) {
    for (std::size_t c = 0; c < indices.size(); ++c) out.at(r, c) = at(indices[r], indices[c]);
  }
  return out;
}

DistanceMatrix compute_distance_matrix(const descriptor::FeatureSet& embeddings, Metric m, const MatrixOptions& opts) {
  const std::size_t n = embeddings.size();
  if (n == 0) throw Error(Errc::empty_input, "no embeddings to compare");
  if (embeddings.data.size() != n * embeddings.dim) throw Error(Errc::dimension, "embedding payload size mismatch");
  if (m == Metric::chi_square) {
    for (double v : embeddings.data) {
      if (v < 0.0) throw Error(Errc::negative_input, "chi-square distance needs non-negative embeddings");
    }
  }
  const std::size_t tile = std::max<std::size_t>(1, opts.tile);
  const std::size_t tiles = (n + tile - 1) / tile;

  // Upper-triangular tile pairs (ti <= tj), enumerated row-major.
  std::vector<std::pair<std::size_t, std::size_t>> work;
  work.reserve(tiles * (tiles + 1) / 2);
  for (std::size_t ti = 0; ti < tiles; ++ti) {
    for (std::size_t tj = ti; tj < tiles; ++tj) work.emplace_back(ti, tj);
  }

  DistanceMatrix mtx(embeddings.ids);
  // Each (i, j) with i < j is written exactly once together with its mirror,
  // so tiles touch disjoint cells.
  parallel_for(work.size(), opts.workers, [&](std::size_t w) {
    const auto [ti, tj] = work[w];
    const std::size_t i_end = std::min(n, (ti + 1) * tile);
    const std::size_t j_end = std::min(n, (tj + 1) * tile);
    for (std::size_t i = ti * tile; i < i_end; ++i) {
      const auto a = embeddings.row(i);
      for (std::size_t j = std::max(tj * tile, i + 1); j < j_end; ++j) {
        const auto d = static_cast<float>(distance(a, embeddings.row(j), m));
        mtx.at(i, j) = d;
        mtx.at(j, i) = d;
      }
    }
  });
  return mtx;
}

void write_matrix(const DistanceMatrix& mtx, const std::filesystem::path& path, MatrixFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write matrix: " + path.string());
  const std::size_t n = mtx.size();
  if (format == MatrixFormat::binary) {
    out.write(kDistMagic, sizeof kDistMagic);
    const auto n32 = static_cast<std::uint32_t>(n);
    out.write(reinterpret_cast<const char*>(&n32), sizeof n32);
    for (const auto& id : mtx.ids()) {
      const auto len = static_cast<std::uint32_t>(id.size());
      out.write(reinterpret_cast<const char*>(&len), sizeof len);
      out.write(id.data(), static_cast<std::streamsize>(id.size()));
    }
    out.write(reinterpret_cast<const char*>(mtx.values().data()), static_cast<std::streamsize>(mtx.values().size() * sizeof(float)));
  } else {
    out << "query_id";
    for (const auto& id : mtx.ids()) out << ',' << id;
    out << '\n';
    char buf[32];
    for (std::size_t i = 0; i < n; ++i) {
      out << mtx.ids()[i];
      for (std::size_t j = 0; j < n; ++j) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, mtx.at(i, j), std::chars_format::general, 9);
        out << ',' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
      }
      out << '\n';
    }
  }
  if (!out) throw Error(Errc::io, "failed writing matrix: " + path.string());
}

DistanceMatrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open matrix: " + path.string());
  char magic[sizeof kDistMagic] = {};
  in.read(magic, sizeof magic);
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got == sizeof magic && std::memcmp(magic, kDistMagic, sizeof magic) == 0) return read_binary(in, path);
  if (got == sizeof magic && std::string_view(magic, got) == "query_i") {
    in.clear();
    in.seekg(0);
    return read_csv(in, path);
  }
  if (got < sizeof magic) throw Error(Errc::truncated, "matrix file too short: " + path.string());
  throw Error(Errc::bad_magic, "not a distance matrix (bad magic): " + path.string());
}

std::vector<std::size_t> rank_for_query(const DistanceMatrix& mtx, std::size_t q) {
  const std::size_t n = mtx.size();
  if (q >= n) throw Error(Errc::out_of_range, "query index " + std::to_string(q) + " out of range for n = " + std::to_string(n));
  std::vector<std::size_t> order;
  order.reserve(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    if (j != q) order.push_back(j);
  }
  const auto row = mtx.row(q);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return row[a] < row[b]; });
  return order;
}

}  // namespace wr::retrieval
