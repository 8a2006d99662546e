#pragma once
// Independent reference implementations used only by tests. None of these
// call into the library code paths they are compared against.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace wr::oracle {

/// AP by literal enumeration: precision at every rank is recounted from the
/// start of the list.
inline double ap_enumerate(const std::vector<char>& rel) {
  std::size_t R = 0;
  for (char r : rel) R += r ? 1 : 0;
  double sum = 0.0;
  for (std::size_t r = 1; r <= rel.size(); ++r) {
    std::size_t relevant_in_prefix = 0;
    for (std::size_t i = 0; i < r; ++i) relevant_in_prefix += rel[i] ? 1 : 0;
    const double precision = static_cast<double>(relevant_in_prefix) / static_cast<double>(r);
    sum += precision * (rel[r - 1] ? 1.0 : 0.0);
  }
  return sum / static_cast<double>(R);
}

struct OtsuAnswer {
  int threshold;
  bool degenerate;
};

/// Tries every threshold, splitting the raw pixel list. Between-class
/// variance n0*n1*(mu0 - mu1)^2 is compared as the exact fraction
/// (n1*s0 - n0*s1)^2 / (n0*n1) by cross-multiplication (small images only).
inline OtsuAnswer otsu_bruteforce(const std::vector<std::uint8_t>& pixels) {
  using i128 = __int128;
  bool found = false;
  i128 best_num = 0;
  i128 best_den = 1;
  int best_t = 0;
  for (int t = 0; t < 256; ++t) {
    std::int64_t n0 = 0, n1 = 0, s0 = 0, s1 = 0;
    for (std::uint8_t p : pixels) {
      if (p <= t) {
        ++n0;
        s0 += p;
      } else {
        ++n1;
        s1 += p;
      }
    }
    if (n0 == 0 || n1 == 0) continue;
    const i128 diff = static_cast<i128>(n1) * s0 - static_cast<i128>(n0) * s1;
    const i128 num = diff * diff;
    const i128 den = static_cast<i128>(n0) * n1;
    if (num == 0) continue;
    if (!found || num * best_den > best_num * den) {
      found = true;
      best_num = num;
      best_den = den;
      best_t = t;
    }
  }
  if (!found) {
    return {pixels.empty() ? 0 : *std::min_element(pixels.begin(), pixels.end()), true};
  }
  return {best_t, false};
}

inline double naive_distance(const std::vector<double>& a, const std::vector<double>& b, int metric) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (metric == 0) {
      acc += std::fabs(a[i] - b[i]);
    } else if (metric == 1) {
      acc += (a[i] - b[i]) * (a[i] - b[i]);
    } else if (a[i] + b[i] != 0.0) {
      acc += (a[i] - b[i]) * (a[i] - b[i]) / (a[i] + b[i]);
    }
  }
  return metric == 1 ? std::sqrt(acc) : acc;
}

/// Plain double loop over all ordered pairs (no symmetry shortcut).
inline std::vector<double> naive_matrix(const std::vector<std::vector<double>>& rows, int metric) {
  const std::size_t n = rows.size();
  std::vector<double> out(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = naive_distance(rows[i], rows[j], metric);
  }
  return out;
}

/// Eigenvectors of the 1/(n-1) sample covariance, columns by descending
/// eigenvalue.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> covariance_eigen(const Eigen::MatrixXd& samples) {
  const Eigen::RowVectorXd mean = samples.colwise().mean();
  const Eigen::MatrixXd c = samples.rowwise() - mean;
  const Eigen::MatrixXd cov = (c.transpose() * c) / static_cast<double>(samples.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const Eigen::Index d = cov.rows();
  Eigen::MatrixXd vecs(d, d);
  Eigen::VectorXd vals(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    vecs.col(i) = es.eigenvectors().col(d - 1 - i);
    vals[i] = es.eigenvalues()[d - 1 - i];
  }
  return {vecs, vals};
}

/// Sines of the principal angles between the column spans of a and b
/// (both orthonormal). Uses the residual of b after projecting onto a, which
/// stays accurate for tiny angles where acos(cos) does not.
inline Eigen::VectorXd principal_angle_sines(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd residual = b - a * (a.transpose() * b);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(residual);
  return svd.singularValues();
}

struct BruteEval {
  std::optional<double> map;
  std::optional<double> top1;
  std::size_t excluded = 0;
  std::vector<std::vector<std::size_t>> rankings;
};

/// Leave-one-out evaluation straight from the definition: sort the other
/// images by (distance, index), mark same-writer items, enumerate AP.
inline BruteEval brute_evaluate(const std::vector<double>& matrix, const std::vector<std::string>& writers) {
  const std::size_t n = writers.size();
  BruteEval out;
  double ap_sum = 0.0;
  double top1_sum = 0.0;
  std::size_t used = 0;
  for (std::size_t q = 0; q < n; ++q) {
    std::vector<std::pair<double, std::size_t>> others;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != q) others.emplace_back(matrix[q * n + j], j);
    }
    std::sort(others.begin(), others.end());
    std::vector<char> rel;
    std::vector<std::size_t> ranking;
    for (const auto& [d, j] : others) {
      rel.push_back(writers[j] == writers[q] ? 1 : 0);
      ranking.push_back(j);
    }
    out.rankings.push_back(ranking);
    if (std::count(rel.begin(), rel.end(), 1) == 0) {
      ++out.excluded;
      continue;
    }
    ++used;
    ap_sum += ap_enumerate(rel);
    top1_sum += rel[0] ? 1.0 : 0.0;
  }
  if (used > 0) {
    out.map = ap_sum / static_cast<double>(used);
    out.top1 = top1_sum / static_cast<double>(used);
  }
  return out;
}

}  // namespace wr::oracle
