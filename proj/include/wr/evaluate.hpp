#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "wr/corpus.hpp"
#include "wr/retrieval.hpp"

namespace wr::evaluate {

/// Relevance of a ranked gallery. rel[r] is 1 when the item at rank r + 1
/// shares the query's writer.
struct RelevanceList {
  std::vector<char> rel;
  std::size_t relevant = 0;  // R

  static RelevanceList from_flags(std::vector<char> flags);
  std::size_t size() const noexcept { return rel.size(); }  // S
};

/// AP = (1/R) * sum over ranks r of precision@r * rel(r), accumulated in rank
/// order. Throws undefined_ap when R == 0.
double average_precision(const RelevanceList& list);

struct QueryResult {
  std::string query_id;
  std::size_t relevant = 0;
  std::optional<double> ap;  // empty when relevant == 0
  int p_at_1 = 0;
};

struct PrPoint {
  double recall;
  double precision;
};

struct PrCurve {
  std::vector<PrPoint> points;
  double area = 0.0;  // trapezoidal
};

struct EvalReport {
  std::optional<double> map;    // empty when no query has R >= 1
  std::optional<double> top1;
  std::size_t total_queries = 0;
  std::size_t used_queries = 0;
  std::size_t excluded_queries = 0;
  std::vector<QueryResult> queries;
  PrCurve pr_curve;             // empty when used_queries == 0
};

struct EvalOptions {
  unsigned workers = 1;
  std::size_t pr_points = 101;  // recall grid 0, 1/(m-1), ..., 1
};

/// Leave-one-image-out evaluation: every entry queries all others. Queries
/// with R == 0 count as excluded from mAP and Top-1 but stay in the table.
/// Requires matrix ids to equal manifest ids in order.
EvalReport evaluate_matrix(const retrieval::DistanceMatrix& mtx, const corpus::CorpusManifest& manifest,
                           const EvalOptions& opts = {});

/// Macro-averaged interpolated PR curve over the given lists (each with
/// R >= 1). Interpolated precision at recall level t is the best precision at
/// any rank whose recall is >= t. Throws empty_input with no lists.
PrCurve precision_recall_curve(std::span<const RelevanceList> lists, std::size_t points = 101);

/// Named tag sets, e.g. {"MSS", {manuscripts}}.
using SubsetDefs = std::vector<std::pair<std::string, std::set<corpus::SubsetTag>>>;

/// Parses "NAME=tag,tag;NAME=tag" into subset definitions.
SubsetDefs parse_subset_defs(std::string_view text);

/// Restricts gallery and queries to each subset, then evaluates the
/// corresponding sub-matrix.
std::vector<std::pair<std::string, EvalReport>> evaluate_subsets(const retrieval::DistanceMatrix& mtx,
                                                                 const corpus::CorpusManifest& manifest,
                                                                 const SubsetDefs& defs, const EvalOptions& opts = {});

struct ReportBundle {
  std::string label;
  EvalReport full;
  std::vector<std::pair<std::string, EvalReport>> subsets;
};

/// Fixed-width table for terminals.
void print_report(std::ostream& out, const ReportBundle& bundle);
void print_side_by_side(std::ostream& out, std::span<const ReportBundle> bundles);

/// JSON document with scores, per-subset scores, exclusions, PR curve and the
/// per-query AP table.
std::string report_json(std::span<const ReportBundle> bundles, int indent = 2);
void write_report(std::span<const ReportBundle> bundles, const std::filesystem::path& path);

}  // namespace wr::evaluate
