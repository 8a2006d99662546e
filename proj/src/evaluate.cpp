#include "wr/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "wr/error.hpp"
#include "wr/parallel.hpp"

namespace wr::evaluate {

namespace {

std::vector<double> recall_grid(std::size_t points) {
  if (points < 2) throw Error(Errc::invalid_argument, "a PR curve needs at least 2 recall points");
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) grid[i] = static_cast<double>(i) / static_cast<double>(points - 1);
  return grid;
}

// Interpolated precision of one list at each grid recall.
std::vector<double> interpolated_precision(const RelevanceList& list, std::span<const double> grid) {
  if (list.relevant == 0) throw Error(Errc::undefined_ap, "PR curve of a query without relevant items");
  // Precision right after each hit; interpolation only needs these.
  std::vector<double> hit_precision;
  hit_precision.reserve(list.relevant);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < list.rel.size(); ++r) {
    if (list.rel[r]) {
      ++hits;
      hit_precision.push_back(static_cast<double>(hits) / static_cast<double>(r + 1));
    }
  }
  // suffix maximum: best precision at recall >= (k+1)/R
  for (std::size_t k = hit_precision.size(); k-- > 1;) {
    hit_precision[k - 1] = std::max(hit_precision[k - 1], hit_precision[k]);
  }
  const double R = static_cast<double>(list.relevant);
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    // smallest hit index k with (k+1)/R >= t
    const double need = grid[i] * R;
    auto k = static_cast<std::size_t>(std::max(0.0, std::ceil(need - 1e-12) - 1.0));
    if (k < hit_precision.size()) out[i] = hit_precision[k];
  }
  return out;
}

PrCurve curve_from_sums(std::span<const double> grid, const std::vector<double>& sums, std::size_t count) {
  PrCurve curve;
  curve.points.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    curve.points.push_back({grid[i], sums[i] / static_cast<double>(count)});
  }
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    curve.area += (b.recall - a.recall) * (a.precision + b.precision) / 2.0;
  }
  return curve;
}

retrieval::DistanceMatrix align_to_manifest(const retrieval::DistanceMatrix& mtx, const corpus::CorpusManifest& manifest) {
  if (mtx.size() != manifest.size()) {
    throw Error(Errc::id_mismatch, "matrix has " + std::to_string(mtx.size()) + " ids, manifest has " +
                                       std::to_string(manifest.size()));
  }
  std::vector<std::size_t> order;
  order.reserve(mtx.size());
  bool identity = true;
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < mtx.size(); ++i) position.emplace(mtx.ids()[i], i);
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    auto it = position.find(manifest[i].image_id);
    if (it == position.end()) throw Error(Errc::id_mismatch, "manifest id '" + manifest[i].image_id + "' not in matrix");
    order.push_back(it->second);
    identity = identity && it->second == i;
  }
  if (identity) return mtx;
  return mtx.submatrix(order);
}

nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["map"] = r.map ? nlohmann::json(*r.map) : nlohmann::json(nullptr);
  j["top1"] = r.top1 ? nlohmann::json(*r.top1) : nlohmann::json(nullptr);
  j["total_queries"] = r.total_queries;
  j["used_queries"] = r.used_queries;
  j["excluded_queries"] = r.excluded_queries;
  auto curve = nlohmann::json::array();
  for (const auto& p : r.pr_curve.points) curve.push_back({p.recall, p.precision});
  j["pr_curve"] = {{"area", r.pr_curve.area}, {"points", curve}};
  auto queries = nlohmann::json::array();
  for (const auto& q : r.queries) {
    queries.push_back({{"query_id", q.query_id},
                       {"relevant", q.relevant},
                       {"ap", q.ap ? nlohmann::json(*q.ap) : nlohmann::json(nullptr)},
                       {"p_at_1", q.p_at_1}});
  }
  j["queries"] = std::move(queries);
  return j;
}

std::string percent(const std::optional<double>& v) {
  return v ? fmt::format("{:.2f}", *v * 100.0) : std::string("n/a");
}

}  // namespace

RelevanceList RelevanceList::from_flags(std::vector<char> flags) {
  RelevanceList list{std::move(flags), 0};
  for (char f : list.rel) list.relevant += f ? 1 : 0;
  return list;
}

double average_precision(const RelevanceList& list) {
  if (list.relevant == 0) throw Error(Errc::undefined_ap, "average precision is undefined for R = 0");
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < list.rel.size(); ++r) {
    if (list.rel[r]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  if (hits != list.relevant) throw Error(Errc::invalid_argument, "relevance list does not contain R relevant items");
  return sum / static_cast<double>(list.relevant);
}

PrCurve precision_recall_curve(std::span<const RelevanceList> lists, std::size_t points) {
  if (lists.empty()) throw Error(Errc::empty_input, "PR curve needs at least one query with relevant items");
  const auto grid = recall_grid(points);
  std::vector<double> sums(grid.size(), 0.0);
  for (const auto& list : lists) {
    const auto p = interpolated_precision(list, grid);
    for (std::size_t i = 0; i < p.size(); ++i) sums[i] += p[i];
  }
  return curve_from_sums(grid, sums, lists.size());
}

EvalReport evaluate_matrix(const retrieval::DistanceMatrix& input, const corpus::CorpusManifest& manifest,
                           const EvalOptions& opts) {
  if (manifest.empty()) throw Error(Errc::empty_input, "cannot evaluate an empty manifest");
  const retrieval::DistanceMatrix mtx = align_to_manifest(input, manifest);
  for (float v : mtx.values()) {
    if (!std::isfinite(v)) throw Error(Errc::parse, "distance matrix contains non-finite values");
  }
  const std::size_t n = manifest.size();
  const auto grid = recall_grid(opts.pr_points);

  // Writer labels as dense integers for the inner loop.
  std::unordered_map<std::string, std::size_t> label_of;
  std::vector<std::size_t> label(n);
  for (std::size_t i = 0; i < n; ++i) label[i] = label_of.emplace(manifest[i].writer_id, label_of.size()).first->second;
  const auto relevant = corpus::relevant_counts(manifest);

  EvalReport report;
  report.total_queries = n;
  report.queries.resize(n);
  std::vector<std::vector<double>> interp(n);
  parallel_for(n, opts.workers, [&](std::size_t q) {
    QueryResult& res = report.queries[q];
    res.query_id = manifest[q].image_id;
    res.relevant = relevant[q];
    const auto ranking = retrieval::rank_for_query(mtx, q);
    std::vector<char> flags(ranking.size());
    for (std::size_t r = 0; r < ranking.size(); ++r) flags[r] = label[ranking[r]] == label[q] ? 1 : 0;
    res.p_at_1 = !flags.empty() && flags[0] ? 1 : 0;
    if (res.relevant > 0) {
      const RelevanceList list{std::move(flags), res.relevant};
      res.ap = average_precision(list);
      interp[q] = interpolated_precision(list, grid);
    }
  });

  double ap_sum = 0.0;
  double top1_sum = 0.0;
  std::vector<double> pr_sums(grid.size(), 0.0);
  for (std::size_t q = 0; q < n; ++q) {
    const auto& res = report.queries[q];
    if (!res.ap) continue;
    ++report.used_queries;
    ap_sum += *res.ap;
    top1_sum += res.p_at_1;
    for (std::size_t i = 0; i < grid.size(); ++i) pr_sums[i] += interp[q][i];
  }
  report.excluded_queries = n - report.used_queries;
  if (report.used_queries > 0) {
    report.map = ap_sum / static_cast<double>(report.used_queries);
    report.top1 = top1_sum / static_cast<double>(report.used_queries);
    report.pr_curve = curve_from_sums(grid, pr_sums, report.used_queries);
  }
  return report;
}

SubsetDefs parse_subset_defs(std::string_view text) {
  SubsetDefs defs;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto semi = text.find(';', pos);
    if (semi == std::string_view::npos) semi = text.size();
    std::string_view item = text.substr(pos, semi - pos);
    pos = semi + 1;
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw Error(Errc::usage, "subset definition '" + std::string(item) + "' must look like NAME=tag[,tag...]");
    }
    std::set<corpus::SubsetTag> tags;
    std::string_view list = item.substr(eq + 1);
    std::size_t tp = 0;
    while (tp <= list.size()) {
      auto comma = list.find(',', tp);
      if (comma == std::string_view::npos) comma = list.size();
      const auto tag = list.substr(tp, comma - tp);
      if (!tag.empty()) tags.insert(corpus::parse_tag(tag));
      tp = comma + 1;
    }
    if (tags.empty()) throw Error(Errc::usage, "subset '" + std::string(item.substr(0, eq)) + "' has no tags");
    defs.emplace_back(std::string(item.substr(0, eq)), std::move(tags));
  }
  return defs;
}

std::vector<std::pair<std::string, EvalReport>> evaluate_subsets(const retrieval::DistanceMatrix& input,
                                                                 const corpus::CorpusManifest& manifest,
                                                                 const SubsetDefs& defs, const EvalOptions& opts) {
  const retrieval::DistanceMatrix mtx = align_to_manifest(input, manifest);
  std::vector<std::pair<std::string, EvalReport>> out;
  for (const auto& [name, tags] : defs) {
    if (tags.empty()) throw Error(Errc::invalid_argument, "subset '" + name + "' has no tags");
    const auto indices = corpus::subset_indices(manifest, tags);
    EvalReport report;
    if (!indices.empty()) {
      report = evaluate_matrix(mtx.submatrix(indices), corpus::subset_select(manifest, tags), opts);
    }
    out.emplace_back(name, std::move(report));
  }
  return out;
}

void print_report(std::ostream& out, const ReportBundle& bundle) {
  out << fmt::format("{}\n", bundle.label.empty() ? std::string("evaluation") : bundle.label);
  out << fmt::format("  {:<16} {:>8} {:>8} {:>8} {:>8}\n", "subset", "mAP[%]", "Top1[%]", "queries", "excluded");
  auto line = [&](const std::string& name, const EvalReport& r) {
    out << fmt::format("  {:<16} {:>8} {:>8} {:>8} {:>8}\n", name, percent(r.map), percent(r.top1), r.total_queries,
                       r.excluded_queries);
  };
  line("full", bundle.full);
  for (const auto& [name, r] : bundle.subsets) line(name, r);
  if (!bundle.full.pr_curve.points.empty()) {
    out << fmt::format("  PR-curve area {:.4f} (mAP {:.4f})\n", bundle.full.pr_curve.area, bundle.full.map.value_or(0.0));
  }
}

void print_side_by_side(std::ostream& out, std::span<const ReportBundle> bundles) {
  out << fmt::format("{:<16}", "subset");
  for (const auto& b : bundles) out << fmt::format(" {:>24}", b.label + " mAP/Top1");
  out << '\n';
  auto row = [&](const std::string& name, auto pick) {
    out << fmt::format("{:<16}", name);
    for (const auto& b : bundles) {
      const EvalReport* r = pick(b);
      out << fmt::format(" {:>24}", r ? percent(r->map) + " / " + percent(r->top1) : std::string("-"));
    }
    out << '\n';
  };
  row("full", [](const ReportBundle& b) { return &b.full; });
  if (!bundles.empty()) {
    for (const auto& [name, unused] : bundles.front().subsets) {
      (void)unused;
      row(name, [&name](const ReportBundle& b) -> const EvalReport* {
        for (const auto& [n, r] : b.subsets) {
          if (n == name) return &r;
        }
        return nullptr;
      });
    }
  }
}

std::string report_json(std::span<const ReportBundle> bundles, int indent) {
  nlohmann::json doc;
  auto runs = nlohmann::json::array();
  for (const auto& b : bundles) {
    nlohmann::json run;
    run["label"] = b.label;
    run["full"] = report_to_json(b.full);
    nlohmann::json subsets = nlohmann::json::object();
    for (const auto& [name, r] : b.subsets) subsets[name] = report_to_json(r);
    run["subsets"] = std::move(subsets);
    runs.push_back(std::move(run));
  }
  doc["runs"] = std::move(runs);
  return doc.dump(indent);
}

void write_report(std::span<const ReportBundle> bundles, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write report: " + path.string());
  out << report_json(bundles) << '\n';
  if (!out) throw Error(Errc::io, "failed writing report: " + path.string());
}

}  // namespace wr::evaluate
