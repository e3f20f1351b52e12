#include "mlbm/selection.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>

#include "mlbm/errors.hpp"
#include "mlbm/io.hpp"
#include "mlbm/parallel.hpp"

namespace mlbm {

namespace {

constexpr const char* kReportHeader = "#H\tK\tICL\tL_C\tconverged\tseconds";

std::string format_record(const Cell& cell, const CellRecord& record, bool omit_timings) {
  std::ostringstream line;
  line << cell.first << '\t' << cell.second << '\t' << format_double(record.icl) << '\t' << format_double(record.L_C)
       << '\t' << (record.converged ? "yes" : "no") << '\t';
  if (omit_timings || std::isnan(record.seconds)) {
    line << '-';
  } else {
    line << format_double(record.seconds);
  }
  line << '\n';
  return line.str();
}

std::string format_failure(const Cell& cell) {
  return std::to_string(cell.first) + '\t' + std::to_string(cell.second) + "\tnan\tnan\tfailed\t-\n";
}

double parse_double(const std::string& field) {
  if (field == "-") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  const double value = std::stod(field, &used);
  if (used != field.size()) throw InvalidInput("bad number in report: " + field);
  return value;
}

}  // namespace

double icl_penalty(std::size_t I, std::size_t J, std::size_t L, int H, int K) {
  if (I == 0 || J == 0 || L == 0) throw InvalidInput("ICL needs I, J and L to be positive");
  const double dI = static_cast<double>(I);
  const double dJ = static_cast<double>(J);
  const double dL = static_cast<double>(L);
  return (H - 1) / 2.0 * std::log(dI) + (K - 1) / 2.0 * std::log(dJ) +
         dL * H * K / 2.0 * std::log(dL * dI * dJ);
}

double icl(const FitResult& fit, const EdgeList& edges, int H, int K) {
  if (fit.params.H() != H || fit.params.K() != K || fit.top.clusters != H || fit.bottom.clusters != K) {
    throw DimensionMismatch("fit does not have the requested (H, K)");
  }
  const double penalty = icl_penalty(edges.I, edges.J, edges.L, H, K);
  return complete_log_likelihood(fit.params, fit.top, fit.bottom, edges) - penalty;
}

double icl(const FitResult& fit, const MultiplexBipartiteGraph& graph, int H, int K) {
  return icl(fit, graph.edge_list(fit.weighting), H, K);
}

GridSpec GridSpec::standard() { return {range(2, 16), range(2, 16), FitConfig{}}; }

std::vector<int> GridSpec::range(int first, int last) {
  std::vector<int> values;
  for (int v = first; v <= last; ++v) values.push_back(v);
  return values;
}

void GridSpec::validate() const {
  if (H_values.empty() || K_values.empty()) throw InvalidParameter("grid is empty");
  for (int v : H_values) if (v < 1) throw InvalidParameter("grid values must be at least 1");
  for (int v : K_values) if (v < 1) throw InvalidParameter("grid values must be at least 1");
}

std::string format_report(const SelectionReport& report, bool omit_timings) {
  std::map<Cell, std::string> lines;
  for (const auto& [cell, record] : report.cells) lines[cell] = format_record(cell, record, omit_timings);
  for (const auto& [cell, reason] : report.failures) lines[cell] = format_failure(cell);
  std::string out = std::string(kReportHeader) + '\n';
  for (const auto& [cell, line] : lines) out += line;
  return out;
}

std::map<Cell, CellRecord> read_report(const std::filesystem::path& path) {
  std::map<Cell, CellRecord> cells;
  std::ifstream in(path);
  if (!in) return cells;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    std::istringstream fields(line);
    std::string h, k, icl_text, lc, converged, seconds;
    if (!std::getline(fields, h, '\t') || !std::getline(fields, k, '\t') || !std::getline(fields, icl_text, '\t') ||
        !std::getline(fields, lc, '\t') || !std::getline(fields, converged, '\t') || !std::getline(fields, seconds)) {
      continue;  // torn trailing line from an interrupted run
    }
    if (converged == "failed") continue;
    try {
      cells[{std::stoi(h), std::stoi(k)}] = {parse_double(icl_text), parse_double(lc), converged == "yes",
                                             parse_double(seconds)};
    } catch (const std::exception&) {
      continue;
    }
  }
  return cells;
}

SelectionReport grid_search(const MultiplexBipartiteGraph& graph, const GridSpec& grid, const GridOptions& options) {
  grid.validate();
  grid.fit.validate();
  const auto edges = graph.edge_list(grid.fit.weighting);

  SelectionReport report;
  if (options.report_path) report.cells = read_report(*options.report_path);

  std::vector<Cell> pending;
  for (int H : grid.H_values) {
    for (int K : grid.K_values) {
      if (!report.cells.contains({H, K})) pending.emplace_back(H, K);
    }
  }
  // Drop resumed cells that are not part of this grid.
  std::erase_if(report.cells, [&](const auto& entry) {
    return std::find(grid.H_values.begin(), grid.H_values.end(), entry.first.first) == grid.H_values.end() ||
           std::find(grid.K_values.begin(), grid.K_values.end(), entry.first.second) == grid.K_values.end();
  });

  std::ofstream journal;
  if (options.report_path) {
    const bool fresh = !std::filesystem::exists(*options.report_path);
    journal.open(*options.report_path, std::ios::app);
    if (!journal) throw Error("cannot open report file " + options.report_path->string());
    if (fresh) journal << kReportHeader << '\n' << std::flush;
  }

  std::mutex mutex;
  std::optional<FitResult> best_fit;
  std::optional<Cell> best_fit_cell;
  const auto better = [](const Cell& a, double icl_a, const Cell& b, double icl_b) {
    return icl_a > icl_b || (icl_a == icl_b && a < b);
  };

  parallel_for(pending.size(), options.workers, [&](std::size_t idx) {
    const Cell cell = pending[idx];
    FitConfig config = grid.fit;
    config.H = cell.first;
    config.K = cell.second;
    config.workers = 1;
    const auto start = std::chrono::steady_clock::now();
    try {
      auto result = fit_multi_restart(edges, config);
      const double score = icl(result, edges, cell.first, cell.second);
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      CellRecord record{score, result.final_L_C, result.converged, seconds};
      std::lock_guard lock(mutex);
      report.cells[cell] = record;
      if (journal.is_open()) journal << format_record(cell, record, options.omit_timings) << std::flush;
      if (!best_fit || better(cell, score, *best_fit_cell, report.cells[*best_fit_cell].icl)) {
        best_fit = std::move(result);
        best_fit_cell = cell;
      }
    } catch (const std::exception& err) {
      std::lock_guard lock(mutex);
      report.failures[cell] = err.what();
      if (journal.is_open()) journal << format_failure(cell) << std::flush;
    }
  });

  if (report.cells.empty()) {
    std::string message = "grid search failed in every cell";
    if (!report.failures.empty()) message += ": " + report.failures.begin()->second;
    throw NumericalError(message);
  }

  bool first = true;
  for (const auto& [cell, record] : report.cells) {
    if (first || better(cell, record.icl, report.best, report.cells[report.best].icl)) report.best = cell;
    first = false;
  }

  if (best_fit && *best_fit_cell == report.best) {
    report.best_fit = std::move(*best_fit);
  } else {
    // Best cell came from a resumed report; refit it with the same seeds.
    FitConfig config = grid.fit;
    config.H = report.best.first;
    config.K = report.best.second;
    report.best_fit = fit_multi_restart(edges, config);
  }

  if (options.report_path) {
    journal.close();
    write_file_atomic(*options.report_path, format_report(report, options.omit_timings));
  }
  return report;
}

}  // namespace mlbm
