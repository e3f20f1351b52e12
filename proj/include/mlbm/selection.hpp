#pragma once

// ICL-based choice of the cluster counts (H, K) over a grid of candidates.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mlbm/inference.hpp"

namespace mlbm {

/// ICL = L_C - (H-1)/2 log I - (K-1)/2 log J - L H K / 2 log(L I J), with L_C
/// evaluated at the fit's hard partitions.
double icl(const FitResult& fit, const MultiplexBipartiteGraph& graph, int H, int K);
double icl(const FitResult& fit, const EdgeList& edges, int H, int K);

/// The penalty term alone.
double icl_penalty(std::size_t I, std::size_t J, std::size_t L, int H, int K);

struct GridSpec {
  std::vector<int> H_values;
  std::vector<int> K_values;
  FitConfig fit;  // H and K are overwritten per cell

  /// The default {2..16} x {2..16} grid.
  static GridSpec standard();
  static std::vector<int> range(int first, int last);
  void validate() const;
};

struct CellRecord {
  double icl = 0.0;
  double L_C = 0.0;
  bool converged = false;
  double seconds = 0.0;
};

using Cell = std::pair<int, int>;

struct SelectionReport {
  std::map<Cell, CellRecord> cells;
  std::map<Cell, std::string> failures;
  Cell best{0, 0};
  FitResult best_fit;
};

struct GridOptions {
  unsigned workers = 1;  // concurrent cells
  /// When set, every finished cell is appended here and cells already present
  /// are not recomputed. The file is rewritten in (H, K) order at the end.
  std::optional<std::filesystem::path> report_path;
  /// Write "-" instead of the measured runtime in the report file.
  bool omit_timings = false;
};

SelectionReport grid_search(const MultiplexBipartiteGraph& graph, const GridSpec& grid, const GridOptions& options = {});

/// Report file I/O: header line, then `H K ICL L_C converged seconds` records.
std::string format_report(const SelectionReport& report, bool omit_timings = false);
/// Reads records from a (possibly partial) report file. Failed cells are skipped.
std::map<Cell, CellRecord> read_report(const std::filesystem::path& path);

}  // namespace mlbm
