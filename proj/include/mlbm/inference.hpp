#pragma once

// Block expectation-maximization for the multilayer latent block model, with
// independent random restarts.

#include <cstdint>
#include <string>
#include <vector>

#include "mlbm/graph.hpp"
#include "mlbm/model.hpp"

namespace mlbm {

struct FitConfig {
  int H = 2;
  int K = 2;
  double epsilon = 1e-6;     // relative change of G below which iteration stops
  int max_iterations = 500;
  int restarts = 50;
  std::uint64_t seed = 0;    // restart r uses seed + r
  Weighting weighting = Weighting::Binary;
  unsigned workers = 1;      // parallel restarts; never affects results

  /// Throws InvalidParameter on H, K, restarts or iteration counts < 1 or a
  /// non-positive epsilon.
  void validate() const;
};

struct FitResult {
  ModelParams params;
  HardPartition top;
  HardPartition bottom;
  SoftAssignments soft;
  std::vector<double> criterion_trajectory;  // G at init, then after each iteration
  double final_L_C = 0.0;
  int iterations = 0;
  int restart_index = 0;
  std::uint64_t seed = 0;
  bool converged = false;
  Weighting weighting = Weighting::Binary;
  std::vector<int> degenerate_top;     // clusters that ended with zero mass
  std::vector<int> degenerate_bottom;
};

struct DegreeFactors {
  Eigen::VectorXd mu;
  Eigen::VectorXd nu;
  double total = 0.0;  // M (or N with count weighting)
};

/// mu_i = deg(i)/sqrt(M), nu_j = deg(j)/sqrt(M), so that sum(mu) sum(nu) = M.
/// Throws CannotFit on an empty graph.
DegreeFactors init_degree_factors(const EdgeList& edges);
DegreeFactors init_degree_factors(const MultiplexBipartiteGraph& graph, Weighting weighting = Weighting::Binary);

struct InitialState {
  ModelParams params;
  SoftAssignments soft;
};

/// Dirichlet(1) proportions and soft rows; theta^(l)_hk uniform in
/// [0.5 c_l, 1.5 c_l] with c_l the layer's share of the edge mass.
InitialState random_init(const FitConfig& config, const EdgeList& edges, std::uint64_t seed);

/// Exact maximizer of G over U with V, pi and theta held fixed.
RowMatrix e_step_top(const ModelParams& params, const RowMatrix& V, const EdgeList& edges);
/// Exact maximizer of G over V with U, rho and theta held fixed.
RowMatrix e_step_bottom(const ModelParams& params, const RowMatrix& U, const EdgeList& edges);

struct MStepResult {
  Eigen::VectorXd pi;
  Eigen::VectorXd rho;
  std::vector<Eigen::MatrixXd> theta;
  std::vector<int> degenerate_top;
  std::vector<int> degenerate_bottom;
};

/// Closed-form update of pi, rho and theta given soft assignments. Blocks whose
/// denominator vanishes get theta = 0 and their clusters are flagged.
MStepResult m_step(const SoftAssignments& soft, const EdgeList& edges, const Eigen::VectorXd& mu,
                   const Eigen::VectorXd& nu);

/// One restart with config.seed.
FitResult fit(const EdgeList& edges, const FitConfig& config);
FitResult fit(const MultiplexBipartiteGraph& graph, const FitConfig& config);

/// Restart `restart_index` (seed = config.seed + restart_index).
FitResult fit_restart(const EdgeList& edges, const FitConfig& config, int restart_index);

/// Runs config.restarts restarts and keeps the highest final_L_C (ties go to
/// the lowest restart index).
FitResult fit_multi_restart(const EdgeList& edges, const FitConfig& config);
FitResult fit_multi_restart(const MultiplexBipartiteGraph& graph, const FitConfig& config);

}  // namespace mlbm
