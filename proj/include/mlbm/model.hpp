#pragma once

// Multilayer Poisson latent block model with degree correction:
//   U_i ~ Multinomial(pi), V_j ~ Multinomial(rho),
//   b_ij^(l) ~ Poisson(mu_i nu_j theta^(l)_{U_i V_j}).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mlbm/graph.hpp"

namespace mlbm {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Floor applied to theta inside logarithms.
inline constexpr double kThetaFloor = 1e-10;
/// Floor applied to cluster proportions after the M-step.
inline constexpr double kProportionFloor = 1e-10;

struct ModelParams {
  Eigen::VectorXd pi;               // H
  Eigen::VectorXd rho;              // K
  Eigen::VectorXd mu;               // I
  Eigen::VectorXd nu;               // J
  std::vector<Eigen::MatrixXd> theta;  // L matrices, each H x K

  Eigen::Index H() const noexcept { return pi.size(); }
  Eigen::Index K() const noexcept { return rho.size(); }
  Eigen::Index I() const noexcept { return mu.size(); }
  Eigen::Index J() const noexcept { return nu.size(); }
  std::size_t L() const noexcept { return theta.size(); }

  /// Checks shapes, finiteness, nonnegativity and that pi/rho sum to one
  /// (within 1e-9). Zero proportions are allowed (degenerate multinomials).
  void validate() const;
};

struct HardPartition {
  Side side = Side::Top;
  int clusters = 0;
  std::vector<int> assignment;

  void validate() const;
  /// Cluster sizes, including empty clusters.
  std::vector<std::size_t> sizes() const;
};

struct SoftAssignments {
  RowMatrix U;  // I x H
  RowMatrix V;  // J x K
};

/// One-hot soft matrix for a hard partition.
RowMatrix one_hot(const HardPartition& partition);
/// Row argmax, ties resolved to the lowest cluster index.
HardPartition round_rows(const RowMatrix& soft, Side side);

/// Names used to label a sampled graph; generated ("u0", "v0", "l0", ...)
/// where absent.
struct SampleLabels {
  std::vector<std::string> top;
  std::vector<std::string> bottom;
  std::vector<std::string> layers;
};

struct SampledGraph {
  MultiplexBipartiteGraph graph;
  HardPartition top;
  HardPartition bottom;
};

/// Draws partitions from pi/rho then edge counts. Every node is present in
/// the graph catalogs, including nodes with no sampled edges.
SampledGraph sample(const ModelParams& params, std::uint64_t seed, const SampleLabels& labels = {});

/// Edge-count step only, with the partitions given.
MultiplexBipartiteGraph sample_edges(const ModelParams& params, const HardPartition& top,
                                     const HardPartition& bottom, std::uint64_t seed,
                                     const SampleLabels& labels = {});

/// Complete-data log-likelihood L_C at hard partitions. The zero part is
/// evaluated in block-aggregated form. Theta is floored at kThetaFloor inside
/// logarithms; an edge with mu_i nu_j = 0 yields -infinity.
double complete_log_likelihood(const ModelParams& params, const HardPartition& top, const HardPartition& bottom,
                               const EdgeList& edges);
double complete_log_likelihood(const ModelParams& params, const HardPartition& top, const HardPartition& bottom,
                               const MultiplexBipartiteGraph& graph, Weighting weighting = Weighting::Binary);

/// Total entropy -sum x log x of a soft assignment matrix.
double assignment_entropy(const RowMatrix& soft);

/// Fuzzy likelihood L_S (without entropies).
double fuzzy_likelihood(const ModelParams& params, const SoftAssignments& soft, const EdgeList& edges);

/// Fuzzy criterion G = L_S + H(U) + H(V).
double fuzzy_criterion(const ModelParams& params, const SoftAssignments& soft, const EdgeList& edges);
double fuzzy_criterion(const ModelParams& params, const SoftAssignments& soft, const MultiplexBipartiteGraph& graph,
                       Weighting weighting = Weighting::Binary);

inline double floored_log(double theta) { return std::log(theta > kThetaFloor ? theta : kThetaFloor); }

}  // namespace mlbm
