#include "mlbm/model.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "mlbm/errors.hpp"
#include "mlbm/numeric.hpp"

namespace mlbm {

namespace {

void check_distribution(const Eigen::VectorXd& p, const char* name) {
  if (p.size() == 0) throw InvalidParameter(std::string(name) + " is empty");
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p[i]) || p[i] < 0.0) throw InvalidParameter(std::string(name) + " has a negative or non-finite entry");
  }
  if (std::abs(p.sum() - 1.0) > 1e-9) throw InvalidParameter(std::string(name) + " does not sum to one");
}

void check_nonnegative(const Eigen::Ref<const Eigen::MatrixXd>& m, const char* name) {
  if (!m.allFinite() || (m.size() > 0 && m.minCoeff() < 0.0)) {
    throw InvalidParameter(std::string(name) + " has a negative or non-finite entry");
  }
}

void check_dimensions(const ModelParams& params, const EdgeList& edges) {
  if (static_cast<std::size_t>(params.I()) != edges.I || static_cast<std::size_t>(params.J()) != edges.J ||
      params.L() != edges.L) {
    throw DimensionMismatch("parameters do not match graph dimensions (I, J, L)");
  }
}

int draw_category(const Eigen::VectorXd& p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  double acc = 0.0;
  int last_positive = 0;
  for (Eigen::Index h = 0; h < p.size(); ++h) {
    if (p[h] <= 0.0) continue;
    last_positive = static_cast<int>(h);
    acc += p[h];
    if (u < acc) return static_cast<int>(h);
  }
  return last_positive;
}

std::string label_or(const std::vector<std::string>& names, std::size_t i, char prefix) {
  if (i < names.size()) return names[i];
  return std::string(1, prefix) + std::to_string(i);
}

/// Sum over blocks of theta_hk^(l) * (sum_i a_ih mu_i) * (sum_j c_jk nu_j).
double block_expected_total(const ModelParams& params, const Eigen::VectorXd& top_mass,
                            const Eigen::VectorXd& bottom_mass) {
  CompensatedSum total;
  for (const auto& theta : params.theta) total += top_mass.dot(theta * bottom_mass);
  return total.value();
}

/// sum_i sum_h w_ih log p_h, skipping zero weights so that empty clusters
/// with p_h = 0 contribute nothing.
double proportion_term(const RowMatrix& weights, const Eigen::VectorXd& p) {
  CompensatedSum total;
  for (Eigen::Index i = 0; i < weights.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index h = 0; h < weights.cols(); ++h) {
      if (weights(i, h) > 0.0) row += weights(i, h) * std::log(p[h]);
    }
    total += row;
  }
  return total.value();
}

}  // namespace

void ModelParams::validate() const {
  check_distribution(pi, "pi");
  check_distribution(rho, "rho");
  check_nonnegative(mu, "mu");
  check_nonnegative(nu, "nu");
  for (const auto& t : theta) {
    if (t.rows() != H() || t.cols() != K()) throw DimensionMismatch("theta layer is not H x K");
    check_nonnegative(t, "theta");
  }
}

void HardPartition::validate() const {
  if (clusters < 1) throw InvalidParameter("partition must have at least one cluster");
  for (int a : assignment) {
    if (a < 0 || a >= clusters) throw InvalidParameter("cluster index out of range");
  }
}

std::vector<std::size_t> HardPartition::sizes() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(std::max(clusters, 0)), 0);
  for (int a : assignment) ++counts.at(static_cast<std::size_t>(a));
  return counts;
}

RowMatrix one_hot(const HardPartition& partition) {
  RowMatrix m = RowMatrix::Zero(static_cast<Eigen::Index>(partition.assignment.size()), partition.clusters);
  for (std::size_t i = 0; i < partition.assignment.size(); ++i) m(static_cast<Eigen::Index>(i), partition.assignment[i]) = 1.0;
  return m;
}

HardPartition round_rows(const RowMatrix& soft, Side side) {
  HardPartition p{side, static_cast<int>(soft.cols()), std::vector<int>(static_cast<std::size_t>(soft.rows()), 0)};
  for (Eigen::Index i = 0; i < soft.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index h = 1; h < soft.cols(); ++h) {
      if (soft(i, h) > soft(i, best)) best = h;
    }
    p.assignment[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return p;
}

MultiplexBipartiteGraph sample_edges(const ModelParams& params, const HardPartition& top,
                                     const HardPartition& bottom, std::uint64_t seed, const SampleLabels& labels) {
  params.validate();
  top.validate();
  bottom.validate();
  if (static_cast<Eigen::Index>(top.assignment.size()) != params.I() ||
      static_cast<Eigen::Index>(bottom.assignment.size()) != params.J() || top.clusters != params.H() ||
      bottom.clusters != params.K()) {
    throw DimensionMismatch("partitions do not match parameter dimensions");
  }
  MultiplexBipartiteGraph graph;
  for (Eigen::Index i = 0; i < params.I(); ++i) graph.add_top(label_or(labels.top, static_cast<std::size_t>(i), 'u'));
  for (Eigen::Index j = 0; j < params.J(); ++j) graph.add_bottom(label_or(labels.bottom, static_cast<std::size_t>(j), 'v'));
  for (std::size_t l = 0; l < params.L(); ++l) graph.add_layer(label_or(labels.layers, l, 'l'));

  std::mt19937_64 rng(seed);
  for (Eigen::Index i = 0; i < params.I(); ++i) {
    const int h = top.assignment[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < params.J(); ++j) {
      const int k = bottom.assignment[static_cast<std::size_t>(j)];
      const double scale = params.mu[i] * params.nu[j];
      for (std::size_t l = 0; l < params.L(); ++l) {
        const double rate = scale * params.theta[l](h, k);
        if (rate <= 0.0) continue;
        std::poisson_distribution<std::uint64_t> draw(rate);
        if (const auto count = draw(rng); count > 0) {
          graph.add_edge(static_cast<std::size_t>(i), static_cast<std::size_t>(j), l, count);
        }
      }
    }
  }
  return graph;
}

SampledGraph sample(const ModelParams& params, std::uint64_t seed, const SampleLabels& labels) {
  if (params.H() == 0 || params.K() == 0) throw InvalidParameter("pi and rho must be non-empty");
  params.validate();
  std::mt19937_64 rng(seed);
  HardPartition top{Side::Top, static_cast<int>(params.H()), {}};
  HardPartition bottom{Side::Bottom, static_cast<int>(params.K()), {}};
  top.assignment.reserve(static_cast<std::size_t>(params.I()));
  bottom.assignment.reserve(static_cast<std::size_t>(params.J()));
  for (Eigen::Index i = 0; i < params.I(); ++i) top.assignment.push_back(draw_category(params.pi, rng));
  for (Eigen::Index j = 0; j < params.J(); ++j) bottom.assignment.push_back(draw_category(params.rho, rng));
  // Independent stream for the edge step.
  const auto edge_seed = rng();
  auto graph = sample_edges(params, top, bottom, edge_seed, labels);
  return {std::move(graph), std::move(top), std::move(bottom)};
}

double complete_log_likelihood(const ModelParams& params, const HardPartition& top, const HardPartition& bottom,
                               const EdgeList& edges) {
  check_dimensions(params, edges);
  if (static_cast<Eigen::Index>(top.assignment.size()) != params.I() ||
      static_cast<Eigen::Index>(bottom.assignment.size()) != params.J() || top.clusters != params.H() ||
      bottom.clusters != params.K()) {
    throw DimensionMismatch("partitions do not match parameter dimensions");
  }
  top.validate();
  bottom.validate();

  CompensatedSum total;
  for (int h : top.assignment) total += std::log(params.pi[h]);
  for (int k : bottom.assignment) total += std::log(params.rho[k]);

  for (const auto& e : edges.entries) {
    const double scale = params.mu[e.top] * params.nu[e.bottom];
    if (!(scale > 0.0)) return -std::numeric_limits<double>::infinity();
    const double theta = params.theta[e.layer](top.assignment[e.top], bottom.assignment[e.bottom]);
    total += e.weight * (std::log(scale) + floored_log(theta));
  }

  Eigen::VectorXd top_mass = Eigen::VectorXd::Zero(params.H());
  Eigen::VectorXd bottom_mass = Eigen::VectorXd::Zero(params.K());
  for (Eigen::Index i = 0; i < params.I(); ++i) top_mass[top.assignment[static_cast<std::size_t>(i)]] += params.mu[i];
  for (Eigen::Index j = 0; j < params.J(); ++j) bottom_mass[bottom.assignment[static_cast<std::size_t>(j)]] += params.nu[j];
  total += -block_expected_total(params, top_mass, bottom_mass);
  return total.value();
}

double complete_log_likelihood(const ModelParams& params, const HardPartition& top, const HardPartition& bottom,
                               const MultiplexBipartiteGraph& graph, Weighting weighting) {
  return complete_log_likelihood(params, top, bottom, graph.edge_list(weighting));
}

double assignment_entropy(const RowMatrix& soft) {
  CompensatedSum total;
  for (Eigen::Index i = 0; i < soft.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index h = 0; h < soft.cols(); ++h) row += xlogx(soft(i, h));
    total += -row;
  }
  return total.value();
}

double fuzzy_likelihood(const ModelParams& params, const SoftAssignments& soft, const EdgeList& edges) {
  check_dimensions(params, edges);
  if (soft.U.rows() != params.I() || soft.U.cols() != params.H() || soft.V.rows() != params.J() ||
      soft.V.cols() != params.K()) {
    throw DimensionMismatch("soft assignments do not match parameter dimensions");
  }
  CompensatedSum total;
  total += proportion_term(soft.U, params.pi);
  total += proportion_term(soft.V, params.rho);

  std::vector<Eigen::MatrixXd> log_theta;
  log_theta.reserve(params.L());
  for (const auto& t : params.theta) log_theta.push_back(t.unaryExpr([](double x) { return floored_log(x); }));

  const Eigen::Index H = params.H();
  const Eigen::Index K = params.K();
  for (const auto& e : edges.entries) {
    const double* u = soft.U.row(e.top).data();
    const double* v = soft.V.row(e.bottom).data();
    const auto& lt = log_theta[e.layer];
    double value = 0.0;
    for (Eigen::Index h = 0; h < H; ++h) {
      if (u[h] == 0.0) continue;
      double inner = 0.0;
      for (Eigen::Index k = 0; k < K; ++k) inner += lt(h, k) * v[k];
      value += u[h] * inner;
    }
    total += e.weight * value;
  }

  const Eigen::VectorXd top_mass = soft.U.transpose() * params.mu;
  const Eigen::VectorXd bottom_mass = soft.V.transpose() * params.nu;
  total += -block_expected_total(params, top_mass, bottom_mass);
  return total.value();
}

double fuzzy_criterion(const ModelParams& params, const SoftAssignments& soft, const EdgeList& edges) {
  return fuzzy_likelihood(params, soft, edges) + assignment_entropy(soft.U) + assignment_entropy(soft.V);
}

double fuzzy_criterion(const ModelParams& params, const SoftAssignments& soft, const MultiplexBipartiteGraph& graph,
                       Weighting weighting) {
  return fuzzy_criterion(params, soft, graph.edge_list(weighting));
}

}  // namespace mlbm
