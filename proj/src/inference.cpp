#include "mlbm/inference.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include "mlbm/errors.hpp"
#include "mlbm/parallel.hpp"

namespace mlbm {

namespace {

std::vector<Eigen::MatrixXd> floored_logs(const std::vector<Eigen::MatrixXd>& theta) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(theta.size());
  for (const auto& t : theta) out.push_back(t.unaryExpr([](double x) { return floored_log(x); }));
  return out;
}

/// Row-wise softmax with max shift, in place.
void softmax_rows(RowMatrix& scores, const char* what) {
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    auto row = scores.row(i);
    const double peak = row.maxCoeff();
    if (!std::isfinite(peak)) {
      throw NumericalError(std::string(what) + ": non-finite score in row " + std::to_string(i));
    }
    row = (row.array() - peak).exp();
    row /= row.sum();
  }
}

void draw_dirichlet(std::mt19937_64& rng, double* out, Eigen::Index n) {
  std::gamma_distribution<double> gamma(1.0, 1.0);
  double total = 0.0;
  for (Eigen::Index h = 0; h < n; ++h) {
    out[h] = gamma(rng);
    total += out[h];
  }
  if (!(total > 0.0)) {
    for (Eigen::Index h = 0; h < n; ++h) out[h] = 1.0 / static_cast<double>(n);
    return;
  }
  for (Eigen::Index h = 0; h < n; ++h) out[h] /= total;
}

Eigen::VectorXd floor_and_normalize(Eigen::VectorXd p) {
  p = p.cwiseMax(kProportionFloor);
  return p / p.sum();
}

void check_soft_dims(const RowMatrix& soft, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (soft.rows() != rows || soft.cols() != cols) {
    throw DimensionMismatch(std::string(name) + " has the wrong shape");
  }
}

}  // namespace

void FitConfig::validate() const {
  if (H < 1 || K < 1) throw InvalidParameter("H and K must be at least 1");
  if (!(epsilon > 0.0)) throw InvalidParameter("epsilon must be positive");
  if (max_iterations < 1) throw InvalidParameter("max_iterations must be positive");
  if (restarts < 1) throw InvalidParameter("restarts must be at least 1");
}

DegreeFactors init_degree_factors(const EdgeList& edges) {
  DegreeFactors f{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(edges.I)),
                  Eigen::VectorXd::Zero(static_cast<Eigen::Index>(edges.J)), 0.0};
  for (const auto& e : edges.entries) {
    f.mu[e.top] += e.weight;
    f.nu[e.bottom] += e.weight;
    f.total += e.weight;
  }
  if (!(f.total > 0.0)) throw CannotFit("graph has no edges");
  const double scale = 1.0 / std::sqrt(f.total);
  f.mu *= scale;
  f.nu *= scale;
  return f;
}

DegreeFactors init_degree_factors(const MultiplexBipartiteGraph& graph, Weighting weighting) {
  return init_degree_factors(graph.edge_list(weighting));
}

InitialState random_init(const FitConfig& config, const EdgeList& edges, std::uint64_t seed) {
  config.validate();
  auto degrees = init_degree_factors(edges);
  const Eigen::Index I = static_cast<Eigen::Index>(edges.I);
  const Eigen::Index J = static_cast<Eigen::Index>(edges.J);

  std::vector<double> layer_mass(edges.L, 0.0);
  for (const auto& e : edges.entries) layer_mass[e.layer] += e.weight;

  std::mt19937_64 rng(seed);
  InitialState state;
  auto& p = state.params;
  p.pi.resize(config.H);
  p.rho.resize(config.K);
  draw_dirichlet(rng, p.pi.data(), config.H);
  draw_dirichlet(rng, p.rho.data(), config.K);
  p.mu = std::move(degrees.mu);
  p.nu = std::move(degrees.nu);

  p.theta.reserve(edges.L);
  for (std::size_t l = 0; l < edges.L; ++l) {
    const double share = layer_mass[l] / degrees.total;
    std::uniform_real_distribution<double> unif(0.5 * share, 1.5 * share);
    Eigen::MatrixXd t(config.H, config.K);
    for (Eigen::Index h = 0; h < config.H; ++h) {
      for (Eigen::Index k = 0; k < config.K; ++k) t(h, k) = share > 0.0 ? unif(rng) : 0.0;
    }
    p.theta.push_back(std::move(t));
  }

  state.soft.U.resize(I, config.H);
  state.soft.V.resize(J, config.K);
  for (Eigen::Index i = 0; i < I; ++i) draw_dirichlet(rng, state.soft.U.row(i).data(), config.H);
  for (Eigen::Index j = 0; j < J; ++j) draw_dirichlet(rng, state.soft.V.row(j).data(), config.K);
  return state;
}

RowMatrix e_step_top(const ModelParams& params, const RowMatrix& V, const EdgeList& edges) {
  const Eigen::Index H = params.H();
  const Eigen::Index K = params.K();
  check_soft_dims(V, params.J(), K, "V");
  const auto log_theta = floored_logs(params.theta);

  RowMatrix scores(params.I(), H);
  const Eigen::RowVectorXd log_pi = params.pi.array().log().transpose();
  scores.rowwise() = log_pi;

  for (const auto& e : edges.entries) {
    const double* v = V.row(e.bottom).data();
    double* s = scores.row(e.top).data();
    const auto& lt = log_theta[e.layer];
    for (Eigen::Index h = 0; h < H; ++h) {
      double inner = 0.0;
      for (Eigen::Index k = 0; k < K; ++k) inner += lt(h, k) * v[k];
      s[h] += e.weight * inner;
    }
  }

  // Zero part: mu_i * sum_k sum_l theta_hk^(l) (sum_j v_jk nu_j).
  const Eigen::VectorXd bottom_mass = V.transpose() * params.nu;
  Eigen::VectorXd rate = Eigen::VectorXd::Zero(H);
  for (const auto& t : params.theta) rate += t * bottom_mass;
  scores -= params.mu * rate.transpose();

  softmax_rows(scores, "top E-step");
  return scores;
}

RowMatrix e_step_bottom(const ModelParams& params, const RowMatrix& U, const EdgeList& edges) {
  const Eigen::Index H = params.H();
  const Eigen::Index K = params.K();
  check_soft_dims(U, params.I(), H, "U");
  const auto log_theta = floored_logs(params.theta);

  RowMatrix scores(params.J(), K);
  const Eigen::RowVectorXd log_rho = params.rho.array().log().transpose();
  scores.rowwise() = log_rho;

  for (const auto& e : edges.entries) {
    const double* u = U.row(e.top).data();
    double* t = scores.row(e.bottom).data();
    const auto& lt = log_theta[e.layer];
    for (Eigen::Index k = 0; k < K; ++k) {
      double inner = 0.0;
      for (Eigen::Index h = 0; h < H; ++h) inner += lt(h, k) * u[h];
      t[k] += e.weight * inner;
    }
  }

  const Eigen::VectorXd top_mass = U.transpose() * params.mu;
  Eigen::VectorXd rate = Eigen::VectorXd::Zero(K);
  for (const auto& th : params.theta) rate += th.transpose() * top_mass;
  scores -= params.nu * rate.transpose();

  softmax_rows(scores, "bottom E-step");
  return scores;
}

MStepResult m_step(const SoftAssignments& soft, const EdgeList& edges, const Eigen::VectorXd& mu,
                   const Eigen::VectorXd& nu) {
  const Eigen::Index H = soft.U.cols();
  const Eigen::Index K = soft.V.cols();
  check_soft_dims(soft.U, static_cast<Eigen::Index>(edges.I), H, "U");
  check_soft_dims(soft.V, static_cast<Eigen::Index>(edges.J), K, "V");
  if (mu.size() != soft.U.rows() || nu.size() != soft.V.rows()) throw DimensionMismatch("degree factors have the wrong length");

  MStepResult out;
  out.pi = floor_and_normalize(soft.U.colwise().sum().transpose() / static_cast<double>(soft.U.rows()));
  out.rho = floor_and_normalize(soft.V.colwise().sum().transpose() / static_cast<double>(soft.V.rows()));

  std::vector<Eigen::MatrixXd> mass(edges.L, Eigen::MatrixXd::Zero(H, K));
  for (const auto& e : edges.entries) {
    const double* u = soft.U.row(e.top).data();
    const double* v = soft.V.row(e.bottom).data();
    auto& m = mass[e.layer];
    for (Eigen::Index k = 0; k < K; ++k) {
      const double wv = e.weight * v[k];
      if (wv == 0.0) continue;
      for (Eigen::Index h = 0; h < H; ++h) m(h, k) += u[h] * wv;
    }
  }

  const Eigen::VectorXd top_mass = soft.U.transpose() * mu;
  const Eigen::VectorXd bottom_mass = soft.V.transpose() * nu;
  for (Eigen::Index h = 0; h < H; ++h) {
    if (!(top_mass[h] > 0.0)) out.degenerate_top.push_back(static_cast<int>(h));
  }
  for (Eigen::Index k = 0; k < K; ++k) {
    if (!(bottom_mass[k] > 0.0)) out.degenerate_bottom.push_back(static_cast<int>(k));
  }

  out.theta.reserve(edges.L);
  for (auto& m : mass) {
    for (Eigen::Index h = 0; h < H; ++h) {
      for (Eigen::Index k = 0; k < K; ++k) {
        const double denom = top_mass[h] * bottom_mass[k];
        m(h, k) = denom > 0.0 ? m(h, k) / denom : 0.0;
      }
    }
    out.theta.push_back(std::move(m));
  }
  return out;
}

FitResult fit_restart(const EdgeList& edges, const FitConfig& config, int restart_index) {
  config.validate();
  const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(restart_index);
  auto [params, soft] = random_init(config, edges, seed);

  FitResult result;
  result.seed = seed;
  result.restart_index = restart_index;
  result.weighting = config.weighting;

  double criterion = fuzzy_criterion(params, soft, edges);
  if (!std::isfinite(criterion)) throw NumericalError("non-finite criterion", 0);
  result.criterion_trajectory.push_back(criterion);

  std::vector<int> degenerate_top;
  std::vector<int> degenerate_bottom;
  while (result.iterations < config.max_iterations) {
    ++result.iterations;
    try {
      soft.U = e_step_top(params, soft.V, edges);
      soft.V = e_step_bottom(params, soft.U, edges);
    } catch (const NumericalError& err) {
      throw NumericalError(err.what(), result.iterations);
    }
    auto m = m_step(soft, edges, params.mu, params.nu);
    params.pi = std::move(m.pi);
    params.rho = std::move(m.rho);
    params.theta = std::move(m.theta);
    degenerate_top = std::move(m.degenerate_top);
    degenerate_bottom = std::move(m.degenerate_bottom);

    const double updated = fuzzy_criterion(params, soft, edges);
    if (!std::isfinite(updated)) throw NumericalError("non-finite criterion", result.iterations);
    result.criterion_trajectory.push_back(updated);
    const double delta = criterion != 0.0 ? std::abs(1.0 - updated / criterion) : std::abs(updated);
    criterion = updated;
    if (delta <= config.epsilon) {
      result.converged = true;
      break;
    }
  }

  // Round, then re-estimate pi, rho and theta in closed form at the hard
  // partitions; L_C is reported at that point.
  result.top = round_rows(soft.U, Side::Top);
  result.bottom = round_rows(soft.V, Side::Bottom);
  auto hard = m_step({one_hot(result.top), one_hot(result.bottom)}, edges, params.mu, params.nu);
  result.params.pi = std::move(hard.pi);
  result.params.rho = std::move(hard.rho);
  result.params.theta = std::move(hard.theta);
  result.params.mu = params.mu;
  result.params.nu = params.nu;
  result.degenerate_top = std::move(hard.degenerate_top);
  result.degenerate_bottom = std::move(hard.degenerate_bottom);
  result.soft = std::move(soft);
  result.final_L_C = complete_log_likelihood(result.params, result.top, result.bottom, edges);
  if (std::isnan(result.final_L_C)) throw NumericalError("non-finite complete log-likelihood", result.iterations);
  return result;
}

FitResult fit(const EdgeList& edges, const FitConfig& config) { return fit_restart(edges, config, 0); }

FitResult fit(const MultiplexBipartiteGraph& graph, const FitConfig& config) {
  return fit(graph.edge_list(config.weighting), config);
}

FitResult fit_multi_restart(const EdgeList& edges, const FitConfig& config) {
  config.validate();
  if (edges.entries.empty()) throw CannotFit("graph has no edges");
  const auto count = static_cast<std::size_t>(config.restarts);
  std::vector<std::optional<FitResult>> results(count);
  std::vector<std::string> failures(count);
  parallel_for(count, config.workers, [&](std::size_t r) {
    try {
      results[r] = fit_restart(edges, config, static_cast<int>(r));
    } catch (const std::exception& err) {
      failures[r] = err.what();
    }
  });

  std::optional<std::size_t> best;
  for (std::size_t r = 0; r < count; ++r) {
    if (!results[r]) continue;
    if (!best || results[r]->final_L_C > results[*best]->final_L_C) best = r;
  }
  if (!best) {
    std::string message = "all " + std::to_string(count) + " restarts failed";
    for (std::size_t r = 0; r < count && r < 3; ++r) message += "; restart " + std::to_string(r) + ": " + failures[r];
    throw NumericalError(message);
  }
  return std::move(*results[*best]);
}

FitResult fit_multi_restart(const MultiplexBipartiteGraph& graph, const FitConfig& config) {
  return fit_multi_restart(graph.edge_list(config.weighting), config);
}

}  // namespace mlbm
