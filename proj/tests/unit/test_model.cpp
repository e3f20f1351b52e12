#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "mlbm/errors.hpp"
#include "mlbm/model.hpp"
#include "mlbm/serialize.hpp"
#include "oracles.hpp"

using namespace mlbm;

namespace {

ModelParams unit_params(std::size_t I, std::size_t J, std::size_t L, double theta) {
  ModelParams p;
  p.pi = Eigen::VectorXd::Ones(1);
  p.rho = Eigen::VectorXd::Ones(1);
  p.mu = Eigen::VectorXd::Ones(I);
  p.nu = Eigen::VectorXd::Ones(J);
  p.theta.assign(L, Eigen::MatrixXd::Constant(1, 1, theta));
  return p;
}

HardPartition zeros(Side side, std::size_t n, int clusters = 1) { return {side, clusters, std::vector<int>(n, 0)}; }

MultiplexBipartiteGraph single_edge(std::uint64_t count = 1) {
  MultiplexBipartiteGraph g;
  g.add_events("t", "b", "l", count);
  return g;
}

MultiplexBipartiteGraph empty_cells(std::size_t I, std::size_t J, std::size_t L) {
  MultiplexBipartiteGraph g;
  for (std::size_t i = 0; i < I; ++i) g.add_top("t" + std::to_string(i));
  for (std::size_t j = 0; j < J; ++j) g.add_bottom("b" + std::to_string(j));
  for (std::size_t l = 0; l < L; ++l) g.add_layer("l" + std::to_string(l));
  return g;
}

/// Positive degree factors everywhere a node has an edge, as after degree init.
void positive_mu_nu(ModelParams& p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.3, 1.7);
  for (auto& x : p.mu) x = u(rng);
  for (auto& x : p.nu) x = u(rng);
}

}  // namespace

TEST_CASE("sample: all-zero rates give no edges") {
  auto p = unit_params(30, 20, 3, 0.0);
  const auto s = sample(p, 1);
  CHECK(s.graph.stats().M == 0);
  CHECK(s.graph.stats().I == 30);
  CHECK(s.graph.stats().J == 20);
}

TEST_CASE("sample: degenerate proportions") {
  ModelParams p;
  p.pi = Eigen::Vector3d(1, 0, 0);
  p.rho = Eigen::Vector2d(0.5, 0.5);
  p.mu = Eigen::VectorXd::Ones(50);
  p.nu = Eigen::VectorXd::Ones(10);
  p.theta.assign(1, Eigen::MatrixXd::Constant(3, 2, 0.1));
  const auto s = sample(p, 9);
  for (int a : s.top.assignment) CHECK(a == 0);
  CHECK(s.top.clusters == 3);
}

TEST_CASE("sample: invalid parameters") {
  auto p = unit_params(3, 3, 1, 1.0);
  p.pi.resize(0);
  CHECK_THROWS_AS(sample(p, 0), InvalidParameter);
  p = unit_params(3, 3, 1, 1.0);
  p.rho = Eigen::Vector2d(0.7, 0.7);
  CHECK_THROWS_AS(sample(p, 0), InvalidParameter);
  p = unit_params(3, 3, 1, 1.0);
  p.mu[1] = -1;
  CHECK_THROWS_AS(sample(p, 0), InvalidParameter);
  p = unit_params(3, 3, 1, 1.0);
  p.theta[0](0, 0) = std::nan("");
  CHECK_THROWS_AS(sample(p, 0), InvalidParameter);
  p = unit_params(3, 3, 1, 1.0);
  p.theta[0] = Eigen::MatrixXd::Ones(2, 1);
  CHECK_THROWS_AS(sample(p, 0), DimensionMismatch);
}

TEST_CASE("sample: Poisson mean over a million pairs") {
  const double lambda = 0.8;
  const auto s = sample(unit_params(1000, 1000, 1, lambda), 2024);
  const double mean = static_cast<double>(s.graph.stats().N) / 1e6;
  CHECK(std::abs(mean - lambda) <= 3 * std::sqrt(lambda / 1e6));
}

TEST_CASE("sample: determinism and seed sensitivity") {
  std::mt19937_64 rng(3);
  const auto p = oracle::random_params(rng, 40, 30, 2, 2, 3);
  const auto a = sample(p, 17), b = sample(p, 17), c = sample(p, 18);
  CHECK(a.top.assignment == b.top.assignment);
  CHECK(a.bottom.assignment == b.bottom.assignment);
  REQUIRE(a.graph.edges().size() == b.graph.edges().size());
  for (std::size_t e = 0; e < a.graph.edges().size(); ++e) {
    CHECK(a.graph.edges()[e].count == b.graph.edges()[e].count);
    CHECK(a.graph.edges()[e].top == b.graph.edges()[e].top);
  }
  CHECK((a.top.assignment != c.top.assignment || a.graph.stats().N != c.graph.stats().N));
}

TEST_CASE("sample_edges: per-pair empirical means follow the rates") {
  ModelParams p;
  p.pi = Eigen::Vector2d(0.5, 0.5);
  p.rho = Eigen::Vector2d(0.5, 0.5);
  p.mu = Eigen::Vector2d(0.5, 2.0);
  p.nu = Eigen::Vector3d(1.0, 0.25, 1.5);
  Eigen::MatrixXd t(2, 2);
  t << 1.2, 0.1, 0.3, 2.0;
  p.theta = {t};
  const HardPartition top{Side::Top, 2, {0, 1}}, bottom{Side::Bottom, 2, {1, 0, 1}};
  const int draws = 4000;
  std::vector<double> sums(6, 0.0);
  for (int d = 0; d < draws; ++d) {
    const auto g = sample_edges(p, top, bottom, 1000 + d);
    for (const auto& e : g.edges()) sums[e.top * 3 + e.bottom] += static_cast<double>(e.count);
  }
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) {
      const double rate = p.mu[i] * p.nu[j] * t(top.assignment[i], bottom.assignment[j]);
      CHECK(std::abs(sums[i * 3 + j] / draws - rate) <= 3 * std::sqrt(rate / draws));
    }
}

TEST_CASE("L_C closed forms on a single cell") {
  const auto p = unit_params(1, 1, 1, 1.0);
  CHECK(complete_log_likelihood(p, zeros(Side::Top, 1), zeros(Side::Bottom, 1), single_edge()) == doctest::Approx(-1.0).epsilon(1e-15));
  const auto none = empty_cells(1, 1, 1);
  CHECK(complete_log_likelihood(p, zeros(Side::Top, 1), zeros(Side::Bottom, 1), none) == -1.0);
  CHECK(complete_log_likelihood(unit_params(1, 1, 1, 0.0), zeros(Side::Top, 1), zeros(Side::Bottom, 1), none) == 0.0);
}

TEST_CASE("L_C: counts weighting uses multiplicities") {
  auto p = unit_params(1, 1, 1, 2.0);
  const auto g = single_edge(3);
  const auto t = zeros(Side::Top, 1), b = zeros(Side::Bottom, 1);
  CHECK(complete_log_likelihood(p, t, b, g, Weighting::Counts) == doctest::Approx(3 * std::log(2.0) - 2.0));
  CHECK(complete_log_likelihood(p, t, b, g, Weighting::Binary) == doctest::Approx(std::log(2.0) - 2.0));
}

TEST_CASE("L_C: floored theta and vanishing degree factors") {
  auto p = unit_params(1, 1, 1, 0.0);
  const auto t = zeros(Side::Top, 1), b = zeros(Side::Bottom, 1);
  CHECK(complete_log_likelihood(p, t, b, single_edge()) == doctest::Approx(std::log(1e-10)));
  p.theta[0](0, 0) = 1.0;
  p.mu[0] = 0.0;
  CHECK(complete_log_likelihood(p, t, b, single_edge()) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("L_C: dimension mismatch") {
  const auto p = unit_params(2, 2, 1, 1.0);
  auto g = empty_cells(2, 2, 1);
  CHECK_THROWS_AS(complete_log_likelihood(p, zeros(Side::Top, 3), zeros(Side::Bottom, 2), g), DimensionMismatch);
  CHECK_THROWS_AS(complete_log_likelihood(p, zeros(Side::Top, 2, 2), zeros(Side::Bottom, 2), g), DimensionMismatch);
  CHECK_THROWS_AS(complete_log_likelihood(p, zeros(Side::Top, 2), zeros(Side::Bottom, 2), empty_cells(2, 2, 2)),
                  DimensionMismatch);
}

TEST_CASE("L_C and G match dense loops on random instances") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t I = 2 + trial % 4, J = 2 + trial % 3, L = 1 + trial % 3;
    const int H = 1 + trial % 3, K = 1 + (trial / 3) % 3;
    const bool counts = trial % 2;
    const auto g = oracle::random_graph(rng, I, J, L, 0.4, counts ? 5 : 1);
    const auto d = oracle::dense(g, counts);
    const auto p = oracle::random_params(rng, I, J, L, H, K);
    const auto U = oracle::random_partition(rng, Side::Top, I, H);
    const auto V = oracle::random_partition(rng, Side::Bottom, J, K);
    const auto w = counts ? Weighting::Counts : Weighting::Binary;
    CHECK(oracle::rel_diff(complete_log_likelihood(p, U, V, g, w), oracle::complete_ll(d, p, U.assignment, V.assignment)) <
          1e-10);
    SoftAssignments soft{oracle::random_soft(rng, I, H), oracle::random_soft(rng, J, K)};
    CHECK(oracle::rel_diff(fuzzy_criterion(p, soft, g, w), oracle::fuzzy(d, p, soft.U, soft.V)) < 1e-10);
  }
}

TEST_CASE("G with one-hot rows is L_C minus the degree term") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = oracle::random_graph(rng, 6, 5, 2, 0.5);
    auto p = oracle::random_params(rng, 6, 5, 2, 2, 3);
    positive_mu_nu(p, rng);
    const auto U = oracle::random_partition(rng, Side::Top, 6, 2);
    const auto V = oracle::random_partition(rng, Side::Bottom, 5, 3);
    double degree_term = 0;
    for (const auto& e : g.edges()) degree_term += std::log(p.mu[e.top] * p.nu[e.bottom]);
    const SoftAssignments soft{one_hot(U), one_hot(V)};
    CHECK(fuzzy_criterion(p, soft, g) == doctest::Approx(complete_log_likelihood(p, U, V, g) - degree_term).epsilon(1e-12));
  }
}

TEST_CASE("entropy of uniform rows") {
  const RowMatrix U = RowMatrix::Constant(9, 2, 0.5);
  CHECK(assignment_entropy(U) == doctest::Approx(9 * std::log(2.0)).epsilon(1e-14));
  CHECK(assignment_entropy(RowMatrix::Identity(3, 3)) == 0.0);
}

TEST_CASE("G rejects mismatched soft assignments") {
  std::mt19937_64 rng(1);
  const auto g = oracle::random_graph(rng, 3, 3, 1, 0.5);
  const auto p = oracle::random_params(rng, 3, 3, 1, 2, 2);
  SoftAssignments soft{oracle::random_soft(rng, 3, 3), oracle::random_soft(rng, 3, 2)};
  CHECK_THROWS_AS(fuzzy_criterion(p, soft, g), DimensionMismatch);
  soft = {oracle::random_soft(rng, 4, 2), oracle::random_soft(rng, 3, 2)};
  CHECK_THROWS_AS(fuzzy_criterion(p, soft, g), DimensionMismatch);
}

TEST_CASE("label permutation invariance") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t I = 8, J = 7, L = 3;
    const int H = 3, K = 4;
    const auto g = oracle::random_graph(rng, I, J, L, 0.3);
    const auto p = oracle::random_params(rng, I, J, L, H, K);
    const auto U = oracle::random_partition(rng, Side::Top, I, H);
    const auto V = oracle::random_partition(rng, Side::Bottom, J, K);
    const SoftAssignments soft{oracle::random_soft(rng, I, H), oracle::random_soft(rng, J, K)};

    std::vector<int> ph(H), pk(K);  // new label of old cluster
    std::iota(ph.begin(), ph.end(), 0);
    std::iota(pk.begin(), pk.end(), 0);
    std::shuffle(ph.begin(), ph.end(), rng);
    std::shuffle(pk.begin(), pk.end(), rng);

    ModelParams q = p;
    for (int h = 0; h < H; ++h) q.pi[ph[h]] = p.pi[h];
    for (int k = 0; k < K; ++k) q.rho[pk[k]] = p.rho[k];
    for (std::size_t l = 0; l < L; ++l)
      for (int h = 0; h < H; ++h)
        for (int k = 0; k < K; ++k) q.theta[l](ph[h], pk[k]) = p.theta[l](h, k);
    HardPartition U2 = U, V2 = V;
    for (auto& a : U2.assignment) a = ph[a];
    for (auto& a : V2.assignment) a = pk[a];
    SoftAssignments soft2 = soft;
    for (std::size_t i = 0; i < I; ++i)
      for (int h = 0; h < H; ++h) soft2.U(i, ph[h]) = soft.U(i, h);
    for (std::size_t j = 0; j < J; ++j)
      for (int k = 0; k < K; ++k) soft2.V(j, pk[k]) = soft.V(j, k);

    CHECK(oracle::rel_diff(complete_log_likelihood(p, U, V, g), complete_log_likelihood(q, U2, V2, g)) < 1e-10);
    CHECK(oracle::rel_diff(fuzzy_criterion(p, soft, g), fuzzy_criterion(q, soft2, g)) < 1e-10);
  }
}

TEST_CASE("L_C is additive across layers") {
  std::mt19937_64 rng(123);
  const std::size_t I = 9, J = 6, L = 4;
  const auto g = oracle::random_graph(rng, I, J, L, 0.3, 3);
  const auto p = oracle::random_params(rng, I, J, L, 2, 2);
  const auto U = oracle::random_partition(rng, Side::Top, I, 2);
  const auto V = oracle::random_partition(rng, Side::Bottom, J, 2);
  const double joint = complete_log_likelihood(p, U, V, g, Weighting::Counts);

  double proportions = 0;
  for (int a : U.assignment) proportions += std::log(p.pi[a]);
  for (int a : V.assignment) proportions += std::log(p.rho[a]);
  double layered = proportions;
  for (std::size_t l = 0; l < L; ++l) {
    MultiplexBipartiteGraph one = empty_cells(I, J, 1);
    for (const auto& e : g.edges())
      if (e.layer == l) one.add_edge(e.top, e.bottom, 0, e.count);
    ModelParams pl = p;
    pl.theta = {p.theta[l]};
    layered += complete_log_likelihood(pl, U, V, one, Weighting::Counts) - proportions;
  }
  CHECK(oracle::rel_diff(joint, layered) < 1e-10);
}

TEST_CASE("one_hot and round_rows") {
  const HardPartition p{Side::Top, 3, {2, 0, 2, 1}};
  const auto m = one_hot(p);
  CHECK(m.rows() == 4);
  CHECK(m.cols() == 3);
  CHECK(round_rows(m, Side::Top).assignment == p.assignment);
  RowMatrix tie(2, 3);
  tie << 0.4, 0.4, 0.2, 0.2, 0.4, 0.4;
  CHECK(round_rows(tie, Side::Bottom).assignment == std::vector<int>{0, 1});
  CHECK(p.sizes() == std::vector<std::size_t>{1, 1, 2});
  CHECK_THROWS(HardPartition({Side::Top, 2, {0, 2}}).validate());
}

TEST_CASE("params document round trip") {
  std::mt19937_64 rng(4);
  const auto p = oracle::random_params(rng, 5, 4, 2, 2, 3);
  ParamLabels labels{{"x", "y"}, {"a", "b", "c", "d", "e"}, {"p", "q", "r", "s"}};
  const auto doc = params_to_json(p, labels);
  const auto text = dump_json(doc);
  ParamLabels back_labels;
  const auto back = params_from_json(Json::parse(text), &back_labels);
  CHECK(back.pi == p.pi);
  CHECK(back.rho == p.rho);
  CHECK(back.mu == p.mu);
  CHECK(back.nu == p.nu);
  REQUIRE(back.theta.size() == 2);
  CHECK(back.theta[1] == p.theta[1]);
  CHECK(back_labels.top == labels.top);
  CHECK(back_labels.layers == labels.layers);
  CHECK(dump_json(params_to_json(back, back_labels)) == text);
  CHECK(doc["theta"][1][0].size() == 3);
}
