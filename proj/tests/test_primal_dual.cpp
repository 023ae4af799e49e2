#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cachenet/primal_dual.hpp"

using namespace cachenet;

namespace {

SharedSpec tree_spec(int depth, double capacity, std::size_t n, double alpha,
                     double psi) {
  SharedSpec spec;
  spec.network =
      build_binary_tree(depth, capacity, {ContentCatalog::zipf(n, alpha, 1.0)});
  spec.utility.psi = psi;
  return spec;
}

SharedHits random_hits(const SharedSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uh(0.05, 0.3);
  SharedHits hits(spec.network.paths.size());
  for (std::size_t p = 0; p < spec.network.paths.size(); ++p) {
    const PathSpec& path = spec.network.paths[p];
    hits[p].values.assign(path.contents.size(),
                          std::vector<double>(path.length()));
    for (auto& row : hits[p].values)
      for (double& h : row) h = uh(rng);
  }
  return hits;
}

}  // namespace

TEST_CASE("shared layout groups coordinates by physical copy") {
  const SharedSpec spec = tree_spec(2, 1.0, 3, 1.0, 0.8);
  const SharedLayout layout = SharedLayout::build(spec.network);
  // root carries 3 shared groups (one per content), each leaf 3 private ones
  CHECK(layout.groups.size() == 9);
  CHECK(layout.node_groups[0].size() == 3);
  for (int g : layout.node_groups[0]) CHECK(layout.groups[g].size() == 2);
  for (int node : {1, 2})
    for (int g : layout.node_groups[node]) CHECK(layout.groups[g].size() == 1);
  for (std::size_t p = 0; p < spec.network.paths.size(); ++p)
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t l = 0; l < 2; ++l) {
        const int g = layout.group_of[p][c][l];
        REQUIRE(g >= 0);
        CHECK(layout.group_node[g] == spec.network.paths[p].nodes[l]);
      }
}

TEST_CASE("node occupancy uses the product form") {
  const SharedSpec spec = tree_spec(2, 1.0, 1, 0.0, 1.0);
  const SharedLayout layout = SharedLayout::build(spec.network);
  SharedHits hits(2);
  for (int p = 0; p < 2; ++p) hits[p].values = {{0.3, 0.4}};
  const auto occ = node_occupancy(spec, layout, hits);
  // root: copy present if either path caches it: 1 - 0.7^2
  CHECK(occ[0] == doctest::Approx(1.0 - 0.49).epsilon(1e-12));
  CHECK(occ[1] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(occ[2] == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("dual gradients match finite differences of the lagrangian") {
  const SharedSpec spec = tree_spec(2, 1.0, 2, 1.0, 0.8);
  const SharedLayout layout = SharedLayout::build(spec.network);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const SharedHits hits = random_hits(spec, rng);
    DualState dual;
    dual.nu = {0.5, 0.8, 0.3};
    dual.mu = {{0.4, 0.6}, {0.7, 0.2}};
    const DualGradients g = dual_gradients(spec, layout, hits, dual);
    const double d = 1e-6;
    for (std::size_t j = 0; j < 3; ++j) {
      DualState dp = dual, dm = dual;
      dp.nu[j] += d;
      dm.nu[j] -= d;
      const double fd = (lagrangian(spec, layout, hits, dp) -
                         lagrangian(spec, layout, hits, dm)) /
                        (2 * d);
      CHECK(g.nu[j] == doctest::Approx(fd).epsilon(1e-6));
    }
    for (std::size_t p = 0; p < 2; ++p)
      for (std::size_t c = 0; c < 2; ++c) {
        DualState dp = dual, dm = dual;
        dp.mu[p][c] += d;
        dm.mu[p][c] -= d;
        const double fd = (lagrangian(spec, layout, hits, dp) -
                           lagrangian(spec, layout, hits, dm)) /
                          (2 * d);
        CHECK(g.mu[p][c] == doctest::Approx(fd).epsilon(1e-6));
      }
  }
}

TEST_CASE("inner maximization hits the closed form without overlap") {
  // single path: occupancy is linear, so the fixed point is
  // h = w psi^{L-1-l} / (nu + mu), clamped
  SharedSpec spec;
  spec.network = build_line(2, 1.0, ContentCatalog::zipf(2, 1.0, 1.0));
  spec.utility.psi = 0.8;
  const SharedLayout layout = SharedLayout::build(spec.network);
  DualState dual;
  dual.nu = {3.0, 2.5};
  dual.mu = {{1.0, 2.0}};
  PrimalDualOptions opts;
  const SharedHits hits = inner_maximize(spec, layout, dual, opts);
  for (std::size_t c = 0; c < 2; ++c)
    for (int l = 0; l < 2; ++l) {
      const double w = spec.network.paths[0].weights[c];
      const double expect = std::min(
          1.0 - spec.eps,
          w * std::pow(0.8, 1 - l) / (dual.nu[l] + dual.mu[0][c]));
      CHECK(hits[0].values[c][l] == doctest::Approx(expect).epsilon(1e-8));
    }
  CHECK(inner_residual(spec, layout, hits, dual) < 1e-8);
}

TEST_CASE("inner maximization is stationary on overlapping paths") {
  const SharedSpec spec = tree_spec(3, 1.0, 3, 1.0, 0.7);
  const SharedLayout layout = SharedLayout::build(spec.network);
  DualState dual;
  dual.nu.assign(spec.network.num_nodes, 1.2);
  dual.mu.assign(4, std::vector<double>(3, 0.8));
  PrimalDualOptions opts;
  const SharedHits hits = inner_maximize(spec, layout, dual, opts);
  CHECK(inner_residual(spec, layout, hits, dual) < 1e-8);
}

TEST_CASE("degenerate zero prices clamp instead of dividing by zero") {
  SharedSpec spec;
  spec.network = build_line(1, 1.0, ContentCatalog::zipf(1, 0.0, 1.0));
  const SharedLayout layout = SharedLayout::build(spec.network);
  DualState dual;
  dual.nu = {0.0};
  dual.mu = {{0.0}};
  PrimalDualOptions opts;
  const SharedHits hits = inner_maximize(spec, layout, dual, opts);
  CHECK(hits[0].values[0][0] == doctest::Approx(1.0 - spec.eps));
}

TEST_CASE("primal-dual matches the convex solver on a single path") {
  // no sharing: the decomposed problem is exactly the per-path program
  SharedSpec spec;
  spec.network = build_line(2, 0.6, ContentCatalog::zipf(3, 1.0, 1.0));
  spec.utility.psi = 0.8;
  PrimalDualOptions opts;
  const PrimalDualResult pd = run_primal_dual(spec, opts);
  CHECK(pd.converged);
  CHECK(pd.feasibility_residual < 1e-3);
  CHECK(pd.compl_slack_residual < 1e-3);

  ProgramSpec prog;
  prog.variant = Variant::L_U_MCDP;
  prog.network = spec.network;
  prog.utility = spec.utility;
  const SolveResult ref = solve(prog);
  REQUIRE(ref.converged);
  CHECK(pd.objective == doctest::Approx(ref.objective).epsilon(1e-3));
  for (std::size_t c = 0; c < 3; ++c)
    for (int l = 0; l < 2; ++l)
      CHECK(std::abs(pd.hits[0].values[c][l] - ref.hits[0].values[c][l]) <
            5e-3);
}

TEST_CASE("primal-dual agrees with the centralized reference on a tree") {
  const SharedSpec spec = tree_spec(2, 0.8, 3, 1.0, 0.7);
  PrimalDualOptions opts;
  const PrimalDualResult pd = run_primal_dual(spec, opts);
  CHECK(pd.converged);
  CHECK(pd.feasibility_residual < 1e-3);
  CHECK(pd.compl_slack_residual < 1e-3);

  const CentralizedResult central = solve_shared_centralized(spec, {});
  CHECK(central.feasibility_residual < 1e-4);
  CHECK(std::abs(pd.objective - central.objective) <
        0.01 * std::abs(central.objective));

  // symmetric leaves get symmetric allocations
  for (std::size_t c = 0; c < 3; ++c)
    for (int l = 0; l < 2; ++l)
      CHECK(pd.hits[0].values[c][l] ==
            doctest::Approx(pd.hits[1].values[c][l]).epsilon(1e-2));
}

TEST_CASE("mcd policy keeps shared blocks on the chain") {
  SharedSpec spec = tree_spec(3, 0.9, 2, 1.0, 0.8);
  spec.policy = Policy::MCD;
  PrimalDualOptions opts;
  const PrimalDualResult pd = run_primal_dual(spec, opts);
  for (const auto& field : pd.hits)
    for (const auto& row : field.values) {
      double sum = 0.0;
      for (double h : row) sum += h;
      CHECK(sum <= 1.0 + 1e-9);
      for (std::size_t l = 0; l + 2 < row.size(); ++l)
        CHECK(row[l + 1] <= row[l] + 1e-3);  // approximate block projection
      CHECK(row[0] <= 1.0 - sum + 1e-6);
    }
}

TEST_CASE("dual trajectory reports shrinking gradient norms") {
  const SharedSpec spec = tree_spec(2, 0.8, 2, 1.0, 0.9);
  PrimalDualOptions opts;
  opts.record_every = 10;
  const PrimalDualResult pd = run_primal_dual(spec, opts);
  CHECK(pd.converged);
  REQUIRE(pd.trajectory.size() >= 2);
  CHECK(pd.trajectory.back().grad_norm < pd.trajectory.front().grad_norm);
  CHECK(pd.trajectory.back().max_capacity_violation < 1e-3);
}
