#pragma once

#include <cstdint>
#include <vector>

#include "cachenet/solver.hpp"

namespace cachenet {

struct dual_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shared-content utility maximization: paths may overlap at nodes, and a
/// node holds one physical copy of a content regardless of how many paths
/// cache it there, so the capacity constraint couples paths through
/// occupancy terms 1 - prod_p (1 - h^(p)).
struct SharedSpec {
  Policy policy = Policy::MCDP;  // MCD adds the per-path monotone chain
  NetworkSpec network;
  UtilitySpec utility;
  double eps = 1e-9;

  void validate() const;
};

/// Hit fields per path, same shape as the network's path list.
using SharedHits = std::vector<HitField>;

/// Coordinates grouped by (node, content); a group is the set of (path,
/// content-slot, position) triples that share one physical copy.
struct SharedLayout {
  struct Coord {
    int path, content, pos;
  };
  std::vector<std::vector<Coord>> groups;
  std::vector<int> group_node;
  std::vector<std::vector<int>> node_groups;  // group ids per node
  std::vector<std::vector<std::vector<int>>> group_of;  // [path][slot][pos]

  static SharedLayout build(const NetworkSpec& net);
};

struct DualState {
  std::vector<double> nu;               // capacity price per node, >= 0
  std::vector<std::vector<double>> mu;  // occupancy price per (path, slot)
};

struct DualGradients {
  std::vector<double> nu;               // -(occupancy_j - B_j)
  std::vector<std::vector<double>> mu;  // -(sum_l h - 1)
};

struct PrimalDualOptions {
  double gamma = 0.05;  // dual step, decayed by 1/sqrt(k)
  double tol = 1e-4;    // max-norm of the dual gradients
  int max_iterations = 200000;
  int inner_max_sweeps = 10000;
  double inner_tol = 1e-12;
  double nu0 = 1.0;
  double mu0 = 1.0;
  int record_every = 100;
};

struct DualTrajectoryPoint {
  int k;
  double objective;
  double grad_norm;
  double max_capacity_violation;
  double max_content_violation;
};

struct PrimalDualResult {
  SharedHits hits;
  DualState dual;
  double objective = 0.0;  // aggregate discounted utility at the final h
  double stationarity_residual = 0.0;
  double feasibility_residual = 0.0;
  double compl_slack_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<DualTrajectoryPoint> trajectory;
};

SharedHits make_shared_hits(const SharedSpec& spec);

/// Per-node physical occupancy sum_i [1 - prod (1 - h)], one value per node.
std::vector<double> node_occupancy(const SharedSpec& spec,
                                   const SharedLayout& layout,
                                   const SharedHits& hits);

double shared_utility(const SharedSpec& spec, const SharedHits& hits);

double lagrangian(const SharedSpec& spec, const SharedLayout& layout,
                  const SharedHits& hits, const DualState& dual);

DualGradients dual_gradients(const SharedSpec& spec, const SharedLayout& layout,
                             const SharedHits& hits, const DualState& dual);

/// Inner Lagrangian maximization at fixed prices: Gauss-Seidel fixed point of
///   h = (w psi^{|p|-l} / (nu_j prod_{q != p}(1-h^q) + mu))^{1/beta}
/// clamped to [0, 1-eps], damped on oscillation; MCD blocks are reprojected
/// onto the monotone chain each sweep. Requires (nu, mu) with nu_j + mu > 0
/// on every coordinate.
SharedHits inner_maximize(const SharedSpec& spec, const SharedLayout& layout,
                          const DualState& dual, const PrimalDualOptions& opts,
                          const SharedHits* warm = nullptr);

/// Max-norm stationarity residual of the inner fixed point over interior
/// coordinates.
double inner_residual(const SharedSpec& spec, const SharedLayout& layout,
                      const SharedHits& hits, const DualState& dual);

PrimalDualResult run_primal_dual(const SharedSpec& spec,
                                 const PrimalDualOptions& opts);

/// Centralized reference: augmented-Lagrangian outer loop on the occupancy
/// constraints with exact per-block projections inside. Independent of the
/// dual decomposition; used for gap diagnostics.
struct CentralizedOptions {
  double rho = 10.0;
  int outer_iterations = 80;
  int inner_iterations = 400;
};

struct CentralizedResult {
  SharedHits hits;
  double objective = 0.0;
  double feasibility_residual = 0.0;
};

CentralizedResult solve_shared_centralized(const SharedSpec& spec,
                                           const CentralizedOptions& opts);

}  // namespace cachenet
