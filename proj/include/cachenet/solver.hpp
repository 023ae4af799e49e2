#pragma once

#include <functional>
#include <vector>

#include "cachenet/cost.hpp"
#include "cachenet/model.hpp"
#include "cachenet/ttl.hpp"

namespace cachenet {

enum class Variant { L_U_MCDP, L_U_MCD, G_N_U_MCDP, G_N_U_MCD, MCD_COST };

Policy variant_policy(Variant v);

struct ProgramSpec {
  Variant variant = Variant::L_U_MCDP;
  NetworkSpec network;
  UtilitySpec utility;
  CostSpec cost;                 // MCD_COST only
  double eps = 1e-9;             // interior slack on per-content sums
  double grad_tol = 1e-8;
  int max_iterations = 100000;

  void validate() const;
};

struct SolveResult {
  std::vector<HitField> hits;    // one field per path
  double objective = 0.0;
  double stationarity_residual = 0.0;
  double feasibility_residual = 0.0;
  double compl_slack_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct solver_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Centralized solve by projected gradient ascent with backtracking line
/// search; the feasible set is handled by cyclic Dykstra projection.
SolveResult solve(const ProgramSpec& prog);

/// Convex cost minimization over the L-U-MCD feasible set.
SolveResult solve_mcd_cost(const ProgramSpec& prog);

/// Exhaustive feasible-grid maximization for instances with <= 6 variables.
/// Full grid at step delta in up to two dimensions, multi-resolution zoom
/// down to delta otherwise. Test-only reference.
SolveResult brute_force_oracle(const ProgramSpec& prog, double delta);

/// Flattened variable layout shared by the solvers and their tests.
struct VariableLayout {
  struct Block {
    int path;
    int content;      // index within the path's content list
    int offset;       // first flat index
    int length;       // path length
  };
  std::vector<Block> blocks;
  int total = 0;
  // capacity groups: per node, the flat indices occupying it
  std::vector<std::vector<int>> node_vars;

  static VariableLayout build(const NetworkSpec& net);
};

/// Objective and gradient of the selected program at x (flat layout);
/// utilities are evaluated with the h_min floor.
double program_objective(const ProgramSpec& prog, const VariableLayout& layout,
                         const std::vector<double>& x);
std::vector<double> program_gradient(const ProgramSpec& prog,
                                     const VariableLayout& layout,
                                     const std::vector<double>& x);
bool program_feasible(const ProgramSpec& prog, const VariableLayout& layout,
                      const std::vector<double>& x, double tol);

/// Euclidean projection onto {y >= 0, sum(y) <= cap} over `idx`.
void project_capped_simplex(std::vector<double>& x, const std::vector<int>& idx,
                            double cap);

/// Pool-adjacent-violators projection onto the non-increasing cone.
void project_nonincreasing(double* y, std::size_t n);

}  // namespace cachenet
