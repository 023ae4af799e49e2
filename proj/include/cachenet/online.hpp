#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "cachenet/solver.hpp"

namespace cachenet {

struct online_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Convex non-decreasing penalties attached to the capacity and per-content
/// occupancy constraints. The capacity family is selectable:
///   Normalized: sigma * max{0, x - B log((B+x)/B)}   (active for x > 0)
///   Plain:      max{0, x - B log(B+x)}               (activates only at
///               large excess for realistic B; kept as an option)
/// The per-content penalty is fixed: max{0, x - log(1+x)}.
/// Subgradient 0 is used on the inactive side of each kink.
struct PenaltySpec {
  enum class CapacityFamily { Normalized, Plain };
  CapacityFamily family = CapacityFamily::Normalized;
  double strength = 20.0;  // sigma, Normalized only

  double capacity_value(double cap, double x) const;
  double capacity_derivative(double cap, double x) const;
  static double content_value(double x);
  static double content_derivative(double x);
};

struct OnlineOptions {
  double zeta_scale = 0.01;  // zeta_il = zeta_scale / lambda_i
  long long horizon = 1000000;
  std::uint64_t seed = 0;
  long long record_every = 1000;
  // Reference objective for the Lyapunov column; NaN leaves it unset.
  double z_star = std::numeric_limits<double>::quiet_NaN();
};

struct PrimalState {
  HitField hits;
  TimerField timers;
  std::vector<double> occupancy;           // B_curr per position
  std::vector<std::vector<double>> zeta;   // per content, per position
  long long step_count = 0;
  long long saturation_events = 0;
  std::vector<std::vector<int>> last_sign; // oscillation detector
};

struct TrajectoryPoint {
  long long k;
  int content;
  std::vector<double> h;  // content's hit vector after the step
  std::vector<double> T;
  double z;
  double y;  // z_star - z (NaN when z_star unset)
};

struct OnlineResult {
  PrimalState state;
  std::vector<TrajectoryPoint> trajectory;
  double final_z = 0.0;
};

/// Penalized objective Z(h) and its gradient for a single-path MCDP program;
/// occupancies are taken from the field itself.
double z_value(const ProgramSpec& prog, const PenaltySpec& pen,
               const HitField& hits);
std::vector<std::vector<double>> z_gradient(const ProgramSpec& prog,
                                            const PenaltySpec& pen,
                                            const HitField& hits);

/// Interior starting state: h uniform at min(B/n, 1/(|p|+1)), timers from
/// the inversion, step sizes at zeta_scale / lambda_i.
PrimalState make_primal_state(const ProgramSpec& prog,
                              const OnlineOptions& opts);

/// One request arrival for `content`: gradient update of that content's
/// coordinates, clamp at 0, projection back under the per-content sum cap,
/// timer refresh. Oscillating coordinates have their step size halved.
void primal_step(const ProgramSpec& prog, const PenaltySpec& pen,
                 PrimalState& state, int content);

/// Drive primal_step with Poisson (IRM) request draws for `horizon` steps.
/// Aborts with a step-size diagnostic if Z decreases monotonically for 1000
/// consecutive steps.
OnlineResult run_online(const ProgramSpec& prog, const PenaltySpec& pen,
                        const OnlineOptions& opts);

}  // namespace cachenet
