#include "cachenet/online.hpp"

#include <cmath>
#include <random>

namespace cachenet {

double PenaltySpec::capacity_value(double cap, double x) const {
  if (x <= 0.0) return 0.0;
  switch (family) {
    case CapacityFamily::Normalized:
      return strength * (x - cap * std::log1p(x / cap));
    case CapacityFamily::Plain: {
      const double v = x - cap * std::log(cap + x);
      return std::max(0.0, v);
    }
  }
  return 0.0;
}

double PenaltySpec::capacity_derivative(double cap, double x) const {
  if (x <= 0.0) return 0.0;
  switch (family) {
    case CapacityFamily::Normalized:
      return strength * x / (cap + x);
    case CapacityFamily::Plain:
      if (x - cap * std::log(cap + x) <= 0.0) return 0.0;
      return 1.0 - cap / (cap + x);
  }
  return 0.0;
}

double PenaltySpec::content_value(double x) {
  return x <= 0.0 ? 0.0 : x - std::log1p(x);
}

double PenaltySpec::content_derivative(double x) {
  return x <= 0.0 ? 0.0 : x / (1.0 + x);
}

namespace {

const PathSpec& single_path(const ProgramSpec& prog) {
  if (prog.variant != Variant::L_U_MCDP)
    throw online_error("online: only the single-path MCDP program is supported");
  if (prog.network.paths.size() != 1)
    throw online_error("online: program must have exactly one path");
  return prog.network.paths[0];
}

}  // namespace

double z_value(const ProgramSpec& prog, const PenaltySpec& pen,
               const HitField& hits) {
  const PathSpec& path = single_path(prog);
  const int L = static_cast<int>(path.length());
  const double h_min = prog.utility.h_min;
  double z = 0.0;
  std::vector<double> occupancy(L, 0.0);
  for (std::size_t i = 0; i < hits.values.size(); ++i) {
    double sum = 0.0;
    for (int l = 0; l < L; ++l) {
      const double h = hits.values[i][l];
      z += std::pow(prog.utility.psi, L - 1 - l) *
           utility_value(prog.utility, path.weights[i], std::max(h, h_min));
      occupancy[l] += h;
      sum += h;
    }
    z -= PenaltySpec::content_value(sum - 1.0);
  }
  for (int l = 0; l < L; ++l)
    z -= pen.capacity_value(prog.network.capacity[path.nodes[l]],
                            occupancy[l] - prog.network.capacity[path.nodes[l]]);
  return z;
}

std::vector<std::vector<double>> z_gradient(const ProgramSpec& prog,
                                            const PenaltySpec& pen,
                                            const HitField& hits) {
  const PathSpec& path = single_path(prog);
  const int L = static_cast<int>(path.length());
  const double h_min = prog.utility.h_min;
  std::vector<double> occupancy(L, 0.0);
  for (const auto& row : hits.values)
    for (int l = 0; l < L; ++l) occupancy[l] += row[l];
  std::vector<double> cap_slope(L);
  for (int l = 0; l < L; ++l) {
    const double cap = prog.network.capacity[path.nodes[l]];
    cap_slope[l] = pen.capacity_derivative(cap, occupancy[l] - cap);
  }
  std::vector<std::vector<double>> g(hits.values.size(),
                                     std::vector<double>(L, 0.0));
  for (std::size_t i = 0; i < hits.values.size(); ++i) {
    double sum = 0.0;
    for (int l = 0; l < L; ++l) sum += hits.values[i][l];
    const double content_slope = PenaltySpec::content_derivative(sum - 1.0);
    for (int l = 0; l < L; ++l) {
      const double h = std::max(hits.values[i][l], h_min);
      g[i][l] = std::pow(prog.utility.psi, L - 1 - l) *
                    utility_derivative(prog.utility, path.weights[i], h) -
                cap_slope[l] - content_slope;
    }
  }
  return g;
}

PrimalState make_primal_state(const ProgramSpec& prog,
                              const OnlineOptions& opts) {
  const PathSpec& path = single_path(prog);
  const int L = static_cast<int>(path.length());
  const std::size_t n = path.contents.size();
  PrimalState state;
  state.hits.values.assign(n, std::vector<double>(L, 0.0));
  state.occupancy.assign(L, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (int l = 0; l < L; ++l) {
      const double cap = prog.network.capacity[path.nodes[l]];
      const double h = std::max(prog.utility.h_min,
                                std::min(cap / n, 1.0 / (L + 1.0)));
      state.hits.values[i][l] = h;
      state.occupancy[l] += h;
    }
  }
  state.timers.values.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    state.timers.values[i] =
        mcdp_timers_from_hits(path.rates[i], state.hits.values[i]);
  state.zeta.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    state.zeta[i].assign(L, opts.zeta_scale / path.rates[i]);
  state.last_sign.assign(n, std::vector<int>(L, 0));
  return state;
}

void primal_step(const ProgramSpec& prog, const PenaltySpec& pen,
                 PrimalState& state, int content) {
  const PathSpec& path = single_path(prog);
  const int L = static_cast<int>(path.length());
  const double h_min = prog.utility.h_min;
  auto& h = state.hits.values[content];

  double sum = 0.0;
  for (int l = 0; l < L; ++l) sum += h[l];
  const double content_slope = PenaltySpec::content_derivative(sum - 1.0);

  std::vector<double> grad(L);
  bool overshoot = false;
  for (int l = 0; l < L; ++l) {
    const double cap = prog.network.capacity[path.nodes[l]];
    grad[l] =
        std::pow(prog.utility.psi, L - 1 - l) *
            utility_derivative(prog.utility, path.weights[content],
                               std::max(h[l], h_min)) -
        pen.capacity_derivative(cap, state.occupancy[l] - cap) - content_slope;
    const int sign = grad[l] > 0.0 ? 1 : (grad[l] < 0.0 ? -1 : 0);
    if (sign != 0 && state.last_sign[content][l] == -sign &&
        std::abs(state.zeta[content][l] * grad[l]) > 1e-4)
      overshoot = true;
    if (sign != 0) state.last_sign[content][l] = sign;
  }
  // halve the whole row, not single coordinates: once the per-content sum
  // saturates, the projection equalizes zeta * g across positions, so
  // unequal step sizes within a row would shift the fixed point off the
  // equal-gradient point
  if (overshoot)
    for (int l = 0; l < L; ++l) state.zeta[content][l] *= 0.5;

  std::vector<double> updated(L);
  for (int l = 0; l < L; ++l) {
    // clip at 1 before projecting: keeps the projection well conditioned
    // when a near-zero coordinate sees a huge utility slope
    updated[l] = std::min(
        1.0, std::max(0.0, h[l] + state.zeta[content][l] * grad[l]));
  }

  double new_sum = 0.0;
  for (double v : updated) new_sum += v;
  if (new_sum > 1.0 - prog.eps) {
    ++state.saturation_events;
    std::vector<int> idx(L);
    for (int l = 0; l < L; ++l) idx[l] = l;
    project_capped_simplex(updated, idx, 1.0 - prog.eps);
  }
  for (int l = 0; l < L; ++l) updated[l] = std::max(updated[l], h_min);
  new_sum = 0.0;
  for (double v : updated) new_sum += v;
  if (new_sum > 1.0 - prog.eps) {
    const double scale = (1.0 - prog.eps) / new_sum;
    for (double& v : updated) v *= scale;
  }

  for (int l = 0; l < L; ++l) {
    state.occupancy[l] += updated[l] - h[l];
    h[l] = updated[l];
  }
  state.timers.values[content] = mcdp_timers_from_hits(path.rates[content], h);
  ++state.step_count;
}

OnlineResult run_online(const ProgramSpec& prog, const PenaltySpec& pen,
                        const OnlineOptions& opts) {
  const PathSpec& path = single_path(prog);
  const int L = static_cast<int>(path.length());
  if (opts.horizon <= 0) throw online_error("online: horizon must be positive");

  OnlineResult out;
  out.state = make_primal_state(prog, opts);
  PrimalState& state = out.state;

  std::mt19937_64 rng(opts.seed);
  std::discrete_distribution<int> pick(path.rates.begin(), path.rates.end());

  // Z maintained incrementally: the utility/content-penalty part only
  // changes for the touched content, penalties are cheap to recompute.
  const double h_min = prog.utility.h_min;
  auto content_part = [&](int i) {
    double part = 0.0, sum = 0.0;
    for (int l = 0; l < L; ++l) {
      const double h = state.hits.values[i][l];
      part += std::pow(prog.utility.psi, L - 1 - l) *
              utility_value(prog.utility, path.weights[i], std::max(h, h_min));
      sum += h;
    }
    return part - PenaltySpec::content_value(sum - 1.0);
  };
  auto capacity_part = [&] {
    double part = 0.0;
    for (int l = 0; l < L; ++l) {
      const double cap = prog.network.capacity[path.nodes[l]];
      part -= pen.capacity_value(cap, state.occupancy[l] - cap);
    }
    return part;
  };
  double util_sum = 0.0;
  for (std::size_t i = 0; i < path.contents.size(); ++i)
    util_sum += content_part(static_cast<int>(i));

  double z = util_sum + capacity_part();
  int decreasing_run = 0;
  for (long long k = 1; k <= opts.horizon; ++k) {
    const int i = pick(rng);
    util_sum -= content_part(i);
    primal_step(prog, pen, state, i);
    util_sum += content_part(i);
    const double z_new = util_sum + capacity_part();
    decreasing_run = z_new < z ? decreasing_run + 1 : 0;
    z = z_new;
    if (decreasing_run >= 1000)
      throw online_error(
          "online: objective decreased for 1000 consecutive steps; "
          "reduce the step size");
    if (k % 100000 == 0) {  // curb incremental drift
      util_sum = 0.0;
      for (std::size_t c = 0; c < path.contents.size(); ++c)
        util_sum += content_part(static_cast<int>(c));
      z = util_sum + capacity_part();
    }
    if (opts.record_every > 0 &&
        (k % opts.record_every == 0 || k == opts.horizon)) {
      TrajectoryPoint pt;
      pt.k = k;
      pt.content = i;
      pt.h = state.hits.values[i];
      pt.T = state.timers.values[i];
      pt.z = z;
      pt.y = opts.z_star - z;
      out.trajectory.push_back(std::move(pt));
    }
  }
  out.final_z = z;
  return out;
}

}  // namespace cachenet
