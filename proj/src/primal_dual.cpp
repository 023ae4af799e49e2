#include "cachenet/primal_dual.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <map>
#include <numeric>

namespace cachenet {

void SharedSpec::validate() const {
  network.validate();
  utility.validate();
  if (!(eps > 0.0 && eps < 1.0)) throw model_error("shared: bad eps");
}

SharedLayout SharedLayout::build(const NetworkSpec& net) {
  SharedLayout layout;
  layout.node_groups.resize(net.num_nodes);
  std::map<std::pair<int, int>, int> index;  // (node, content id) -> group
  for (std::size_t p = 0; p < net.paths.size(); ++p) {
    const PathSpec& path = net.paths[p];
    for (std::size_t c = 0; c < path.contents.size(); ++c) {
      for (std::size_t l = 0; l < path.nodes.size(); ++l) {
        const std::pair<int, int> key{path.nodes[l], path.contents[c]};
        auto it = index.find(key);
        if (it == index.end()) {
          it = index.emplace(key, static_cast<int>(layout.groups.size())).first;
          layout.groups.emplace_back();
          layout.group_node.push_back(path.nodes[l]);
          layout.node_groups[path.nodes[l]].push_back(it->second);
        }
        layout.groups[it->second].push_back({static_cast<int>(p),
                                             static_cast<int>(c),
                                             static_cast<int>(l)});
      }
    }
  }
  layout.group_of.resize(net.paths.size());
  for (std::size_t p = 0; p < net.paths.size(); ++p)
    layout.group_of[p].assign(net.paths[p].contents.size(),
                              std::vector<int>(net.paths[p].length(), -1));
  for (std::size_t g = 0; g < layout.groups.size(); ++g)
    for (const auto& coord : layout.groups[g])
      layout.group_of[coord.path][coord.content][coord.pos] =
          static_cast<int>(g);
  return layout;
}

SharedHits make_shared_hits(const SharedSpec& spec) {
  const SharedLayout layout = SharedLayout::build(spec.network);
  SharedHits hits(spec.network.paths.size());
  for (std::size_t p = 0; p < spec.network.paths.size(); ++p) {
    const PathSpec& path = spec.network.paths[p];
    hits[p].values.assign(path.contents.size(),
                          std::vector<double>(path.length(), 0.0));
    for (std::size_t c = 0; c < path.contents.size(); ++c)
      for (std::size_t l = 0; l < path.length(); ++l) {
        const int node = path.nodes[l];
        const double per_content =
            spec.network.capacity[node] /
            std::max<std::size_t>(layout.node_groups[node].size(), 1);
        hits[p].values[c][l] = std::max(
            spec.utility.h_min,
            std::min({per_content, 1.0 / (path.length() + 1.0), 0.9}));
      }
  }
  return hits;
}

std::vector<double> node_occupancy(const SharedSpec& spec,
                                   const SharedLayout& layout,
                                   const SharedHits& hits) {
  std::vector<double> occ(spec.network.num_nodes, 0.0);
  for (std::size_t g = 0; g < layout.groups.size(); ++g) {
    double survive = 1.0;
    for (const auto& coord : layout.groups[g])
      survive *= 1.0 - hits[coord.path].values[coord.content][coord.pos];
    occ[layout.group_node[g]] += 1.0 - survive;
  }
  return occ;
}

double shared_utility(const SharedSpec& spec, const SharedHits& hits) {
  double total = 0.0;
  for (std::size_t p = 0; p < spec.network.paths.size(); ++p) {
    const PathSpec& path = spec.network.paths[p];
    const int L = static_cast<int>(path.length());
    for (std::size_t c = 0; c < path.contents.size(); ++c)
      for (int l = 0; l < L; ++l)
        total += std::pow(spec.utility.psi, L - 1 - l) *
                 utility_value(spec.utility, path.weights[c],
                               std::max(hits[p].values[c][l],
                                        spec.utility.h_min));
  }
  return total;
}

double lagrangian(const SharedSpec& spec, const SharedLayout& layout,
                  const SharedHits& hits, const DualState& dual) {
  double value = shared_utility(spec, hits);
  const std::vector<double> occ = node_occupancy(spec, layout, hits);
  for (std::size_t j = 0; j < occ.size(); ++j)
    value -= dual.nu[j] * (occ[j] - spec.network.capacity[j]);
  for (std::size_t p = 0; p < spec.network.paths.size(); ++p)
    for (std::size_t c = 0; c < spec.network.paths[p].contents.size(); ++c) {
      double sum = 0.0;
      for (double h : hits[p].values[c]) sum += h;
      value -= dual.mu[p][c] * (sum - 1.0);
    }
  return value;
}

DualGradients dual_gradients(const SharedSpec& spec, const SharedLayout& layout,
                             const SharedHits& hits, const DualState& dual) {
  (void)dual;
  DualGradients g;
  const std::vector<double> occ = node_occupancy(spec, layout, hits);
  g.nu.resize(occ.size());
  for (std::size_t j = 0; j < occ.size(); ++j)
    g.nu[j] = -(occ[j] - spec.network.capacity[j]);
  g.mu.resize(spec.network.paths.size());
  for (std::size_t p = 0; p < spec.network.paths.size(); ++p) {
    g.mu[p].resize(spec.network.paths[p].contents.size());
    for (std::size_t c = 0; c < spec.network.paths[p].contents.size(); ++c) {
      double sum = 0.0;
      for (double h : hits[p].values[c]) sum += h;
      g.mu[p][c] = -(sum - 1.0);
    }
  }
  return g;
}

namespace {

// prod over the coordinate's group excluding the coordinate itself
double cross_product(const SharedLayout& layout, const SharedHits& hits,
                     int group, int p, int c, int l) {
  double prod = 1.0;
  for (const auto& coord : layout.groups[group]) {
    if (coord.path == p && coord.content == c && coord.pos == l) continue;
    prod *= 1.0 - hits[coord.path].values[coord.content][coord.pos];
  }
  return prod;
}

void project_mcd_block(std::vector<double>& h, double cap) {
  // Approximate projection onto {0 <= h, sum <= cap, h_1 >= ... >= h_{L-1},
  // h_1 <= h_0}: a few alternating passes suffice at the fixed point.
  const std::size_t L = h.size();
  for (int pass = 0; pass < 4; ++pass) {
    if (L >= 3) project_nonincreasing(h.data(), L - 1);
    std::vector<int> idx(L);
    std::iota(idx.begin(), idx.end(), 0);
    project_capped_simplex(h, idx, cap);
    if (L >= 2) {
      double dot = h[0], nrm2 = L + 3.0;  // normal (2,1,...,1)
      for (std::size_t l = 0; l < L; ++l) dot += h[l];
      if (dot > cap) {
        const double scale = (dot - cap) / nrm2;
        h[0] -= 2.0 * scale;
        for (std::size_t l = 1; l < L; ++l) h[l] -= scale;
      }
    }
  }
  for (double& v : h) v = std::max(v, 0.0);
}

}  // namespace

SharedHits inner_maximize(const SharedSpec& spec, const SharedLayout& layout,
                          const DualState& dual, const PrimalDualOptions& opts,
                          const SharedHits* warm) {
  SharedHits hits = warm ? *warm : make_shared_hits(spec);
  const double hi = 1.0 - spec.eps;
  double damping = 1.0;
  double prev_residual = std::numeric_limits<double>::infinity();
  // heavily overlapping groups can settle into a tiny stable limit cycle;
  // accept it once it is orders of magnitude below the dual tolerance
  constexpr double kStallTol = 1e-6;
  constexpr int kStallSweeps = 300;
  double best_residual = std::numeric_limits<double>::infinity();
  SharedHits best_hits;
  int since_best = 0;
  for (int sweep = 0; sweep < opts.inner_max_sweeps; ++sweep) {
    double residual = 0.0;
    for (std::size_t p = 0; p < spec.network.paths.size(); ++p) {
      const PathSpec& path = spec.network.paths[p];
      const int L = static_cast<int>(path.length());
      for (std::size_t c = 0; c < path.contents.size(); ++c) {
        const std::vector<double> before = hits[p].values[c];
        for (int l = 0; l < L; ++l) {
          const int g = layout.group_of[p][c][l];
          const double denom =
              dual.nu[layout.group_node[g]] *
                  cross_product(layout, hits, g, static_cast<int>(p),
                                static_cast<int>(c), l) +
              dual.mu[p][c];
          double target;
          if (denom <= 0.0) {
            target = hi;
          } else {
            const double num =
                path.weights[c] * std::pow(spec.utility.psi, L - 1 - l);
            target = std::pow(num / denom, 1.0 / spec.utility.beta);
            target = std::clamp(target, 0.0, hi);
          }
          double& h = hits[p].values[c][l];
          h += damping * (target - h);
        }
        if (spec.policy == Policy::MCD)
          project_mcd_block(hits[p].values[c], hi);
        // net movement after any reprojection: at a constrained fixed point
        // the raw targets keep disagreeing, but the block stops moving
        for (int l = 0; l < L; ++l)
          residual = std::max(
              residual, std::abs(hits[p].values[c][l] - before[l]));
      }
    }
    if (residual < opts.inner_tol) return hits;
    if (residual < best_residual) {
      best_residual = residual;
      best_hits = hits;
      since_best = 0;
    } else if (++since_best >= kStallSweeps && best_residual < kStallTol) {
      return best_hits;
    }
    if (residual > prev_residual) damping = std::max(damping * 0.5, 0.05);
    prev_residual = residual;
  }
  char diag[64];
  std::snprintf(diag, sizeof(diag), "(last residual %.3e)", prev_residual);
  throw dual_error(
      std::string("inner maximization did not converge within the sweep "
                  "budget ") + diag);
}

double inner_residual(const SharedSpec& spec, const SharedLayout& layout,
                      const SharedHits& hits, const DualState& dual) {
  const double hi = 1.0 - spec.eps;
  double res = 0.0;
  for (std::size_t p = 0; p < spec.network.paths.size(); ++p) {
    const PathSpec& path = spec.network.paths[p];
    const int L = static_cast<int>(path.length());
    for (std::size_t c = 0; c < path.contents.size(); ++c)
      for (int l = 0; l < L; ++l) {
        const double h = hits[p].values[c][l];
        if (h <= spec.utility.h_min || h >= hi - 1e-12) continue;  // clamped
        const int g = layout.group_of[p][c][l];
        const double marginal =
            std::pow(spec.utility.psi, L - 1 - l) *
            utility_derivative(spec.utility, path.weights[c], h);
        const double price =
            dual.nu[layout.group_node[g]] *
                cross_product(layout, hits, g, static_cast<int>(p),
                              static_cast<int>(c), l) +
            dual.mu[p][c];
        res = std::max(res, std::abs(marginal - price));
      }
  }
  return res;
}

PrimalDualResult run_primal_dual(const SharedSpec& spec,
                                 const PrimalDualOptions& opts) {
  spec.validate();
  const SharedLayout layout = SharedLayout::build(spec.network);

  DualState dual;
  dual.nu.assign(spec.network.num_nodes, opts.nu0);
  dual.mu.resize(spec.network.paths.size());
  for (std::size_t p = 0; p < spec.network.paths.size(); ++p)
    dual.mu[p].assign(spec.network.paths[p].contents.size(), opts.mu0);

  PrimalDualResult result;
  SharedHits hits = make_shared_hits(spec);
  double best_norm = std::numeric_limits<double>::infinity();
  int best_iteration = 0;
  for (int k = 1; k <= opts.max_iterations; ++k) {
    hits = inner_maximize(spec, layout, dual, opts, &hits);
    const DualGradients g = dual_gradients(spec, layout, hits, dual);
    // projected dual gradient: a multiplier pinned at zero with a positive
    // gradient (slack constraint) is stationary
    double norm = 0.0;
    for (std::size_t j = 0; j < g.nu.size(); ++j)
      if (!layout.node_groups[j].empty() && !(dual.nu[j] <= 1e-10 && g.nu[j] > 0.0))
        norm = std::max(norm, std::abs(g.nu[j]));
    for (std::size_t p = 0; p < g.mu.size(); ++p)
      for (std::size_t c = 0; c < g.mu[p].size(); ++c)
        if (!(dual.mu[p][c] <= 1e-10 && g.mu[p][c] > 0.0))
          norm = std::max(norm, std::abs(g.mu[p][c]));
    result.iterations = k;
    if (opts.record_every > 0 && k % opts.record_every == 0) {
      const std::vector<double> occ = node_occupancy(spec, layout, hits);
      double cap_viol = 0.0;
      for (std::size_t j = 0; j < occ.size(); ++j)
        cap_viol = std::max(cap_viol, occ[j] - spec.network.capacity[j]);
      double content_viol = 0.0;
      for (const auto& row : g.mu)
        for (double v : row) content_viol = std::max(content_viol, -v);
      result.trajectory.push_back({k, shared_utility(spec, hits), norm,
                                   std::max(cap_viol, 0.0),
                                   std::max(content_viol, 0.0)});
    }
    if (norm <= opts.tol) {
      result.converged = true;
      break;
    }
    if (norm < best_norm * 0.99) {
      best_norm = norm;
      best_iteration = k;
    } else if (k - best_iteration > 10000) {
      break;  // stalled; report as non-converged with diagnostics attached
    }
    const double step = opts.gamma / std::sqrt(static_cast<double>(k));
    for (std::size_t j = 0; j < dual.nu.size(); ++j)
      dual.nu[j] = std::max(0.0, dual.nu[j] - step * g.nu[j]);
    for (std::size_t p = 0; p < dual.mu.size(); ++p)
      for (std::size_t c = 0; c < dual.mu[p].size(); ++c)
        dual.mu[p][c] = std::max(0.0, dual.mu[p][c] - step * g.mu[p][c]);
    // keep (nu, mu) away from the degenerate all-zero pairs
    for (std::size_t p = 0; p < spec.network.paths.size(); ++p)
      for (std::size_t c = 0; c < dual.mu[p].size(); ++c)
        if (dual.mu[p][c] == 0.0)
          for (int node : spec.network.paths[p].nodes)
            if (dual.nu[node] == 0.0) {
              dual.mu[p][c] = 1e-12;
              break;
            }
  }

  result.hits = hits;
  result.dual = dual;
  result.objective = shared_utility(spec, hits);
  result.stationarity_residual = inner_residual(spec, layout, hits, dual);
  {
    const std::vector<double> occ = node_occupancy(spec, layout, hits);
    double feas = 0.0, cs = 0.0;
    for (std::size_t j = 0; j < occ.size(); ++j) {
      feas = std::max(feas, occ[j] - spec.network.capacity[j]);
      cs = std::max(cs, std::abs(dual.nu[j] *
                                 (occ[j] - spec.network.capacity[j])));
    }
    for (std::size_t p = 0; p < spec.network.paths.size(); ++p)
      for (std::size_t c = 0; c < dual.mu[p].size(); ++c) {
        double sum = 0.0;
        for (double h : hits[p].values[c]) sum += h;
        feas = std::max(feas, sum - 1.0);
        cs = std::max(cs, std::abs(dual.mu[p][c] * (sum - 1.0)));
      }
    result.feasibility_residual = std::max(feas, 0.0);
    result.compl_slack_residual = cs;
  }
  return result;
}

CentralizedResult solve_shared_centralized(const SharedSpec& spec,
                                           const CentralizedOptions& opts) {
  spec.validate();
  const SharedLayout layout = SharedLayout::build(spec.network);
  const double hi = 1.0 - spec.eps;

  SharedHits hits = make_shared_hits(spec);
  std::vector<double> lambda(spec.network.num_nodes, 0.0);

  auto al_value = [&](const SharedHits& h) {
    double value = shared_utility(spec, h);
    const std::vector<double> occ = node_occupancy(spec, layout, h);
    for (std::size_t j = 0; j < occ.size(); ++j) {
      const double t = std::max(
          0.0, occ[j] - spec.network.capacity[j] + lambda[j] / opts.rho);
      value -= 0.5 * opts.rho * t * t -
               lambda[j] * lambda[j] / (2.0 * opts.rho);
    }
    return value;
  };

  auto project_blocks = [&](SharedHits& h) {
    for (std::size_t p = 0; p < spec.network.paths.size(); ++p)
      for (auto& block : h[p].values) {
        if (spec.policy == Policy::MCD) {
          project_mcd_block(block, hi);
        } else {
          std::vector<int> idx(block.size());
          std::iota(idx.begin(), idx.end(), 0);
          project_capped_simplex(block, idx, hi);
        }
        for (double& v : block) v = std::max(v, spec.utility.h_min);
      }
  };

  for (int outer = 0; outer < opts.outer_iterations; ++outer) {
    double step = 0.05;
    double fx = al_value(hits);
    for (int it = 0; it < opts.inner_iterations; ++it) {
      // gradient of the augmented objective
      const std::vector<double> occ = node_occupancy(spec, layout, hits);
      std::vector<double> pressure(spec.network.num_nodes);
      for (std::size_t j = 0; j < pressure.size(); ++j)
        pressure[j] = opts.rho * std::max(0.0, occ[j] -
                                                   spec.network.capacity[j] +
                                                   lambda[j] / opts.rho);
      SharedHits grad = hits;
      for (std::size_t p = 0; p < spec.network.paths.size(); ++p) {
        const PathSpec& path = spec.network.paths[p];
        const int L = static_cast<int>(path.length());
        for (std::size_t c = 0; c < path.contents.size(); ++c)
          for (int l = 0; l < L; ++l) {
            const int g = layout.group_of[p][c][l];
            grad[p].values[c][l] =
                std::pow(spec.utility.psi, L - 1 - l) *
                    utility_derivative(
                        spec.utility, path.weights[c],
                        std::max(hits[p].values[c][l], spec.utility.h_min)) -
                pressure[layout.group_node[g]] *
                    cross_product(layout, hits, g, static_cast<int>(p),
                                  static_cast<int>(c), l);
          }
      }
      bool accepted = false;
      for (int bt = 0; bt < 40; ++bt) {
        SharedHits next = hits;
        for (std::size_t p = 0; p < next.size(); ++p)
          for (std::size_t c = 0; c < next[p].values.size(); ++c)
            for (std::size_t l = 0; l < next[p].values[c].size(); ++l)
              next[p].values[c][l] += step * grad[p].values[c][l];
        project_blocks(next);
        double gain = 0.0, move = 0.0;
        for (std::size_t p = 0; p < next.size(); ++p)
          for (std::size_t c = 0; c < next[p].values.size(); ++c)
            for (std::size_t l = 0; l < next[p].values[c].size(); ++l) {
              const double d = next[p].values[c][l] - hits[p].values[c][l];
              gain += grad[p].values[c][l] * d;
              move = std::max(move, std::abs(d));
            }
        const double fn = al_value(next);
        if (fn >= fx + 1e-4 * gain || move == 0.0) {
          hits = std::move(next);
          fx = fn;
          accepted = true;
          if (move / step < 1e-10) it = opts.inner_iterations;  // stationary
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;
      step *= 1.3;
    }
    const std::vector<double> occ = node_occupancy(spec, layout, hits);
    for (std::size_t j = 0; j < lambda.size(); ++j)
      lambda[j] = std::max(
          0.0, lambda[j] + opts.rho * (occ[j] - spec.network.capacity[j]));
  }

  CentralizedResult result;
  result.hits = hits;
  result.objective = shared_utility(spec, hits);
  const std::vector<double> occ = node_occupancy(spec, layout, hits);
  double feas = 0.0;
  for (std::size_t j = 0; j < occ.size(); ++j)
    feas = std::max(feas, occ[j] - spec.network.capacity[j]);
  result.feasibility_residual = std::max(feas, 0.0);
  return result;
}

}  // namespace cachenet
