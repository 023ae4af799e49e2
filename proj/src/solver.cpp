#include "cachenet/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cachenet {

Policy variant_policy(Variant v) {
  switch (v) {
    case Variant::L_U_MCDP:
    case Variant::G_N_U_MCDP:
      return Policy::MCDP;
    default:
      return Policy::MCD;
  }
}

void ProgramSpec::validate() const {
  network.validate();
  utility.validate();
  if (variant == Variant::MCD_COST) cost.validate();
  if (!(eps > 0.0 && eps < 1.0)) throw model_error("program: bad eps");
}

VariableLayout VariableLayout::build(const NetworkSpec& net) {
  VariableLayout layout;
  layout.node_vars.resize(net.num_nodes);
  int offset = 0;
  for (std::size_t p = 0; p < net.paths.size(); ++p) {
    const PathSpec& path = net.paths[p];
    const int L = static_cast<int>(path.length());
    for (std::size_t c = 0; c < path.contents.size(); ++c) {
      layout.blocks.push_back({static_cast<int>(p), static_cast<int>(c),
                               offset, L});
      for (int l = 0; l < L; ++l)
        layout.node_vars[path.nodes[l]].push_back(offset + l);
      offset += L;
    }
  }
  layout.total = offset;
  return layout;
}

void project_capped_simplex(std::vector<double>& x, const std::vector<int>& idx,
                            double cap) {
  double sum = 0.0;
  for (int i : idx) {
    if (x[i] < 0.0) x[i] = 0.0;
    sum += x[i];
  }
  if (sum <= cap) return;
  // Michelot: project onto the simplex {y >= 0, sum = cap}.
  std::vector<double> v;
  v.reserve(idx.size());
  for (int i : idx) v.push_back(x[i]);
  std::sort(v.begin(), v.end(), std::greater<>());
  double cumulative = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    cumulative += v[k];
    const double t = (cumulative - cap) / static_cast<double>(k + 1);
    if (k + 1 == v.size() || v[k + 1] <= t) {
      theta = t;
      if (k + 1 < v.size() && v[k + 1] > t) continue;
      break;
    }
  }
  for (int i : idx) x[i] = std::max(0.0, x[i] - theta);
}

void project_nonincreasing(double* y, std::size_t n) {
  if (n < 2) return;
  // PAV for the isotonic regression with decreasing order.
  std::vector<double> level(n), weight(n);
  std::vector<std::size_t> size(n);
  std::size_t m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    level[m] = y[i];
    weight[m] = 1.0;
    size[m] = 1;
    while (m > 0 && level[m - 1] < level[m]) {
      const double w = weight[m - 1] + weight[m];
      level[m - 1] = (weight[m - 1] * level[m - 1] + weight[m] * level[m]) / w;
      weight[m - 1] = w;
      size[m - 1] += size[m];
      --m;
    }
    ++m;
  }
  std::size_t pos = 0;
  for (std::size_t b = 0; b < m; ++b)
    for (std::size_t k = 0; k < size[b]; ++k) y[pos++] = level[b];
}

namespace {

constexpr double kDykstraTol = 1e-10;
constexpr int kDykstraMaxCycles = 2000;

// One convex component of the feasible set, projected in Dykstra cycles.
struct ProjSet {
  enum class Type { CappedSimplex, Halfspace, Monotone };
  Type type;
  std::vector<int> idx;
  std::vector<double> coeff;  // halfspace normal, aligned with idx
  double bound = 0.0;         // simplex cap or halfspace rhs
  double lower = 0.0;         // translation for the simplex lower bound
  std::vector<double> correction;

  void project(std::vector<double>& x) {
    switch (type) {
      case Type::CappedSimplex: {
        for (std::size_t k = 0; k < idx.size(); ++k) x[idx[k]] -= lower;
        project_capped_simplex(x, idx, bound);
        for (std::size_t k = 0; k < idx.size(); ++k) x[idx[k]] += lower;
        break;
      }
      case Type::Halfspace: {
        double dot = 0.0, nrm2 = 0.0;
        for (std::size_t k = 0; k < idx.size(); ++k) {
          dot += coeff[k] * x[idx[k]];
          nrm2 += coeff[k] * coeff[k];
        }
        if (dot > bound) {
          const double scale = (dot - bound) / nrm2;
          for (std::size_t k = 0; k < idx.size(); ++k)
            x[idx[k]] -= scale * coeff[k];
        }
        break;
      }
      case Type::Monotone: {
        std::vector<double> y(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) y[k] = x[idx[k]];
        project_nonincreasing(y.data(), y.size());
        for (std::size_t k = 0; k < idx.size(); ++k) x[idx[k]] = y[k];
        break;
      }
    }
  }
};

struct FeasibleSet {
  std::vector<ProjSet> sets;

  void project(std::vector<double>& x) {
    for (ProjSet& s : sets) s.correction.assign(s.idx.size(), 0.0);
    for (int cycle = 0; cycle < kDykstraMaxCycles; ++cycle) {
      // convergence is measured on the corrections: the iterate can repeat
      // exactly between cycles while the dual variables are still moving
      double delta = 0.0;
      for (ProjSet& s : sets) {
        std::vector<double> before(s.idx.size());
        for (std::size_t k = 0; k < s.idx.size(); ++k) {
          x[s.idx[k]] += s.correction[k];
          before[k] = x[s.idx[k]];
        }
        s.project(x);
        for (std::size_t k = 0; k < s.idx.size(); ++k) {
          const double next = before[k] - x[s.idx[k]];
          delta = std::max(delta, std::abs(next - s.correction[k]));
          s.correction[k] = next;
        }
      }
      if (delta < kDykstraTol) break;
    }
  }
};

FeasibleSet make_feasible_set(const ProgramSpec& prog,
                              const VariableLayout& layout) {
  const Policy policy = variant_policy(prog.variant);
  const double lo = prog.utility.h_min;
  FeasibleSet fs;
  for (const auto& block : layout.blocks) {
    ProjSet simplex;
    simplex.type = ProjSet::Type::CappedSimplex;
    simplex.idx.resize(block.length);
    std::iota(simplex.idx.begin(), simplex.idx.end(), block.offset);
    simplex.lower = lo;
    simplex.bound = 1.0 - prog.eps - lo * block.length;
    fs.sets.push_back(std::move(simplex));

    if (policy == Policy::MCD && block.length >= 2) {
      // h_1 >= h_2 >= ... >= h_{|p|-1}
      if (block.length >= 3) {
        ProjSet mono;
        mono.type = ProjSet::Type::Monotone;
        mono.idx.resize(block.length - 1);
        std::iota(mono.idx.begin(), mono.idx.end(), block.offset);
        fs.sets.push_back(std::move(mono));
      }
      // h_1 <= h_0, i.e. 2 h_1 + h_2 + ... + h_|p| <= 1
      ProjSet chain;
      chain.type = ProjSet::Type::Halfspace;
      chain.idx.resize(block.length);
      std::iota(chain.idx.begin(), chain.idx.end(), block.offset);
      chain.coeff.assign(block.length, 1.0);
      chain.coeff[0] = 2.0;
      chain.bound = 1.0 - prog.eps;
      fs.sets.push_back(std::move(chain));
    }
  }
  for (std::size_t j = 0; j < layout.node_vars.size(); ++j) {
    if (layout.node_vars[j].empty()) continue;
    ProjSet cap;
    cap.type = ProjSet::Type::Halfspace;
    cap.idx = layout.node_vars[j];
    cap.coeff.assign(cap.idx.size(), 1.0);
    cap.bound = prog.network.capacity[j];
    fs.sets.push_back(std::move(cap));
  }
  return fs;
}

}  // namespace

double program_objective(const ProgramSpec& prog, const VariableLayout& layout,
                         const std::vector<double>& x) {
  const double h_min = prog.utility.h_min;
  double obj = 0.0;
  for (const auto& block : layout.blocks) {
    const PathSpec& path = prog.network.paths[block.path];
    const double w = path.weights[block.content];
    const double lam = path.rates[block.content];
    const int L = block.length;
    if (prog.variant == Variant::MCD_COST) {
      double weighted = 0.0;  // sum_l l * h_l
      for (int l = 1; l <= L; ++l) weighted += l * x[block.offset + l - 1];
      const double hops = (L + 1.0) - weighted;
      obj -= lam * (prog.cost.search(hops) + prog.cost.fetch(hops));
      obj -= lam * prog.cost.transfer(1.0 - x[block.offset + L - 1]);
    } else {
      for (int l = 1; l <= L; ++l) {
        const double h = std::max(x[block.offset + l - 1], h_min);
        obj += std::pow(prog.utility.psi, L - l) *
               utility_value(prog.utility, w, h);
      }
    }
  }
  return obj;
}

std::vector<double> program_gradient(const ProgramSpec& prog,
                                     const VariableLayout& layout,
                                     const std::vector<double>& x) {
  const double h_min = prog.utility.h_min;
  std::vector<double> g(layout.total, 0.0);
  for (const auto& block : layout.blocks) {
    const PathSpec& path = prog.network.paths[block.path];
    const double w = path.weights[block.content];
    const double lam = path.rates[block.content];
    const int L = block.length;
    if (prog.variant == Variant::MCD_COST) {
      double weighted = 0.0;
      for (int l = 1; l <= L; ++l) weighted += l * x[block.offset + l - 1];
      const double hops = (L + 1.0) - weighted;
      const double slope = prog.cost.search.derivative(hops) +
                           prog.cost.fetch.derivative(hops);
      for (int l = 1; l <= L; ++l) g[block.offset + l - 1] = lam * slope * l;
      g[block.offset + L - 1] +=
          lam * prog.cost.transfer.derivative(1.0 - x[block.offset + L - 1]);
    } else {
      for (int l = 1; l <= L; ++l) {
        const double h = std::max(x[block.offset + l - 1], h_min);
        g[block.offset + l - 1] = std::pow(prog.utility.psi, L - l) *
                                  utility_derivative(prog.utility, w, h);
      }
    }
  }
  return g;
}

bool program_feasible(const ProgramSpec& prog, const VariableLayout& layout,
                      const std::vector<double>& x, double tol) {
  const Policy policy = variant_policy(prog.variant);
  for (double v : x)
    if (v < -tol || v > 1.0 + tol) return false;
  for (const auto& block : layout.blocks) {
    double sum = 0.0;
    for (int l = 0; l < block.length; ++l) sum += x[block.offset + l];
    if (sum > 1.0 - prog.eps + tol) return false;
    if (policy == Policy::MCD && block.length >= 2) {
      for (int l = 0; l + 2 < block.length; ++l)
        if (x[block.offset + l + 1] > x[block.offset + l] + tol) return false;
      if (x[block.offset] > 1.0 - sum + tol) return false;
    }
  }
  for (std::size_t j = 0; j < layout.node_vars.size(); ++j) {
    double sum = 0.0;
    for (int i : layout.node_vars[j]) sum += x[i];
    if (sum > prog.network.capacity[j] + tol) return false;
  }
  return true;
}

namespace {

double feasibility_violation(const ProgramSpec& prog,
                             const VariableLayout& layout,
                             const std::vector<double>& x) {
  const Policy policy = variant_policy(prog.variant);
  double viol = 0.0;
  for (double v : x) {
    viol = std::max(viol, -v);
    viol = std::max(viol, v - 1.0);
  }
  for (const auto& block : layout.blocks) {
    double sum = 0.0;
    for (int l = 0; l < block.length; ++l) sum += x[block.offset + l];
    viol = std::max(viol, sum - 1.0);
    if (policy == Policy::MCD && block.length >= 2) {
      for (int l = 0; l + 2 < block.length; ++l)
        viol = std::max(viol, x[block.offset + l + 1] - x[block.offset + l]);
      viol = std::max(viol, x[block.offset] - (1.0 - sum));
    }
  }
  for (std::size_t j = 0; j < layout.node_vars.size(); ++j) {
    double sum = 0.0;
    for (int i : layout.node_vars[j]) sum += x[i];
    viol = std::max(viol, sum - prog.network.capacity[j]);
  }
  return std::max(viol, 0.0);
}

// Multiplier estimate over the active constraints (non-negative least
// squares by projected gradient); feeds the KKT diagnostics only.
void kkt_diagnostics(const ProgramSpec& prog, const VariableLayout& layout,
                     const std::vector<double>& x, SolveResult& result) {
  const Policy policy = variant_policy(prog.variant);
  const std::vector<double> g = program_gradient(prog, layout, x);
  const double act_tol = 1e-6;

  struct Row {
    std::vector<int> idx;
    std::vector<double> coeff;
    double slack;
  };
  std::vector<Row> rows;
  for (const auto& block : layout.blocks) {
    double sum = 0.0;
    for (int l = 0; l < block.length; ++l) sum += x[block.offset + l];
    const double slack = 1.0 - prog.eps - sum;
    if (slack < act_tol) {
      Row r;
      for (int l = 0; l < block.length; ++l) {
        r.idx.push_back(block.offset + l);
        r.coeff.push_back(1.0);
      }
      r.slack = slack;
      rows.push_back(std::move(r));
    }
    if (policy == Policy::MCD && block.length >= 2) {
      for (int l = 0; l + 2 < block.length; ++l) {
        const double cs = x[block.offset + l] - x[block.offset + l + 1];
        if (cs < act_tol)
          rows.push_back({{block.offset + l + 1, block.offset + l},
                          {1.0, -1.0},
                          cs});
      }
    }
  }
  for (std::size_t j = 0; j < layout.node_vars.size(); ++j) {
    if (layout.node_vars[j].empty()) continue;
    double sum = 0.0;
    for (int i : layout.node_vars[j]) sum += x[i];
    const double slack = prog.network.capacity[j] - sum;
    if (slack < act_tol) {
      Row r;
      r.idx = layout.node_vars[j];
      r.coeff.assign(r.idx.size(), 1.0);
      r.slack = slack;
      rows.push_back(std::move(r));
    }
  }
  // Lower box (h at the h_min floor) absorbs whatever gradient remains.
  for (int i = 0; i < layout.total; ++i)
    if (x[i] < prog.utility.h_min + act_tol)
      rows.push_back({{i}, {-1.0}, x[i]});

  std::vector<double> y(rows.size(), 0.0);
  std::vector<double> resid = g;
  const int sweeps = 400;
  for (int s = 0; s < sweeps; ++s) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      double dot = 0.0, nrm2 = 0.0;
      for (std::size_t k = 0; k < rows[r].idx.size(); ++k) {
        dot += rows[r].coeff[k] * resid[rows[r].idx[k]];
        nrm2 += rows[r].coeff[k] * rows[r].coeff[k];
      }
      const double delta = std::max(-y[r], dot / nrm2);
      y[r] += delta;
      for (std::size_t k = 0; k < rows[r].idx.size(); ++k)
        resid[rows[r].idx[k]] -= delta * rows[r].coeff[k];
    }
  }
  double stat = 0.0;
  for (double v : resid) stat = std::max(stat, std::abs(v));
  double cs = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r)
    cs = std::max(cs, std::abs(y[r] * rows[r].slack));
  result.stationarity_residual = stat;
  result.compl_slack_residual = cs;
}

SolveResult run_projected_gradient(const ProgramSpec& prog) {
  prog.validate();
  for (double b : prog.network.capacity)
    if (b < 0.0) throw model_error("solver: negative capacity");

  const VariableLayout layout = VariableLayout::build(prog.network);
  SolveResult result;
  if (layout.total == 0) {
    result.converged = true;
    return result;
  }
  FeasibleSet fs = make_feasible_set(prog, layout);

  // Feasible start: spread each block uniformly, respecting node capacities.
  std::vector<double> x(layout.total, 0.0);
  for (const auto& block : layout.blocks) {
    const PathSpec& path = prog.network.paths[block.path];
    for (int l = 0; l < block.length; ++l) {
      const int node = path.nodes[l];
      const double per_node =
          prog.network.capacity[node] /
          std::max<std::size_t>(layout.node_vars[node].size(), 1);
      x[block.offset + l] =
          std::max(prog.utility.h_min,
                   std::min({0.5 / block.length, per_node, 1.0 - prog.eps}));
    }
  }
  fs.project(x);

  double fx = program_objective(prog, layout, x);
  double step = 1.0;
  int iter = 0;
  double residual = std::numeric_limits<double>::infinity();
  for (; iter < prog.max_iterations; ++iter) {
    const std::vector<double> g = program_gradient(prog, layout, x);
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      std::vector<double> xn(layout.total);
      for (int i = 0; i < layout.total; ++i) xn[i] = x[i] + step * g[i];
      fs.project(xn);
      double gain = 0.0, move = 0.0;
      for (int i = 0; i < layout.total; ++i) {
        gain += g[i] * (xn[i] - x[i]);
        move = std::max(move, std::abs(xn[i] - x[i]));
      }
      const double fn = program_objective(prog, layout, xn);
      if (fn >= fx + 1e-4 * gain || move == 0.0) {
        residual = move / step;
        x = std::move(xn);
        fx = fn;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    if (residual <= prog.grad_tol) {
      ++iter;
      break;
    }
    step *= 1.3;  // recover after backtracks
  }

  result.iterations = iter;
  result.converged = residual <= prog.grad_tol * 10.0 || iter < prog.max_iterations;
  result.objective = fx;
  result.feasibility_residual = feasibility_violation(prog, layout, x);
  kkt_diagnostics(prog, layout, x, result);

  result.hits.resize(prog.network.paths.size());
  for (std::size_t p = 0; p < prog.network.paths.size(); ++p)
    result.hits[p].values.resize(prog.network.paths[p].contents.size());
  for (const auto& block : layout.blocks) {
    auto& row = result.hits[block.path].values[block.content];
    row.assign(x.begin() + block.offset, x.begin() + block.offset + block.length);
  }
  return result;
}

}  // namespace

SolveResult solve(const ProgramSpec& prog) {
  if (prog.variant == Variant::MCD_COST)
    throw solver_error("solve: use solve_mcd_cost for the cost program");
  return run_projected_gradient(prog);
}

SolveResult solve_mcd_cost(const ProgramSpec& prog) {
  if (prog.variant != Variant::MCD_COST)
    throw solver_error("solve_mcd_cost: variant must be MCD_COST");
  SolveResult result = run_projected_gradient(prog);
  result.objective = -result.objective;  // report the minimized cost
  return result;
}

SolveResult brute_force_oracle(const ProgramSpec& prog, double delta) {
  prog.validate();
  const VariableLayout layout = VariableLayout::build(prog.network);
  const int d = layout.total;
  if (d > 6)
    throw solver_error("brute_force_oracle: refusing instances with > 6 variables");
  SolveResult result;
  if (d == 0) {
    result.converged = true;
    return result;
  }

  std::vector<double> best;
  double best_obj = -std::numeric_limits<double>::infinity();
  const double feas_tol = 1e-12;

  auto scan_grid = [&](const std::vector<double>& lo,
                       const std::vector<double>& hi, double step) {
    std::vector<int> counts(d);
    for (int i = 0; i < d; ++i)
      counts[i] = static_cast<int>(std::floor((hi[i] - lo[i]) / step + 1e-9)) + 1;
    std::vector<int> c(d, 0);
    std::vector<double> x(d);
    for (;;) {
      for (int i = 0; i < d; ++i) x[i] = std::min(lo[i] + c[i] * step, hi[i]);
      if (program_feasible(prog, layout, x, feas_tol)) {
        double obj = program_objective(prog, layout, x);
        if (prog.variant == Variant::MCD_COST) {
          // keep the internal sign convention (maximize -cost)
        }
        if (obj > best_obj) {
          best_obj = obj;
          best = x;
        }
      }
      int i = 0;
      while (i < d && ++c[i] >= counts[i]) c[i++] = 0;
      if (i == d) break;
    }
  };

  const double full_points = std::pow(1.0 / delta + 1.0, d);
  if (full_points <= 2e7) {
    scan_grid(std::vector<double>(d, 0.0), std::vector<double>(d, 1.0), delta);
  } else {
    // Multi-resolution zoom; sound for the strictly concave programs the
    // oracle is used on.
    std::vector<double> lo(d, 0.0), hi(d, 1.0);
    double step = 0.125;
    scan_grid(lo, hi, step);
    while (step > delta) {
      step = std::max(step * 0.25, delta);
      for (int i = 0; i < d; ++i) {
        lo[i] = std::max(0.0, best[i] - 5.0 * step);
        hi[i] = std::min(1.0, best[i] + 5.0 * step);
      }
      scan_grid(lo, hi, step);
    }
  }

  result.objective =
      prog.variant == Variant::MCD_COST ? -best_obj : best_obj;
  result.converged = !best.empty();
  result.hits.resize(prog.network.paths.size());
  for (std::size_t p = 0; p < prog.network.paths.size(); ++p)
    result.hits[p].values.resize(prog.network.paths[p].contents.size());
  for (const auto& block : layout.blocks) {
    auto& row = result.hits[block.path].values[block.content];
    row.assign(best.begin() + block.offset,
               best.begin() + block.offset + block.length);
  }
  return result;
}

}  // namespace cachenet
