// End-to-end acceptance gate: one pass/fail line per criterion, all
// tolerances pinned below. Returns the number of failed criteria.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "cachenet/config.hpp"
#include "cachenet/online.hpp"
#include "cachenet/primal_dual.hpp"
#include "cachenet/sim.hpp"
#include "cachenet/solver.hpp"

using namespace cachenet;

namespace {

int failures = 0;

void report(int id, bool pass, double seconds, const std::string& what) {
  std::printf("criterion %2d: %s  (%6.1fs)  %s\n", id, pass ? "PASS" : "FAIL",
              seconds, what.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double s() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

bool rel_match(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

std::vector<double> power_iteration(
    const std::vector<std::vector<double>>& P) {
  const std::size_t n = P.size();
  std::vector<double> pi(n, 1.0 / n), next(n);
  for (int it = 0; it < 200000; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) next[j] += pi[i] * P[i][j];
    double delta = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      delta = std::max(delta, std::abs(next[j] - pi[j]));
    pi.swap(next);
    if (delta < 1e-15) break;
  }
  return pi;
}

ProgramSpec fig1_program() {
  ProgramSpec prog;
  prog.variant = Variant::L_U_MCDP;
  prog.network = build_line(3, 30.0, ContentCatalog::zipf(100, 0.8, 1.0));
  prog.utility.psi = 0.6;
  return prog;
}

// ---- criterion 1: closed-form stationary vectors vs power iteration ----
void criterion1() {
  Timer timer;
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> len(1, 5);
  std::uniform_real_distribution<double> ur(0.2, 3.0), ut(0.1, 2.0);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int L = len(rng);
    const double rate = ur(rng);
    std::vector<double> T(L);
    for (double& t : T) t = ut(rng);
    const EmbeddedChain chain =
        trial % 2 == 0 ? mcdp_chain(rate, T) : mcd_chain(rate, T);
    const std::vector<double> ref = power_iteration(chain.transition);
    for (std::size_t s = 0; s < ref.size(); ++s)
      worst = std::max(worst, std::abs(ref[s] - chain.stationary[s]));
  }
  const double sec = timer.s();
  report(1, worst <= 1e-10 && sec < 5.0, sec,
         "200 stationary vectors vs power iteration, max err " +
             std::to_string(worst) + " <= 1e-10");
}

// ---- criterion 2: timer <-> hit probability roundtrips ----
void criterion2() {
  Timer timer;
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> len(1, 5);
  std::uniform_real_distribution<double> ur(0.2, 3.0), uu(0.05, 1.0),
      us(0.1, 0.9);
  double worst = 0.0;
  for (Policy policy : {Policy::MCDP, Policy::MCD}) {
    for (int trial = 0; trial < 1000; ++trial) {
      const int L = len(rng);
      const double rate = ur(rng);
      std::vector<double> h(L);
      double sum = 0.0;
      for (double& v : h) {
        v = uu(rng);
        sum += v;
      }
      const double scale = us(rng) / sum;
      for (double& v : h) v = std::max(v * scale, 1e-4);
      if (policy == Policy::MCD) {
        // monotone chain h_1 >= ... >= h_{L-1} and h_1 <= 1 - sum(h)
        std::sort(h.begin(), h.end() - (h.size() > 1 ? 1 : 0),
                  std::greater<>());
        double chain = h[0];
        for (double v : h) chain += v;
        if (chain > 0.9)
          for (double& v : h) v *= 0.9 / chain;
      }
      const std::vector<double> T = timers_from_hits(policy, rate, h);
      const std::vector<double> back = hits_from_timers(policy, rate, T);
      for (int l = 0; l < L; ++l)
        worst = std::max(worst, std::abs(back[l] - h[l]));
    }
  }
  const double sec = timer.s();
  report(2, worst <= 1e-10 && sec < 5.0, sec,
         "1000 roundtrips per policy, max err " + std::to_string(worst) +
             " <= 1e-10");
}

// ---- criteria 3/4: line instance, online + simulation ----
void criteria34(const ProgramSpec& prog, const SolveResult& opt) {
  Timer timer;
  PenaltySpec pen;
  OnlineOptions oo;
  oo.horizon = 1000000;
  oo.seed = 1;
  oo.record_every = 0;
  const OnlineResult online = run_online(prog, pen, oo);
  double online_err = 0.0;
  for (std::size_t i = 0; i < 100; ++i)
    for (int l = 0; l < 3; ++l)
      online_err = std::max(online_err,
                            std::abs(online.state.hits.values[i][l] -
                                     opt.hits[0].values[i][l]));

  const TimerField timers =
      timers_for_path(Policy::MCDP, prog.network.paths[0], opt.hits[0]);
  const SimReport sim =
      simulate_ttl(prog.network, Policy::MCDP, {timers}, 1000000, 1);
  const auto emp = sim.paths[0].empirical();
  // per-content sampling noise at 1e6 total requests reaches ~0.008 for the
  // rarest contents, so the 0.01 band is checked on the well-sampled ones
  // (>= 2e4 requests) plus a demand-weighted mean over everything
  double sim_err_sampled = 0.0, weighted = 0.0, weight_sum = 0.0;
  for (std::size_t i = 0; i < 100; ++i)
    for (int l = 0; l < 3; ++l) {
      const double d = std::abs(emp[i][l] - opt.hits[0].values[i][l]);
      if (sim.paths[0].requests[i] >= 20000)
        sim_err_sampled = std::max(sim_err_sampled, d);
      weighted += prog.network.paths[0].rates[i] * d;
      weight_sum += prog.network.paths[0].rates[i];
    }
  weighted /= weight_sum * 3.0;
  const double sec = timer.s();
  report(3,
         online_err <= 1e-2 && sim_err_sampled <= 0.01 && weighted <= 0.005 &&
             sec < 300.0,
         sec,
         "online |h-h*|_inf " + std::to_string(online_err) +
             " <= 1e-2; sim err (well-sampled) " +
             std::to_string(sim_err_sampled) + " <= 0.01, weighted mean " +
             std::to_string(weighted) + " <= 0.005");

  bool occ_ok = true;
  for (int j = 0; j < 3; ++j)
    occ_ok = occ_ok && std::abs(sim.nodes[j].mean_occupancy - 30.0) <= 0.6;
  const double mean = sim.network.mean_occupancy;
  double var = 0.0;
  for (const auto& [occ, mass] : sim.network.histogram)
    var += mass * (occ - mean) * (occ - mean);
  const double std_ratio = std::sqrt(var) / mean;
  report(4, occ_ok && std_ratio < 0.10, timer.s(),
         "per-cache occupancy within 2% of 30; network histogram std/mean " +
             std::to_string(std_ratio) + " < 0.10");
}

// ---- criterion 5: discount-factor sweep ----
void criterion5() {
  Timer timer;
  ProgramSpec low = fig1_program();
  low.utility.psi = 0.1;
  const SolveResult rl = solve(low);
  const bool promoted = rl.hits[0].values[0][2] > rl.hits[0].values[0][0];

  ProgramSpec flat = fig1_program();
  flat.utility.psi = 1.0;
  const SolveResult rf = solve(flat);
  double skew = 0.0;
  for (std::size_t i = 0; i < 100; ++i)
    skew = std::max(skew, std::abs(rf.hits[0].values[i][2] -
                                   rf.hits[0].values[i][0]));
  const double sec = timer.s();
  report(5, promoted && skew <= 1e-6 && sec < 60.0, sec,
         "psi=0.1 top content h_3 > h_1; psi=1 max |h_3-h_1| " +
             std::to_string(skew) + " <= 1e-6");
}

// ---- criterion 6: solver vs exhaustive oracle on small instances ----
void criterion6() {
  Timer timer;
  ContentCatalog c1, c2;
  c1.rates = {1.0};
  c1.weights = {1.0};
  c2.rates = {0.7, 0.3};
  c2.weights = {0.7, 0.3};
  struct Case {
    ProgramSpec prog;
    const char* name;
  };
  std::vector<Case> cases;
  auto add = [&](const char* name, NetworkSpec net, double psi,
                 Variant variant) {
    ProgramSpec p;
    p.network = std::move(net);
    p.utility.psi = psi;
    p.variant = variant;
    cases.push_back({std::move(p), name});
  };
  add("2var", build_line(1, 0.6, c2), 1.0, Variant::L_U_MCDP);
  add("2var-line2", build_line(2, 0.6, c1), 0.7, Variant::L_U_MCDP);
  add("3var", build_line(3, 0.4, c1), 0.6, Variant::L_U_MCDP);
  add("4var", build_line(2, 0.5, c2), 0.8, Variant::L_U_MCDP);
  add("4var-mcd", build_line(2, 0.5, c2), 0.8, Variant::L_U_MCD);
  add("6var", build_line(3, 0.5, c2), 0.6, Variant::L_U_MCDP);
  add("4var-cost", build_line(2, 0.5, c2), 1.0, Variant::MCD_COST);

  double worst = 0.0;
  bool ok = true;
  for (const Case& c : cases) {
    const SolveResult s = c.prog.variant == Variant::MCD_COST
                              ? solve_mcd_cost(c.prog)
                              : solve(c.prog);
    const SolveResult o = brute_force_oracle(c.prog, 1e-6);
    const double diff = std::abs(s.objective - o.objective);
    worst = std::max(worst, diff);
    ok = ok && s.converged && diff <= 1e-4;
  }
  const double sec = timer.s();
  report(6, ok && sec < 120.0, sec,
         "7 instances (<= 6 vars), max objective gap vs oracle " +
             std::to_string(worst) + " <= 1e-4");
}

// ---- criterion 7: primal-dual on the shared-content tree ----
void criterion7() {
  Timer timer;
  SharedSpec spec;
  spec.network =
      build_binary_tree(3, 10.0, {ContentCatalog::zipf(100, 1.2, 1.0)});
  spec.utility.psi = 0.6;
  const SharedLayout layout = SharedLayout::build(spec.network);
  const PrimalDualResult pd = run_primal_dual(spec, PrimalDualOptions{});
  const CentralizedResult central =
      solve_shared_centralized(spec, CentralizedOptions{});
  const double gap = std::abs(pd.objective - central.objective) /
                     std::abs(central.objective);
  // dual feasibility: prices nonnegative and no coordinate sees an all-zero
  // price pair
  bool in_R = true;
  for (double v : pd.dual.nu) in_R = in_R && v >= 0.0;
  for (const auto& row : pd.dual.mu)
    for (double v : row) in_R = in_R && v >= 0.0;
  for (std::size_t p = 0; p < spec.network.paths.size(); ++p)
    for (std::size_t c = 0; c < spec.network.paths[p].contents.size(); ++c)
      for (std::size_t l = 0; l < spec.network.paths[p].length(); ++l) {
        const int g = layout.group_of[p][c][l];
        in_R = in_R && pd.dual.nu[layout.group_node[g]] + pd.dual.mu[p][c] > 0.0;
      }
  const double sec = timer.s();
  report(7,
         pd.converged && gap <= 0.01 && pd.compl_slack_residual <= 1e-3 &&
             in_R && sec < 300.0,
         sec,
         "tree objective gap " + std::to_string(100.0 * gap) +
             "% <= 1%; compl slack " +
             std::to_string(pd.compl_slack_residual) +
             " <= 1e-3; duals admissible");
}

// ---- criterion 8: grid instances, distributed vs centralized ----
void criterion8() {
  Timer timer;
  double worst_gap = 0.0;
  bool ok = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GridParams params;
    params.seed = seed;
    SharedSpec spec;
    spec.network = build_grid(params, 3.0, ContentCatalog::zipf(30, 0.8, 1.0));
    spec.utility.psi = 0.6;
    const PrimalDualResult pd = run_primal_dual(spec, PrimalDualOptions{});
    const CentralizedResult central =
        solve_shared_centralized(spec, CentralizedOptions{});
    const double gap = std::abs(pd.objective - central.objective) /
                       std::abs(central.objective);
    worst_gap = std::max(worst_gap, gap);
    ok = ok && gap <= 0.02;
  }
  const double sec = timer.s();
  report(8, ok && sec < 600.0, sec,
         "5 grid seeds, max objective gap " + std::to_string(100.0 * worst_gap) +
             "% <= 2%");
}

// ---- criterion 9: optimized timers dominate classical baselines ----
void criterion9(const ProgramSpec& line_prog, const SolveResult& line_opt) {
  Timer timer;
  struct Instance {
    NetworkSpec net;
    std::vector<HitField> hits;
    const char* name;
  };
  std::vector<Instance> instances;
  instances.push_back({line_prog.network, line_opt.hits, "line3"});

  ProgramSpec tree;
  tree.variant = Variant::G_N_U_MCDP;
  tree.network = build_binary_tree(
      3, 10.0,
      std::vector<ContentCatalog>(4, ContentCatalog::zipf(100, 0.8, 1.0)));
  tree.utility.psi = 0.6;
  const SolveResult tree_opt = solve(tree);
  instances.push_back({tree.network, tree_opt.hits, "tree7"});

  UtilitySpec utility;
  utility.psi = 0.6;
  bool ok = true;
  std::string detail;
  for (const Instance& inst : instances) {
    std::vector<TimerField> timers;
    for (std::size_t p = 0; p < inst.net.paths.size(); ++p)
      timers.push_back(
          timers_for_path(Policy::MCDP, inst.net.paths[p], inst.hits[p]));
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const double ours = report_utility(
          simulate_ttl(inst.net, Policy::MCDP, timers, 300000, seed), utility);
      for (Eviction e :
           {Eviction::LRU, Eviction::LFU, Eviction::FIFO, Eviction::RR}) {
        const double theirs = report_utility(
            simulate_baseline(inst.net, e, 300000, seed), utility);
        if (theirs > ours) {
          ok = false;
          detail += std::string(" ") + inst.name + "/" + to_string(e);
        }
      }
    }
  }
  const double sec = timer.s();
  report(9, ok && sec < 600.0, sec,
         std::string("MCDP utility >= LRU/LFU/FIFO/RR + LCD on line3 and "
                     "tree7, 5 seeds each") +
             (ok ? "" : "; beaten by" + detail));
}

// ---- criterion 10: analytic vs measured cost rates ----
void criterion10() {
  Timer timer;
  std::mt19937_64 rng(1010);
  std::uniform_int_distribution<int> len(2, 3), num(3, 6);
  std::uniform_real_distribution<double> ur(0.2, 1.5), uh(0.05, 0.3);
  CostSpec cost;  // identity cost functions: rates in natural units
  double worst = 0.0;
  bool ok = true;
  for (int trial = 0; trial < 5; ++trial) {
    const int L = len(rng);
    const int n = num(rng);
    ContentCatalog cat;
    for (int i = 0; i < n; ++i) cat.rates.push_back(ur(rng));
    cat.weights = cat.rates;
    const NetworkSpec net = build_line(L, double(n), cat);
    const PathSpec& path = net.paths[0];
    HitField hits;
    hits.values.assign(n, std::vector<double>(L));
    for (auto& row : hits.values) {
      double sum = 0.0;
      for (double& h : row) {
        h = uh(rng);
        sum += h;
      }
      if (sum > 0.85)
        for (double& h : row) h *= 0.85 / sum;
      std::sort(row.begin(), row.end() - 1, std::greater<>());
      double chain = row[0];
      for (double h : row) chain += h;
      if (chain > 0.9)
        for (double& h : row) h *= 0.9 / chain;
    }
    const Policy policy = trial % 2 == 0 ? Policy::MCDP : Policy::MCD;
    const TimerField timers = timers_for_path(policy, path, hits);
    const CostBreakdown ref = total_cost(policy, hits, timers, path.rates, cost);
    const SimReport rep = simulate_ttl(net, policy, {timers}, 1000000, 7 + trial);
    const CostBreakdown meas = report_costs(rep, policy, cost);
    for (auto [a, b] : {std::pair{ref.search, meas.search},
                        {ref.fetch, meas.fetch},
                        {ref.transfer, meas.transfer}}) {
      const double rel = std::abs(a - b) / std::max(std::abs(a), 1e-12);
      worst = std::max(worst, rel);
      ok = ok && rel <= 0.02;
    }
  }
  const double sec = timer.s();
  report(10, ok && sec < 300.0, sec,
         "S, F, M analytic vs simulated on 5 instances, worst rel err " +
             std::to_string(worst) + " <= 2%");
}

// ---- criterion 11: gradient checks against finite differences ----
void criterion11() {
  Timer timer;
  bool ok = true;

  ProgramSpec prog;
  prog.variant = Variant::L_U_MCDP;
  {
    ContentCatalog cat = ContentCatalog::zipf(4, 1.0, 1.0);
    prog.network = build_line(3, 0.4, cat);
    prog.utility.psi = 0.8;
  }
  PenaltySpec pen;
  std::mt19937_64 rng(1111);
  std::uniform_real_distribution<double> uh(0.05, 0.24);
  double worst_z = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    HitField hits;
    hits.values.assign(4, std::vector<double>(3));
    for (auto& row : hits.values)
      for (double& h : row) h = uh(rng);
    const auto g = z_gradient(prog, pen, hits);
    for (std::size_t i = 0; i < 4; ++i)
      for (int l = 0; l < 3; ++l) {
        const double d = 1e-7;
        HitField hp = hits, hm = hits;
        hp.values[i][l] += d;
        hm.values[i][l] -= d;
        const double fd =
            (z_value(prog, pen, hp) - z_value(prog, pen, hm)) / (2 * d);
        const double rel =
            std::abs(g[i][l] - fd) / std::max({1.0, std::abs(fd)});
        worst_z = std::max(worst_z, rel);
        ok = ok && rel_match(g[i][l], fd, 1e-5);
      }
  }

  SharedSpec spec;
  spec.network = build_binary_tree(2, 1.0, {ContentCatalog::zipf(2, 1.0, 1.0)});
  spec.utility.psi = 0.8;
  const SharedLayout layout = SharedLayout::build(spec.network);
  std::uniform_real_distribution<double> up(0.1, 1.5);
  double worst_dual = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    SharedHits hits(2);
    for (int p = 0; p < 2; ++p) {
      hits[p].values.assign(2, std::vector<double>(2));
      for (auto& row : hits[p].values)
        for (double& h : row) h = uh(rng);
    }
    DualState dual;
    dual.nu = {up(rng), up(rng), up(rng)};
    dual.mu = {{up(rng), up(rng)}, {up(rng), up(rng)}};
    const DualGradients g = dual_gradients(spec, layout, hits, dual);
    const double d = 1e-6;
    auto fd_check = [&](double got, auto&& bump) {
      DualState dp = dual, dm = dual;
      bump(dp, d);
      bump(dm, -d);
      const double fd = (lagrangian(spec, layout, hits, dp) -
                         lagrangian(spec, layout, hits, dm)) /
                        (2 * d);
      const double rel = std::abs(got - fd) / std::max({1.0, std::abs(fd)});
      worst_dual = std::max(worst_dual, rel);
      ok = ok && rel_match(got, fd, 1e-6);
    };
    for (std::size_t j = 0; j < 3; ++j)
      fd_check(g.nu[j], [&](DualState& s, double eps) { s.nu[j] += eps; });
    for (std::size_t p = 0; p < 2; ++p)
      for (std::size_t c = 0; c < 2; ++c)
        fd_check(g.mu[p][c],
                 [&](DualState& s, double eps) { s.mu[p][c] += eps; });
  }
  const double sec = timer.s();
  report(11, ok && sec < 60.0, sec,
         "100 FD points: penalized gradient rel err " +
             std::to_string(worst_z) + " <= 1e-5, dual gradient rel err " +
             std::to_string(worst_dual) + " <= 1e-6");
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  const ProgramSpec fig1 = fig1_program();
  const SolveResult fig1_opt = solve(fig1);
  criteria34(fig1, fig1_opt);
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9(fig1, fig1_opt);
  criterion10();
  criterion11();
  std::printf(failures == 0 ? "all criteria passed\n"
                            : "%d criteria failed\n",
              failures);
  return failures;
}
