#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>

#include "cachenet/config.hpp"
#include "cachenet/online.hpp"
#include "cachenet/primal_dual.hpp"
#include "cachenet/sim.hpp"
#include "cachenet/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cachenet;

namespace {

int log_level() {
  const char* env = std::getenv("CACHENET_LOG");
  if (!env) return 0;
  const std::string v = env;
  if (v == "debug" || v == "2") return 2;
  if (v.empty() || v == "0" || v == "off") return 0;
  return 1;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[cachenet] " << msg << "\n";
}

struct Table {
  std::vector<std::string> cols;
  std::vector<std::vector<std::string>> rows;

  void add(std::initializer_list<std::string> row) { rows.emplace_back(row); }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_table(const fs::path& dir, const std::string& name,
                 const ExperimentConfig& cfg, const std::string& format,
                 const Table& table) {
  fs::create_directories(dir);
  if (format == "json") {
    json out;
    out["config_hash"] = cfg.hash;
    out["seed"] = cfg.seed;
    json rows = json::array();
    for (const auto& row : table.rows) {
      json r;
      for (std::size_t c = 0; c < table.cols.size(); ++c)
        r[table.cols[c]] = row[c];
      rows.push_back(std::move(r));
    }
    out["rows"] = std::move(rows);
    std::ofstream f(dir / (name + ".json"));
    f << out.dump(2) << "\n";
  } else {
    std::ofstream f(dir / (name + ".csv"));
    f << "# config_hash=" << cfg.hash << " seed=" << cfg.seed << "\n";
    for (std::size_t c = 0; c < table.cols.size(); ++c)
      f << table.cols[c] << (c + 1 < table.cols.size() ? "," : "\n");
    for (const auto& row : table.rows)
      for (std::size_t c = 0; c < row.size(); ++c)
        f << row[c] << (c + 1 < row.size() ? "," : "\n");
  }
}

void write_json(const fs::path& dir, const std::string& name,
                const ExperimentConfig& cfg, json body) {
  fs::create_directories(dir);
  body["config_hash"] = cfg.hash;
  body["seed"] = cfg.seed;
  std::ofstream f(dir / (name + ".json"));
  f << body.dump(2) << "\n";
}

Table hit_table(const NetworkSpec& net, const std::vector<HitField>& hits,
                const char* value_col = "h") {
  Table t;
  t.cols = {"path", "content", "cache", value_col};
  for (std::size_t p = 0; p < net.paths.size(); ++p)
    for (std::size_t c = 0; c < net.paths[p].contents.size(); ++c)
      for (std::size_t l = 0; l < hits[p].values[c].size(); ++l)
        t.add({std::to_string(p), std::to_string(net.paths[p].contents[c]),
               std::to_string(l + 1), num(hits[p].values[c][l])});
  return t;
}

SolveResult run_solver(const ExperimentConfig& cfg) {
  const ProgramSpec prog = cfg.program();
  log_info("solving " + std::to_string(VariableLayout::build(prog.network).total) +
           " variables");
  SolveResult res = prog.variant == Variant::MCD_COST ? solve_mcd_cost(prog)
                                                      : solve(prog);
  if (!res.converged)
    throw solver_error("solver did not converge within the iteration budget");
  return res;
}

std::vector<TimerField> invert_all(const ExperimentConfig& cfg,
                                   const std::vector<HitField>& hits) {
  std::vector<TimerField> timers;
  for (std::size_t p = 0; p < cfg.network.paths.size(); ++p)
    timers.push_back(timers_for_path(cfg.policy, cfg.network.paths[p], hits[p]));
  return timers;
}

bool paths_overlap(const NetworkSpec& net) {
  std::vector<int> owner(net.num_nodes, -1);
  for (std::size_t p = 0; p < net.paths.size(); ++p)
    for (int v : net.paths[p].nodes) {
      if (owner[v] >= 0 && owner[v] != static_cast<int>(p)) return true;
      owner[v] = static_cast<int>(p);
    }
  return false;
}

int cmd_analyze(const ExperimentConfig& cfg, const fs::path& out,
                const std::string& format) {
  if (cfg.network.paths.empty())
    throw config_error("analyze: a network with at least one path is required");
  const PathSpec& path = cfg.network.paths[0];
  Table t;
  t.cols = {"content", "cache", "T", "h"};
  double max_roundtrip = 0.0;
  auto add_rows = [&](std::size_t c, const std::vector<double>& T,
                      const std::vector<double>& h) {
    for (std::size_t l = 0; l < T.size(); ++l)
      t.add({std::to_string(path.contents[c]), std::to_string(l + 1),
             num(T[l]), num(h[l])});
  };
  if (cfg.timers) {
    if (cfg.timers->size() != path.contents.size())
      throw config_error("analyze: one timer vector per content required");
    for (std::size_t c = 0; c < path.contents.size(); ++c) {
      const auto& T = (*cfg.timers)[c];
      const auto h = hits_from_timers(cfg.policy, path.rates[c], T);
      const auto back = timers_from_hits(cfg.policy, path.rates[c], h);
      for (std::size_t l = 0; l < T.size(); ++l)
        max_roundtrip = std::max(max_roundtrip, std::abs(back[l] - T[l]));
      add_rows(c, T, h);
    }
  } else if (cfg.hits) {
    if (cfg.hits->size() != path.contents.size())
      throw config_error("analyze: one hit vector per content required");
    for (std::size_t c = 0; c < path.contents.size(); ++c) {
      const auto& h = (*cfg.hits)[c];
      const auto T = timers_from_hits(cfg.policy, path.rates[c], h);
      const auto fwd = hits_from_timers(cfg.policy, path.rates[c], T);
      for (std::size_t l = 0; l < h.size(); ++l)
        max_roundtrip = std::max(max_roundtrip, std::abs(fwd[l] - h[l]));
      add_rows(c, T, h);
    }
  } else {
    throw config_error("analyze: config must provide 'timers' or 'hits'");
  }
  write_table(out, "analyze", cfg, format, t);
  std::cout << "max_roundtrip_error " << max_roundtrip << "\n";
  return 0;
}

int cmd_solve(const ExperimentConfig& cfg, const fs::path& out,
              const std::string& format) {
  const SolveResult res = run_solver(cfg);
  write_table(out, "solution", cfg, format, hit_table(cfg.network, res.hits));
  write_json(out, "solve_result", cfg,
             {{"objective", res.objective},
              {"stationarity_residual", res.stationarity_residual},
              {"feasibility_residual", res.feasibility_residual},
              {"compl_slack_residual", res.compl_slack_residual},
              {"iterations", res.iterations},
              {"converged", res.converged}});
  std::cout << "objective " << res.objective << "\n";
  return 0;
}

int cmd_online(ExperimentConfig cfg, const fs::path& out,
               const std::string& format) {
  cfg.variant = Variant::L_U_MCDP;
  const SolveResult opt = run_solver(cfg);
  cfg.online.z_star = z_value(cfg.program(), cfg.penalty, opt.hits[0]);
  const OnlineResult res = run_online(cfg.program(), cfg.penalty, cfg.online);

  Table traj;
  traj.cols = {"k", "content", "cache", "h", "T", "Z", "Y"};
  for (const TrajectoryPoint& pt : res.trajectory)
    for (std::size_t l = 0; l < pt.h.size(); ++l)
      traj.add({std::to_string(pt.k), std::to_string(pt.content),
                std::to_string(l + 1), num(pt.h[l]), num(pt.T[l]), num(pt.z),
                num(pt.y)});
  write_table(out, "online_trajectory", cfg, format, traj);
  write_table(out, "online_final", cfg, format,
              hit_table(cfg.network, {res.state.hits}));
  write_json(out, "online_result", cfg,
             {{"final_z", res.final_z},
              {"z_star", cfg.online.z_star},
              {"steps", res.state.step_count},
              {"saturation_events", res.state.saturation_events}});
  std::cout << "final_z " << res.final_z << " z_star " << cfg.online.z_star
            << "\n";
  return 0;
}

int cmd_primal_dual(const ExperimentConfig& cfg, const fs::path& out,
                    const std::string& format) {
  const SharedSpec spec = cfg.shared();
  const PrimalDualResult res = run_primal_dual(spec, cfg.primal_dual);
  Table traj;
  traj.cols = {"k", "objective", "grad_norm", "capacity_violation",
               "content_violation"};
  for (const auto& pt : res.trajectory)
    traj.add({std::to_string(pt.k), num(pt.objective), num(pt.grad_norm),
              num(pt.max_capacity_violation), num(pt.max_content_violation)});
  write_table(out, "dual_trajectory", cfg, format, traj);
  write_table(out, "primal_dual_solution", cfg, format,
              hit_table(cfg.network, res.hits));
  write_json(out, "primal_dual_result", cfg,
             {{"objective", res.objective},
              {"stationarity_residual", res.stationarity_residual},
              {"feasibility_residual", res.feasibility_residual},
              {"compl_slack_residual", res.compl_slack_residual},
              {"iterations", res.iterations},
              {"converged", res.converged}});
  std::cout << "objective " << res.objective << " converged "
            << res.converged << "\n";
  return res.converged ? 0 : 3;
}

void write_sim_outputs(const ExperimentConfig& cfg, const fs::path& out,
                       const std::string& format, const SimReport& report,
                       const std::string& prefix) {
  Table t;
  t.cols = {"path", "content", "node", "cache", "requests", "hits",
            "hit_prob"};
  for (std::size_t p = 0; p < report.paths.size(); ++p) {
    const PathStats& st = report.paths[p];
    const auto h = st.empirical();
    for (std::size_t c = 0; c < st.contents.size(); ++c)
      for (int l = 0; l < st.length; ++l)
        t.add({std::to_string(p), std::to_string(st.contents[c]),
               std::to_string(cfg.network.paths[p].nodes[l]),
               std::to_string(l + 1), std::to_string(st.requests[c]),
               std::to_string(st.hits[c][l]), num(h[c][l])});
  }
  write_table(out, prefix + "_hits", cfg, format, t);

  Table occ;
  occ.cols = {"node", "mean_occupancy", "count", "mass"};
  for (std::size_t j = 0; j < report.nodes.size(); ++j)
    for (const auto& [count, mass] : report.nodes[j].histogram)
      occ.add({std::to_string(j), num(report.nodes[j].mean_occupancy),
               std::to_string(count), num(mass)});
  write_table(out, prefix + "_occupancy", cfg, format, occ);
}

int cmd_simulate(const ExperimentConfig& cfg, const fs::path& out,
                 const std::string& format) {
  std::vector<TimerField> timers;
  if (cfg.timers) {
    if (cfg.network.paths.size() != 1)
      throw config_error("simulate: explicit timers require a one-path network");
    TimerField tf;
    tf.values = *cfg.timers;
    timers.push_back(std::move(tf));
  } else {
    const SolveResult res = run_solver(cfg);
    timers = invert_all(cfg, res.hits);
  }
  const bool shared = paths_overlap(cfg.network);
  log_info(shared ? "overlapping paths: shared-copy simulation"
                  : "disjoint paths: independent simulation");
  const SimReport report =
      shared ? simulate_shared(cfg.network, cfg.policy, timers,
                               cfg.sim_horizon, cfg.seed, cfg.warmup_fraction)
             : simulate_ttl(cfg.network, cfg.policy, timers, cfg.sim_horizon,
                            cfg.seed, cfg.warmup_fraction);
  write_sim_outputs(cfg, out, format, report, "sim");
  const CostBreakdown costs = report_costs(report, cfg.policy, cfg.cost);
  write_json(out, "sim_result", cfg,
             {{"utility", report_utility(report, cfg.utility)},
              {"S", costs.search},
              {"F", costs.fetch},
              {"M", costs.transfer},
              {"total_cost", costs.total()},
              {"requests", report.total_requests},
              {"measured_time", report.measured_time}});
  return 0;
}

int cmd_compare(const ExperimentConfig& cfg, const fs::path& out,
                const std::string& format) {
  const SolveResult res = run_solver(cfg);
  const std::vector<TimerField> timers = invert_all(cfg, res.hits);
  auto mean_utility = [&](auto&& simulate) {
    std::vector<std::future<double>> runs;
    for (int r = 0; r < cfg.replications; ++r)
      runs.push_back(std::async(std::launch::async, [&, r] {
        return report_utility(simulate(cfg.seed + r), cfg.utility);
      }));
    double total = 0.0;
    for (auto& run : runs) total += run.get();
    return total / cfg.replications;
  };
  const double mcdp_utility = mean_utility([&](std::uint64_t seed) {
    return simulate_ttl(cfg.network, cfg.policy, timers, cfg.sim_horizon, seed,
                        cfg.warmup_fraction);
  });
  Table t;
  t.cols = {"policy", "utility", "normalized"};
  t.add({to_string(cfg.policy) + std::string("-opt"), num(mcdp_utility),
         num(1.0)});
  for (Eviction e : cfg.evictions) {
    const double u = mean_utility([&](std::uint64_t seed) {
      return simulate_baseline(cfg.network, e, cfg.sim_horizon, seed,
                               cfg.warmup_fraction);
    });
    t.add({to_string(e) + std::string("-lcd"), num(u),
           num(u / mcdp_utility)});
    log_info("baseline " + to_string(e) + " utility " + num(u));
  }
  write_table(out, "compare", cfg, format, t);
  return 0;
}

json line_config(double psi) {
  return {{"scenario", "line3"},
          {"policy", "mcdp"},
          {"network",
           {{"kind", "line"},
            {"length", 3},
            {"capacity", 30},
            {"catalog", {{"n", 100}, {"zipf_alpha", 0.8}, {"rate", 1.0}}}}},
          {"utility", {{"beta", 1.0}, {"psi", psi}}},
          {"solver", {{"variant", "l-u-mcdp"}}},
          {"seed", 1}};
}

json tree_config(bool shared_contents, double alpha, double capacity) {
  return {{"scenario", "tree7"},
          {"policy", "mcdp"},
          {"network",
           {{"kind", "tree"},
            {"depth", 3},
            {"capacity", capacity},
            {"shared_contents", shared_contents},
            {"catalog", {{"n", 100}, {"zipf_alpha", alpha}, {"rate", 1.0}}}}},
          {"utility", {{"beta", 1.0}, {"psi", 0.6}}},
          {"solver",
           {{"variant", shared_contents ? "g-n-u-mcdp" : "g-n-u-mcdp"}}},
          {"seed", 1}};
}

json grid_config(std::uint64_t seed) {
  return {{"scenario", "grid16"},
          {"policy", "mcdp"},
          {"network",
           {{"kind", "grid"},
            {"side", 4},
            {"requesters", 12},
            {"capacity", 3},
            {"weight_low", 1.0},
            {"weight_high", 20.0},
            {"catalog", {{"n", 30}, {"zipf_alpha", 0.8}, {"rate", 1.0}}}}},
          {"utility", {{"beta", 1.0}, {"psi", 0.6}}},
          {"seed", seed}};
}

int cmd_reproduce(const std::string& id, const fs::path& out,
                  const std::string& format, long long horizon_override) {
  auto horizon = [&](long long dflt) {
    return horizon_override > 0 ? horizon_override : dflt;
  };
  if (id == "fig1" || id == "fig2") {
    ExperimentConfig cfg = parse_config(line_config(0.6));
    cfg.online.horizon = horizon(1000000);
    cfg.sim_horizon = horizon(1000000);
    const SolveResult opt = run_solver(cfg);
    cfg.online.z_star = z_value(cfg.program(), cfg.penalty, opt.hits[0]);
    const OnlineResult online = run_online(cfg.program(), cfg.penalty,
                                           cfg.online);
    const std::vector<TimerField> timers = invert_all(cfg, opt.hits);
    const SimReport sim = simulate_ttl(cfg.network, cfg.policy, timers,
                                       cfg.sim_horizon, cfg.seed,
                                       cfg.warmup_fraction);
    Table t;
    t.cols = {"content", "cache", "h_solver", "h_online", "h_sim"};
    const auto h_sim = sim.paths[0].empirical();
    for (std::size_t c = 0; c < cfg.network.paths[0].contents.size(); ++c)
      for (int l = 0; l < 3; ++l)
        t.add({std::to_string(c), std::to_string(l + 1),
               num(opt.hits[0].values[c][l]),
               num(online.state.hits.values[c][l]), num(h_sim[c][l])});
    write_table(out, id + "_hits", cfg, format, t);
    write_sim_outputs(cfg, out, format, sim, id);
    return 0;
  }
  if (id == "fig3-psi" || id == "fig10") {
    Table t;
    t.cols = {"psi", "content", "cache", "h"};
    ExperimentConfig last;
    for (double psi : {0.1, 0.4, 0.7, 1.0}) {
      ExperimentConfig cfg = parse_config(line_config(psi));
      const SolveResult opt = run_solver(cfg);
      for (std::size_t c = 0; c < cfg.network.paths[0].contents.size(); ++c)
        for (int l = 0; l < 3; ++l)
          t.add({num(psi), std::to_string(c), std::to_string(l + 1),
                 num(opt.hits[0].values[c][l])});
      last = cfg;
    }
    write_table(out, id, last, format, t);
    return 0;
  }
  if (id == "fig5") {
    ExperimentConfig cfg = parse_config(tree_config(false, 0.8, 10));
    cfg.sim_horizon = horizon(1000000);
    const SolveResult opt = run_solver(cfg);
    const std::vector<TimerField> timers = invert_all(cfg, opt.hits);
    const SimReport sim = simulate_ttl(cfg.network, cfg.policy, timers,
                                       cfg.sim_horizon, cfg.seed,
                                       cfg.warmup_fraction);
    write_table(out, "fig5_solution", cfg, format,
                hit_table(cfg.network, opt.hits, "h_solver"));
    write_sim_outputs(cfg, out, format, sim, "fig5");
    return 0;
  }
  if (id == "fig6") {
    ExperimentConfig cfg = parse_config(tree_config(true, 1.2, 10));
    const SharedSpec spec = cfg.shared();
    const PrimalDualResult pd = run_primal_dual(spec, cfg.primal_dual);
    const CentralizedResult central =
        solve_shared_centralized(spec, CentralizedOptions{});
    Table t;
    t.cols = {"path", "content", "cache", "h_primal_dual", "h_central"};
    for (std::size_t p = 0; p < cfg.network.paths.size(); ++p)
      for (std::size_t c = 0; c < cfg.network.paths[p].contents.size(); ++c)
        for (std::size_t l = 0; l < pd.hits[p].values[c].size(); ++l)
          t.add({std::to_string(p), std::to_string(c), std::to_string(l + 1),
                 num(pd.hits[p].values[c][l]),
                 num(central.hits[p].values[c][l])});
    write_table(out, "fig6_hits", cfg, format, t);
    write_json(out, "fig6_result", cfg,
               {{"primal_dual_objective", pd.objective},
                {"centralized_objective", central.objective},
                {"converged", pd.converged}});
    return pd.converged ? 0 : 3;
  }
  if (id == "fig9") {
    ExperimentConfig cfg = parse_config(line_config(0.6));
    cfg.sim_horizon = horizon(1000000);
    return cmd_compare(cfg, out, format);
  }
  if (id == "grid") {
    Table t;
    t.cols = {"seed", "primal_dual_objective", "centralized_objective",
              "gap_percent"};
    ExperimentConfig last;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      ExperimentConfig cfg = parse_config(grid_config(seed));
      const SharedSpec spec = cfg.shared();
      const PrimalDualResult pd = run_primal_dual(spec, cfg.primal_dual);
      const CentralizedResult central =
          solve_shared_centralized(spec, CentralizedOptions{});
      const double gap =
          100.0 * std::abs(pd.objective - central.objective) /
          std::max(std::abs(central.objective), 1e-12);
      t.add({std::to_string(seed), num(pd.objective),
             num(central.objective), num(gap)});
      log_info("grid seed " + std::to_string(seed) + " gap " + num(gap) + "%");
      last = cfg;
    }
    write_table(out, "grid_objectives", last, format, t);
    return 0;
  }
  throw config_error("reproduce: unknown scenario id '" + id + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TTL cache network analysis, optimization and simulation"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", format = "csv", figure_id;
  long long horizon = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* opt = cmd->add_option("--config", config_path, "config file (JSON)");
    if (needs_config) opt->required();
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--format", format, "csv|json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--horizon", horizon, "request-count horizon override");
    cmd->add_option("--seed", seed, "seed override")
        ->each([&](const std::string&) { seed_set = true; });
  };

  auto* analyze = app.add_subcommand("analyze", "timer <-> hit probability maps");
  auto* solve_cmd = app.add_subcommand("solve", "centralized convex solve");
  auto* online = app.add_subcommand("online", "online primal algorithm");
  auto* pd = app.add_subcommand("primal-dual", "distributed primal-dual");
  auto* simulate = app.add_subcommand("simulate", "discrete-event simulation");
  auto* compare = app.add_subcommand("compare", "optimized TTL vs baselines");
  auto* reproduce = app.add_subcommand("reproduce", "canned experiment bundles");
  for (CLI::App* cmd : {analyze, solve_cmd, online, pd, simulate, compare})
    add_common(cmd, true);
  add_common(reproduce, false);
  reproduce->add_option("figure", figure_id, "fig1|fig2|fig3-psi|fig5|fig6|fig9|fig10|grid")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (reproduce->parsed())
      return cmd_reproduce(figure_id, out_dir, format, horizon);

    ExperimentConfig cfg = load_config(config_path);
    if (seed_set) {
      cfg.seed = seed;
      cfg.online.seed = seed;
    }
    if (horizon > 0) {
      cfg.online.horizon = horizon;
      cfg.sim_horizon = horizon;
    }
    if (analyze->parsed()) return cmd_analyze(cfg, out_dir, format);
    if (solve_cmd->parsed()) return cmd_solve(cfg, out_dir, format);
    if (online->parsed()) return cmd_online(cfg, out_dir, format);
    if (pd->parsed()) return cmd_primal_dual(cfg, out_dir, format);
    if (simulate->parsed()) return cmd_simulate(cfg, out_dir, format);
    if (compare->parsed()) return cmd_compare(cfg, out_dir, format);
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const model_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const infeasible_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const solver_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const online_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const dual_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
