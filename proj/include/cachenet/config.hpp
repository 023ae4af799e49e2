#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "cachenet/online.hpp"
#include "cachenet/primal_dual.hpp"
#include "cachenet/sim.hpp"
#include "cachenet/solver.hpp"

namespace cachenet {

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Fully resolved experiment description. Parsing is strict: unknown keys
/// anywhere in the document are rejected.
struct ExperimentConfig {
  std::string scenario;
  Policy policy = Policy::MCDP;
  NetworkSpec network;
  UtilitySpec utility;
  PenaltySpec penalty;
  CostSpec cost;

  Variant variant = Variant::L_U_MCDP;
  double eps = 1e-9;
  double grad_tol = 1e-8;
  int max_iterations = 100000;

  OnlineOptions online;
  PrimalDualOptions primal_dual;

  long long sim_horizon = 1000000;
  double warmup_fraction = 0.1;
  std::vector<Eviction> evictions = {Eviction::LRU, Eviction::LFU,
                                     Eviction::FIFO, Eviction::RR};
  int replications = 5;

  // optional direct inputs for `analyze`, applied to path 0
  std::optional<std::vector<std::vector<double>>> timers;
  std::optional<std::vector<std::vector<double>>> hits;

  std::uint64_t seed = 0;
  std::string hash;  // of the source document, stamped into outputs

  ProgramSpec program() const;
  SharedSpec shared() const;
};

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

/// FNV-1a over the canonical dump; hex string.
std::string config_hash(const nlohmann::json& doc);

}  // namespace cachenet
