#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "cachenet/cost.hpp"
#include "cachenet/model.hpp"
#include "cachenet/ttl.hpp"

namespace cachenet {

enum class Eviction { LRU, LFU, FIFO, RR };

std::string to_string(Eviction e);

struct PathStats {
  int length = 0;
  std::vector<int> contents;    // global ids, copied from the PathSpec
  std::vector<double> rates;
  std::vector<double> weights;
  std::vector<long long> requests;           // per slot, after warm-up
  std::vector<std::vector<long long>> hits;  // per slot, per position
  std::vector<long long> transfers;          // copy movements per slot
  std::vector<long long> hop_units;          // sum of (|p|+1 - hit position)

  /// Empirical hit probabilities, hits/requests per slot and position.
  std::vector<std::vector<double>> empirical() const;
};

struct NodeStats {
  double mean_occupancy = 0.0;
  std::map<int, double> histogram;  // occupancy count -> fraction of time
};

struct SimReport {
  std::vector<PathStats> paths;
  std::vector<NodeStats> nodes;
  NodeStats network;  // total copies across all nodes
  double measured_time = 0.0;  // post-warm-up window
  double horizon_time = 0.0;
  long long total_requests = 0;
  std::uint64_t seed = 0;
};

/// TTL simulation, one logical copy per (path, content); node occupancy
/// counts each path's copy separately (paths are expected disjoint here).
SimReport simulate_ttl(const NetworkSpec& net, Policy policy,
                       const std::vector<TimerField>& timers,
                       long long horizon, std::uint64_t seed,
                       double warmup_fraction = 0.1);

/// As simulate_ttl, but overlapping paths share one physical copy per
/// (node, content): occupancy is refcounted, while hits are still scored
/// against each path's own logical state.
SimReport simulate_shared(const NetworkSpec& net, Policy policy,
                          const std::vector<TimerField>& timers,
                          long long horizon, std::uint64_t seed,
                          double warmup_fraction = 0.1);

/// Classical eviction policies with hard capacities and leave-copy-down
/// replication: a request scans its path from the requester toward the
/// server, a hit at position l copies the content to position l+1, a full
/// miss inserts at position 1 (server-adjacent).
SimReport simulate_baseline(const NetworkSpec& net, Eviction eviction,
                            long long horizon, std::uint64_t seed,
                            double warmup_fraction = 0.1);

/// Aggregate discounted utility of the empirical hit probabilities.
double report_utility(const SimReport& report, const UtilitySpec& utility);

/// Cost breakdown from measured rates; the MCDP transfer term is the
/// measured movement-event rate (no cost composition), matching the
/// analytic definition.
CostBreakdown report_costs(const SimReport& report, Policy policy,
                           const CostSpec& cost);

}  // namespace cachenet
