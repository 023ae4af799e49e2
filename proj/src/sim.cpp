#include "cachenet/sim.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <unordered_map>

namespace cachenet {

std::string to_string(Eviction e) {
  switch (e) {
    case Eviction::LRU: return "LRU";
    case Eviction::LFU: return "LFU";
    case Eviction::FIFO: return "FIFO";
    case Eviction::RR: return "RR";
  }
  return "?";
}

std::vector<std::vector<double>> PathStats::empirical() const {
  std::vector<std::vector<double>> h(contents.size(),
                                     std::vector<double>(length, 0.0));
  for (std::size_t s = 0; s < contents.size(); ++s)
    if (requests[s] > 0)
      for (int l = 0; l < length; ++l)
        h[s][l] = static_cast<double>(hits[s][l]) / requests[s];
  return h;
}

namespace {

struct Event {
  double time;
  int kind;  // 0 expiry, 1 request — expiry wins ties
  int node;
  int content;  // global id, part of the deterministic ordering
  int path;
  int slot;
  long long version;

  bool operator>(const Event& o) const {
    if (time != o.time) return time > o.time;
    if (kind != o.kind) return kind > o.kind;
    if (node != o.node) return node > o.node;
    if (content != o.content) return content > o.content;
    if (path != o.path) return path > o.path;
    return slot > o.slot;
  }
};

using EventQueue =
    std::priority_queue<Event, std::vector<Event>, std::greater<Event>>;

struct OccupancyTracker {
  std::vector<NodeStats>* nodes;
  std::vector<int> count;
  std::vector<double> last_time;
  std::vector<double> integral;
  bool active = false;

  explicit OccupancyTracker(std::size_t n)
      : count(n, 0), last_time(n, 0.0), integral(n, 0.0) {}

  void start(std::vector<NodeStats>& out, double t) {
    nodes = &out;
    active = true;
    std::fill(last_time.begin(), last_time.end(), t);
  }
  void advance(int node, double t) {
    if (!active) return;
    const double dt = t - last_time[node];
    if (dt > 0.0) {
      (*nodes)[node].histogram[count[node]] += dt;
      integral[node] += count[node] * dt;
      last_time[node] = t;
    }
  }
  void change(int node, double t, int delta) {
    advance(node, t);
    count[node] += delta;
  }
  void finish(double t, double window) {
    if (!active || window <= 0.0) return;
    for (std::size_t j = 0; j < count.size(); ++j) {
      advance(static_cast<int>(j), t);
      for (auto& [occ, mass] : (*nodes)[j].histogram) mass /= window;
      (*nodes)[j].mean_occupancy = integral[j] / window;
    }
  }
};

SimReport init_report(const NetworkSpec& net, std::uint64_t seed) {
  SimReport report;
  report.seed = seed;
  report.nodes.resize(net.num_nodes);
  report.paths.resize(net.paths.size());
  for (std::size_t p = 0; p < net.paths.size(); ++p) {
    const PathSpec& path = net.paths[p];
    PathStats& st = report.paths[p];
    st.length = static_cast<int>(path.length());
    st.contents = path.contents;
    st.rates = path.rates;
    st.weights = path.weights;
    st.requests.assign(path.contents.size(), 0);
    st.hits.assign(path.contents.size(),
                   std::vector<long long>(path.length(), 0));
    st.transfers.assign(path.contents.size(), 0);
    st.hop_units.assign(path.contents.size(), 0);
  }
  return report;
}

SimReport run_ttl(const NetworkSpec& net, Policy policy,
                  const std::vector<TimerField>& timers, long long horizon,
                  std::uint64_t seed, double warmup_fraction, bool shared) {
  net.validate();
  if (timers.size() != net.paths.size())
    throw model_error("sim: one TimerField per path required");
  SimReport report = init_report(net, seed);

  struct CopyState {
    int pos = 0;  // 0 = at the server
    long long version = 0;
  };
  std::vector<std::vector<CopyState>> state(net.paths.size());
  for (std::size_t p = 0; p < net.paths.size(); ++p)
    state[p].resize(net.paths[p].contents.size());

  // shared mode: one physical copy per (node, content) however many paths
  // logically hold it there
  std::vector<std::unordered_map<int, int>> refcount(
      shared ? net.num_nodes : 0);
  // slot num_nodes tracks the network-wide copy count
  const int total = static_cast<int>(net.num_nodes);
  std::vector<NodeStats> stats(net.num_nodes + 1);
  OccupancyTracker occupancy(net.num_nodes + 1);
  auto place = [&](int node, int content, double t, int delta) {
    if (!shared) {
      occupancy.change(node, t, delta);
      occupancy.change(total, t, delta);
      return;
    }
    int& rc = refcount[node][content];
    const bool was = rc > 0;
    rc += delta;
    if ((rc > 0) != was) {
      occupancy.change(node, t, rc > 0 ? 1 : -1);
      occupancy.change(total, t, rc > 0 ? 1 : -1);
    }
  };

  std::mt19937_64 rng(seed);
  EventQueue queue;
  double total_rate = 0.0;
  for (std::size_t p = 0; p < net.paths.size(); ++p) {
    const PathSpec& path = net.paths[p];
    for (std::size_t s = 0; s < path.contents.size(); ++s) {
      total_rate += path.rates[s];
      if (path.rates[s] <= 0.0) continue;
      std::exponential_distribution<double> exp_dist(path.rates[s]);
      queue.push({exp_dist(rng), 1, path.nodes.back(), path.contents[s],
                  static_cast<int>(p), static_cast<int>(s), 0});
    }
  }
  if (total_rate <= 0.0 || horizon <= 0) return report;

  const long long warmup =
      static_cast<long long>(horizon * warmup_fraction);
  long long processed = 0;
  double now = 0.0;
  double window_start = 0.0;
  bool accounting = warmup == 0;
  if (accounting) occupancy.start(stats, 0.0);

  while (processed < horizon && !queue.empty()) {
    const Event ev = queue.top();
    queue.pop();
    now = ev.time;
    const PathSpec& path = net.paths[ev.path];
    const int L = static_cast<int>(path.length());
    CopyState& cs = state[ev.path][ev.slot];
    PathStats& st = report.paths[ev.path];
    const std::vector<double>& T = timers[ev.path].values[ev.slot];

    if (ev.kind == 0) {
      if (ev.version != cs.version || cs.pos == 0) continue;  // stale
      const int pos = cs.pos;
      place(path.nodes[pos - 1], ev.content, now, -1);
      ++cs.version;
      if (policy == Policy::MCDP && pos >= 2) {
        cs.pos = pos - 1;
        place(path.nodes[cs.pos - 1], ev.content, now, +1);
        if (accounting) ++st.transfers[ev.slot];
        queue.push({now + T[cs.pos - 1], 0, path.nodes[cs.pos - 1], ev.content,
                    ev.path, ev.slot, cs.version});
      } else {
        cs.pos = 0;  // expiry at cache 1, or MCD discard
      }
      continue;
    }

    // request
    ++processed;
    const int pos = cs.pos;
    if (accounting) {
      ++st.requests[ev.slot];
      st.hop_units[ev.slot] += L + 1 - pos;
      if (pos >= 1) ++st.hits[ev.slot][pos - 1];
    }
    if (pos >= 1) place(path.nodes[pos - 1], ev.content, now, -1);
    const int next = pos == 0 ? 1 : std::min(pos + 1, L);
    ++cs.version;
    cs.pos = next;
    place(path.nodes[next - 1], ev.content, now, +1);
    if (accounting && next != pos) ++st.transfers[ev.slot];
    queue.push({now + T[next - 1], 0, path.nodes[next - 1], ev.content,
                ev.path, ev.slot, cs.version});

    std::exponential_distribution<double> exp_dist(path.rates[ev.slot]);
    queue.push({now + exp_dist(rng), 1, path.nodes.back(), ev.content,
                ev.path, ev.slot, cs.version});

    if (!accounting && processed >= warmup) {
      accounting = true;
      window_start = now;
      occupancy.start(stats, now);
    }
  }

  report.total_requests = processed;
  report.horizon_time = now;
  report.measured_time = now - window_start;
  occupancy.finish(now, report.measured_time);
  report.network = stats.back();
  stats.pop_back();
  report.nodes = std::move(stats);
  return report;
}

}  // namespace

SimReport simulate_ttl(const NetworkSpec& net, Policy policy,
                       const std::vector<TimerField>& timers, long long horizon,
                       std::uint64_t seed, double warmup_fraction) {
  return run_ttl(net, policy, timers, horizon, seed, warmup_fraction, false);
}

SimReport simulate_shared(const NetworkSpec& net, Policy policy,
                          const std::vector<TimerField>& timers,
                          long long horizon, std::uint64_t seed,
                          double warmup_fraction) {
  return run_ttl(net, policy, timers, horizon, seed, warmup_fraction, true);
}

SimReport simulate_baseline(const NetworkSpec& net, Eviction eviction,
                            long long horizon, std::uint64_t seed,
                            double warmup_fraction) {
  net.validate();
  SimReport report = init_report(net, seed);

  struct NodeCache {
    std::vector<int> residents;
    std::unordered_map<int, long long> meta;   // recency / insert order
    std::unordered_map<int, long long> freq;   // LFU, never reset
    int capacity = 0;
    std::mt19937_64 rng;
  };
  std::vector<NodeCache> caches(net.num_nodes);
  for (std::size_t j = 0; j < net.num_nodes; ++j) {
    caches[j].capacity = static_cast<int>(std::floor(net.capacity[j]));
    caches[j].rng.seed(seed * 0x9E3779B97F4A7C15ULL + j + 1);
  }

  long long tick = 0;
  auto touch = [&](NodeCache& cache, int content) {
    ++tick;
    if (eviction == Eviction::LRU) cache.meta[content] = tick;
    if (eviction == Eviction::LFU) ++cache.freq[content];
  };
  const int total = static_cast<int>(net.num_nodes);
  std::vector<NodeStats> stats(net.num_nodes + 1);
  OccupancyTracker occupancy(net.num_nodes + 1);
  auto insert = [&](int node, int content, double now) -> bool {
    NodeCache& cache = caches[node];
    if (cache.capacity <= 0) return false;  // pass-through node
    auto it = std::find(cache.residents.begin(), cache.residents.end(),
                        content);
    if (it != cache.residents.end()) {
      touch(cache, content);
      return false;
    }
    if (static_cast<int>(cache.residents.size()) >= cache.capacity) {
      std::size_t victim = 0;
      if (eviction == Eviction::RR) {
        std::uniform_int_distribution<std::size_t> pick(
            0, cache.residents.size() - 1);
        victim = pick(cache.rng);
      } else {
        const auto& score =
            eviction == Eviction::LFU ? cache.freq : cache.meta;
        long long best = std::numeric_limits<long long>::max();
        for (std::size_t r = 0; r < cache.residents.size(); ++r) {
          const long long v = score.at(cache.residents[r]);
          if (v < best ||
              (v == best &&
               cache.residents[r] < cache.residents[victim])) {
            best = v;
            victim = r;
          }
        }
      }
      cache.meta.erase(cache.residents[victim]);
      cache.residents[victim] = content;
      ++tick;
      cache.meta[content] = tick;
      if (eviction == Eviction::LFU) ++cache.freq[content];
      return true;  // size unchanged
    }
    cache.residents.push_back(content);
    ++tick;
    cache.meta[content] = tick;
    if (eviction == Eviction::LFU) ++cache.freq[content];
    occupancy.change(node, now, +1);
    occupancy.change(total, now, +1);
    return true;
  };

  std::mt19937_64 rng(seed);
  EventQueue queue;
  double total_rate = 0.0;
  for (std::size_t p = 0; p < net.paths.size(); ++p) {
    const PathSpec& path = net.paths[p];
    for (std::size_t s = 0; s < path.contents.size(); ++s) {
      total_rate += path.rates[s];
      if (path.rates[s] <= 0.0) continue;
      std::exponential_distribution<double> exp_dist(path.rates[s]);
      queue.push({exp_dist(rng), 1, path.nodes.back(), path.contents[s],
                  static_cast<int>(p), static_cast<int>(s), 0});
    }
  }
  if (total_rate <= 0.0 || horizon <= 0) return report;

  const long long warmup = static_cast<long long>(horizon * warmup_fraction);
  long long processed = 0;
  double now = 0.0;
  double window_start = 0.0;
  bool accounting = warmup == 0;
  if (accounting) occupancy.start(stats, 0.0);

  while (processed < horizon && !queue.empty()) {
    const Event ev = queue.top();
    queue.pop();
    now = ev.time;
    const PathSpec& path = net.paths[ev.path];
    const int L = static_cast<int>(path.length());
    PathStats& st = report.paths[ev.path];

    ++processed;
    int hit_pos = 0;  // scan from the requester toward the server
    for (int l = L; l >= 1; --l) {
      const auto& res = caches[path.nodes[l - 1]].residents;
      if (std::find(res.begin(), res.end(), ev.content) != res.end()) {
        hit_pos = l;
        break;
      }
    }
    if (accounting) {
      ++st.requests[ev.slot];
      st.hop_units[ev.slot] += L + 1 - hit_pos;
      if (hit_pos >= 1) ++st.hits[ev.slot][hit_pos - 1];
    }
    if (hit_pos >= 1) {
      touch(caches[path.nodes[hit_pos - 1]], ev.content);
      if (hit_pos < L) {  // leave-copy-down: replicate one step only
        if (insert(path.nodes[hit_pos], ev.content, now) && accounting)
          ++st.transfers[ev.slot];
      }
    } else {
      if (insert(path.nodes[0], ev.content, now) && accounting)
        ++st.transfers[ev.slot];
    }

    std::exponential_distribution<double> exp_dist(path.rates[ev.slot]);
    queue.push({now + exp_dist(rng), 1, path.nodes.back(), ev.content,
                ev.path, ev.slot, 0});

    if (!accounting && processed >= warmup) {
      accounting = true;
      window_start = now;
      occupancy.start(stats, now);
    }
  }

  report.total_requests = processed;
  report.horizon_time = now;
  report.measured_time = now - window_start;
  occupancy.finish(now, report.measured_time);
  report.network = stats.back();
  stats.pop_back();
  report.nodes = std::move(stats);
  return report;
}

double report_utility(const SimReport& report, const UtilitySpec& utility) {
  double total = 0.0;
  for (const PathStats& st : report.paths) {
    const auto h = st.empirical();
    for (std::size_t s = 0; s < st.contents.size(); ++s)
      for (int l = 0; l < st.length; ++l)
        total += std::pow(utility.psi, st.length - 1 - l) *
                 utility_value(utility, st.weights[s],
                               std::max(h[s][l], utility.h_min));
  }
  return total;
}

CostBreakdown report_costs(const SimReport& report, Policy policy,
                           const CostSpec& cost) {
  CostBreakdown out;
  if (report.measured_time <= 0.0) return out;
  for (const PathStats& st : report.paths) {
    const auto h = st.empirical();
    for (std::size_t s = 0; s < st.contents.size(); ++s) {
      if (st.requests[s] == 0) continue;
      const double rate = st.requests[s] / report.measured_time;
      const double hops =
          static_cast<double>(st.hop_units[s]) / st.requests[s];
      out.search += rate * cost.search(hops);
      out.fetch += rate * cost.fetch(hops);
      if (policy == Policy::MCD)
        out.transfer += rate * cost.transfer(1.0 - h[s][st.length - 1]);
      else
        out.transfer += st.transfers[s] / report.measured_time;
    }
  }
  return out;
}

}  // namespace cachenet
