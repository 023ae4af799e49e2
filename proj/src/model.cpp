#include "cachenet/model.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>
#include <random>

namespace cachenet {

std::vector<double> zipf_popularity(std::size_t n, double alpha) {
  if (n == 0) throw model_error("zipf_popularity: catalog must be non-empty");
  if (alpha < 0.0) throw domain_error("zipf_popularity: alpha must be >= 0");
  std::vector<double> rho(n);
  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    rho[i] = std::pow(static_cast<double>(i + 1), -alpha);
    norm += rho[i];
  }
  for (double& r : rho) r /= norm;
  return rho;
}

double ContentCatalog::total_rate() const {
  return std::accumulate(rates.begin(), rates.end(), 0.0);
}

std::vector<double> ContentCatalog::popularity() const {
  const double total = total_rate();
  std::vector<double> rho(rates.size());
  for (std::size_t i = 0; i < rates.size(); ++i) rho[i] = rates[i] / total;
  return rho;
}

void ContentCatalog::validate() const {
  if (rates.empty()) throw model_error("catalog: no contents");
  if (weights.size() != rates.size())
    throw model_error("catalog: weights/rates size mismatch");
  for (double w : weights)
    if (!(w > 0.0)) throw model_error("catalog: weights must be positive");
  for (double r : rates)
    if (!(r > 0.0)) throw model_error("catalog: rates must be positive");
}

ContentCatalog ContentCatalog::zipf(std::size_t n, double alpha,
                                    double aggregate_rate) {
  ContentCatalog cat;
  cat.rates = zipf_popularity(n, alpha);
  for (double& r : cat.rates) r *= aggregate_rate;
  cat.weights = cat.rates;  // rate-weighted utilities by default
  return cat;
}

void UtilitySpec::validate() const {
  if (beta < 0.0) throw domain_error("utility: beta must be >= 0");
  if (!(psi > 0.0 && psi <= 1.0))
    throw domain_error("utility: psi must be in (0, 1]");
  if (!(h_min > 0.0)) throw domain_error("utility: h_min must be positive");
}

double utility_value(const UtilitySpec& spec, double weight, double h) {
  if (h <= 0.0 && spec.beta >= 1.0)
    throw domain_error("utility_value: h <= 0 with beta >= 1 diverges");
  if (spec.beta == 1.0) return weight * std::log(h);
  return weight * std::pow(h, 1.0 - spec.beta) / (1.0 - spec.beta);
}

double utility_derivative(const UtilitySpec& spec, double weight, double h) {
  if (h <= 0.0) throw domain_error("utility_derivative: h must be positive");
  return weight * std::pow(h, -spec.beta);
}

void NetworkSpec::validate() const {
  if (capacity.size() != num_nodes)
    throw model_error("network: capacity size mismatch");
  for (double b : capacity)
    if (b < 0.0) throw model_error("network: negative capacity");
  for (const PathSpec& p : paths) {
    if (p.nodes.empty()) throw model_error("network: empty path");
    std::vector<int> seen(num_nodes, 0);
    for (int v : p.nodes) {
      if (v < 0 || static_cast<std::size_t>(v) >= num_nodes)
        throw model_error("network: path node out of range");
      if (seen[v]++) throw model_error("network: path has a loop");
    }
    if (p.contents.size() != p.rates.size() ||
        p.contents.size() != p.weights.size())
      throw model_error("network: path content/rate/weight size mismatch");
  }
}

namespace {

PathSpec demand_path(std::vector<int> nodes, const ContentCatalog& catalog,
                     int id_offset = 0) {
  PathSpec p;
  p.nodes = std::move(nodes);
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    p.contents.push_back(static_cast<int>(i) + id_offset);
    p.rates.push_back(catalog.rates[i]);
    p.weights.push_back(catalog.weights[i]);
  }
  return p;
}

}  // namespace

NetworkSpec build_line(std::size_t length, double capacity,
                       const ContentCatalog& catalog) {
  if (length == 0) throw model_error("build_line: length must be >= 1");
  catalog.validate();
  NetworkSpec net;
  net.num_nodes = length;
  net.capacity.assign(length, capacity);
  std::vector<int> nodes(length);
  std::iota(nodes.begin(), nodes.end(), 0);
  net.paths.push_back(demand_path(std::move(nodes), catalog));
  net.validate();
  return net;
}

NetworkSpec build_binary_tree(int depth, double capacity,
                              const std::vector<ContentCatalog>& leaf_catalogs) {
  if (depth < 1) throw model_error("build_binary_tree: depth must be >= 1");
  const int num_nodes = (1 << depth) - 1;
  const int num_leaves = 1 << (depth - 1);
  if (leaf_catalogs.size() != static_cast<std::size_t>(num_leaves) &&
      leaf_catalogs.size() != 1)
    throw model_error("build_binary_tree: need one catalog, or one per leaf");

  NetworkSpec net;
  net.num_nodes = static_cast<std::size_t>(num_nodes);
  net.capacity.assign(net.num_nodes, capacity);

  // Heap numbering: node 0 is the root (server side); leaves occupy the
  // last level. Each path runs root -> leaf so position 1 is the root.
  int id_offset = 0;
  for (int leaf = 0; leaf < num_leaves; ++leaf) {
    const ContentCatalog& cat =
        leaf_catalogs.size() == 1 ? leaf_catalogs[0] : leaf_catalogs[leaf];
    cat.validate();
    std::vector<int> up;  // leaf -> root
    for (int v = num_leaves - 1 + leaf; v > 0; v = (v - 1) / 2) up.push_back(v);
    up.push_back(0);
    std::reverse(up.begin(), up.end());
    net.paths.push_back(demand_path(std::move(up), cat, id_offset));
    if (leaf_catalogs.size() != 1) id_offset += static_cast<int>(cat.size());
  }
  net.validate();
  return net;
}

std::vector<int> shortest_path(std::size_t num_nodes,
                               const std::vector<std::vector<double>>& weight,
                               int from, int to) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(num_nodes, inf);
  std::vector<int> prev(num_nodes, -1);
  std::vector<char> done(num_nodes, 0);
  dist[from] = 0.0;
  for (;;) {
    // Linear scan keeps the lexicographic tie-break explicit.
    int u = -1;
    for (std::size_t v = 0; v < num_nodes; ++v)
      if (!done[v] && dist[v] < inf && (u < 0 || dist[v] < dist[u])) u = static_cast<int>(v);
    if (u < 0) break;
    done[u] = 1;
    if (u == to) break;
    for (std::size_t v = 0; v < num_nodes; ++v) {
      if (weight[u][v] <= 0.0) continue;
      const double nd = dist[u] + weight[u][v];
      if (nd < dist[v] - 1e-12 ||
          (std::abs(nd - dist[v]) <= 1e-12 && prev[v] >= 0 && u < prev[v])) {
        dist[v] = std::min(nd, dist[v]);
        prev[v] = u;
      }
    }
  }
  if (dist[to] == inf)
    throw model_error("shortest_path: destination unreachable");
  std::vector<int> path;
  for (int v = to; v != -1; v = prev[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

NetworkSpec build_grid(const GridParams& params, double capacity,
                       const ContentCatalog& catalog) {
  catalog.validate();
  if (params.side < 2) throw model_error("build_grid: side must be >= 2");
  const int s = params.side;
  const std::size_t n_nodes = static_cast<std::size_t>(s) * s;
  if (params.num_requesters < 1 ||
      static_cast<std::size_t>(params.num_requesters) > n_nodes)
    throw model_error("build_grid: bad requester count");

  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> wdist(params.weight_low,
                                               params.weight_high);
  std::vector<std::vector<double>> weight(n_nodes,
                                          std::vector<double>(n_nodes, 0.0));
  for (int r = 0; r < s; ++r) {
    for (int c = 0; c < s; ++c) {
      const int u = r * s + c;
      if (c + 1 < s) {
        const double w = wdist(rng);
        weight[u][u + 1] = weight[u + 1][u] = w;
      }
      if (r + 1 < s) {
        const double w = wdist(rng);
        weight[u][u + s] = weight[u + s][u] = w;
      }
    }
  }

  std::vector<int> sources = params.sources;
  if (sources.empty()) {
    std::uniform_int_distribution<int> node_dist(0, static_cast<int>(n_nodes) - 1);
    for (std::size_t i = 0; i < catalog.size(); ++i)
      sources.push_back(node_dist(rng));
  }
  if (sources.size() != catalog.size())
    throw model_error("build_grid: one source node per content required");

  std::vector<int> all_nodes(n_nodes);
  std::iota(all_nodes.begin(), all_nodes.end(), 0);
  std::shuffle(all_nodes.begin(), all_nodes.end(), rng);
  std::vector<int> requesters(all_nodes.begin(),
                              all_nodes.begin() + params.num_requesters);
  std::sort(requesters.begin(), requesters.end());

  NetworkSpec net;
  net.num_nodes = n_nodes;
  net.capacity.assign(n_nodes, capacity);

  // Requests sharing a (requester, source) pair ride the same path; contents
  // are grouped accordingly so each PathSpec is one request class.
  for (int v : requesters) {
    std::vector<std::vector<int>> by_source(n_nodes);
    for (std::size_t i = 0; i < catalog.size(); ++i)
      by_source[sources[i]].push_back(static_cast<int>(i));
    for (std::size_t src = 0; src < n_nodes; ++src) {
      if (by_source[src].empty()) continue;
      PathSpec p;
      p.nodes = shortest_path(n_nodes, weight, static_cast<int>(src), v);
      for (int i : by_source[src]) {
        p.contents.push_back(i);
        p.rates.push_back(catalog.rates[i]);
        p.weights.push_back(catalog.weights[i]);
      }
      net.paths.push_back(std::move(p));
    }
  }
  net.validate();
  return net;
}

}  // namespace cachenet
