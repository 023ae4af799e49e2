#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cachenet {

/// Thrown when a catalog, network or field fails a structural check.
struct model_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when a numeric argument is outside its admissible domain.
struct domain_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Zipf popularity over ranks 1..n: rho_i proportional to i^-alpha.
std::vector<double> zipf_popularity(std::size_t n, double alpha);

struct ContentCatalog {
  std::vector<double> weights;  // w_i > 0
  std::vector<double> rates;    // lambda_i > 0, requests per unit time

  std::size_t size() const { return rates.size(); }
  double total_rate() const;
  std::vector<double> popularity() const;  // lambda_i / sum(lambda)

  void validate() const;

  /// Catalog with rates Lambda * zipf(n, alpha) and rate-matched weights.
  static ContentCatalog zipf(std::size_t n, double alpha, double aggregate_rate);
};

/// Beta-fair utility family, log utility at beta == 1.
struct UtilitySpec {
  double beta = 1.0;
  double psi = 1.0;      // per-hop discount, in (0, 1]
  double h_min = 1e-9;   // clamp floor for beta >= 1 evaluation at h -> 0

  void validate() const;
};

/// U(h) = w h^(1-beta)/(1-beta), or w log h when beta == 1.
double utility_value(const UtilitySpec& spec, double weight, double h);

/// U'(h) = w h^-beta (w/h for log utility).
double utility_derivative(const UtilitySpec& spec, double weight, double h);

/// One request class: a loop-free node sequence with position 1 adjacent to
/// the server, position |p| at the requesting node, plus the per-content
/// demand routed over it.
struct PathSpec {
  std::vector<int> nodes;        // nodes[l-1] is the physical node of position l
  std::vector<int> contents;     // global content ids requested on this path
  std::vector<double> rates;     // lambda_{ip}, aligned with contents
  std::vector<double> weights;   // w_{ip}, aligned with contents

  std::size_t length() const { return nodes.size(); }
};

struct NetworkSpec {
  std::size_t num_nodes = 0;
  std::vector<double> capacity;  // B_v, expected-content units
  std::vector<PathSpec> paths;

  void validate() const;
};

struct GridParams {
  int side = 4;
  int num_requesters = 12;
  double weight_low = 1.0;
  double weight_high = 20.0;
  std::uint64_t seed = 0;
  // Content -> designated source node; filled randomly when empty.
  std::vector<int> sources;
};

NetworkSpec build_line(std::size_t length, double capacity,
                       const ContentCatalog& catalog);

/// Full binary tree of depth d (2^d - 1 nodes); one path per leaf, running
/// root -> leaf so that position 1 is the root (server side).
NetworkSpec build_binary_tree(int depth, double capacity,
                              const std::vector<ContentCatalog>& leaf_catalogs);

/// Weighted square grid; requests are routed over the weighted shortest path
/// from each requester to the content's source node, ties broken by
/// lexicographic node order.
NetworkSpec build_grid(const GridParams& params, double capacity,
                       const ContentCatalog& catalog);

/// Shortest path from `from` to `to` by edge weight with lexicographic
/// tie-breaking; used both by the grid builder and the test oracle.
std::vector<int> shortest_path(std::size_t num_nodes,
                               const std::vector<std::vector<double>>& weight,
                               int from, int to);

}  // namespace cachenet
