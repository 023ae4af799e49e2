#include "cachenet/ttl.hpp"

#include <cmath>

namespace cachenet {

std::string to_string(Policy p) { return p == Policy::MCDP ? "MCDP" : "MCD"; }

namespace {

void check_params(double rate, const std::vector<double>& timers) {
  if (!(rate > 0.0)) throw domain_error("ttl: rate must be positive");
  if (timers.empty()) throw domain_error("ttl: empty timer vector");
  for (double t : timers)
    if (!(t >= 0.0) || !std::isfinite(t))
      throw domain_error("ttl: timers must be finite and >= 0");
}

}  // namespace

EmbeddedChain mcdp_chain(double rate, const std::vector<double>& timers) {
  check_params(rate, timers);
  const std::size_t L = timers.size();
  EmbeddedChain chain;
  chain.policy = Policy::MCDP;

  chain.transition.assign(L + 1, std::vector<double>(L + 1, 0.0));
  chain.transition[0][1] = 1.0;
  for (std::size_t l = 1; l <= L; ++l) {
    const double miss = std::exp(-rate * timers[l - 1]);
    if (l < L) {
      chain.transition[l][l - 1] = miss;
      chain.transition[l][l + 1] = 1.0 - miss;
    } else {
      chain.transition[l][l - 1] = miss;
      chain.transition[l][l] = 1.0 - miss;
    }
  }

  // pi_0 = 1 / (1 + sum_j e^{lam T_j} prod_{s<j} (e^{lam T_s} - 1))
  std::vector<double> unnorm(L + 1, 0.0);
  unnorm[0] = 1.0;
  double prod = 1.0;  // prod_{s<l} (e^{lam T_s} - 1)
  double norm = 1.0;
  for (std::size_t l = 1; l <= L; ++l) {
    unnorm[l] = std::exp(rate * timers[l - 1]) * prod;
    norm += unnorm[l];
    prod *= std::expm1(rate * timers[l - 1]);
  }
  chain.stationary.resize(L + 1);
  for (std::size_t l = 0; l <= L; ++l) chain.stationary[l] = unnorm[l] / norm;

  chain.sojourn.resize(L + 1);
  chain.sojourn[0] = 1.0 / rate;
  for (std::size_t l = 1; l <= L; ++l)
    chain.sojourn[l] = -std::expm1(-rate * timers[l - 1]) / rate;
  return chain;
}

EmbeddedChain mcd_chain(double rate, const std::vector<double>& timers) {
  check_params(rate, timers);
  const std::size_t L = timers.size();
  EmbeddedChain chain;
  chain.policy = Policy::MCD;

  chain.transition.assign(L + 1, std::vector<double>(L + 1, 0.0));
  for (std::size_t l = 0; l < L; ++l) {
    const double miss = std::exp(-rate * timers[l]);
    chain.transition[l][0] += miss;
    chain.transition[l][l + 1] = 1.0 - miss;
  }
  {
    const double miss = std::exp(-rate * timers[L - 1]);
    chain.transition[L][0] += miss;
    chain.transition[L][L] += 1.0 - miss;
  }

  // Last-state term written as (e^{lam T_L} - 1) prod_{j<L} (1 - e^{-lam T_j});
  // the product in the printed form runs to |p| so that the vector normalizes.
  std::vector<double> unnorm(L + 1, 0.0);
  unnorm[0] = 1.0;
  double prod = 1.0;
  for (std::size_t l = 1; l + 1 <= L; ++l) {
    prod *= -std::expm1(-rate * timers[l - 1]);
    unnorm[l] = prod;
  }
  unnorm[L] = std::expm1(rate * timers[L - 1]) * prod;
  double norm = 0.0;
  for (double u : unnorm) norm += u;
  chain.stationary.resize(L + 1);
  for (std::size_t l = 0; l <= L; ++l) chain.stationary[l] = unnorm[l] / norm;

  // Request-epoch chain: every epoch gap is one interarrival time.
  chain.sojourn.assign(L + 1, 1.0 / rate);
  return chain;
}

std::vector<double> mcdp_hits_from_timers(double rate,
                                          const std::vector<double>& timers) {
  check_params(rate, timers);
  const std::size_t L = timers.size();
  // h_1 = (e^{lam T_1}-1) / (1 + sum_j prod_{k<=j}(e^{lam T_k}-1)),
  // h_l = h_{l-1} (e^{lam T_l}-1).
  double prod = 1.0;
  double norm = 1.0;
  for (std::size_t j = 0; j < L; ++j) {
    prod *= std::expm1(rate * timers[j]);
    norm += prod;
  }
  std::vector<double> h(L, 0.0);
  h[0] = std::expm1(rate * timers[0]) / norm;
  for (std::size_t l = 1; l < L; ++l)
    h[l] = h[l - 1] * std::expm1(rate * timers[l]);
  return h;
}

std::vector<double> mcd_hits_from_timers(double rate,
                                         const std::vector<double>& timers) {
  const EmbeddedChain chain = mcd_chain(rate, timers);
  return {chain.stationary.begin() + 1, chain.stationary.end()};
}

namespace {

double hit_sum(const std::vector<double>& hits) {
  double s = 0.0;
  for (double h : hits) {
    if (!(h >= 0.0) || h > 1.0)
      throw infeasible_error("ttl: hit probabilities must lie in [0, 1]");
    s += h;
  }
  return s;
}

}  // namespace

std::vector<double> mcdp_timers_from_hits(double rate,
                                          const std::vector<double>& hits) {
  if (!(rate > 0.0)) throw domain_error("ttl: rate must be positive");
  if (hits.empty()) throw domain_error("ttl: empty hit vector");
  const double sum = hit_sum(hits);
  if (sum >= 1.0)
    throw infeasible_error("mcdp inversion: sum of hit probabilities must be < 1");
  const std::size_t L = hits.size();
  std::vector<double> T(L, 0.0);
  T[0] = std::log1p(hits[0] / (1.0 - sum)) / rate;
  for (std::size_t l = 1; l < L; ++l) {
    if (hits[l] == 0.0) continue;  // 0/0 -> 0 convention covers h_{l-1} = 0 too
    if (hits[l - 1] == 0.0)
      throw infeasible_error("mcdp inversion: h_l > 0 requires h_{l-1} > 0");
    T[l] = std::log1p(hits[l] / hits[l - 1]) / rate;
  }
  return T;
}

std::vector<double> mcd_timers_from_hits(double rate,
                                         const std::vector<double>& hits) {
  if (!(rate > 0.0)) throw domain_error("ttl: rate must be positive");
  if (hits.empty()) throw domain_error("ttl: empty hit vector");
  const double sum = hit_sum(hits);
  if (sum >= 1.0)
    throw infeasible_error("mcd inversion: sum of hit probabilities must be < 1");
  const std::size_t L = hits.size();
  const double h0 = 1.0 - sum;
  for (std::size_t l = 1; l + 1 < L; ++l)
    if (hits[l] > hits[l - 1])
      throw infeasible_error("mcd inversion: chain h_1 >= ... >= h_{|p|-1} violated");
  if (L >= 2 && hits[0] > h0)
    throw infeasible_error("mcd inversion: h_1 <= h_0 violated");

  std::vector<double> T(L, 0.0);
  // Positions 1..|p|-1 come from the survival products, the last from the
  // e^{lam T_|p|} factor.
  for (std::size_t l = 0; l + 1 < L; ++l) {
    const double prev = (l == 0) ? h0 : hits[l - 1];
    if (hits[l] == 0.0) continue;
    if (hits[l] >= prev)
      throw infeasible_error("mcd inversion: h_l = h_{l-1} needs an infinite timer");
    T[l] = -std::log1p(-hits[l] / prev) / rate;
  }
  {
    const double prev = (L == 1) ? h0 : hits[L - 2];
    if (hits[L - 1] > 0.0) {
      if (prev == 0.0)
        throw infeasible_error("mcd inversion: h_|p| > 0 requires h_{|p|-1} > 0");
      T[L - 1] = std::log1p(hits[L - 1] / prev) / rate;
    }
  }
  return T;
}

std::vector<double> hits_from_timers(Policy policy, double rate,
                                     const std::vector<double>& timers) {
  return policy == Policy::MCDP ? mcdp_hits_from_timers(rate, timers)
                                : mcd_hits_from_timers(rate, timers);
}

std::vector<double> timers_from_hits(Policy policy, double rate,
                                     const std::vector<double>& hits) {
  return policy == Policy::MCDP ? mcdp_timers_from_hits(rate, hits)
                                : mcd_timers_from_hits(rate, hits);
}

double HitField::miss_probability(std::size_t content) const {
  double s = 0.0;
  for (double h : values[content]) s += h;
  return 1.0 - s;
}

TimerField timers_for_path(Policy policy, const PathSpec& path,
                           const HitField& hits) {
  TimerField timers;
  timers.values.resize(hits.values.size());
  for (std::size_t c = 0; c < hits.values.size(); ++c)
    timers.values[c] = timers_from_hits(policy, path.rates[c], hits.values[c]);
  return timers;
}

}  // namespace cachenet
