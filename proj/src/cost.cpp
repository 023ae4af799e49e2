#include "cachenet/cost.hpp"

#include <cmath>

namespace cachenet {

double CostFunction::operator()(double x) const {
  switch (kind) {
    case Kind::Identity: return x;
    case Kind::Affine: return a * x + b;
    case Kind::Power: return std::pow(x, k);
  }
  return x;
}

double CostFunction::derivative(double x) const {
  switch (kind) {
    case Kind::Identity: return 1.0;
    case Kind::Affine: return a;
    case Kind::Power: return k * std::pow(x, k - 1.0);
  }
  return 1.0;
}

void CostFunction::validate() const {
  if (kind == Kind::Affine && a < 0.0)
    throw domain_error("cost: affine slope must be >= 0");
  if (kind == Kind::Power && k < 1.0)
    throw domain_error("cost: power exponent must be >= 1");
}

void CostSpec::validate() const {
  search.validate();
  fetch.validate();
  transfer.validate();
}

double search_cost(const HitField& hits, const std::vector<double>& rates,
                   const CostFunction& cs) {
  double total = 0.0;
  for (std::size_t i = 0; i < hits.values.size(); ++i) {
    const auto& h = hits.values[i];
    const double L = static_cast<double>(h.size());
    double hops = (L + 1.0) * hits.miss_probability(i);
    for (std::size_t l = 1; l <= h.size(); ++l)
      hops += (L - static_cast<double>(l) + 1.0) * h[l - 1];
    total += rates[i] * cs(hops);
  }
  return total;
}

double transfer_cost_mcd(const HitField& hits, const std::vector<double>& rates,
                         const CostFunction& cm) {
  double total = 0.0;
  for (std::size_t i = 0; i < hits.values.size(); ++i)
    total += rates[i] * cm(1.0 - hits.values[i].back());
  return total;
}

double transfer_cost_mcdp(const TimerField& timers,
                          const std::vector<double>& rates) {
  double total = 0.0;
  for (std::size_t i = 0; i < timers.values.size(); ++i) {
    const auto& T = timers.values[i];
    const double lam = rates[i];
    const EmbeddedChain chain = mcdp_chain(lam, T);
    const std::size_t L = T.size();
    const double no_move =
        chain.stationary[1] * std::exp(-lam * T[0]) +
        chain.stationary[L] * -std::expm1(-lam * T[L - 1]);
    double cycle = 0.0;
    for (std::size_t l = 0; l <= L; ++l)
      cycle += chain.stationary[l] * chain.sojourn[l];
    total += (1.0 - no_move) / cycle;
  }
  return total;
}

CostBreakdown total_cost(Policy policy, const HitField& hits,
                         const TimerField& timers,
                         const std::vector<double>& rates,
                         const CostSpec& spec) {
  CostBreakdown out;
  out.search = search_cost(hits, rates, spec.search);
  out.fetch = search_cost(hits, rates, spec.fetch);
  out.transfer = policy == Policy::MCD
                     ? transfer_cost_mcd(hits, rates, spec.transfer)
                     : transfer_cost_mcdp(timers, rates);
  return out;
}

}  // namespace cachenet
