#pragma once

#include <vector>

#include "cachenet/model.hpp"
#include "cachenet/ttl.hpp"

namespace cachenet {

/// Scalar cost function: identity, affine a*x + b, or power x^k (k >= 1).
struct CostFunction {
  enum class Kind { Identity, Affine, Power };
  Kind kind = Kind::Identity;
  double a = 1.0;  // affine slope
  double b = 0.0;  // affine offset
  double k = 1.0;  // power exponent

  double operator()(double x) const;
  double derivative(double x) const;
  void validate() const;
};

struct CostSpec {
  CostFunction search;    // c_s
  CostFunction fetch;     // c_f
  CostFunction transfer;  // c_m

  void validate() const;
};

struct CostBreakdown {
  double search = 0.0;
  double fetch = 0.0;
  double transfer = 0.0;
  double total() const { return search + fetch + transfer; }
};

/// S = sum_i lambda_i c_s(sum_{l=0..|p|} (|p|-l+1) h_{il}), h_0 implicit.
double search_cost(const HitField& hits, const std::vector<double>& rates,
                   const CostFunction& cs);

/// M_MCD = sum_i lambda_i c_m(1 - h_{i|p|}).
double transfer_cost_mcd(const HitField& hits, const std::vector<double>& rates,
                         const CostFunction& cm);

/// MCDP transfer rate from the embedded chain: every request/expiry epoch
/// moves the copy except an expiry in cache 1 or a hit in cache |p|.
double transfer_cost_mcdp(const TimerField& timers,
                          const std::vector<double>& rates);

CostBreakdown total_cost(Policy policy, const HitField& hits,
                         const TimerField& timers,
                         const std::vector<double>& rates,
                         const CostSpec& spec);

}  // namespace cachenet
