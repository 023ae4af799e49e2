#pragma once

#include <string>
#include <vector>

#include "cachenet/model.hpp"

namespace cachenet {

enum class Policy { MCDP, MCD };

std::string to_string(Policy p);

/// Thrown when a hit-probability vector cannot be inverted to finite timers.
struct infeasible_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Embedded chain over states {0..|p|}, state 0 meaning "at the server".
/// For MCDP the chain is observed at request/expiry epochs and carries
/// renewal-reward sojourn times; for MCD it is observed at request epochs.
struct EmbeddedChain {
  Policy policy;
  std::vector<std::vector<double>> transition;  // (|p|+1) x (|p|+1), rows sum to 1
  std::vector<double> stationary;               // closed form
  std::vector<double> sojourn;                  // expected epoch gap per state

  std::size_t num_states() const { return stationary.size(); }
};

EmbeddedChain mcdp_chain(double rate, const std::vector<double>& timers);
EmbeddedChain mcd_chain(double rate, const std::vector<double>& timers);

/// Stationary in-cache probabilities h_1..h_|p| as a function of timers.
std::vector<double> mcdp_hits_from_timers(double rate,
                                          const std::vector<double>& timers);
std::vector<double> mcd_hits_from_timers(double rate,
                                         const std::vector<double>& timers);

/// Inverse maps. Require sum(h) < 1 strictly; 0/0 positions map to T = 0.
std::vector<double> mcdp_timers_from_hits(double rate,
                                          const std::vector<double>& hits);
std::vector<double> mcd_timers_from_hits(double rate,
                                         const std::vector<double>& hits);

std::vector<double> hits_from_timers(Policy policy, double rate,
                                     const std::vector<double>& timers);
std::vector<double> timers_from_hits(Policy policy, double rate,
                                     const std::vector<double>& hits);

/// h_{il} per path, indexed [content][position]; h_0 is implicit.
struct HitField {
  std::vector<std::vector<double>> values;

  double miss_probability(std::size_t content) const;
};

struct TimerField {
  std::vector<std::vector<double>> values;
};

TimerField timers_for_path(Policy policy, const PathSpec& path,
                           const HitField& hits);

}  // namespace cachenet
