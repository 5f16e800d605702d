#pragma once

// Slot-synchronous simulation of n saturated DCF stations without LTE-U.
// Only used to cross-check the analytical background-traffic model.

#include <cstdint>

#include "coex/timing.hpp"

namespace coex {

struct OracleEstimate {
  double p_c = 0.0;      // collided transmissions / transmissions
  double tau = 0.0;      // transmissions / (n * contention slots)
  double mean_td = 0.0;  // mean unit-decrement time seen by a counting station
  // Empirical unit-decrement pmf over {1, T_c, T_s}.
  double td_idle = 0.0;
  double td_collision = 0.0;
  double td_success = 0.0;
  std::uint64_t transmissions = 0;
  std::uint64_t collisions = 0;
  std::uint64_t contention_slots = 0;
  Slot elapsed = 0;
};

/// Runs until at least `horizon_slots` of channel time have elapsed.
OracleEstimate simulate_bss(const WifiParams& params, Slot horizon_slots, std::uint64_t seed);

}  // namespace coex
