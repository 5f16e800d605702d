#pragma once

// Background-traffic model: the binary exponential back-off chain of one
// saturated station, and the fixed point coupling its transmit probability
// to the collision probability seen by the other n-1 stations.

#include <cstddef>
#include <utility>
#include <vector>

#include "coex/timing.hpp"

namespace coex {

/// Back-off chain with stages 0..m_retries; stage i draws its counter
/// uniformly from [0, CW_i). After the attempt at the last stage the packet
/// leaves the chain (delivered or dropped) and a fresh stage-0 draw follows.
struct BackoffChainSpec {
  int cw0 = 16;
  int m_retries = 6;

  static BackoffChainSpec from(const WifiParams& p) { return {p.cw0, p.m_retries}; }

  Slot window(int stage) const { return contention_window(cw0, m_retries, stage); }
  int stages() const { return m_retries + 1; }
  std::size_t state_count() const;
  /// Flat index of state (stage, counter); states are laid out stage by stage.
  std::size_t index(int stage, Slot counter) const;
  /// Outgoing transitions of (stage, counter) given the per-attempt failure probability.
  std::vector<std::pair<std::size_t, double>> successors(int stage, Slot counter,
                                                         double p_fail) const;
};

/// Stationary distribution over BackoffChainSpec::index order.
std::vector<double> stationary_distribution(const BackoffChainSpec& spec, double p_c);

/// Per-slot transmit probability: total stationary mass on the (i, 0) states.
double transmit_probability(const BackoffChainSpec& spec, double p_c);

/// Distribution of the time one back-off decrement takes.
struct UnitDecrementPmf {
  double p_idle = 1.0;       // lasts 1 slot
  double p_collision = 0.0;  // lasts T_c
  double p_success = 0.0;    // lasts T_s
  Slot t_c = 1;
  Slot t_s = 1;

  double mean() const {
    return p_idle + p_collision * static_cast<double>(t_c) + p_success * static_cast<double>(t_s);
  }
};

struct DcfSolution {
  double tau = 0.0;
  double p_c = 0.0;
  double p_s = 0.0;
  UnitDecrementPmf td_pmf;
  double mean_td = 1.0;
  FrameTimes frame_times;
  BackoffChainSpec chain;
  double residual = 0.0;
  int iterations = 0;
};

struct FixedPointOptions {
  double tolerance = 1e-10;
  int max_iterations = 10'000;
  double damping = 0.5;
};

DcfSolution solve_fixed_point(const WifiParams& p, const FixedPointOptions& opt = {});

/// Residual of the collision equation at (tau, p_c).
double collision_residual(const WifiParams& p, double tau, double p_c);

double mean_unit_decrement(const DcfSolution& sol);

}  // namespace coex
