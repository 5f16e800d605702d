#include "coex/dcf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "coex/error.hpp"

namespace coex {

std::size_t BackoffChainSpec::state_count() const {
  std::size_t total = 0;
  for (int i = 0; i < stages(); ++i) total += static_cast<std::size_t>(window(i));
  return total;
}

std::size_t BackoffChainSpec::index(int stage, Slot counter) const {
  if (counter < 0 || counter >= window(stage)) {
    throw InvalidParameter("back-off counter " + std::to_string(counter) + " out of range for stage " +
                           std::to_string(stage));
  }
  std::size_t offset = 0;
  for (int i = 0; i < stage; ++i) offset += static_cast<std::size_t>(window(i));
  return offset + static_cast<std::size_t>(counter);
}

std::vector<std::pair<std::size_t, double>> BackoffChainSpec::successors(int stage, Slot counter,
                                                                         double p_fail) const {
  std::vector<std::pair<std::size_t, double>> out;
  if (counter > 0) {
    out.emplace_back(index(stage, counter - 1), 1.0);
    return out;
  }
  const double restart = stage == m_retries ? 1.0 : 1.0 - p_fail;
  const Slot cw_first = window(0);
  for (Slot j = 0; j < cw_first; ++j) {
    out.emplace_back(index(0, j), restart / static_cast<double>(cw_first));
  }
  if (stage < m_retries) {
    const Slot cw_next = window(stage + 1);
    for (Slot j = 0; j < cw_next; ++j) {
      out.emplace_back(index(stage + 1, j), p_fail / static_cast<double>(cw_next));
    }
  }
  return out;
}

// Closed form of the balance equations: b(i,0) = p^i b(0,0) and
// b(i,j) = b(i,0) (CW_i - j) / CW_i.
std::vector<double> stationary_distribution(const BackoffChainSpec& spec, double p_c) {
  if (!(p_c >= 0.0 && p_c < 1.0)) throw InvalidParameter("p_c must lie in [0, 1)");
  std::vector<double> dist(spec.state_count());
  double mass = 0.0;
  double stage_weight = 1.0;
  for (int i = 0; i < spec.stages(); ++i, stage_weight *= p_c) {
    const Slot cw = spec.window(i);
    for (Slot j = 0; j < cw; ++j) {
      const double v = stage_weight * static_cast<double>(cw - j) / static_cast<double>(cw);
      dist[spec.index(i, j)] = v;
      mass += v;
    }
  }
  for (double& v : dist) v /= mass;
  return dist;
}

double transmit_probability(const BackoffChainSpec& spec, double p_c) {
  if (!(p_c >= 0.0 && p_c < 1.0)) throw InvalidParameter("p_c must lie in [0, 1)");
  double heads = 0.0;
  double mass = 0.0;
  double stage_weight = 1.0;
  for (int i = 0; i < spec.stages(); ++i, stage_weight *= p_c) {
    heads += stage_weight;
    mass += stage_weight * (static_cast<double>(spec.window(i)) + 1.0) / 2.0;
  }
  return heads / mass;
}

namespace {

double collision_from_tau(const WifiParams& p, double tau) {
  return 1.0 - std::pow(1.0 - (1.0 - p.lambda) * tau, p.n - 1);
}

// p_c - F(tau(p_c)); increasing in p_c, so it has a single root on [0, 1).
double fixed_point_gap(const WifiParams& p, const BackoffChainSpec& spec, double p_c) {
  return p_c - collision_from_tau(p, transmit_probability(spec, p_c));
}

}  // namespace

double collision_residual(const WifiParams& p, double tau, double p_c) {
  return std::abs(p_c - collision_from_tau(p, tau));
}

DcfSolution solve_fixed_point(const WifiParams& p, const FixedPointOptions& opt) {
  p.validate();
  const auto spec = BackoffChainSpec::from(p);
  DcfSolution sol;
  sol.frame_times = frame_times(p);
  sol.chain = spec;

  double p_c = 0.0;
  double gap = fixed_point_gap(p, spec, p_c);
  int it = 0;
  for (; it < opt.max_iterations && std::abs(gap) >= opt.tolerance; ++it) {
    const double target = p_c - gap;
    p_c = (1.0 - opt.damping) * p_c + opt.damping * target;
    gap = fixed_point_gap(p, spec, p_c);
  }

  if (std::abs(gap) >= opt.tolerance) {
    double lo = 0.0;
    double hi = 1.0 - 1e-15;
    for (int b = 0; b < 200 && hi - lo > 1e-17; ++b, ++it) {
      const double mid = 0.5 * (lo + hi);
      (fixed_point_gap(p, spec, mid) < 0.0 ? lo : hi) = mid;
    }
    p_c = 0.5 * (lo + hi);
    gap = fixed_point_gap(p, spec, p_c);
    if (std::abs(gap) >= opt.tolerance) {
      throw ConvergenceError("DCF fixed point did not converge", std::abs(gap));
    }
  }

  sol.p_c = p_c;
  sol.tau = transmit_probability(spec, p_c);
  sol.residual = collision_residual(p, sol.tau, sol.p_c);
  sol.iterations = it;

  // Another station succeeds when exactly one of the n-1 others transmits.
  const double active = (1.0 - p.lambda) * sol.tau;
  sol.p_s = p.n >= 2 ? (p.n - 1) * active * std::pow(1.0 - active, p.n - 2) : 0.0;
  // At n = 2 the two coincide exactly, so allow the solver tolerance.
  if (sol.p_s > sol.p_c + std::max(1e-12, 10.0 * opt.tolerance)) {
    throw ConvergenceError("solved p_s exceeds p_c; unit-decrement pmf would be invalid",
                           sol.p_s - sol.p_c);
  }
  sol.p_s = std::min(sol.p_s, sol.p_c);

  sol.td_pmf = UnitDecrementPmf{1.0 - sol.p_c, sol.p_c - sol.p_s, sol.p_s, sol.frame_times.t_c,
                                sol.frame_times.t_s};
  sol.mean_td = sol.td_pmf.mean();
  return sol;
}

double mean_unit_decrement(const DcfSolution& sol) { return sol.td_pmf.mean(); }

}  // namespace coex
