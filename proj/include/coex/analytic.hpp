#pragma once

// Exact finite-instance analysis of the interfered station:
//   1. conditional finish-time pmf for every start slot t0 in one period,
//   2. the Markov chain of start slots modulo the period and its stationary law,
//   3. stationary averages of the conditional means.
// Only tractable for small contention windows; larger instances are refused.

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "coex/dcf.hpp"
#include "coex/timeline.hpp"
#include "coex/timing.hpp"

namespace coex {

struct AnalyticOptions {
  std::uint64_t path_budget = 1'000'000;
  std::size_t max_states = 4096;
  int threads = 1;
};

/// Number of terminal outcomes (back-off vector plus final result) of one packet.
std::uint64_t outcome_paths(const BackoffChainSpec& spec);

/// Probability of drawing `w` and seeing exactly its outcome sequence: every
/// attempt but the last fails, the last one ends as `final_success` says.
double backoff_vector_prob(const BackoffVector& w, bool final_success, Slot t0,
                           const DcfSolution& sol, const DutyCycle& dc, double q, Regime regime);

struct ConditionalDist {
  Slot t0 = 0;
  std::map<Slot, double> te_pmf;
  double p_drop = 0.0;
  double mean_d = 0.0;          // E[D | t0] in slots
  double mean_inv_d = 0.0;      // E[1/D | t0]
  double mean_r = 0.0;          // L (1 - p_drop) E[1/D | t0]
  double mean_r_renewal = 0.0;  // L (1 - p_drop) / E[D | t0]
};

ConditionalDist conditional_dist(Slot t0, const WifiParams& params, const DcfSolution& sol,
                                 const DutyCycle& dc, double q, Regime regime,
                                 const AnalyticOptions& opt = {});

/// Conditional distributions for t0 = 0..T-1 (one entry for the reference cycle).
std::vector<ConditionalDist> conditional_dists(const WifiParams& params, const DcfSolution& sol,
                                               const DutyCycle& dc, double q, Regime regime,
                                               const AnalyticOptions& opt = {});

struct StartTimeChain {
  Slot size = 1;
  std::vector<double> transition;  // row-major size x size
  std::vector<double> pi;
  /// False when several closed classes exist; pi is then the limit reached from t0 = 0.
  bool unique = true;
  std::vector<std::vector<Slot>> closed_classes;
  double residual = 0.0;  // |pi P - pi|_1

  double at(Slot from, Slot to) const {
    return transition[static_cast<std::size_t>(from * size + to)];
  }
};

StartTimeChain stationary_start_distribution(std::span<const ConditionalDist> dists, Slot period);
StartTimeChain stationary_start_distribution(const WifiParams& params, const DcfSolution& sol,
                                             const DutyCycle& dc, double q, Regime regime,
                                             const AnalyticOptions& opt = {});

struct UnconditionalMeans {
  double mean_r = 0.0;          // stationary average of E[R | t0]
  double mean_d = 0.0;
  double mean_r_renewal = 0.0;  // sum pi L (1 - p_drop) / sum pi E[D | t0]
  double p_drop = 0.0;
};

UnconditionalMeans unconditional_means(const StartTimeChain& chain,
                                       std::span<const ConditionalDist> dists);

struct ExactResult {
  std::vector<ConditionalDist> dists;
  StartTimeChain chain;
  UnconditionalMeans means;
};

ExactResult solve_exact(const WifiParams& params, const DcfSolution& sol, const DutyCycle& dc,
                        double q, Regime regime, const AnalyticOptions& opt = {});

/// No-LTE service time and drop probability summed stage by stage.
struct ReferenceMeans {
  double mean_d = 0.0;
  double p_drop = 0.0;
  double mean_r_renewal = 0.0;
};

ReferenceMeans reference_closed_form(const WifiParams& params, const DcfSolution& sol);

}  // namespace coex
