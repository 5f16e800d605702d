#include "coex/analytic.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "coex/error.hpp"

namespace coex {

std::uint64_t outcome_paths(const BackoffChainSpec& spec) {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t total = 0;
  std::uint64_t vectors = 1;
  for (int i = 0; i < spec.stages(); ++i) {
    const auto cw = static_cast<std::uint64_t>(spec.window(i));
    vectors = vectors > kMax / cw ? kMax : vectors * cw;
    const std::uint64_t leaves = i + 1 == spec.stages() ? (vectors > kMax / 2 ? kMax : 2 * vectors)
                                                        : vectors;
    total = total > kMax - leaves ? kMax : total + leaves;
  }
  return total;
}

double backoff_vector_prob(const BackoffVector& w, bool final_success, Slot t0,
                           const DcfSolution& sol, const DutyCycle& dc, double q, Regime regime) {
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidParameter("q must lie in [0, 1]");
  // Attempt times do not depend on how the last attempt ends.
  const auto rec = replay(regime, w, t0, sol, dc, true);
  if (!final_success && w.attempts() != sol.chain.stages()) {
    throw InvalidParameter("only the attempt at stage M may end in failure");
  }
  double prob = 1.0;
  for (int i = 0; i < w.attempts(); ++i) {
    const double s = attempt_success_probability(sol.p_c, q, rec.g_flags[i]);
    const bool last = i + 1 == w.attempts();
    const double outcome = last && final_success ? s : 1.0 - s;
    prob *= outcome / static_cast<double>(sol.chain.window(i));
  }
  return prob;
}

ConditionalDist conditional_dist(Slot t0, const WifiParams& params, const DcfSolution& sol,
                                 const DutyCycle& dc, double q, Regime regime,
                                 const AnalyticOptions& opt) {
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidParameter("q must lie in [0, 1]");
  const auto& chain = sol.chain;
  const auto paths = outcome_paths(chain);
  if (paths > opt.path_budget) {
    throw BudgetExceeded("exact enumeration needs " + std::to_string(paths) +
                         " outcome paths (budget " + std::to_string(opt.path_budget) +
                         "); reduce cw0 or m_retries");
  }
  const Slot t_s = sol.frame_times.t_s;
  const Slot t_c = sol.frame_times.t_c;
  const Slot decrement = decrement_slots(sol);

  ConditionalDist out;
  out.t0 = t0;
  // Distribution of the clock at the start of each back-off stage.
  std::map<Slot, double> frontier{{t0, 1.0}};
  for (int i = 0; i < chain.stages(); ++i) {
    const auto cw = chain.window(i);
    const double draw_p = 1.0 / static_cast<double>(cw);
    const bool last_stage = i == chain.m_retries;
    std::map<Slot, double> next;
    for (const auto& [start, p] : frontier) {
      for (Slot w = 0; w < cw; ++w) {
        AttemptClock clock(regime, dc, decrement, start);
        const Slot zeta = clock.backoff(w);
        const double s = attempt_success_probability(sol.p_c, q, overlap_flag(zeta, t_s, dc));
        const double pw = p * draw_p;
        if (s > 0.0) out.te_pmf[zeta + t_s] += pw * s;
        if (s < 1.0) {
          if (last_stage) {
            out.te_pmf[zeta + t_c] += pw * (1.0 - s);
            out.p_drop += pw * (1.0 - s);
          } else {
            next[zeta + t_c] += pw * (1.0 - s);
          }
        }
      }
    }
    frontier = std::move(next);
  }

  for (const auto& [te, p] : out.te_pmf) {
    const auto d = static_cast<double>(te - t0);
    out.mean_d += p * d;
    out.mean_inv_d += p / d;
  }
  const double bits = static_cast<double>(params.payload_bits);
  out.mean_r = bits * (1.0 - out.p_drop) * out.mean_inv_d;
  out.mean_r_renewal = bits * (1.0 - out.p_drop) / out.mean_d;
  return out;
}

std::vector<ConditionalDist> conditional_dists(const WifiParams& params, const DcfSolution& sol,
                                               const DutyCycle& dc, double q, Regime regime,
                                               const AnalyticOptions& opt) {
  const Slot states = dc.is_reference() ? 1 : dc.period();
  if (static_cast<std::size_t>(states) > opt.max_states) {
    throw BudgetExceeded("start-time chain needs " + std::to_string(states) + " states (budget " +
                         std::to_string(opt.max_states) + "); shorten the period");
  }
  std::vector<ConditionalDist> dists(static_cast<std::size_t>(states));
  const int workers = std::max(1, std::min<int>(opt.threads, static_cast<int>(states)));
  auto work = [&](int worker) {
    for (Slot t0 = worker; t0 < states; t0 += workers) {
      dists[static_cast<std::size_t>(t0)] = conditional_dist(t0, params, sol, dc, q, regime, opt);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (int k = 0; k < workers; ++k) pool.emplace_back(work, k);
  }
  return dists;
}

namespace {

// Strongly connected components (iterative Tarjan) over edges with positive probability.
std::vector<int> components(const std::vector<double>& p, Slot n, int& count) {
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<Slot> stack, call;
  std::vector<Slot> cursor(n, 0);
  int next_index = 0;
  count = 0;
  for (Slot root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    call.push_back(root);
    while (!call.empty()) {
      const Slot v = call.back();
      if (index[v] < 0) {
        index[v] = low[v] = next_index++;
        stack.push_back(v);
        on_stack[v] = true;
      }
      bool descended = false;
      for (Slot& u = cursor[v]; u < n; ++u) {
        if (p[v * n + u] <= 0.0) continue;
        if (index[u] < 0) {
          call.push_back(u);
          descended = true;
          ++u;
          break;
        }
        if (on_stack[u]) low[v] = std::min(low[v], index[u]);
      }
      if (descended) continue;
      call.pop_back();
      if (!call.empty()) low[call.back()] = std::min(low[call.back()], low[v]);
      if (low[v] == index[v]) {
        Slot u;
        do {
          u = stack.back();
          stack.pop_back();
          on_stack[u] = false;
          comp[u] = count;
        } while (u != v);
        ++count;
      }
    }
  }
  return comp;
}

// Stationary law of an irreducible sub-chain.
std::vector<double> solve_closed_class(const std::vector<double>& p, Slot n,
                                       const std::vector<Slot>& members) {
  const auto k = static_cast<Eigen::Index>(members.size());
  Eigen::MatrixXd a(k, k);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index c = 0; c < k; ++c) {
      a(r, c) = p[members[c] * n + members[r]] - (r == c ? 1.0 : 0.0);
    }
  }
  a.row(k - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
  rhs(k - 1) = 1.0;
  const Eigen::VectorXd x = a.partialPivLu().solve(rhs);
  std::vector<double> out(x.data(), x.data() + k);
  for (double& v : out) v = std::max(v, 0.0);
  return out;
}

}  // namespace

StartTimeChain stationary_start_distribution(std::span<const ConditionalDist> dists, Slot period) {
  if (period < 1) throw InvalidParameter("chain period must be >= 1");
  if (dists.size() != static_cast<std::size_t>(period)) {
    throw InvalidParameter("need one conditional distribution per start slot");
  }
  const Slot n = period;
  StartTimeChain chain;
  chain.size = n;
  chain.transition.assign(static_cast<std::size_t>(n * n), 0.0);
  for (Slot from = 0; from < n; ++from) {
    for (const auto& [te, p] : dists[static_cast<std::size_t>(from)].te_pmf) {
      const Slot to = ((te % n) + n) % n;
      chain.transition[static_cast<std::size_t>(from * n + to)] += p;
    }
  }
  const auto& tp = chain.transition;

  int comp_count = 0;
  const auto comp = components(tp, n, comp_count);
  std::vector<bool> leaks(comp_count, false);
  for (Slot v = 0; v < n; ++v) {
    for (Slot u = 0; u < n; ++u) {
      if (tp[v * n + u] > 0.0 && comp[v] != comp[u]) leaks[comp[v]] = true;
    }
  }
  std::vector<int> class_of(comp_count, -1);
  for (Slot v = 0; v < n; ++v) {
    if (leaks[comp[v]]) continue;
    if (class_of[comp[v]] < 0) {
      class_of[comp[v]] = static_cast<int>(chain.closed_classes.size());
      chain.closed_classes.emplace_back();
    }
    chain.closed_classes[class_of[comp[v]]].push_back(v);
  }
  chain.unique = chain.closed_classes.size() == 1;

  // Probability of ending up in each closed class when starting from slot 0.
  std::vector<double> absorb(chain.closed_classes.size(), 0.0);
  if (class_of[comp[0]] >= 0) {
    absorb[class_of[comp[0]]] = 1.0;
  } else {
    std::vector<Slot> transient;
    std::vector<Eigen::Index> pos(n, -1);
    for (Slot v = 0; v < n; ++v) {
      if (class_of[comp[v]] < 0) {
        pos[v] = static_cast<Eigen::Index>(transient.size());
        transient.push_back(v);
      }
    }
    const auto k = static_cast<Eigen::Index>(transient.size());
    const auto classes = static_cast<Eigen::Index>(chain.closed_classes.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(k, k);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(k, classes);
    for (Eigen::Index r = 0; r < k; ++r) {
      const Slot v = transient[r];
      for (Slot u = 0; u < n; ++u) {
        const double p = tp[v * n + u];
        if (p <= 0.0) continue;
        if (pos[u] >= 0) {
          a(r, pos[u]) -= p;
        } else {
          rhs(r, class_of[comp[u]]) += p;
        }
      }
    }
    const Eigen::MatrixXd x = a.partialPivLu().solve(rhs);
    for (Eigen::Index c = 0; c < classes; ++c) absorb[c] = x(pos[0], c);
  }

  chain.pi.assign(static_cast<std::size_t>(n), 0.0);
  for (std::size_t c = 0; c < chain.closed_classes.size(); ++c) {
    if (absorb[c] <= 0.0) continue;
    const auto& members = chain.closed_classes[c];
    const auto local = solve_closed_class(tp, n, members);
    for (std::size_t k = 0; k < members.size(); ++k) chain.pi[members[k]] += absorb[c] * local[k];
  }
  double mass = 0.0;
  for (double v : chain.pi) mass += v;
  for (double& v : chain.pi) v /= mass;

  for (Slot u = 0; u < n; ++u) {
    double flow = 0.0;
    for (Slot v = 0; v < n; ++v) flow += chain.pi[v] * tp[v * n + u];
    chain.residual += std::abs(flow - chain.pi[u]);
  }
  return chain;
}

StartTimeChain stationary_start_distribution(const WifiParams& params, const DcfSolution& sol,
                                             const DutyCycle& dc, double q, Regime regime,
                                             const AnalyticOptions& opt) {
  const auto dists = conditional_dists(params, sol, dc, q, regime, opt);
  return stationary_start_distribution(dists, static_cast<Slot>(dists.size()));
}

UnconditionalMeans unconditional_means(const StartTimeChain& chain,
                                       std::span<const ConditionalDist> dists) {
  if (dists.size() != chain.pi.size()) {
    throw InvalidParameter("chain and conditional distributions disagree on the period");
  }
  UnconditionalMeans m;
  double delivered_bits = 0.0;
  for (std::size_t t = 0; t < dists.size(); ++t) {
    const double w = chain.pi[t];
    m.mean_r += w * dists[t].mean_r;
    m.mean_d += w * dists[t].mean_d;
    m.p_drop += w * dists[t].p_drop;
    delivered_bits += w * dists[t].mean_r_renewal * dists[t].mean_d;
  }
  m.mean_r_renewal = delivered_bits / m.mean_d;
  return m;
}

ExactResult solve_exact(const WifiParams& params, const DcfSolution& sol, const DutyCycle& dc,
                        double q, Regime regime, const AnalyticOptions& opt) {
  ExactResult out;
  out.dists = conditional_dists(params, sol, dc, q, regime, opt);
  out.chain = stationary_start_distribution(out.dists, static_cast<Slot>(out.dists.size()));
  out.means = unconditional_means(out.chain, out.dists);
  return out;
}

ReferenceMeans reference_closed_form(const WifiParams& params, const DcfSolution& sol) {
  const double d = static_cast<double>(decrement_slots(sol));
  const double t_s = static_cast<double>(sol.frame_times.t_s);
  const double t_c = static_cast<double>(sol.frame_times.t_c);
  const double p = sol.p_c;
  ReferenceMeans out;
  double reach = 1.0;  // probability that stage i is attempted
  for (int i = 0; i < sol.chain.stages(); ++i, reach *= p) {
    const double mean_draw = (static_cast<double>(sol.chain.window(i)) - 1.0) / 2.0;
    out.mean_d += reach * (d * mean_draw + (1.0 - p) * t_s + p * t_c);
  }
  out.p_drop = reach;
  out.mean_r_renewal = static_cast<double>(params.payload_bits) * (1.0 - out.p_drop) / out.mean_d;
  return out;
}

}  // namespace coex
