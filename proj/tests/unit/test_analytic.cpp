#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "coex/analytic.hpp"
#include "coex/error.hpp"

using namespace coex;

namespace {

WifiParams reduced_params() {
  WifiParams p;
  p.cw0 = 4;
  p.m_retries = 2;
  p.phy_rate_bps = 6e6;
  p.payload_bits = 1024;
  return p;
}

std::vector<BackoffVector> all_vectors(const BackoffChainSpec& spec) {
  std::vector<BackoffVector> out;
  std::vector<BackoffVector> frontier{BackoffVector{}};
  for (int i = 0; i < spec.stages(); ++i) {
    std::vector<BackoffVector> next;
    for (const auto& v : frontier) {
      for (Slot j = 0; j < spec.window(i); ++j) {
        auto ext = v;
        ext.w.push_back(j);
        out.push_back(ext);
        next.push_back(ext);
      }
    }
    frontier = std::move(next);
  }
  return out;
}

// Outcome-by-outcome enumeration of the finish-time pmf.
std::map<Slot, double> brute_force_pmf(Slot t0, const DcfSolution& sol, const DutyCycle& dc,
                                       double q, Regime regime, double& p_drop) {
  std::map<Slot, double> pmf;
  p_drop = 0.0;
  for (const auto& w : all_vectors(sol.chain)) {
    const double ok = backoff_vector_prob(w, true, t0, sol, dc, q, regime);
    pmf[replay(regime, w, t0, sol, dc, true).te] += ok;
    if (w.attempts() == sol.chain.stages()) {
      const double bad = backoff_vector_prob(w, false, t0, sol, dc, q, regime);
      pmf[replay(regime, w, t0, sol, dc, false).te] += bad;
      p_drop += bad;
    }
  }
  return pmf;
}

double total(const std::map<Slot, double>& pmf) {
  double s = 0.0;
  for (const auto& [k, v] : pmf) s += v;
  return s;
}

}  // namespace

TEST_CASE("outcome path counts") {
  CHECK(outcome_paths(BackoffChainSpec{4, 2}) == 4 + 32 + 2 * 512);
  CHECK(outcome_paths(BackoffChainSpec{2, 0}) == 4);
  CHECK(outcome_paths(BackoffChainSpec{16, 6}) > 100'000'000'000ULL);
  CHECK(outcome_paths(BackoffChainSpec{1024, 20}) == std::numeric_limits<std::uint64_t>::max());
}

TEST_CASE("back-off vector probabilities") {
  const auto p = reduced_params();
  const auto sol = solve_fixed_point(p);
  const auto dc = DutyCycle::make(200, 0.3);

  SUBCASE("without LTE collisions a single attempt is (1 - p_c) / CW_0") {
    for (Slot j = 0; j < 4; ++j) {
      CHECK(backoff_vector_prob(BackoffVector{{j}}, true, 17, sol, dc, 0.0, Regime::kWeak) ==
            doctest::Approx((1.0 - sol.p_c) / 4.0));
    }
  }
  SUBCASE("all outcomes sum to one") {
    for (Regime regime : {Regime::kWeak, Regime::kStrong}) {
      for (Slot t0 : {0, 33, 150}) {
        for (double q : {0.0, 0.6, 1.0}) {
          double drop = 0.0;
          CHECK(total(brute_force_pmf(t0, sol, dc, q, regime, drop)) == doctest::Approx(1.0).epsilon(1e-12));
        }
      }
    }
  }
  SUBCASE("failure is only an outcome of the last stage") {
    CHECK_THROWS_AS(backoff_vector_prob(BackoffVector{{1}}, false, 0, sol, dc, 1.0, Regime::kWeak),
                    InvalidParameter);
  }
}

TEST_CASE("hand-computed table for CW0 = 2, M = 1") {
  // d = T_s = T_c = 1, T = 4 with ON = {0, 1}, p_c = 0.2, q = 0.5, weak, t0 = 0.
  // zeta_0 = w_0 is always in ON: s = 0.4. zeta_1 = w_0 + w_1 + 1, OFF for 2 and 3.
  DcfSolution sol;
  sol.p_c = 0.2;
  sol.mean_td = 1.0;
  sol.frame_times = {1, 1};
  sol.chain = {2, 1};
  WifiParams p;
  p.payload_bits = 100;
  const auto dc = DutyCycle::make(4, 0.5);
  const double q = 0.5;

  CHECK(backoff_vector_prob(BackoffVector{{0}}, true, 0, sol, dc, q, Regime::kWeak) == doctest::Approx(0.2));
  CHECK(backoff_vector_prob(BackoffVector{{1}}, true, 0, sol, dc, q, Regime::kWeak) == doctest::Approx(0.2));
  const double on_ok = 0.03, on_drop = 0.045, off_ok = 0.06, off_drop = 0.015;
  const struct {
    Slot w0, w1;
    bool off;
  } table[] = {{0, 0, false}, {0, 1, true},  {0, 2, true},  {0, 3, false},
               {1, 0, true},  {1, 1, true},  {1, 2, false}, {1, 3, false}};
  for (const auto& row : table) {
    const BackoffVector w{{row.w0, row.w1}};
    CHECK(backoff_vector_prob(w, true, 0, sol, dc, q, Regime::kWeak) ==
          doctest::Approx(row.off ? off_ok : on_ok));
    CHECK(backoff_vector_prob(w, false, 0, sol, dc, q, Regime::kWeak) ==
          doctest::Approx(row.off ? off_drop : on_drop));
  }

  const auto cd = conditional_dist(0, p, sol, dc, q, Regime::kWeak);
  const std::map<Slot, double> expect{{1, 0.2}, {2, 0.275}, {3, 0.15}, {4, 0.15}, {5, 0.15}, {6, 0.075}};
  REQUIRE(cd.te_pmf.size() == expect.size());
  for (const auto& [te, pr] : expect) CHECK(cd.te_pmf.at(te) == doctest::Approx(pr));
  CHECK(cd.p_drop == doctest::Approx(0.24));
  const double mean_d = 0.2 * 1 + 0.275 * 2 + 0.15 * (3 + 4 + 5) + 0.075 * 6;
  CHECK(cd.mean_d == doctest::Approx(mean_d));
  const double inv = 0.2 / 1 + 0.275 / 2 + 0.15 * (1.0 / 3 + 1.0 / 4 + 1.0 / 5) + 0.075 / 6;
  CHECK(cd.mean_inv_d == doctest::Approx(inv));
  CHECK(cd.mean_r == doctest::Approx(100 * 0.76 * inv));
  CHECK(cd.mean_r_renewal == doctest::Approx(100 * 0.76 / mean_d));
}

TEST_CASE("stage-wise enumeration equals the outcome-by-outcome sum") {
  const auto p = reduced_params();
  const auto sol = solve_fixed_point(p);
  for (double alpha : {0.3, 0.6}) {
    const auto dc = DutyCycle::make(200, alpha);
    for (Regime regime : {Regime::kWeak, Regime::kStrong}) {
      for (Slot t0 : {0, 1, 59, 60, 61, 140, 199}) {
        for (double q : {0.0, 0.4, 1.0}) {
          double drop = 0.0;
          const auto brute = brute_force_pmf(t0, sol, dc, q, regime, drop);
          const auto cd = conditional_dist(t0, p, sol, dc, q, regime);
          CHECK(cd.p_drop == doctest::Approx(drop).epsilon(1e-12));
          double err = 0.0;
          for (const auto& [te, pr] : brute) {
            const auto it = cd.te_pmf.find(te);
            err += std::abs(pr - (it == cd.te_pmf.end() ? 0.0 : it->second));
          }
          CHECK(err < 1e-12);
          CHECK(total(cd.te_pmf) == doctest::Approx(1.0).epsilon(1e-9));
        }
      }
    }
  }
}

TEST_CASE("always-on LTE with q = 1 drops everything") {
  const auto p = reduced_params();
  const auto sol = solve_fixed_point(p);
  const auto cd = conditional_dist(0, p, sol, DutyCycle::make(200, 1.0), 1.0, Regime::kWeak);
  CHECK(cd.p_drop == doctest::Approx(1.0));
  CHECK(cd.mean_r == 0.0);
  CHECK(cd.mean_r_renewal == 0.0);
}

TEST_CASE("without LTE collisions the duty cycle is irrelevant") {
  const auto p = reduced_params();
  const auto sol = solve_fixed_point(p);
  const auto dc = DutyCycle::make(121, 0.45);
  const auto dists = conditional_dists(p, sol, dc, 0.0, Regime::kWeak);
  for (const auto& cd : dists) {
    CHECK(cd.p_drop == doctest::Approx(std::pow(sol.p_c, 3)).epsilon(1e-12));
    REQUIRE(cd.te_pmf.size() == dists[0].te_pmf.size());
    auto a = cd.te_pmf.begin();
    for (auto b = dists[0].te_pmf.begin(); b != dists[0].te_pmf.end(); ++a, ++b) {
      CHECK(a->first - cd.t0 == b->first);
      CHECK(a->second == doctest::Approx(b->second).epsilon(1e-12));
    }
  }
  const auto chain = stationary_start_distribution(dists, 121);
  // Circulant transitions: the uniform vector is stationary.
  for (Slot u = 0; u < 121; ++u) {
    double flow = 0.0;
    for (Slot v = 0; v < 121; ++v) flow += chain.at(v, u) / 121.0;
    CHECK(flow == doctest::Approx(1.0 / 121.0).epsilon(1e-9));
  }
  // An odd period makes the residue chain irreducible here, so it is the only one.
  CHECK(chain.unique);
  for (double v : chain.pi) CHECK(v == doctest::Approx(1.0 / 121.0).epsilon(1e-9));
  CHECK(chain.residual < 1e-9);

  // The stationary averages reduce to the reference.
  const auto means = unconditional_means(chain, dists);
  const auto ref = reference_closed_form(p, sol);
  CHECK(means.mean_d == doctest::Approx(ref.mean_d).epsilon(1e-9));
  CHECK(means.p_drop == doctest::Approx(ref.p_drop).epsilon(1e-9));
}

TEST_CASE("reference cycle against the stage-wise recursion") {
  for (auto [cw0, m] : {std::pair{4, 2}, std::pair{8, 2}, std::pair{2, 4}}) {
    auto p = reduced_params();
    p.cw0 = cw0;
    p.m_retries = m;
    const auto sol = solve_fixed_point(p);
    const auto dists = conditional_dists(p, sol, DutyCycle::reference(), 1.0, Regime::kStrong);
    REQUIRE(dists.size() == 1);
    const auto ref = reference_closed_form(p, sol);
    CHECK(dists[0].mean_d == doctest::Approx(ref.mean_d).epsilon(1e-9));
    CHECK(dists[0].p_drop == doctest::Approx(std::pow(sol.p_c, m + 1)).epsilon(1e-12));
    CHECK(ref.p_drop == doctest::Approx(std::pow(sol.p_c, m + 1)).epsilon(1e-12));
    CHECK(dists[0].mean_r_renewal == doctest::Approx(ref.mean_r_renewal).epsilon(1e-9));
  }
}

TEST_CASE("start-slot chain") {
  const auto p = reduced_params();
  const auto sol = solve_fixed_point(p);
  for (Regime regime : {Regime::kWeak, Regime::kStrong}) {
    CAPTURE(regime == Regime::kWeak);
    const auto dc = DutyCycle::make(200, 0.3);
    const auto dists = conditional_dists(p, sol, dc, 1.0, regime);
    const auto chain = stationary_start_distribution(dists, 200);
    CHECK(chain.residual < 1e-9);
    CHECK(std::accumulate(chain.pi.begin(), chain.pi.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : chain.pi) CHECK(v >= -1e-15);
    for (Slot from = 0; from < 200; ++from) {
      double row = 0.0;
      for (Slot to = 0; to < 200; ++to) row += chain.at(from, to);
      CHECK(row == doctest::Approx(1.0).epsilon(1e-9));
    }

    // Independent check: lazy power iteration from slot 0.
    std::vector<double> x(200, 0.0);
    x[0] = 1.0;
    for (int it = 0; it < 20000; ++it) {
      std::vector<double> y(200, 0.0);
      for (Slot v = 0; v < 200; ++v) {
        if (x[v] == 0.0) continue;
        for (Slot u = 0; u < 200; ++u) y[u] += x[v] * chain.at(v, u);
      }
      for (Slot k = 0; k < 200; ++k) x[k] = 0.5 * (x[k] + y[k]);
    }
    double err = 0.0;
    for (Slot k = 0; k < 200; ++k) err += std::abs(x[k] - chain.pi[k]);
    CHECK(err < 1e-8);

    const auto again = stationary_start_distribution(p, sol, dc, 1.0, regime);
    CHECK(again.pi == chain.pi);
  }
}

TEST_CASE("reducible chain: the limit from slot 0 is used") {
  // Every finish time is even, so odd start slots never follow even ones.
  std::vector<ConditionalDist> dists(4);
  for (Slot t = 0; t < 4; ++t) {
    dists[t].t0 = t;
    dists[t].te_pmf = {{t + 2, 0.5}, {t + 4, 0.5}};
    dists[t].mean_d = 3.0;
  }
  const auto chain = stationary_start_distribution(dists, 4);
  CHECK_FALSE(chain.unique);
  CHECK(chain.closed_classes.size() == 2);
  CHECK(chain.pi[0] == doctest::Approx(0.5));
  CHECK(chain.pi[2] == doctest::Approx(0.5));
  CHECK(chain.pi[1] == 0.0);

  // A transient start slot is weighted by its absorption probabilities.
  std::vector<ConditionalDist> leak(3);
  leak[0].te_pmf = {{1, 0.25}, {2, 0.75}};
  leak[1].te_pmf = {{4, 1.0}};  // 1 -> 1
  leak[2].te_pmf = {{5, 1.0}};  // 2 -> 2
  for (Slot t = 0; t < 3; ++t) leak[t].t0 = t;
  const auto c2 = stationary_start_distribution(leak, 3);
  CHECK(c2.closed_classes.size() == 2);
  CHECK(c2.pi[0] == 0.0);
  CHECK(c2.pi[1] == doctest::Approx(0.25));
  CHECK(c2.pi[2] == doctest::Approx(0.75));
}

TEST_CASE("period of one slot") {
  const auto p = reduced_params();
  const auto sol = solve_fixed_point(p);
  const auto chain = stationary_start_distribution(p, sol, DutyCycle::make(1, 0.3), 1.0, Regime::kWeak);
  CHECK(chain.size == 1);
  CHECK(chain.pi == std::vector<double>{1.0});
}

TEST_CASE("point-mass start distribution returns that conditional") {
  const auto p = reduced_params();
  const auto sol = solve_fixed_point(p);
  const auto dists = conditional_dists(p, sol, DutyCycle::make(50, 0.3), 1.0, Regime::kWeak);
  StartTimeChain chain;
  chain.size = 50;
  chain.pi.assign(50, 0.0);
  chain.pi[17] = 1.0;
  const auto m = unconditional_means(chain, dists);
  CHECK(m.mean_d == doctest::Approx(dists[17].mean_d));
  CHECK(m.mean_r == doctest::Approx(dists[17].mean_r));
  CHECK(m.mean_r_renewal == doctest::Approx(dists[17].mean_r_renewal));
  CHECK(m.p_drop == doctest::Approx(dists[17].p_drop));
  chain.pi.pop_back();
  CHECK_THROWS_AS(unconditional_means(chain, dists), InvalidParameter);
}

TEST_CASE("mean service time is nondecreasing in q") {
  const auto p = reduced_params();
  const auto sol = solve_fixed_point(p);
  const auto dc = DutyCycle::make(200, 0.3);
  for (Regime regime : {Regime::kWeak, Regime::kStrong}) {
    double prev = 0.0;
    for (double q : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const auto res = solve_exact(p, sol, dc, q, regime);
      CHECK(res.means.mean_d >= prev - 1e-9);
      prev = res.means.mean_d;
    }
  }
}

TEST_CASE("budgets") {
  const WifiParams full;
  const auto sol = solve_fixed_point(full);
  CHECK_THROWS_AS(conditional_dist(0, full, sol, DutyCycle::make(200, 0.3), 1.0, Regime::kWeak),
                  BudgetExceeded);
  const auto p = reduced_params();
  const auto small = solve_fixed_point(p);
  AnalyticOptions opt;
  opt.max_states = 100;
  CHECK_THROWS_AS(conditional_dists(p, small, DutyCycle::make(200, 0.3), 1.0, Regime::kWeak, opt),
                  BudgetExceeded);
  opt.path_budget = 1000;
  CHECK_THROWS_AS(conditional_dist(0, p, small, DutyCycle::make(50, 0.3), 1.0, Regime::kWeak, opt),
                  BudgetExceeded);
}

TEST_CASE("worker count does not change the result") {
  const auto p = reduced_params();
  const auto sol = solve_fixed_point(p);
  AnalyticOptions one, many;
  many.threads = 3;
  const auto dc = DutyCycle::make(200, 0.3);
  const auto a = solve_exact(p, sol, dc, 1.0, Regime::kStrong, one);
  const auto b = solve_exact(p, sol, dc, 1.0, Regime::kStrong, many);
  CHECK(a.chain.pi == b.chain.pi);
  CHECK(a.means.mean_d == b.means.mean_d);
}
