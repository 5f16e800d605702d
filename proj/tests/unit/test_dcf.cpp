#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "coex/dcf.hpp"
#include "coex/error.hpp"

using namespace coex;

namespace {

// Transition list built straight from the chain rules, independent of
// BackoffChainSpec::successors.
struct Edge {
  std::size_t from, to;
  double p;
};

std::vector<Edge> chain_edges(int cw0, int m, double p) {
  std::vector<std::size_t> offset{0};
  for (int i = 0; i <= m; ++i) offset.push_back(offset.back() + (static_cast<std::size_t>(cw0) << i));
  auto id = [&](int i, std::size_t j) { return offset[i] + j; };
  std::vector<Edge> edges;
  for (int i = 0; i <= m; ++i) {
    const std::size_t cw = static_cast<std::size_t>(cw0) << i;
    for (std::size_t j = 1; j < cw; ++j) edges.push_back({id(i, j), id(i, j - 1), 1.0});
    const double ok = i == m ? 1.0 : 1.0 - p;
    for (std::size_t j = 0; j < static_cast<std::size_t>(cw0); ++j) {
      edges.push_back({id(i, 0), id(0, j), ok / cw0});
    }
    if (i < m) {
      const std::size_t next = static_cast<std::size_t>(cw0) << (i + 1);
      for (std::size_t j = 0; j < next; ++j) edges.push_back({id(i, 0), id(i + 1, j), p / next});
    }
  }
  return edges;
}

std::vector<double> power_iterate(const std::vector<Edge>& edges, std::size_t states, int steps) {
  std::vector<double> x(states, 1.0 / static_cast<double>(states));
  for (int s = 0; s < steps; ++s) {
    std::vector<double> y(states, 0.0);
    for (const auto& e : edges) y[e.to] += x[e.from] * e.p;
    // Lazy step keeps the iteration aperiodic.
    for (std::size_t k = 0; k < states; ++k) x[k] = 0.5 * (x[k] + y[k]);
  }
  return x;
}

}  // namespace

TEST_CASE("successor lists match the chain rules") {
  const BackoffChainSpec spec{4, 2};
  const double p = 0.3;
  const auto edges = chain_edges(4, 2, p);
  std::vector<double> dense(spec.state_count() * spec.state_count(), 0.0);
  for (const auto& e : edges) dense[e.from * spec.state_count() + e.to] += e.p;

  for (int i = 0; i < spec.stages(); ++i) {
    for (Slot j = 0; j < spec.window(i); ++j) {
      std::vector<double> row(spec.state_count(), 0.0);
      double total = 0.0;
      for (auto [to, w] : spec.successors(i, j, p)) {
        row[to] += w;
        total += w;
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
      const std::size_t from = spec.index(i, j);
      for (std::size_t k = 0; k < spec.state_count(); ++k) {
        CHECK(row[k] == doctest::Approx(dense[from * spec.state_count() + k]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("closed-form stationary distribution agrees with power iteration") {
  for (auto [cw0, m] : {std::pair{4, 2}, std::pair{8, 3}, std::pair{16, 3}}) {
    for (double p : {0.0, 0.2, 0.47, 0.8}) {
      CAPTURE(cw0);
      CAPTURE(m);
      CAPTURE(p);
      const BackoffChainSpec spec{cw0, m};
      const auto closed = stationary_distribution(spec, p);
      const auto iterated = power_iterate(chain_edges(cw0, m, p), spec.state_count(), 40000);
      double err = 0.0;
      for (std::size_t k = 0; k < closed.size(); ++k) err += std::abs(closed[k] - iterated[k]);
      CHECK(err < 1e-9);

      double heads = 0.0;
      for (int i = 0; i < spec.stages(); ++i) heads += closed[spec.index(i, 0)];
      CHECK(transmit_probability(spec, p) == doctest::Approx(heads).epsilon(1e-12));
    }
  }
}

TEST_CASE("stationary distribution edge cases") {
  SUBCASE("p_c = 0 puts all mass on stage 0") {
    const BackoffChainSpec spec{16, 6};
    const auto d = stationary_distribution(spec, 0.0);
    double stage0 = 0.0;
    for (Slot j = 0; j < 16; ++j) stage0 += d[spec.index(0, j)];
    CHECK(stage0 == doctest::Approx(1.0));
    CHECK(transmit_probability(spec, 0.0) == doctest::Approx(2.0 / 17.0));
  }
  SUBCASE("M = 0 is a single-stage chain for any p_c") {
    const BackoffChainSpec spec{8, 0};
    CHECK(spec.state_count() == 8);
    for (double p : {0.0, 0.5, 0.9}) CHECK(transmit_probability(spec, p) == doctest::Approx(2.0 / 9.0));
  }
  SUBCASE("normalisation") {
    for (double p : {0.0, 0.1, 0.5, 0.99}) {
      const auto d = stationary_distribution(BackoffChainSpec{16, 6}, p);
      CHECK(std::accumulate(d.begin(), d.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("p_c outside [0, 1)") {
    CHECK_THROWS_AS(stationary_distribution(BackoffChainSpec{}, 1.0), InvalidParameter);
    CHECK_THROWS_AS(transmit_probability(BackoffChainSpec{}, -0.1), InvalidParameter);
  }
}

TEST_CASE("transmit probability is nonincreasing in p_c") {
  const BackoffChainSpec spec{16, 6};
  double prev = transmit_probability(spec, 0.0);
  for (int k = 1; k < 100; ++k) {
    const double cur = transmit_probability(spec, k / 100.0);
    CHECK(cur <= prev + 1e-15);
    prev = cur;
  }
}

TEST_CASE("fixed point at the default operating point") {
  const WifiParams p;
  const auto sol = solve_fixed_point(p);
  CHECK(sol.residual < 1e-9);
  // Independent re-evaluation of both coupled equations.
  const double tau = transmit_probability(BackoffChainSpec{16, 6}, sol.p_c);
  CHECK(sol.tau == doctest::Approx(tau).epsilon(1e-12));
  CHECK(sol.p_c == doctest::Approx(1.0 - std::pow(1.0 - tau, 16)).epsilon(1e-9));
  CHECK(sol.p_s == doctest::Approx(16.0 * tau * std::pow(1.0 - tau, 15)).epsilon(1e-12));
  CHECK(sol.p_s <= sol.p_c);

  const auto& pmf = sol.td_pmf;
  CHECK(pmf.p_idle + pmf.p_collision + pmf.p_success == doctest::Approx(1.0));
  CHECK(pmf.p_idle == doctest::Approx(1.0 - sol.p_c));
  CHECK(pmf.t_s == 1050);
  CHECK(pmf.t_c == 36);
  CHECK(sol.mean_td == doctest::Approx(pmf.p_idle + 36.0 * pmf.p_collision + 1050.0 * pmf.p_success));
  CHECK(mean_unit_decrement(sol) == doctest::Approx(sol.mean_td));
}

TEST_CASE("a single station sees no collisions") {
  WifiParams p;
  p.n = 1;
  for (int cw0 : {4, 16, 64}) {
    p.cw0 = cw0;
    const auto sol = solve_fixed_point(p);
    CHECK(sol.p_c == 0.0);
    CHECK(sol.p_s == 0.0);
    CHECK(sol.tau == doctest::Approx(2.0 / (cw0 + 1.0)));
    CHECK(sol.mean_td == doctest::Approx(1.0));
  }
}

TEST_CASE("two stations: p_s equals p_c") {
  WifiParams p;
  p.n = 2;
  const auto sol = solve_fixed_point(p);
  CHECK(sol.p_s == doctest::Approx(sol.p_c));
  CHECK(sol.td_pmf.p_collision == doctest::Approx(0.0).epsilon(1e-9));
  // Collapsed pmf: mean = 1 - p_c + p_c T_s.
  CHECK(sol.mean_td == doctest::Approx(1.0 - sol.p_c + sol.p_c * 1050.0).epsilon(1e-9));
}

TEST_CASE("collision probability is nondecreasing in n") {
  WifiParams p;
  double prev = -1.0;
  for (int n = 1; n <= 60; ++n) {
    p.n = n;
    const auto sol = solve_fixed_point(p);
    CHECK(sol.p_c >= prev);
    if (n >= 2) CHECK(sol.p_s <= sol.p_c);
    prev = sol.p_c;
  }
}

TEST_CASE("unsaturated stations contend less") {
  WifiParams p;
  const double saturated = solve_fixed_point(p).p_c;
  p.lambda = 0.5;
  const auto sol = solve_fixed_point(p);
  CHECK(sol.p_c < saturated);
  const double active = 0.5 * sol.tau;
  CHECK(sol.p_s == doctest::Approx(16.0 * active * std::pow(1.0 - active, 15)).epsilon(1e-12));
}

TEST_CASE("iteration and bisection land on the same root") {
  WifiParams p;
  FixedPointOptions iterate;
  FixedPointOptions bisect;
  bisect.max_iterations = 0;  // go straight to bisection
  for (int n : {3, 10, 17, 40}) {
    p.n = n;
    CHECK(solve_fixed_point(p, iterate).p_c ==
          doctest::Approx(solve_fixed_point(p, bisect).p_c).epsilon(1e-9));
  }
}

TEST_CASE("collision residual") {
  const WifiParams p;
  const auto sol = solve_fixed_point(p);
  CHECK(collision_residual(p, sol.tau, sol.p_c) < 1e-9);
  CHECK(collision_residual(p, sol.tau, sol.p_c + 0.01) == doctest::Approx(0.01).epsilon(1e-6));
}
