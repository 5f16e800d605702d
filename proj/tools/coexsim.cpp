// coexsim: command-line front end for the Wi-Fi / duty-cycled LTE-U
// coexistence model.
//
//   coexsim solve      background DCF fixed point
//   coexsim run        one scenario against its same-seed reference
//   coexsim reference  the no-LTE reference run alone
//   coexsim sweep      one-dimensional sweep, CSV or JSON rows
//   coexsim exact      exact enumeration for small instances
//   coexsim validate   fixed point against the slot-level oracle simulation

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "coex/analytic.hpp"
#include "coex/dcf.hpp"
#include "coex/error.hpp"
#include "coex/monte_carlo.hpp"
#include "coex/oracle_sim.hpp"
#include "coex/sweep.hpp"
#include "coex/timeline.hpp"
#include "coex/timing.hpp"

namespace {

using coex::Slot;

struct Options {
  std::string config;
  std::string format = "csv";
  int threads = 1;
  std::optional<int> stations;
  std::optional<std::int64_t> payload_bytes;
  std::optional<int> cw0;
  std::optional<int> retries;
  std::optional<double> phy_rate;
  std::optional<bool> rts_cts;
  double period_ms = 500.0;
  std::optional<Slot> period_slots;
  double duty = 0.3;
  double q = 1.0;
  std::string mode = "weak";
  std::uint64_t packets = 200'000;
  std::uint64_t warmup = 1'000;
  std::uint64_t seed = 1;
  bool sampled_td = false;
  std::string estimator = "renewal";
  std::string out;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "key = value file with Wi-Fi parameters");
  cmd->add_option("--format", o.format, "output format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--stations", o.stations, "number of Wi-Fi stations n");
  cmd->add_option("--payload-bytes", o.payload_bytes, "MAC payload length in bytes");
  cmd->add_option("--cw0", o.cw0, "initial contention window");
  cmd->add_option("--retries", o.retries, "maximum retry index M");
  cmd->add_option("--phy-rate", o.phy_rate, "PHY rate in bit/s");
  cmd->add_option("--rts-cts", o.rts_cts, "use the RTS/CTS exchange");
}

void add_scenario(CLI::App* cmd, Options& o) {
  cmd->add_option("--period-ms", o.period_ms, "duty-cycle period in ms");
  cmd->add_option("--period-slots", o.period_slots, "duty-cycle period in slots (overrides --period-ms)");
  cmd->add_option("--duty", o.duty, "LTE-U duty cycle alpha");
  cmd->add_option("--q", o.q, "LTE-U to Wi-Fi collision probability");
  cmd->add_option("--mode", o.mode, "interference regime")->check(CLI::IsMember({"weak", "strong"}));
}

void add_monte_carlo(CLI::App* cmd, Options& o) {
  cmd->add_option("--packets", o.packets, "simulated packets");
  cmd->add_option("--warmup", o.warmup, "discarded leading packets");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_flag("--sampled-td", o.sampled_td, "sample each decrement from its pmf");
  cmd->add_option("--estimator", o.estimator, "throughput estimator used for phi_r")
      ->check(CLI::IsMember({"renewal", "mean_of_ratios"}));
  cmd->add_option("--out", o.out, "output file (default stdout)");
}

coex::WifiParams wifi_params(const Options& o) {
  coex::WifiParams p;
  if (!o.config.empty()) p = coex::load_params(o.config);
  if (o.stations) p.n = *o.stations;
  if (o.payload_bytes) p.payload_bits = *o.payload_bytes * 8;
  if (o.cw0) p.cw0 = *o.cw0;
  if (o.retries) p.m_retries = *o.retries;
  if (o.phy_rate) p.phy_rate_bps = *o.phy_rate;
  if (o.rts_cts) p.use_rts_cts = *o.rts_cts;
  p.validate();
  return p;
}

coex::Scenario scenario(const Options& o) {
  coex::Scenario s;
  s.params = wifi_params(o);
  s.period_ms = o.period_slots ? static_cast<double>(*o.period_slots) * s.params.slot_us / 1000.0
                               : o.period_ms;
  s.alpha = o.duty;
  s.q = o.q;
  s.validate();
  return s;
}

coex::DutyCycle duty_cycle(const Options& o, const coex::Scenario& s) {
  return coex::DutyCycle::make(o.period_slots ? *o.period_slots : s.period_slots(), s.alpha);
}

coex::McConfig mc_config(const Options& o) {
  coex::McConfig mc;
  mc.packets = o.packets;
  mc.warmup_packets = o.warmup;
  mc.seed = o.seed;
  mc.sampled_td = o.sampled_td;
  mc.regime = coex::parse_regime(o.mode);
  mc.validate();
  return mc;
}

void emit(const Options& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(o.out);
  if (!f) throw coex::InvalidParameter("cannot write '" + o.out + "'");
  f << text;
}

int cmd_solve(const Options& o) {
  const auto p = wifi_params(o);
  const auto sol = coex::solve_fixed_point(p);
  nlohmann::ordered_json j;
  j["n"] = p.n;
  j["tau"] = sol.tau;
  j["p_c"] = sol.p_c;
  j["p_s"] = sol.p_s;
  j["t_s_slots"] = sol.frame_times.t_s;
  j["t_c_slots"] = sol.frame_times.t_c;
  j["td_p_idle"] = sol.td_pmf.p_idle;
  j["td_p_collision"] = sol.td_pmf.p_collision;
  j["td_p_success"] = sol.td_pmf.p_success;
  j["mean_td_slots"] = sol.mean_td;
  j["mean_td_ms"] = sol.mean_td * p.slot_us / 1000.0;
  j["residual"] = sol.residual;
  j["iterations"] = sol.iterations;
  if (o.format == "json") {
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << std::setprecision(10);
    for (const auto& [k, v] : j.items()) std::cout << k << " = " << v << '\n';
  }
  return 0;
}

int cmd_run(const Options& o) {
  const auto s = scenario(o);
  const auto sol = coex::solve_fixed_point(s.params);
  auto mc = mc_config(o);
  const auto row = coex::evaluate(s, mc.regime, mc, coex::parse_estimator(o.estimator), nullptr, &sol);
  const std::vector<coex::SweepRow> rows{row};
  if (o.format == "json") {
    emit(o, coex::to_json(rows) + "\n");
  } else {
    std::ostringstream out;
    coex::write_csv(out, rows);
    emit(o, out.str());
  }
  return 0;
}

int cmd_reference(const Options& o) {
  const auto p = wifi_params(o);
  const auto sol = coex::solve_fixed_point(p);
  const auto est = coex::reference_run(p, sol, mc_config(o));
  const auto closed = coex::reference_closed_form(p, sol);
  nlohmann::ordered_json j;
  j["mean_r"] = est.mean_r;
  j["se_r"] = est.se_r;
  j["mean_r_ratio"] = est.mean_r_ratio;
  j["mean_d"] = est.mean_d;
  j["se_d"] = est.se_d;
  j["drop_rate"] = est.drop_rate;
  j["packets_used"] = est.packets_used;
  j["total_slots"] = est.total_slots;
  j["closed_form_mean_d"] = closed.mean_d;
  j["closed_form_drop"] = closed.p_drop;
  j["closed_form_r"] = closed.mean_r_renewal;
  std::ostringstream out;
  if (o.format == "json") {
    out << j.dump(2) << '\n';
  } else {
    out << std::setprecision(10);
    for (const auto& [k, v] : j.items()) out << k << " = " << v << '\n';
  }
  emit(o, out.str());
  return 0;
}

int cmd_sweep(const Options& o, const std::string& vary, const std::string& values,
              const std::string& regimes) {
  coex::SweepSpec spec;
  spec.variable = coex::parse_variable(vary);
  spec.values = coex::parse_values(values);
  spec.fixed = scenario(o);
  spec.regimes.clear();
  std::stringstream rs(regimes);
  for (std::string r; std::getline(rs, r, ',');) spec.regimes.push_back(coex::parse_regime(r));
  spec.mc = mc_config(o);
  spec.estimator = coex::parse_estimator(o.estimator);
  spec.threads = o.threads;
  const auto rows = coex::run_sweep(spec);
  if (o.format == "json") {
    emit(o, coex::to_json(rows) + "\n");
  } else {
    std::ostringstream out;
    coex::write_csv(out, rows);
    emit(o, out.str());
  }
  return 0;
}

int cmd_exact(const Options& o, std::uint64_t budget) {
  const auto s = scenario(o);
  const auto sol = coex::solve_fixed_point(s.params);
  const auto dc = duty_cycle(o, s);
  coex::AnalyticOptions opt;
  opt.path_budget = budget;
  opt.threads = o.threads;
  const auto res = coex::solve_exact(s.params, sol, dc, s.q, coex::parse_regime(o.mode), opt);

  std::ostringstream out;
  out << std::setprecision(12);
  if (o.format == "json") {
    nlohmann::ordered_json j;
    j["mean_r"] = res.means.mean_r;
    j["mean_r_renewal"] = res.means.mean_r_renewal;
    j["mean_d"] = res.means.mean_d;
    j["p_drop"] = res.means.p_drop;
    j["unique"] = res.chain.unique;
    j["rows"] = nlohmann::ordered_json::array();
    for (std::size_t t = 0; t < res.dists.size(); ++t) {
      const auto& d = res.dists[t];
      j["rows"].push_back({{"t0", d.t0},
                           {"p_drop", d.p_drop},
                           {"mean_d_slots", d.mean_d},
                           {"mean_r_bits_per_slot", d.mean_r},
                           {"pi", res.chain.pi[t]}});
    }
    out << j.dump(2) << '\n';
  } else {
    out << "t0,p_drop,mean_d_slots,mean_r_bits_per_slot,pi\n";
    for (std::size_t t = 0; t < res.dists.size(); ++t) {
      const auto& d = res.dists[t];
      out << d.t0 << ',' << d.p_drop << ',' << d.mean_d << ',' << d.mean_r << ','
          << res.chain.pi[t] << '\n';
    }
  }
  emit(o, out.str());
  std::cerr << std::setprecision(10) << "E[D] = " << res.means.mean_d
            << " slots, E[R] = " << res.means.mean_r << " bits/slot (renewal "
            << res.means.mean_r_renewal << "), p_drop = " << res.means.p_drop << '\n';
  if (!res.chain.unique) {
    std::cerr << "warning: start-slot chain has " << res.chain.closed_classes.size()
              << " closed classes; pi is the limit from t0 = 0\n";
  }
  return 0;
}

int cmd_validate(const Options& o, Slot horizon) {
  const auto p = wifi_params(o);
  const auto sol = coex::solve_fixed_point(p);
  const auto emp = coex::simulate_bss(p, horizon, o.seed);
  struct Check {
    const char* name;
    double solved;
    double empirical;
    double tol;
  };
  const Check checks[] = {
      {"p_c", sol.p_c, emp.p_c, 0.01},
      {"td_p_idle", sol.td_pmf.p_idle, emp.td_idle, 0.02},
      {"td_p_collision", sol.td_pmf.p_collision, emp.td_collision, 0.02},
      {"td_p_success", sol.td_pmf.p_success, emp.td_success, 0.02},
  };
  bool ok = true;
  std::cout << std::setprecision(6) << std::fixed;
  for (const auto& c : checks) {
    const bool pass = std::abs(c.solved - c.empirical) <= c.tol;
    ok = ok && pass;
    std::cout << (pass ? "PASS " : "FAIL ") << c.name << " solved=" << c.solved
              << " empirical=" << c.empirical << " tol=" << c.tol << '\n';
  }
  std::cout << "info tau solved=" << sol.tau << " empirical=" << emp.tau << '\n'
            << "info mean_td solved=" << sol.mean_td << " empirical=" << emp.mean_td << '\n'
            << "info horizon=" << emp.elapsed << " transmissions=" << emp.transmissions << '\n';
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wi-Fi DCF performance and fairness under duty-cycled LTE-U"};
  app.require_subcommand(1);
  Options o;

  auto* solve = app.add_subcommand("solve", "solve the background DCF fixed point");
  add_common(solve, o);

  auto* run = app.add_subcommand("run", "Monte Carlo run of one scenario with its reference");
  add_common(run, o);
  add_scenario(run, o);
  add_monte_carlo(run, o);

  auto* reference = app.add_subcommand("reference", "Monte Carlo run without LTE-U");
  add_common(reference, o);
  add_monte_carlo(reference, o);

  std::string vary = "alpha";
  std::string values;
  std::string regimes = "weak,strong";
  auto* sweep = app.add_subcommand("sweep", "sweep one scenario variable");
  add_common(sweep, o);
  add_scenario(sweep, o);
  add_monte_carlo(sweep, o);
  sweep->add_option("--vary", vary, "swept variable")
      ->check(CLI::IsMember({"period_ms", "alpha", "q", "payload_bytes"}));
  sweep->add_option("--values", values, "list a,b,c or range start:step:end")->required();
  sweep->add_option("--regimes", regimes, "comma-separated regimes");

  std::uint64_t budget = 1'000'000;
  auto* exact = app.add_subcommand("exact", "exact enumeration on a reduced instance");
  add_common(exact, o);
  add_scenario(exact, o);
  exact->add_option("--out", o.out, "output file (default stdout)");
  exact->add_option("--budget", budget, "maximum outcome paths per start slot");

  Slot horizon = 10'000'000;
  auto* validate = app.add_subcommand("validate", "check the fixed point against the oracle simulation");
  add_common(validate, o);
  validate->add_option("--horizon", horizon, "simulated channel time in slots");
  validate->add_option("--seed", o.seed, "oracle seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) return cmd_solve(o);
    if (*run) return cmd_run(o);
    if (*reference) return cmd_reference(o);
    if (*sweep) return cmd_sweep(o, vary, values, regimes);
    if (*exact) return cmd_exact(o, budget);
    if (*validate) return cmd_validate(o, horizon);
  } catch (const coex::InvalidParameter& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const coex::BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
