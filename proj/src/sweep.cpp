#include "coex/sweep.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "coex/error.hpp"
#include "coex/fairness.hpp"

namespace coex {

std::string_view to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::kPeriodMs: return "period_ms";
    case SweepVariable::kAlpha: return "alpha";
    case SweepVariable::kQ: return "q";
    case SweepVariable::kPayloadBytes: return "payload_bytes";
  }
  return "?";
}

SweepVariable parse_variable(std::string_view text) {
  for (auto v : {SweepVariable::kPeriodMs, SweepVariable::kAlpha, SweepVariable::kQ,
                 SweepVariable::kPayloadBytes}) {
    if (text == to_string(v)) return v;
  }
  throw InvalidParameter("unknown sweep variable '" + std::string(text) +
                         "' (expected period_ms|alpha|q|payload_bytes)");
}

std::string_view to_string(Estimator e) {
  return e == Estimator::kRenewal ? "renewal" : "mean_of_ratios";
}

Estimator parse_estimator(std::string_view text) {
  if (text == "renewal") return Estimator::kRenewal;
  if (text == "mean_of_ratios") return Estimator::kMeanOfRatios;
  throw InvalidParameter("unknown estimator '" + std::string(text) +
                         "' (expected renewal|mean_of_ratios)");
}

namespace {

double to_double(std::string_view text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    throw InvalidParameter("cannot parse sweep value '" + std::string(text) + "'");
  }
  return v;
}

double tidy(double v) { return std::round(v * 1e12) / 1e12; }

}  // namespace

std::vector<double> parse_values(std::string_view text) {
  std::vector<double> out;
  if (text.find(':') != std::string_view::npos) {
    const auto a = text.find(':');
    const auto b = text.find(':', a + 1);
    if (b == std::string_view::npos) throw InvalidParameter("range must be start:step:end");
    const double start = to_double(text.substr(0, a));
    const double step = to_double(text.substr(a + 1, b - a - 1));
    const double end = to_double(text.substr(b + 1));
    if (!(step > 0.0) || end < start) throw InvalidParameter("range needs step > 0 and end >= start");
    const auto count = static_cast<long>(std::floor((end - start) / step + 1e-9)) + 1;
    for (long k = 0; k < count; ++k) out.push_back(tidy(start + static_cast<double>(k) * step));
    return out;
  }
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const auto item = text.substr(pos, comma == std::string_view::npos ? text.npos : comma - pos);
    out.push_back(to_double(item));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

void Scenario::validate() const {
  params.validate();
  if (!(period_ms > 0.0)) throw InvalidParameter("period_ms must be > 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidParameter("alpha must lie in [0, 1]");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidParameter("q must lie in [0, 1]");
  if (period_slots() < 1) throw InvalidParameter("period shorter than one slot");
}

SweepRow evaluate(const Scenario& scenario, Regime regime, const McConfig& mc, Estimator estimator,
                  const McEstimate* reference, const DcfSolution* solution) {
  scenario.validate();
  SweepRow row;
  row.regime = regime;
  row.period_slots = scenario.period_slots();
  row.alpha = scenario.alpha;
  row.q = scenario.q;
  row.payload_bits = scenario.params.payload_bits;
  row.n = scenario.params.n;
  row.seed = mc.seed;
  row.packets = mc.packets;
  row.estimator = estimator;

  const DcfSolution sol = solution ? *solution : solve_fixed_point(scenario.params);
  row.reference = reference ? *reference : reference_run(scenario.params, sol, mc);
  McConfig cfg = mc;
  cfg.regime = regime;
  row.estimate = run_scenario(scenario.params, sol, scenario.duty_cycle(), scenario.q, cfg);

  const double renewal =
      throughput_fairness(row.reference.mean_r, row.estimate.mean_r, scenario.alpha);
  const double ratio =
      throughput_fairness(row.reference.mean_r_ratio, row.estimate.mean_r_ratio, scenario.alpha);
  row.phi_r = estimator == Estimator::kRenewal ? renewal : ratio;
  row.phi_r_alt = estimator == Estimator::kRenewal ? ratio : renewal;
  if (scenario.alpha < 1.0) {
    row.phi_d = service_fairness(row.reference.mean_d, row.estimate.mean_d, scenario.alpha);
    row.fair = classify(row.phi_r, *row.phi_d).fair();
  } else {
    row.error = "service-time fairness undefined at alpha = 1";
  }
  return row;
}

void SweepSpec::validate() const {
  if (values.empty()) throw InvalidParameter("sweep needs at least one value");
  if (regimes.empty()) throw InvalidParameter("sweep needs at least one regime");
  mc.validate();
  for (double v : values) at(v).validate();
}

Scenario SweepSpec::at(double value) const {
  Scenario s = fixed;
  switch (variable) {
    case SweepVariable::kPeriodMs: s.period_ms = value; break;
    case SweepVariable::kAlpha: s.alpha = value; break;
    case SweepVariable::kQ: s.q = value; break;
    case SweepVariable::kPayloadBytes:
      if (!(value > 0.0) || value != std::floor(value)) {
        throw InvalidParameter("payload_bytes must be a positive integer");
      }
      s.params.payload_bits = static_cast<std::int64_t>(value) * 8;
      break;
  }
  return s;
}

namespace {

template <class Task>
void run_pool(std::size_t tasks, int threads, Task&& task) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || tasks <= 1) {
    for (std::size_t i = 0; i < tasks; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < std::min(workers, tasks); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < tasks; i = next++) task(i);
    });
  }
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  spec.validate();

  // The reference depends only on the Wi-Fi parameters, i.e. on the payload here.
  std::map<std::int64_t, std::size_t> ref_slot;
  std::vector<Scenario> ref_scenarios;
  for (double v : spec.values) {
    const Scenario s = spec.at(v);
    if (ref_slot.emplace(s.params.payload_bits, ref_scenarios.size()).second) {
      ref_scenarios.push_back(s);
    }
  }
  std::vector<std::optional<DcfSolution>> solutions(ref_scenarios.size());
  std::vector<std::optional<McEstimate>> references(ref_scenarios.size());
  std::vector<std::string> ref_errors(ref_scenarios.size());
  run_pool(ref_scenarios.size(), spec.threads, [&](std::size_t i) {
    try {
      solutions[i] = solve_fixed_point(ref_scenarios[i].params);
      references[i] = reference_run(ref_scenarios[i].params, *solutions[i], spec.mc);
    } catch (const std::exception& e) {
      ref_errors[i] = e.what();
    }
  });

  const std::size_t per_regime = spec.values.size();
  std::vector<SweepRow> rows(spec.regimes.size() * per_regime);
  run_pool(rows.size(), spec.threads, [&](std::size_t k) {
    const Regime regime = spec.regimes[k / per_regime];
    const Scenario s = spec.at(spec.values[k % per_regime]);
    const std::size_t r = ref_slot.at(s.params.payload_bits);
    SweepRow& row = rows[k];
    try {
      if (!references[r]) throw std::runtime_error("reference run failed: " + ref_errors[r]);
      row = evaluate(s, regime, spec.mc, spec.estimator, &*references[r], &*solutions[r]);
    } catch (const std::exception& e) {
      row = SweepRow{};
      row.regime = regime;
      row.alpha = s.alpha;
      row.q = s.q;
      row.payload_bits = s.params.payload_bits;
      row.n = s.params.n;
      row.period_slots = s.period_slots();
      row.seed = spec.mc.seed;
      row.packets = spec.mc.packets;
      row.estimator = spec.estimator;
      row.error = e.what();
    }
  });
  return rows;
}

namespace {

const char* const kColumns[] = {
    "regime", "period_slots", "alpha",   "q",       "payload_bits", "n",         "mean_r",
    "se_r",   "mean_d",       "se_d",    "drop_rate", "ref_r",      "ref_d",     "phi_r",
    "phi_d",  "fair",         "seed",    "packets", "error",        "estimator", "phi_r_alt",
    "reference_source"};

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

bool has_estimate(const SweepRow& row) { return row.estimate.packets_used > 0; }

double selected_r(const McEstimate& e, Estimator est) {
  return est == Estimator::kRenewal ? e.mean_r : e.mean_r_ratio;
}

double selected_se_r(const McEstimate& e, Estimator est) {
  return est == Estimator::kRenewal ? e.se_r : e.se_r_ratio;
}

}  // namespace

void write_csv_header(std::ostream& out) {
  bool first = true;
  for (const char* c : kColumns) {
    out << (first ? "" : ",") << c;
    first = false;
  }
  out << '\n';
}

void write_csv_row(std::ostream& out, const SweepRow& row) {
  std::ostringstream line;
  line << std::setprecision(12);
  line << to_string(row.regime) << ',' << row.period_slots << ',' << row.alpha << ',' << row.q
       << ',' << row.payload_bits << ',' << row.n << ',';
  if (has_estimate(row)) {
    const auto est = row.estimator;
    line << selected_r(row.estimate, est) << ',' << selected_se_r(row.estimate, est) << ','
         << row.estimate.mean_d << ',' << row.estimate.se_d << ',' << row.estimate.drop_rate << ','
         << selected_r(row.reference, est) << ',' << row.reference.mean_d << ',' << row.phi_r
         << ',';
    if (row.phi_d) line << *row.phi_d;
    line << ',' << (row.fair ? "true" : "false") << ',';
  } else {
    line << ",,,,,,,,,,";
  }
  line << row.seed << ',' << row.packets << ',' << csv_escape(row.error) << ','
       << to_string(row.estimator) << ',';
  if (has_estimate(row)) line << row.phi_r_alt;
  line << ",monte-carlo\n";
  out << line.str();
}

void write_csv(std::ostream& out, std::span<const SweepRow> rows) {
  write_csv_header(out);
  for (const auto& r : rows) write_csv_row(out, r);
}

std::string to_json(std::span<const SweepRow> rows) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    nlohmann::ordered_json j;
    j["regime"] = to_string(row.regime);
    j["period_slots"] = row.period_slots;
    j["alpha"] = row.alpha;
    j["q"] = row.q;
    j["payload_bits"] = row.payload_bits;
    j["n"] = row.n;
    if (has_estimate(row)) {
      const auto est = row.estimator;
      j["mean_r"] = selected_r(row.estimate, est);
      j["se_r"] = selected_se_r(row.estimate, est);
      j["mean_d"] = row.estimate.mean_d;
      j["se_d"] = row.estimate.se_d;
      j["drop_rate"] = row.estimate.drop_rate;
      j["ref_r"] = selected_r(row.reference, est);
      j["ref_d"] = row.reference.mean_d;
      j["phi_r"] = row.phi_r;
      j["phi_d"] = row.phi_d ? nlohmann::ordered_json(*row.phi_d) : nlohmann::ordered_json();
      j["fair"] = row.fair;
    }
    j["seed"] = row.seed;
    j["packets"] = row.packets;
    j["error"] = row.error;
    j["estimator"] = to_string(row.estimator);
    if (has_estimate(row)) j["phi_r_alt"] = row.phi_r_alt;
    j["reference_source"] = "monte-carlo";
    arr.push_back(std::move(j));
  }
  return arr.dump(2);
}

}  // namespace coex
