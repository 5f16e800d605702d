#pragma once

// Scenario evaluation and one-dimensional parameter sweeps with paired
// same-seed reference runs.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coex/dcf.hpp"
#include "coex/monte_carlo.hpp"
#include "coex/timeline.hpp"
#include "coex/timing.hpp"

namespace coex {

enum class SweepVariable { kPeriodMs, kAlpha, kQ, kPayloadBytes };
enum class Estimator { kRenewal, kMeanOfRatios };

std::string_view to_string(SweepVariable v);
SweepVariable parse_variable(std::string_view text);
std::string_view to_string(Estimator e);
Estimator parse_estimator(std::string_view text);

/// Explicit list "a,b,c" or inclusive range "start:step:end".
std::vector<double> parse_values(std::string_view text);

struct Scenario {
  WifiParams params;
  double period_ms = 500.0;
  double alpha = 0.3;
  double q = 1.0;

  Slot period_slots() const { return ms_to_slots(period_ms, params.slot_us); }
  DutyCycle duty_cycle() const { return DutyCycle::make(period_slots(), alpha); }
  void validate() const;
};

struct SweepRow {
  Regime regime = Regime::kWeak;
  Slot period_slots = 0;
  double alpha = 0.0;
  double q = 0.0;
  std::int64_t payload_bits = 0;
  int n = 0;
  McEstimate estimate;
  McEstimate reference;
  Estimator estimator = Estimator::kRenewal;
  double phi_r = 0.0;      // from the selected estimator
  double phi_r_alt = 0.0;  // from the other estimator
  std::optional<double> phi_d;
  bool fair = false;
  std::uint64_t seed = 0;
  std::uint64_t packets = 0;
  std::string error;
};

/// One scenario against its reference. `reference` is computed when absent.
SweepRow evaluate(const Scenario& scenario, Regime regime, const McConfig& mc,
                  Estimator estimator = Estimator::kRenewal,
                  const McEstimate* reference = nullptr, const DcfSolution* solution = nullptr);

struct SweepSpec {
  SweepVariable variable = SweepVariable::kAlpha;
  std::vector<double> values;
  Scenario fixed;
  std::vector<Regime> regimes{Regime::kWeak, Regime::kStrong};
  McConfig mc;
  Estimator estimator = Estimator::kRenewal;
  int threads = 1;

  void validate() const;
  Scenario at(double value) const;
};

/// Rows ordered by (regime as listed, value as listed); failures land in `error`.
std::vector<SweepRow> run_sweep(const SweepSpec& spec);

/// Fixed column order; see README for the schema.
void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, const SweepRow& row);
void write_csv(std::ostream& out, std::span<const SweepRow> rows);
std::string to_json(std::span<const SweepRow> rows);

}  // namespace coex
