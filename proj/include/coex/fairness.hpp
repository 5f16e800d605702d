#pragma once

// Air-time-sharing fairness. Throughput fairness compares the fractional
// throughput loss against alpha; service-time fairness compares the
// fractional service-time increase against alpha / (1 - alpha). A value
// <= 0 means Wi-Fi lost no more than its proportional share.

#include <string>

#include "coex/timeline.hpp"

namespace coex {

double throughput_fairness(double ref_r, double mean_r, double alpha);
double service_fairness(double ref_d, double mean_d, double alpha);

struct FairnessFlags {
  bool throughput = false;
  bool service = false;
  bool fair() const { return throughput && service; }
};

/// Non-strict threshold at zero.
FairnessFlags classify(double phi_r, double phi_d);

struct ScenarioKey {
  Slot period_slots = 0;
  double alpha = 0.0;
  double q = 0.0;
  std::int64_t payload_bits = 0;
  int n = 0;
  Regime regime = Regime::kWeak;
};

struct FairnessReport {
  ScenarioKey scenario;
  double mean_r = 0.0;
  double mean_d = 0.0;
  double ref_r = 0.0;
  double ref_d = 0.0;
  double phi_r = 0.0;
  double phi_d = 0.0;
  bool fair_throughput = false;
  bool fair_service = false;
  bool fair = false;
  std::string reference_source;  // "monte-carlo" or "analytic"
};

FairnessReport make_report(const ScenarioKey& scenario, double mean_r, double mean_d, double ref_r,
                           double ref_d, std::string reference_source);

}  // namespace coex
