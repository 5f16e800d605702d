#include "coex/fairness.hpp"

#include <utility>

#include "coex/error.hpp"

namespace coex {

double throughput_fairness(double ref_r, double mean_r, double alpha) {
  if (!(ref_r > 0.0)) throw InvalidParameter("reference throughput must be > 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidParameter("alpha must lie in [0, 1]");
  return (ref_r - mean_r) / ref_r - alpha;
}

double service_fairness(double ref_d, double mean_d, double alpha) {
  if (!(ref_d > 0.0)) throw InvalidParameter("reference service time must be > 0");
  if (alpha == 1.0) throw InvalidParameter("service-time fairness is undefined at alpha = 1");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw InvalidParameter("alpha must lie in [0, 1)");
  return (mean_d - ref_d) / ref_d - alpha / (1.0 - alpha);
}

FairnessFlags classify(double phi_r, double phi_d) { return {phi_r <= 0.0, phi_d <= 0.0}; }

FairnessReport make_report(const ScenarioKey& scenario, double mean_r, double mean_d, double ref_r,
                           double ref_d, std::string reference_source) {
  FairnessReport r;
  r.scenario = scenario;
  r.mean_r = mean_r;
  r.mean_d = mean_d;
  r.ref_r = ref_r;
  r.ref_d = ref_d;
  r.phi_r = throughput_fairness(ref_r, mean_r, scenario.alpha);
  r.phi_d = service_fairness(ref_d, mean_d, scenario.alpha);
  const auto flags = classify(r.phi_r, r.phi_d);
  r.fair_throughput = flags.throughput;
  r.fair_service = flags.service;
  r.fair = flags.fair();
  r.reference_source = std::move(reference_source);
  return r;
}

}  // namespace coex
