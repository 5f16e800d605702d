#pragma once

// Monte Carlo estimation of the interfered station's throughput and service
// time. Packets are served back to back starting at slot 0, which is also
// the start of the first duty-cycle period.

#include <cstdint>
#include <functional>

#include "coex/dcf.hpp"
#include "coex/timeline.hpp"
#include "coex/timing.hpp"

namespace coex {

struct McConfig {
  std::uint64_t packets = 200'000;
  std::uint64_t seed = 1;
  Regime regime = Regime::kWeak;
  bool sampled_td = false;
  std::uint64_t warmup_packets = 1'000;
  /// Batch count for the batch-means standard errors.
  int batches = 100;

  void validate() const;
};

struct McEstimate {
  // Long-run throughput: delivered bits over elapsed slots (bits/slot).
  double mean_r = 0.0;
  double se_r = 0.0;
  // Mean-of-ratios form L * (1 - drop_rate) * mean(1/D) (bits/slot).
  double mean_r_ratio = 0.0;
  double se_r_ratio = 0.0;
  double mean_d = 0.0;  // slots
  double se_d = 0.0;
  double drop_rate = 0.0;
  double se_drop = 0.0;
  std::uint64_t packets_used = 0;
  std::uint64_t delivered = 0;
  Slot total_slots = 0;

  bool operator==(const McEstimate&) const = default;
};

/// Observer for every simulated packet, warm-up included.
using RecordSink = std::function<void(std::uint64_t packet_index, const TransmissionRecord&)>;

McEstimate run_scenario(const WifiParams& params, const DcfSolution& sol, const DutyCycle& dc,
                        double q, const McConfig& cfg, const RecordSink& sink = {});

/// Same-seed run without LTE-U, the baseline for the fairness metrics.
McEstimate reference_run(const WifiParams& params, const DcfSolution& sol, const McConfig& cfg,
                         const RecordSink& sink = {});

}  // namespace coex
