#pragma once

// Deterministic attempt/finish-time computation for the interfered station.
//
// The LTE-U ON stage occupies [kT, kT + on) of every period. Under weak
// interference the station keeps counting down through ON; under strong
// interference its back-off is frozen until the next OFF stage.

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "coex/dcf.hpp"
#include "coex/timing.hpp"

namespace coex {

enum class Regime { kWeak, kStrong };

std::string_view to_string(Regime r);
Regime parse_regime(std::string_view text);

class DutyCycle {
 public:
  /// The no-LTE case (infinite period, zero duty).
  static DutyCycle reference();
  /// `alpha == 0` yields a reference cycle that remembers its nominal period.
  static DutyCycle make(Slot period_slots, double alpha);

  Slot period() const { return period_; }
  double alpha() const { return alpha_; }
  Slot on_slots() const { return on_; }
  bool is_reference() const { return reference_; }
  bool always_on() const { return !reference_ && on_ >= period_; }

  Slot phase(Slot t) const;
  bool in_on(Slot t) const { return !reference_ && phase(t) < on_; }

 private:
  DutyCycle(Slot period, double alpha, Slot on, bool reference)
      : period_(period), alpha_(alpha), on_(on), reference_(reference) {}

  Slot period_;
  double alpha_;
  Slot on_;
  bool reference_;
};

/// Initial back-off draws (w_0..w_{m-1}) of one packet.
struct BackoffVector {
  std::vector<Slot> w;

  int attempts() const { return static_cast<int>(w.size()); }
  /// Throws InvalidParameter unless 1 <= m <= M+1 and 0 <= w_i < CW_i.
  void validate(const BackoffChainSpec& spec) const;
};

struct TransmissionRecord {
  Slot t0 = 0;
  std::vector<Slot> zeta;
  std::vector<bool> g_flags;
  Slot te = 0;
  bool dropped = false;

  Slot service_slots() const { return te - t0; }
};

/// 0 iff [zeta, zeta + t_s) sits inside a single OFF window.
bool overlap_flag(Slot zeta, Slot t_s, const DutyCycle& dc);

/// Whole-slot duration of one back-off decrement used by the deterministic engines.
Slot decrement_slots(const DcfSolution& sol);

/// Draws unit-decrement durations from the {1, T_c, T_s} pmf.
class DecrementSampler {
 public:
  explicit DecrementSampler(const UnitDecrementPmf& pmf);

  template <class Rng>
  Slot operator()(Rng& rng) {
    switch (dist_(rng)) {
      case 0: return 1;
      case 1: return t_c_;
      default: return t_s_;
    }
  }

 private:
  std::discrete_distribution<int> dist_;
  Slot t_c_;
  Slot t_s_;
};

/// Running clock of one packet. `backoff` counts down a freshly drawn
/// counter and returns the attempt start; `advance` charges channel time.
class AttemptClock {
 public:
  AttemptClock(Regime regime, const DutyCycle& dc, Slot decrement, Slot t0);

  Slot now() const { return now_; }
  Slot backoff(Slot count);
  template <class Rng>
  Slot backoff_sampled(Slot count, DecrementSampler& sampler, Rng& rng) {
    for (Slot j = 0; j < count; ++j) {
      freeze();
      now_ += sampler(rng);
    }
    freeze();
    return now_;
  }
  void advance(Slot slots) { now_ += slots; }

 private:
  void freeze();

  Regime regime_;
  const DutyCycle* dc_;
  Slot decrement_;
  Slot now_;
};

/// Closed-form weak-regime attempt times:
/// zeta_i = t0 + d * (w_0 + ... + w_i) + i * T_c.
std::vector<Slot> attempt_times_weak(const BackoffVector& w, Slot t0, const DcfSolution& sol);

/// Timeline for a given outcome of the final attempt. For m <= M the final
/// attempt must succeed; for m = M+1 a failure means the packet is dropped.
TransmissionRecord replay(Regime regime, const BackoffVector& w, Slot t0, const DcfSolution& sol,
                          const DutyCycle& dc, bool final_success);

/// Success probability of an attempt given its overlap flag.
inline double attempt_success_probability(double p_c, double q, bool overlaps) {
  return (1.0 - p_c) * (1.0 - (overlaps ? q : 0.0));
}

struct FinishTime {
  TransmissionRecord success;                 // final attempt succeeds
  std::optional<TransmissionRecord> failure;  // m = M+1 and the final attempt fails
  double h = 1.0;                             // success probability of the final attempt

  /// For m = M+1 the h-weighted mix of both endings; otherwise the success finish.
  double expected_te() const;
  double drop_probability() const { return failure ? 1.0 - h : 0.0; }
};

FinishTime finish_time_weak(const BackoffVector& w, Slot t0, const DcfSolution& sol,
                            const DutyCycle& dc, double q);
FinishTime finish_time_strong(const BackoffVector& w, Slot t0, const DcfSolution& sol,
                              const DutyCycle& dc, double q);
FinishTime finish_time(Regime regime, const BackoffVector& w, Slot t0, const DcfSolution& sol,
                       const DutyCycle& dc, double q);

}  // namespace coex
