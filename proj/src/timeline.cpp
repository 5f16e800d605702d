#include "coex/timeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "coex/error.hpp"

namespace coex {

std::string_view to_string(Regime r) { return r == Regime::kWeak ? "weak" : "strong"; }

Regime parse_regime(std::string_view text) {
  if (text == "weak") return Regime::kWeak;
  if (text == "strong") return Regime::kStrong;
  throw InvalidParameter("unknown regime '" + std::string(text) + "' (expected weak|strong)");
}

DutyCycle DutyCycle::reference() { return DutyCycle(1, 0.0, 0, true); }

DutyCycle DutyCycle::make(Slot period_slots, double alpha) {
  if (period_slots < 1) throw InvalidParameter("duty-cycle period must be >= 1 slot");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidParameter("duty cycle alpha must lie in [0, 1]");
  if (alpha == 0.0) return DutyCycle(period_slots, 0.0, 0, true);
  const Slot on = std::llround(alpha * static_cast<double>(period_slots));
  return DutyCycle(period_slots, alpha, on, false);
}

Slot DutyCycle::phase(Slot t) const {
  const Slot r = t % period_;
  return r < 0 ? r + period_ : r;
}

void BackoffVector::validate(const BackoffChainSpec& spec) const {
  if (w.empty() || attempts() > spec.stages()) {
    throw InvalidParameter("back-off vector length " + std::to_string(w.size()) +
                           " outside [1, M+1]");
  }
  for (int i = 0; i < attempts(); ++i) {
    if (w[i] < 0 || w[i] >= spec.window(i)) {
      throw InvalidParameter("back-off draw w_" + std::to_string(i) + " = " + std::to_string(w[i]) +
                             " outside [0, CW_" + std::to_string(i) + ")");
    }
  }
}

bool overlap_flag(Slot zeta, Slot t_s, const DutyCycle& dc) {
  if (dc.is_reference()) return false;
  const Slot ph = dc.phase(zeta);
  return !(ph >= dc.on_slots() && ph + t_s <= dc.period());
}

Slot decrement_slots(const DcfSolution& sol) {
  return std::max<Slot>(1, std::llround(sol.mean_td));
}

DecrementSampler::DecrementSampler(const UnitDecrementPmf& pmf)
    : dist_({pmf.p_idle, pmf.p_collision, pmf.p_success}), t_c_(pmf.t_c), t_s_(pmf.t_s) {}

AttemptClock::AttemptClock(Regime regime, const DutyCycle& dc, Slot decrement, Slot t0)
    : regime_(regime), dc_(&dc), decrement_(decrement), now_(t0) {
  if (decrement_ < 1) throw InvalidParameter("decrement duration must be >= 1 slot");
  if (regime_ == Regime::kStrong && dc.always_on()) {
    throw InvalidParameter("strong regime needs an OFF stage (alpha < 1)");
  }
}

void AttemptClock::freeze() {
  if (regime_ != Regime::kStrong || !dc_->in_on(now_)) return;
  now_ += dc_->on_slots() - dc_->phase(now_);
}

Slot AttemptClock::backoff(Slot count) {
  if (count < 0) throw InvalidParameter("negative back-off count");
  if (regime_ == Regime::kWeak || dc_->is_reference()) {
    now_ += count * decrement_;
    return now_;
  }
  // Same result as checking the ON stage before every single decrement:
  // all decrements that start inside the current OFF window run back to back.
  Slot remaining = count;
  while (remaining > 0) {
    freeze();
    const Slot to_period_end = dc_->period() - dc_->phase(now_);
    const Slot fit = (to_period_end + decrement_ - 1) / decrement_;
    const Slot k = std::min(fit, remaining);
    now_ += k * decrement_;
    remaining -= k;
  }
  freeze();
  return now_;
}

std::vector<Slot> attempt_times_weak(const BackoffVector& w, Slot t0, const DcfSolution& sol) {
  w.validate(sol.chain);
  const Slot d = decrement_slots(sol);
  std::vector<Slot> zeta(w.w.size());
  Slot drawn = 0;
  for (std::size_t i = 0; i < w.w.size(); ++i) {
    drawn += w.w[i];
    zeta[i] = t0 + d * drawn + static_cast<Slot>(i) * sol.frame_times.t_c;
  }
  return zeta;
}

TransmissionRecord replay(Regime regime, const BackoffVector& w, Slot t0, const DcfSolution& sol,
                          const DutyCycle& dc, bool final_success) {
  w.validate(sol.chain);
  const int m = w.attempts();
  if (!final_success && m != sol.chain.stages()) {
    throw InvalidParameter("only the attempt at stage M may end in failure");
  }
  TransmissionRecord rec;
  rec.t0 = t0;
  rec.zeta.reserve(m);
  rec.g_flags.reserve(m);
  AttemptClock clock(regime, dc, decrement_slots(sol), t0);
  for (int i = 0; i < m; ++i) {
    const Slot zeta = clock.backoff(w.w[i]);
    rec.zeta.push_back(zeta);
    rec.g_flags.push_back(overlap_flag(zeta, sol.frame_times.t_s, dc));
    const bool last = i == m - 1;
    clock.advance(last && final_success ? sol.frame_times.t_s : sol.frame_times.t_c);
  }
  rec.te = clock.now();
  rec.dropped = !final_success;
  return rec;
}

double FinishTime::expected_te() const {
  if (!failure) return static_cast<double>(success.te);
  return h * static_cast<double>(success.te) + (1.0 - h) * static_cast<double>(failure->te);
}

FinishTime finish_time(Regime regime, const BackoffVector& w, Slot t0, const DcfSolution& sol,
                       const DutyCycle& dc, double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidParameter("q must lie in [0, 1]");
  FinishTime out;
  out.success = replay(regime, w, t0, sol, dc, true);
  out.h = attempt_success_probability(sol.p_c, q, out.success.g_flags.back());
  if (w.attempts() == sol.chain.stages()) out.failure = replay(regime, w, t0, sol, dc, false);
  return out;
}

FinishTime finish_time_weak(const BackoffVector& w, Slot t0, const DcfSolution& sol,
                            const DutyCycle& dc, double q) {
  return finish_time(Regime::kWeak, w, t0, sol, dc, q);
}

FinishTime finish_time_strong(const BackoffVector& w, Slot t0, const DcfSolution& sol,
                              const DutyCycle& dc, double q) {
  return finish_time(Regime::kStrong, w, t0, sol, dc, q);
}

}  // namespace coex
