#include "coex/oracle_sim.hpp"

#include <random>
#include <vector>

#include "coex/error.hpp"

namespace coex {

namespace {

struct StationState {
  int stage = 0;
  Slot counter = 0;
};

}  // namespace

OracleEstimate simulate_bss(const WifiParams& params, Slot horizon_slots, std::uint64_t seed) {
  params.validate();
  if (horizon_slots < 1) throw InvalidParameter("oracle horizon must be >= 1 slot");
  const FrameTimes ft = frame_times(params);
  std::mt19937_64 rng(seed);
  auto draw = [&](int stage) {
    const Slot cw = contention_window(params.cw0, params.m_retries, stage);
    return std::uniform_int_distribution<Slot>(0, cw - 1)(rng);
  };

  std::vector<StationState> stations(static_cast<std::size_t>(params.n));
  for (auto& s : stations) s.counter = draw(0);

  OracleEstimate est;
  double idle_obs = 0.0, coll_obs = 0.0, succ_obs = 0.0, td_sum = 0.0;
  std::vector<std::size_t> talkers;
  while (est.elapsed < horizon_slots) {
    talkers.clear();
    for (std::size_t k = 0; k < stations.size(); ++k) {
      if (stations[k].counter == 0) talkers.push_back(k);
    }
    const auto busy = talkers.size();
    const Slot duration = busy == 0 ? 1 : busy == 1 ? ft.t_s : ft.t_c;

    // Every station not transmitting sees this slot as one decrement.
    const double listeners = static_cast<double>(stations.size() - busy);
    (busy == 0 ? idle_obs : busy == 1 ? succ_obs : coll_obs) += listeners;
    td_sum += listeners * static_cast<double>(duration);
    for (auto& s : stations) {
      if (s.counter > 0) --s.counter;
    }
    // Counters of the talkers are still 0 here; they redraw below.
    for (const auto k : talkers) {
      auto& s = stations[k];
      if (busy == 1 || s.stage == params.m_retries) {
        s.stage = 0;
      } else {
        ++s.stage;
      }
      s.counter = draw(s.stage);
    }

    est.transmissions += busy;
    if (busy >= 2) est.collisions += busy;
    ++est.contention_slots;
    est.elapsed += duration;
  }

  if (est.transmissions > 0) {
    est.p_c = static_cast<double>(est.collisions) / static_cast<double>(est.transmissions);
  }
  est.tau = static_cast<double>(est.transmissions) /
            (static_cast<double>(params.n) * static_cast<double>(est.contention_slots));
  const double obs = idle_obs + coll_obs + succ_obs;
  if (obs > 0.0) {
    est.td_idle = idle_obs / obs;
    est.td_collision = coll_obs / obs;
    est.td_success = succ_obs / obs;
    est.mean_td = td_sum / obs;
  } else {
    est.td_idle = 1.0;
    est.mean_td = 1.0;
  }
  return est;
}

}  // namespace coex
