#include "coex/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "coex/error.hpp"
#include "coex/rng.hpp"

namespace coex {

void McConfig::validate() const {
  if (packets < 1) throw InvalidParameter("McConfig.packets must be >= 1");
  if (warmup_packets >= packets) throw InvalidParameter("McConfig.warmup_packets must be < packets");
  if (batches < 1) throw InvalidParameter("McConfig.batches must be >= 1");
}

namespace {

struct Batch {
  double count = 0.0;
  double slots = 0.0;
  double bits = 0.0;
  double drops = 0.0;
  double inv_d = 0.0;  // sum of 1/D over all packets
};

double sample_sd_of_mean(const std::vector<double>& xs) {
  const auto b = static_cast<double>(xs.size());
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= b;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (b - 1.0) / b);
}

McEstimate summarize(const std::vector<Batch>& batches, double payload_bits) {
  McEstimate est;
  Batch total;
  for (const auto& b : batches) {
    total.count += b.count;
    total.slots += b.slots;
    total.bits += b.bits;
    total.drops += b.drops;
    total.inv_d += b.inv_d;
  }
  est.packets_used = static_cast<std::uint64_t>(total.count);
  est.total_slots = static_cast<Slot>(total.slots);
  est.delivered = static_cast<std::uint64_t>(std::llround(total.bits / payload_bits));
  est.mean_d = total.slots / total.count;
  est.mean_r = total.bits / total.slots;
  est.drop_rate = total.drops / total.count;
  est.mean_r_ratio = payload_bits * (1.0 - est.drop_rate) * total.inv_d / total.count;

  std::vector<double> d, drop, ratio, resid;
  for (const auto& b : batches) {
    if (b.count == 0.0) continue;
    d.push_back(b.slots / b.count);
    drop.push_back(b.drops / b.count);
    ratio.push_back(payload_bits * (1.0 - b.drops / b.count) * b.inv_d / b.count);
    // Linearised ratio estimator for bits/slots.
    resid.push_back((b.bits - est.mean_r * b.slots) / (total.slots / static_cast<double>(batches.size())));
  }
  est.se_d = sample_sd_of_mean(d);
  est.se_drop = sample_sd_of_mean(drop);
  est.se_r_ratio = sample_sd_of_mean(ratio);
  est.se_r = sample_sd_of_mean(resid);
  return est;
}

}  // namespace

McEstimate run_scenario(const WifiParams& params, const DcfSolution& sol, const DutyCycle& dc,
                        double q, const McConfig& cfg, const RecordSink& sink) {
  params.validate();
  cfg.validate();
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidParameter("q must lie in [0, 1]");
  if (cfg.regime == Regime::kStrong && dc.always_on()) {
    throw InvalidParameter("strong regime needs an OFF stage (alpha < 1)");
  }

  const auto& chain = sol.chain;
  const Slot t_s = sol.frame_times.t_s;
  const Slot t_c = sol.frame_times.t_c;
  const Slot decrement = decrement_slots(sol);
  const double bits = static_cast<double>(params.payload_bits);
  std::optional<DecrementSampler> sampler;
  if (cfg.sampled_td) sampler.emplace(sol.td_pmf);

  std::vector<std::uniform_int_distribution<Slot>> draw_w;
  for (int i = 0; i < chain.stages(); ++i) draw_w.emplace_back(0, chain.window(i) - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::uint64_t used = cfg.packets - cfg.warmup_packets;
  const auto batch_count = static_cast<std::uint64_t>(std::min<std::uint64_t>(cfg.batches, used));
  std::vector<Batch> batches(batch_count);

  TransmissionRecord rec;
  Slot start = 0;
  for (std::uint64_t k = 0; k < cfg.packets; ++k) {
    auto rng = packet_stream(cfg.seed, k);
    AttemptClock clock(cfg.regime, dc, decrement, start);
    if (sink) {
      rec = TransmissionRecord{};
      rec.t0 = start;
    }
    bool delivered = false;
    for (int i = 0; i < chain.stages() && !delivered; ++i) {
      const Slot w = draw_w[i](rng);
      const Slot zeta = sampler ? clock.backoff_sampled(w, *sampler, rng) : clock.backoff(w);
      const bool g = overlap_flag(zeta, t_s, dc);
      delivered = unit(rng) < attempt_success_probability(sol.p_c, q, g);
      clock.advance(delivered ? t_s : t_c);
      if (sink) {
        rec.zeta.push_back(zeta);
        rec.g_flags.push_back(g);
      }
    }
    const Slot finish = clock.now();
    if (sink) {
      rec.te = finish;
      rec.dropped = !delivered;
      sink(k, rec);
    }
    if (k >= cfg.warmup_packets) {
      const std::uint64_t pos = k - cfg.warmup_packets;
      auto& b = batches[pos * batch_count / used];
      const auto service = static_cast<double>(finish - start);
      b.count += 1.0;
      b.slots += service;
      b.inv_d += 1.0 / service;
      if (delivered) {
        b.bits += bits;
      } else {
        b.drops += 1.0;
      }
    }
    start = finish;
  }
  return summarize(batches, bits);
}

McEstimate reference_run(const WifiParams& params, const DcfSolution& sol, const McConfig& cfg,
                         const RecordSink& sink) {
  return run_scenario(params, sol, DutyCycle::reference(), 0.0, cfg, sink);
}

}  // namespace coex
