#pragma once

// Static DCF configuration and slot-normalised frame durations.
//
// All times inside the library are integer counts of Wi-Fi slots (sigma).
// Microsecond and millisecond values only appear at the configuration edge.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

namespace coex {

using Slot = std::int64_t;

/// One 802.11 DCF setup. Defaults are the 5 GHz, 1 Mb/s, RTS/CTS operating
/// point with 17 saturated stations and a 1 KB payload.
struct WifiParams {
  int n = 17;
  int cw0 = 16;
  int m_retries = 6;
  double lambda = 0.0;
  std::int64_t payload_bits = 8192;
  double phy_rate_bps = 1e6;
  double slot_us = 9.0;
  double sifs_us = 16.0;
  double difs_us = 34.0;
  // Frame bodies without the PHY header; one PHY header is added per frame.
  std::int64_t rts_bits = 160;
  std::int64_t cts_bits = 112;
  std::int64_t ack_bits = 112;
  std::int64_t mac_hdr_bits = 272;
  std::int64_t phy_hdr_bits = 128;
  bool use_rts_cts = true;

  /// Throws InvalidParameter naming the first offending field.
  void validate() const;
};

struct FrameTimes {
  Slot t_s = 0;  // successful exchange
  Slot t_c = 0;  // collided exchange
};

/// CW_i = 2^i * CW_0 for 0 <= i <= max_retry.
Slot contention_window(int cw0, int max_retry, int stage);

/// Success/collision durations rounded up to whole slots.
FrameTimes frame_times(const WifiParams& p);

/// Nearest whole slot.
Slot ms_to_slots(double ms, double slot_us);
Slot us_to_slots(double us, double slot_us);
double slots_to_us(Slot slots, double slot_us);

// Flat `key = value` configuration. Keys are the WifiParams field names;
// `#` starts a comment; blank lines are ignored. Unknown keys are errors.
void apply_param(WifiParams& p, std::string_view key, std::string_view value);
WifiParams parse_params(std::istream& in, WifiParams base = {});
WifiParams load_params(const std::filesystem::path& file, WifiParams base = {});
std::string format_params(const WifiParams& p);

}  // namespace coex
