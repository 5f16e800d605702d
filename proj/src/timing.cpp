#include "coex/timing.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>

#include "coex/error.hpp"

namespace coex {

namespace {

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

void require(bool ok, const char* field, const char* rule) {
  if (!ok) throw InvalidParameter(std::string("WifiParams.") + field + ": " + rule);
}

// Ceiling that ignores floating-point dust just above an integer.
Slot ceil_slots(double us, double slot_us) {
  return static_cast<Slot>(std::ceil(us / slot_us - 1e-9));
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw InvalidParameter("config key '" + std::string(key) + "': cannot parse '" +
                           std::string(text) + "'");
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw InvalidParameter("config key '" + std::string(key) + "': expected a boolean, got '" +
                         std::string(text) + "'");
}

}  // namespace

void WifiParams::validate() const {
  require(n >= 1, "n", "must be >= 1");
  require(cw0 >= 2 && is_power_of_two(cw0), "cw0", "must be a power of two >= 2");
  require(m_retries >= 0 && m_retries <= 20, "m_retries", "must be in [0, 20]");
  require(lambda >= 0.0 && lambda <= 1.0, "lambda", "must be in [0, 1]");
  require(payload_bits > 0, "payload_bits", "must be > 0");
  require(phy_rate_bps > 0.0, "phy_rate_bps", "must be > 0");
  require(slot_us > 0.0, "slot_us", "must be > 0");
  require(sifs_us > 0.0, "sifs_us", "must be > 0");
  require(difs_us > 0.0, "difs_us", "must be > 0");
  require(rts_bits > 0, "rts_bits", "must be > 0");
  require(cts_bits > 0, "cts_bits", "must be > 0");
  require(ack_bits > 0, "ack_bits", "must be > 0");
  require(mac_hdr_bits > 0, "mac_hdr_bits", "must be > 0");
  require(phy_hdr_bits > 0, "phy_hdr_bits", "must be > 0");
}

Slot contention_window(int cw0, int max_retry, int stage) {
  if (stage < 0 || stage > max_retry) {
    throw InvalidParameter("invalid retry index " + std::to_string(stage) + " (max " +
                           std::to_string(max_retry) + ")");
  }
  return static_cast<Slot>(cw0) << stage;
}

FrameTimes frame_times(const WifiParams& p) {
  p.validate();
  const double us_per_bit = 1e6 / p.phy_rate_bps;
  auto air = [&](std::int64_t body_bits) {
    return static_cast<double>(body_bits + p.phy_hdr_bits) * us_per_bit;
  };
  const double data = air(p.mac_hdr_bits + p.payload_bits);
  const double ack = air(p.ack_bits);

  double ts_us = 0.0;
  double tc_us = 0.0;
  if (p.use_rts_cts) {
    const double rts = air(p.rts_bits);
    ts_us = rts + air(p.cts_bits) + data + ack + 3.0 * p.sifs_us + p.difs_us;
    tc_us = rts + p.difs_us;
  } else {
    ts_us = data + ack + p.sifs_us + p.difs_us;
    tc_us = data + p.difs_us;
  }
  return FrameTimes{ceil_slots(ts_us, p.slot_us), ceil_slots(tc_us, p.slot_us)};
}

Slot ms_to_slots(double ms, double slot_us) { return us_to_slots(ms * 1000.0, slot_us); }

Slot us_to_slots(double us, double slot_us) {
  if (us < 0.0) throw InvalidParameter("negative duration");
  if (slot_us <= 0.0) throw InvalidParameter("slot_us must be > 0");
  return static_cast<Slot>(std::llround(us / slot_us));
}

double slots_to_us(Slot slots, double slot_us) { return static_cast<double>(slots) * slot_us; }

void apply_param(WifiParams& p, std::string_view key, std::string_view value) {
  using Setter = std::function<void(WifiParams&, std::string_view)>;
  static const std::map<std::string_view, Setter> setters = {
      {"n", [](WifiParams& q, std::string_view v) { q.n = parse_number<int>("n", v); }},
      {"cw0", [](WifiParams& q, std::string_view v) { q.cw0 = parse_number<int>("cw0", v); }},
      {"m_retries",
       [](WifiParams& q, std::string_view v) { q.m_retries = parse_number<int>("m_retries", v); }},
      {"lambda",
       [](WifiParams& q, std::string_view v) { q.lambda = parse_number<double>("lambda", v); }},
      {"payload_bits",
       [](WifiParams& q, std::string_view v) {
         q.payload_bits = parse_number<std::int64_t>("payload_bits", v);
       }},
      {"phy_rate_bps",
       [](WifiParams& q, std::string_view v) {
         q.phy_rate_bps = parse_number<double>("phy_rate_bps", v);
       }},
      {"slot_us",
       [](WifiParams& q, std::string_view v) { q.slot_us = parse_number<double>("slot_us", v); }},
      {"sifs_us",
       [](WifiParams& q, std::string_view v) { q.sifs_us = parse_number<double>("sifs_us", v); }},
      {"difs_us",
       [](WifiParams& q, std::string_view v) { q.difs_us = parse_number<double>("difs_us", v); }},
      {"rts_bits",
       [](WifiParams& q, std::string_view v) {
         q.rts_bits = parse_number<std::int64_t>("rts_bits", v);
       }},
      {"cts_bits",
       [](WifiParams& q, std::string_view v) {
         q.cts_bits = parse_number<std::int64_t>("cts_bits", v);
       }},
      {"ack_bits",
       [](WifiParams& q, std::string_view v) {
         q.ack_bits = parse_number<std::int64_t>("ack_bits", v);
       }},
      {"mac_hdr_bits",
       [](WifiParams& q, std::string_view v) {
         q.mac_hdr_bits = parse_number<std::int64_t>("mac_hdr_bits", v);
       }},
      {"phy_hdr_bits",
       [](WifiParams& q, std::string_view v) {
         q.phy_hdr_bits = parse_number<std::int64_t>("phy_hdr_bits", v);
       }},
      {"use_rts_cts",
       [](WifiParams& q, std::string_view v) { q.use_rts_cts = parse_bool("use_rts_cts", v); }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw InvalidParameter("unknown config key '" + std::string(key) + "'");
  it->second(p, value);
}

WifiParams parse_params(std::istream& in, WifiParams base) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidParameter("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = trim(view.substr(0, eq));
    const auto value = trim(view.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw InvalidParameter("config line " + std::to_string(line_no) + ": empty key or value");
    }
    apply_param(base, key, value);
  }
  base.validate();
  return base;
}

WifiParams load_params(const std::filesystem::path& file, WifiParams base) {
  std::ifstream in(file);
  if (!in) throw InvalidParameter("cannot open config file '" + file.string() + "'");
  return parse_params(in, base);
}

std::string format_params(const WifiParams& p) {
  std::ostringstream out;
  out << "n = " << p.n << '\n'
      << "cw0 = " << p.cw0 << '\n'
      << "m_retries = " << p.m_retries << '\n'
      << "lambda = " << p.lambda << '\n'
      << "payload_bits = " << p.payload_bits << '\n'
      << "phy_rate_bps = " << p.phy_rate_bps << '\n'
      << "slot_us = " << p.slot_us << '\n'
      << "sifs_us = " << p.sifs_us << '\n'
      << "difs_us = " << p.difs_us << '\n'
      << "rts_bits = " << p.rts_bits << '\n'
      << "cts_bits = " << p.cts_bits << '\n'
      << "ack_bits = " << p.ack_bits << '\n'
      << "mac_hdr_bits = " << p.mac_hdr_bits << '\n'
      << "phy_hdr_bits = " << p.phy_hdr_bits << '\n'
      << "use_rts_cts = " << (p.use_rts_cts ? "true" : "false") << '\n';
  return out.str();
}

}  // namespace coex
