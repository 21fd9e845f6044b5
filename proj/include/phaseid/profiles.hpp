#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "phaseid/network.hpp"
#include "phaseid/rng.hpp"

namespace phaseid {

// Hourly (p,q) pairs per device, per-unit on the single-phase base s_va/3.
struct LoadSeries {
  int t_hours = 0;
  std::vector<std::vector<std::pair<double, double>>> pq;  // [device][t]

  std::size_t device_count() const { return pq.size(); }
};

struct ProfileOptions {
  bool flat_shape = false;   // constant base shape instead of the diurnal one
  double noise_sigma = 0.4;  // lognormal sigma; 0 disables noise
  int shape_jitter_hours = 3;  // per-device circular shift of the shape, uniform in +-jitter
  bool correlated = false;   // one shared noise stream per hour across devices
  double power_factor = 0.95;
};

namespace detail {

// Two-peak residential day, normalized to mean 1 at use site.
inline const std::array<double, 24>& diurnal_shape() {
  static const std::array<double, 24> raw = {
      0.50, 0.42, 0.40, 0.40, 0.42, 0.52, 0.78, 1.05, 1.10, 0.95, 0.88, 0.92,
      1.02, 0.96, 0.88, 0.90, 1.05, 1.35, 1.65, 1.80, 1.70, 1.45, 1.05, 0.72};
  static const std::array<double, 24> norm = [] {
    double sum = 0.0;
    for (double v : raw) sum += v;
    std::array<double, 24> out{};
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] * 24.0 / sum;
    return out;
  }();
  return norm;
}

// mean-1 multiplicative lognormal
inline double lognoise(RngStream& rng, double sigma) {
  if (sigma <= 0.0) return 1.0;
  return std::exp(rng.next_normal(-0.5 * sigma * sigma, sigma));
}

inline double solar_shape(int hour) {
  if (hour < 6 || hour > 20) return 0.0;
  const double s = std::sin(M_PI * (hour - 6) / 14.0);
  return s * s;
}

}  // namespace detail

// Households draw the diurnal shape scaled to annual_kwh; pv and chp inject
// (negative p) from p_avail. Streams are keyed per (device, t) so parallel
// generation and regeneration agree bit for bit.
inline LoadSeries generate_load_profiles(const std::vector<Device>& devices, int t_hours,
                                         std::uint64_t seed, double base_power_va,
                                         const ProfileOptions& opt = {}) {
  if (t_hours < 24) throw ConfigError("profile horizon must be at least 24 hours");
  if (base_power_va <= 0) throw ConfigError("base power must be positive");
  const double s1_kw = base_power_va / 3.0 / 1000.0;  // per-phase base in kW
  const double q_ratio = std::tan(std::acos(opt.power_factor));

  LoadSeries ls;
  ls.t_hours = t_hours;
  ls.pq.resize(devices.size());
  for (std::size_t d = 0; d < devices.size(); ++d) {
    ls.pq[d].resize(static_cast<std::size_t>(t_hours));
    const Device& dev = devices[d];
    const double mean_kw = dev.annual_kwh / 8760.0;
    // households do not all peak at the same hour
    int jitter = 0;
    if (opt.shape_jitter_hours > 0 && !opt.flat_shape && !opt.correlated) {
      RngStream jr(seed, 0x6A6974ULL, static_cast<std::uint64_t>(d));
      jitter = static_cast<int>(jr.next_below(static_cast<std::uint64_t>(2 * opt.shape_jitter_hours + 1))) -
               opt.shape_jitter_hours;
    }
    for (int t = 0; t < t_hours; ++t) {
      const int hour = t % 24;                            // solar time
      const int hour_dev = ((t + jitter) % 24 + 24) % 24; // household habit time
      RngStream rng = opt.correlated
                          ? RngStream(seed, 0x6C6F6164ULL, static_cast<std::uint64_t>(t))
                          : RngStream(seed, (static_cast<std::uint64_t>(d) << 32) | 0x6C6F6164ULL,
                                      static_cast<std::uint64_t>(t));
      double p_kw = 0.0, q_kw = 0.0;
      switch (dev.kind) {
        case DeviceKind::Household:
        case DeviceKind::Other: {
          const double shape = opt.flat_shape ? 1.0 : detail::diurnal_shape()[static_cast<std::size_t>(hour_dev)];
          p_kw = mean_kw * shape * detail::lognoise(rng, opt.noise_sigma);
          q_kw = p_kw * q_ratio;
          break;
        }
        case DeviceKind::Pv: {
          p_kw = -dev.p_avail * detail::solar_shape(hour) * detail::lognoise(rng, opt.noise_sigma * 0.5);
          q_kw = 0.0;
          break;
        }
        case DeviceKind::Chp: {
          p_kw = -dev.p_avail * 0.8 * detail::lognoise(rng, opt.noise_sigma * 0.3);
          q_kw = 0.0;
          break;
        }
      }
      ls.pq[d][static_cast<std::size_t>(t)] = {p_kw / s1_kw, q_kw / s1_kw};
    }
  }
  return ls;
}

// CSV: device_id,t,p_pu,q_pu with t starting at 1.
inline void write_profiles_csv(const LoadSeries& ls, std::ostream& out) {
  out << "device_id,t,p_pu,q_pu\n";
  char buf[128];
  for (std::size_t d = 0; d < ls.pq.size(); ++d)
    for (int t = 0; t < ls.t_hours; ++t) {
      const auto [p, q] = ls.pq[d][static_cast<std::size_t>(t)];
      std::snprintf(buf, sizeof buf, "%zu,%d,%.17g,%.17g\n", d, t + 1, p, q);
      out << buf;
    }
}

inline LoadSeries read_profiles_csv(std::istream& in, std::size_t device_count) {
  LoadSeries ls;
  ls.pq.resize(device_count);
  std::string line;
  std::getline(in, line);  // header
  int max_t = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t d;
    int t;
    double p, q;
    if (std::sscanf(line.c_str(), "%zu,%d,%lf,%lf", &d, &t, &p, &q) != 4)
      throw DataError("bad profile CSV line: " + line);
    if (d >= device_count) throw DataError("profile CSV references unknown device " + std::to_string(d));
    if (static_cast<std::size_t>(t) > ls.pq[d].size()) ls.pq[d].resize(static_cast<std::size_t>(t));
    ls.pq[d][static_cast<std::size_t>(t - 1)] = {p, q};
    max_t = std::max(max_t, t);
  }
  ls.t_hours = max_t;
  for (auto& v : ls.pq) v.resize(static_cast<std::size_t>(max_t), {0.0, 0.0});
  return ls;
}

}  // namespace phaseid
