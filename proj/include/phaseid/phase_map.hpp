#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "phaseid/network.hpp"
#include "phaseid/rng.hpp"

namespace phaseid {

// Ground truth and estimates share this shape: one phase per single-phase
// device, indexed by position in NetworkModel::devices.
struct PhaseMapping {
  std::vector<int> device_index;  // indices of single-phase devices
  std::vector<Phase> phase;       // parallel to device_index
  std::uint64_t scenario_id = 0;

  std::size_t size() const { return device_index.size(); }
};

inline std::vector<int> single_phase_devices(const std::vector<Device>& devices) {
  std::vector<int> out;
  for (std::size_t i = 0; i < devices.size(); ++i)
    if (devices[i].single_phase) out.push_back(static_cast<int>(i));
  return out;
}

// Uniform independent draw from {A,B,C}; per-device streams keep the result
// identical regardless of evaluation order.
inline PhaseMapping random_phase_mapping(const std::vector<Device>& devices, std::uint64_t seed) {
  PhaseMapping m;
  m.scenario_id = seed;
  m.device_index = single_phase_devices(devices);
  m.phase.reserve(m.device_index.size());
  for (int idx : m.device_index) {
    RngStream rng(seed, 0x70686173ULL, static_cast<std::uint64_t>(idx));
    m.phase.push_back(static_cast<Phase>(rng.next_below(3)));
  }
  return m;
}

inline std::array<double, 3> per_phase_annual_load(const PhaseMapping& m,
                                                   const std::vector<Device>& devices) {
  std::array<double, 3> load{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& d = devices[static_cast<std::size_t>(m.device_index[i])];
    load[static_cast<std::size_t>(m.phase[i])] += d.annual_kwh;
  }
  return load;
}

// Absolute error in phase load for one scenario: (1/3) * sum_phi |L_phi - Lbar|.
inline double aepl(const PhaseMapping& m, const std::vector<Device>& devices) {
  const auto load = per_phase_annual_load(m, devices);
  const double mean = (load[0] + load[1] + load[2]) / 3.0;
  return (std::abs(load[0] - mean) + std::abs(load[1] - mean) + std::abs(load[2] - mean)) / 3.0;
}

enum class BalanceClass { C1, C2, C3 };  // highly / fairly / highly-un balanced

inline std::string to_string(BalanceClass c) {
  switch (c) {
    case BalanceClass::C1: return "C1";
    case BalanceClass::C2: return "C2";
    case BalanceClass::C3: return "C3";
  }
  return "?";
}

// Classified by the worst per-phase relative deviation from the mean phase
// load. Thresholds 2% / 10% are a calibration choice, not from the source data.
inline BalanceClass classify_mapping_balance(const PhaseMapping& m,
                                             const std::vector<Device>& devices) {
  const auto load = per_phase_annual_load(m, devices);
  const double mean = (load[0] + load[1] + load[2]) / 3.0;
  if (mean <= 0.0) return BalanceClass::C1;
  double worst = 0.0;
  for (double l : load) worst = std::max(worst, std::abs(l - mean) / mean);
  if (worst < 0.02) return BalanceClass::C1;
  if (worst < 0.10) return BalanceClass::C2;
  return BalanceClass::C3;
}

// First seed in [start, start+max_trials) whose random mapping falls in the
// requested balance class.
inline std::uint64_t find_mapping_seed(const std::vector<Device>& devices, BalanceClass want,
                                       std::uint64_t start = 1, std::uint64_t max_trials = 2000000) {
  for (std::uint64_t s = start; s < start + max_trials; ++s) {
    const auto m = random_phase_mapping(devices, s);
    if (classify_mapping_balance(m, devices) == want) return s;
  }
  throw NumericalError("no mapping of class " + to_string(want) + " found in " +
                       std::to_string(max_trials) + " trials");
}

}  // namespace phaseid
