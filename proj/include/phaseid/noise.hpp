#pragma once

#include <cstdint>

#include "phaseid/powerflow.hpp"
#include "phaseid/rng.hpp"

namespace phaseid {

// Metering error: each value is scaled by Norm(1, tau/3), so the device
// tolerance tau covers three sigma of the samples. Streams are keyed by the
// element index, independent of iteration order.
inline VoltagePanel inject_noise(const VoltagePanel& panel, double tau, std::uint64_t seed) {
  if (tau < 0) throw ConfigError("noise tolerance must be non-negative");
  if (tau == 0.0) return panel;
  VoltagePanel out = panel;
  const double sigma = tau / 3.0;
  for (std::size_t i = 0; i < out.mag.size(); ++i) {
    RngStream rng(seed, 0x6E6F697365ULL, static_cast<std::uint64_t>(i));
    out.mag[i] *= rng.next_normal(1.0, sigma);
  }
  return out;
}

}  // namespace phaseid
