#pragma once

#include <cmath>
#include <string>

#include "phaseid/common.hpp"

namespace phaseid {

// How a 4x4 series impedance (phases a,b,c + neutral n) is collapsed to the
// 3x3 phase matrix used by the power flow.
enum class NeutralMode {
  Eq1,   // exact reduction for a neutral grounded only at the substation
  Kron,  // Schur elimination, assumes multi-grounded neutral at zero volts
  Drop,  // discard the neutral row/column
};

inline std::string to_string(NeutralMode m) {
  switch (m) {
    case NeutralMode::Eq1: return "eq1";
    case NeutralMode::Kron: return "kron";
    case NeutralMode::Drop: return "drop";
  }
  return "?";
}

inline NeutralMode neutral_mode_from_string(const std::string& s) {
  if (s == "eq1") return NeutralMode::Eq1;
  if (s == "kron") return NeutralMode::Kron;
  if (s == "drop") return NeutralMode::Drop;
  throw ConfigError("unknown neutral_mode: " + s);
}

inline bool is_symmetric(const Mat4& z, double tol = 1e-9) {
  for (int p = 0; p < 4; ++p)
    for (int q = p + 1; q < 4; ++q)
      if (std::abs(z(p, q) - z(q, p)) > tol) return false;
  return true;
}

// Substation-grounded neutral: entry (p,q) = z_pq - z_nq - z_pn + z_nn.
// The neutral return path is folded into every phase term.
inline Mat3 reduce_neutral(const Mat4& z4) {
  Mat3 out;
  for (int p = 0; p < 3; ++p)
    for (int q = 0; q < 3; ++q)
      out(p, q) = z4(p, q) - z4(3, q) - z4(p, 3) + z4(3, 3);
  return out;
}

// Classic Kron elimination: Zpp - Zpn * Znn^-1 * Znp. A neutral with no
// coupling to the phases eliminates to nothing regardless of z_nn.
inline Mat3 kron_reduce(const Mat4& z4) {
  Eigen::Vector3cd zpn, znp;
  bool coupled = false;
  for (int p = 0; p < 3; ++p) {
    zpn(p) = z4(p, 3);
    znp(p) = z4(3, p);
    if (std::abs(zpn(p)) > 0.0 || std::abs(znp(p)) > 0.0) coupled = true;
  }
  Mat3 zpp = z4.topLeftCorner<3, 3>();
  if (!coupled) return zpp;
  const Complex znn = z4(3, 3);
  if (std::abs(znn) < 1e-14) throw NumericalError("kron_reduce: singular z_nn");
  return zpp - (zpn * znp.transpose()) / znn;
}

// Neutral ignored entirely.
inline Mat3 drop_neutral(const Mat4& z4) { return z4.topLeftCorner<3, 3>(); }

inline Mat3 reduce_4wire(const Mat4& z4, NeutralMode mode) {
  switch (mode) {
    case NeutralMode::Eq1: return reduce_neutral(z4);
    case NeutralMode::Kron: return kron_reduce(z4);
    case NeutralMode::Drop: return drop_neutral(z4);
  }
  throw ConfigError("bad neutral mode");
}

}  // namespace phaseid
