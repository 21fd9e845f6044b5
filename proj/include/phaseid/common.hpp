#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace phaseid {

using Complex = std::complex<double>;
using Mat3 = Eigen::Matrix3cd;
using Mat4 = Eigen::Matrix4cd;
using Vec3 = Eigen::Vector3cd;

enum class Phase : int { A = 0, B = 1, C = 2 };

inline char phase_letter(Phase p) { return "ABC"[static_cast<int>(p)]; }

inline Phase phase_from_letter(char c) {
  switch (c) {
    case 'A': case 'a': return Phase::A;
    case 'B': case 'b': return Phase::B;
    case 'C': case 'c': return Phase::C;
    default: throw std::invalid_argument(std::string("not a phase: ") + c);
  }
}

// Error taxonomy mapped to CLI exit codes: config=1, data=2, numerical=3.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace phaseid
