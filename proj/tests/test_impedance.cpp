#include <catch2/catch_amalgamated.hpp>

#include "phaseid/impedance.hpp"
#include "phaseid/rng.hpp"

using namespace phaseid;

namespace {

Mat4 random_symmetric(std::uint64_t seed, bool zero_neutral_row = false) {
  RngStream rng(seed);
  Mat4 z = Mat4::Zero();
  for (int p = 0; p < 4; ++p)
    for (int q = p; q < 4; ++q) {
      const Complex v(0.05 + rng.next_double() * 0.2, 0.02 + rng.next_double() * 0.1);
      z(p, q) = z(q, p) = v;
    }
  // diagonal dominance
  for (int p = 0; p < 4; ++p) z(p, p) += Complex(0.8, 0.3);
  if (zero_neutral_row) {
    for (int p = 0; p < 4; ++p) z(p, 3) = z(3, p) = Complex(0.0, 0.0);
  }
  return z;
}

// Straight-line evaluation of the four-term reduction, independent of the
// matrix implementation.
Complex eq1_oracle(const Mat4& z, int p, int q) {
  const Complex zpq(z(p, q)), znq(z(3, q)), zpn(z(p, 3)), znn(z(3, 3));
  return zpq - znq - zpn + znn;
}

}  // namespace

TEST_CASE("reduce_neutral with zero neutral terms is the phase block", "[impedance]") {
  Mat4 z = random_symmetric(1, true);
  const Mat3 out = reduce_neutral(z);
  for (int p = 0; p < 3; ++p)
    for (int q = 0; q < 3; ++q) REQUIRE(out(p, q) == z(p, q));
}

TEST_CASE("reduce_neutral of an all-equal matrix is zero", "[impedance]") {
  Mat4 z;
  z.setConstant(Complex(0.37, 0.11));
  const Mat3 out = reduce_neutral(z);
  REQUIRE(out.norm() == 0.0);
}

TEST_CASE("reduce_neutral matches the entry-wise oracle on a cable matrix", "[impedance]") {
  for (std::uint64_t seed : {7u, 8u, 9u}) {
    const Mat4 z = random_symmetric(seed);
    const Mat3 out = reduce_neutral(z);
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q) REQUIRE(out(p, q) == eq1_oracle(z, p, q));
  }
}

TEST_CASE("kron_reduce with no neutral coupling keeps the phase block", "[impedance]") {
  Mat4 z = random_symmetric(2, true);
  z(3, 3) = Complex(0.5, 0.2);  // self term alone eliminates to nothing
  const Mat3 out = kron_reduce(z);
  for (int p = 0; p < 3; ++p)
    for (int q = 0; q < 3; ++q) REQUIRE(out(p, q) == z(p, q));
}

TEST_CASE("kron_reduce of a diagonal matrix keeps the diagonal", "[impedance]") {
  Mat4 z = Mat4::Zero();
  z.diagonal() << Complex(1, 0.4), Complex(1.1, 0.5), Complex(0.9, 0.3), Complex(0.7, 0.2);
  const Mat3 out = kron_reduce(z);
  for (int p = 0; p < 3; ++p) {
    REQUIRE(out(p, p) == z(p, p));
    for (int q = 0; q < 3; ++q)
      if (q != p) REQUIRE(std::abs(out(p, q)) == 0.0);
  }
}

TEST_CASE("kron and eq1 reductions genuinely differ on a coupled cable", "[impedance]") {
  const Mat4 z = random_symmetric(3);
  const Mat3 a = reduce_neutral(z);
  const Mat3 b = kron_reduce(z);
  for (int p = 0; p < 3; ++p)
    for (int q = 0; q < 3; ++q) REQUIRE(std::abs(a(p, q) - b(p, q)) > 1e-12);
}

TEST_CASE("kron_reduce rejects a singular neutral with live coupling", "[impedance]") {
  Mat4 z = random_symmetric(4);
  z(3, 3) = Complex(0.0, 0.0);
  REQUIRE_THROWS_AS(kron_reduce(z), NumericalError);
}

TEST_CASE("drop_neutral is index selection", "[impedance]") {
  for (std::uint64_t seed : {11u, 12u}) {
    const Mat4 z = random_symmetric(seed);
    const Mat3 out = drop_neutral(z);
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q) REQUIRE(out(p, q) == z(p, q));
  }
  REQUIRE(drop_neutral(Mat4::Zero()).norm() == 0.0);
}

// The two reductions agree exactly only when the whole neutral row and column
// vanish; Eq-style reduction folds z_nn into every entry otherwise.
TEST_CASE("reductions agree when the neutral row and column vanish", "[impedance]") {
  for (std::uint64_t seed : {21u, 22u, 23u, 24u}) {
    Mat4 z = random_symmetric(seed, true);
    z(3, 3) = Complex(0.0, 0.0);
    const Mat3 a = reduce_neutral(z);
    const Mat3 b = kron_reduce(z);
    REQUIRE((a - b).norm() == 0.0);
  }
}

TEST_CASE("symmetry checks", "[impedance]") {
  Mat4 z = random_symmetric(5);
  REQUIRE(is_symmetric(z));
  z(0, 1) += Complex(1e-6, 0.0);
  REQUIRE_FALSE(is_symmetric(z));
}
