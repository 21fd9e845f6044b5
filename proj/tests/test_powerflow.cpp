#include <catch2/catch_amalgamated.hpp>

#include "phaseid/feeder_gen.hpp"
#include "phaseid/powerflow.hpp"

using namespace phaseid;

namespace {

NetworkModel two_bus(Complex z_phase_a, bool all_phases = true) {
  NetworkModel net;
  net.base_power_va = 400e3;
  net.base_voltage_v = 400.0;
  net.buses = {{1, "S", true}, {2, "L", false}};
  Branch br;
  br.from_bus = 1;
  br.to_bus = 2;
  for (int p = 0; p < 3; ++p)
    br.impedance(p, p) = all_phases ? z_phase_a : (p == 0 ? z_phase_a : Complex(0.01, 0.01));
  net.branches = {br};
  return net;
}

// High-voltage root of the standard single-line constant-power load equation.
Complex closed_form_v2(double v1, Complex z, Complex s) {
  const double r = z.real(), x = z.imag(), p = s.real(), q = s.imag();
  const double rpxq = r * p + x * q;
  const double xprq = x * p - r * q;
  const double b = 2.0 * rpxq - v1 * v1;
  const double c = rpxq * rpxq + xprq * xprq;
  const double disc = b * b - 4.0 * c;
  REQUIRE(disc > 0.0);
  const double u = (-b + std::sqrt(disc)) / 2.0;
  const Complex v2_conj = (u + z * std::conj(s)) / v1;
  return std::conj(v2_conj);
}

}  // namespace

TEST_CASE("zero injections keep every bus at the slack setpoint", "[powerflow]") {
  const NetworkModel net = two_bus(Complex(0.05, 0.02));
  const PowerFlowSolver solver(net);
  const auto v = solver.solve(std::vector<Vec3>(2, Vec3::Zero()));
  const Vec3 slack = balanced_slack(1.0);
  for (int b = 0; b < 2; ++b)
    for (int ph = 0; ph < 3; ++ph) REQUIRE(v[b](ph) == slack(ph));
}

TEST_CASE("two-bus single-phase load matches the closed form", "[powerflow]") {
  const Complex z(0.04, 0.03);
  const Complex s(0.08, 0.02);  // constant-power load on phase A
  const NetworkModel net = two_bus(z);
  const PowerFlowSolver solver(net);
  std::vector<Vec3> inj(2, Vec3::Zero());
  inj[1](0) = s;
  const auto v = solver.solve(inj);
  const Complex expected = closed_form_v2(1.0, z, s);
  REQUIRE(std::abs(v[1](0) - expected) < 1e-8);
  // unloaded phases stay at the slack phasor
  const Vec3 slack = balanced_slack(1.0);
  REQUIRE(std::abs(v[1](1) - slack(1)) < 1e-12);
  REQUIRE(std::abs(v[1](2) - slack(2)) < 1e-12);
}

TEST_CASE("balanced three-phase load on a symmetric feeder stays balanced", "[powerflow]") {
  NetworkModel net = two_bus(Complex(0.05, 0.03));
  // symmetric mutual coupling keeps the phases equivalent
  for (int p = 0; p < 3; ++p)
    for (int q = 0; q < 3; ++q)
      if (p != q) net.branches[0].impedance(p, q) = Complex(0.01, 0.008);
  const PowerFlowSolver solver(net);
  std::vector<Vec3> inj(2, Vec3::Zero());
  for (int ph = 0; ph < 3; ++ph) inj[1](ph) = Complex(0.05, 0.01);
  const auto v = solver.solve(inj);
  const double ma = std::abs(v[1](0)), mb = std::abs(v[1](1)), mc = std::abs(v[1](2));
  REQUIRE(std::abs(ma - mb) < 1e-10);
  REQUIRE(std::abs(mb - mc) < 1e-10);
}

TEST_CASE("complex power balances at the slack within 1e-6", "[powerflow]") {
  const auto gen = generate_feeder(FeederSpec{});
  const auto& net = gen.net;
  const auto mapping = random_phase_mapping(net.devices, 3);
  const auto loads = generate_load_profiles(net.devices, 24, 2, net.base_power_va);
  PowerFlowOptions opt;
  const PowerFlowSolver solver(net, opt);
  for (int t : {7, 19}) {
    const auto inj = injections_at(net, mapping, loads, t);
    const auto v = solver.solve(inj);
    const Vec3 slack_power = solver.slack_injection(v, inj);

    // independent route: loads plus series losses from the voltage solution
    Complex total = 0.0;
    for (const auto& s : inj)
      for (int ph = 0; ph < 3; ++ph) total += s(ph);
    for (const auto& br : net.branches) {
      const Mat3 z = br.phase_impedance(opt.neutral_mode);
      const Vec3 dv = v[br.from_bus - 1] - v[br.to_bus - 1];
      const Vec3 current = z.inverse() * dv;
      for (int ph = 0; ph < 3; ++ph) total += dv(ph) * std::conj(current(ph));
    }
    const Complex slack_total = slack_power(0) + slack_power(1) + slack_power(2);
    REQUIRE(std::abs(slack_total - total) < 1e-6);
  }
}

TEST_CASE("voltage panels under eq1 and kron differ on the four-wire feeder", "[powerflow]") {
  const auto gen = generate_feeder(FeederSpec{});
  const auto mapping = random_phase_mapping(gen.net.devices, 3);
  const auto loads = generate_load_profiles(gen.net.devices, 24, 2, gen.net.base_power_va);
  PowerFlowOptions eq1, kron;
  eq1.neutral_mode = NeutralMode::Eq1;
  kron.neutral_mode = NeutralMode::Kron;
  const auto pa = simulate_timeseries(gen.net, mapping, loads, eq1);
  const auto pb = simulate_timeseries(gen.net, mapping, loads, kron);
  double dmax = 0.0;
  for (std::size_t i = 0; i < pa.mag.size(); ++i) dmax = std::max(dmax, std::abs(pa.mag[i] - pb.mag[i]));
  REQUIRE(dmax > 1e-6);
}

TEST_CASE("eq1 and kron coincide when the neutral row vanishes", "[powerflow]") {
  auto gen = generate_feeder(FeederSpec{});
  NetworkModel net = gen.net;
  for (auto& br : net.branches) {
    if (!br.four_wire) continue;
    for (int p = 0; p < 4; ++p) br.impedance(p, 3) = br.impedance(3, p) = Complex(0, 0);
  }
  const auto mapping = random_phase_mapping(net.devices, 3);
  const auto loads = generate_load_profiles(net.devices, 24, 2, net.base_power_va);
  PowerFlowOptions eq1, kron;
  eq1.neutral_mode = NeutralMode::Eq1;
  kron.neutral_mode = NeutralMode::Kron;
  const auto pa = simulate_timeseries(net, mapping, loads, eq1);
  const auto pb = simulate_timeseries(net, mapping, loads, kron);
  double dmax = 0.0;
  for (std::size_t i = 0; i < pa.mag.size(); ++i) dmax = std::max(dmax, std::abs(pa.mag[i] - pb.mag[i]));
  REQUIRE(dmax < 1e-10);
}

TEST_CASE("time series simulation", "[powerflow]") {
  const auto gen = generate_feeder(FeederSpec{});
  const auto& net = gen.net;
  const auto mapping = random_phase_mapping(net.devices, 3);
  auto loads = generate_load_profiles(net.devices, 24, 2, net.base_power_va);

  SECTION("one step equals a single solve") {
    LoadSeries one = loads;
    one.t_hours = 24;  // keep full day, compare first step against direct solve
    const auto panel = simulate_timeseries(net, mapping, one);
    const PowerFlowSolver solver(net);
    const auto v = solver.solve(injections_at(net, mapping, one, 0));
    for (int b = 0; b < panel.buses; ++b)
      for (int ph = 0; ph < 3; ++ph) REQUIRE(panel.at(0, b, ph) == std::abs(v[b](ph)));
  }
  SECTION("doubling the loads lowers the minimum voltage") {
    const auto base = simulate_timeseries(net, mapping, loads);
    LoadSeries heavy = loads;
    for (auto& dev : heavy.pq)
      for (auto& [p, q] : dev) {
        p *= 2.0;
        q *= 2.0;
      }
    const auto stressed = simulate_timeseries(net, mapping, heavy);
    const double min_base = *std::min_element(base.mag.begin(), base.mag.end());
    const double min_heavy = *std::min_element(stressed.mag.begin(), stressed.mag.end());
    REQUIRE(min_heavy < min_base);
  }
  SECTION("bit-identical across thread counts") {
    const auto p1 = simulate_timeseries(net, mapping, loads, {}, 1);
    const auto p4 = simulate_timeseries(net, mapping, loads, {}, 4);
    REQUIRE(p1 == p4);
  }
  SECTION("panel magnitudes stay inside the sanity band") {
    const auto panel = simulate_timeseries(net, mapping, loads);
    for (double v : panel.mag) {
      REQUIRE(v > 0.5);
      REQUIRE(v < 1.5);
    }
  }
}

TEST_CASE("pathological load reports a numerical error", "[powerflow]") {
  const NetworkModel net = two_bus(Complex(0.3, 0.1));
  const PowerFlowSolver solver(net);
  std::vector<Vec3> inj(2, Vec3::Zero());
  inj[1](0) = Complex(5.0, 2.0);  // far beyond the feeder's transfer capability
  REQUIRE_THROWS_AS(solver.solve(inj), NumericalError);
}
