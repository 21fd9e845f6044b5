#include <catch2/catch_amalgamated.hpp>

#include "phaseid/feeder_gen.hpp"
#include "phaseid/phase_map.hpp"

using namespace phaseid;

namespace {

std::vector<Device> three_equal_loads(double kwh = 1000.0) {
  std::vector<Device> devs(3);
  for (auto& d : devs) {
    d.bus_id = 1;
    d.annual_kwh = kwh;
    d.single_phase = true;
  }
  return devs;
}

}  // namespace

TEST_CASE("random mapping is deterministic and covers single-phase devices", "[mapping]") {
  const auto devs = three_equal_loads();
  const auto a = random_phase_mapping(devs, 5);
  const auto b = random_phase_mapping(devs, 5);
  REQUIRE(a.device_index == b.device_index);
  REQUIRE(a.phase == b.phase);
  REQUIRE(a.size() == 3);
  for (Phase p : a.phase) REQUIRE((p == Phase::A || p == Phase::B || p == Phase::C));
}

TEST_CASE("no single-phase devices gives an empty mapping", "[mapping]") {
  std::vector<Device> devs(2);
  for (auto& d : devs) {
    d.single_phase = false;
    d.annual_kwh = 100;
  }
  REQUIRE(random_phase_mapping(devs, 1).size() == 0);
}

TEST_CASE("per-phase frequencies are uniform over many scenarios", "[mapping]") {
  const auto gen = generate_feeder(FeederSpec{});
  const auto& devs = gen.net.devices;
  long long count[3] = {0, 0, 0};
  long long total = 0;
  for (std::uint64_t s = 0; s < 5000; ++s) {
    const auto m = random_phase_mapping(devs, s);
    for (Phase p : m.phase) ++count[static_cast<int>(p)];
    total += static_cast<long long>(m.size());
  }
  for (int ph = 0; ph < 3; ++ph) {
    const double freq = static_cast<double>(count[ph]) / static_cast<double>(total);
    REQUIRE(freq == Catch::Approx(1.0 / 3.0).margin(0.01));
  }
}

TEST_CASE("aepl of a balanced triple is zero", "[mapping]") {
  const auto devs = three_equal_loads();
  PhaseMapping m;
  m.device_index = {0, 1, 2};
  m.phase = {Phase::A, Phase::B, Phase::C};
  REQUIRE(aepl(m, devs) == 0.0);
}

TEST_CASE("aepl of an all-one-phase mapping follows the hand formula", "[mapping]") {
  const double u = 1000.0;
  const auto devs = three_equal_loads(u);  // total 3u on phase A
  PhaseMapping m;
  m.device_index = {0, 1, 2};
  m.phase = {Phase::A, Phase::A, Phase::A};
  REQUIRE(aepl(m, devs) == Catch::Approx(4.0 / 3.0 * u).epsilon(1e-12));
}

TEST_CASE("mean per-phase deviation over many mappings stays moderate", "[mapping]") {
  const auto gen = generate_feeder(FeederSpec{});
  const auto& devs = gen.net.devices;
  double rel_sum = 0.0;
  const int scenarios = 100000;
  for (int s = 0; s < scenarios; ++s) {
    const auto m = random_phase_mapping(devs, static_cast<std::uint64_t>(s) + 1);
    const auto load = per_phase_annual_load(m, devs);
    const double mean = (load[0] + load[1] + load[2]) / 3.0;
    rel_sum += aepl(m, devs) / mean;
  }
  // randomized assignment balances phases to within a modest share of the mean
  REQUIRE(rel_sum / scenarios < 0.15);
}

TEST_CASE("balance classification thresholds", "[mapping]") {
  SECTION("balanced triple is C1") {
    const auto devs = three_equal_loads();
    PhaseMapping m;
    m.device_index = {0, 1, 2};
    m.phase = {Phase::A, Phase::B, Phase::C};
    REQUIRE(classify_mapping_balance(m, devs) == BalanceClass::C1);
  }
  SECTION("all-one-phase is C3") {
    const auto devs = three_equal_loads();
    PhaseMapping m;
    m.device_index = {0, 1, 2};
    m.phase = {Phase::B, Phase::B, Phase::B};
    REQUIRE(classify_mapping_balance(m, devs) == BalanceClass::C3);
  }
  SECTION("the fairly-balanced reference loads classify as C2") {
    // annual loads 288.6 / 292.4 / 251.6 MWh per phase
    std::vector<Device> devs(3);
    devs[0].annual_kwh = 288600.0;
    devs[1].annual_kwh = 292400.0;
    devs[2].annual_kwh = 251600.0;
    for (auto& d : devs) d.single_phase = true;
    PhaseMapping m;
    m.device_index = {0, 1, 2};
    m.phase = {Phase::A, Phase::B, Phase::C};
    REQUIRE(classify_mapping_balance(m, devs) == BalanceClass::C2);
  }
}

TEST_CASE("mapping class search finds each class on the desk feeder", "[mapping]") {
  const auto gen = generate_feeder(FeederSpec{});
  for (BalanceClass cls : {BalanceClass::C1, BalanceClass::C2, BalanceClass::C3}) {
    const auto seed = find_mapping_seed(gen.net.devices, cls, 1);
    const auto m = random_phase_mapping(gen.net.devices, seed);
    REQUIRE(classify_mapping_balance(m, gen.net.devices) == cls);
  }
}
