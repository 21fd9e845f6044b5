#include <catch2/catch_amalgamated.hpp>

#include "phaseid/feeder_gen.hpp"
#include "phaseid/network_json.hpp"

using namespace phaseid;

namespace {

std::string minimal_doc() {
  return R"({
    "base": {"s_va": 400000.0, "v_volt": 400.0},
    "buses": [
      {"id": 1, "original_id": "A", "slack": true},
      {"id": 2, "original_id": "B", "slack": false}
    ],
    "branches": [
      {"from": 1, "to": 2,
       "r": [0.01,0,0, 0,0.01,0, 0,0,0.01],
       "x": [0.02,0,0, 0,0.02,0, 0,0,0.02],
       "switch": false}
    ],
    "devices": [
      {"bus": 2, "kind": "household", "annual_kwh": 3000.0, "phases": "1"}
    ]
  })";
}

NetworkModel chain3_with_switch() {
  NetworkModel net;
  net.base_power_va = 400e3;
  net.base_voltage_v = 400.0;
  net.buses = {{1, "S", true}, {2, "M", false}, {3, "E", false}};
  Branch cable;
  cable.from_bus = 1;
  cable.to_bus = 2;
  for (int p = 0; p < 3; ++p) cable.impedance(p, p) = Complex(0.01, 0.02);
  Branch sw;
  sw.from_bus = 2;
  sw.to_bus = 3;
  sw.is_switch = true;
  net.branches = {cable, sw};
  Device d;
  d.bus_id = 3;
  d.annual_kwh = 2500;
  net.devices = {d};
  return net;
}

}  // namespace

TEST_CASE("minimal two-bus document parses", "[network]") {
  const NetworkModel net = parse_network(minimal_doc());
  REQUIRE(net.buses.size() == 2);
  REQUIRE(net.branches.size() == 1);
  REQUIRE(net.devices.size() == 1);
  REQUIRE(net.slack_id() == 1);
  REQUIRE(net.devices[0].single_phase);
  REQUIRE_FALSE(net.branches[0].four_wire);
}

TEST_CASE("dangling device reference is reported with the bus id", "[network]") {
  std::string doc = minimal_doc();
  // 5-bus variant with a device pointing at bus 99
  doc = R"({
    "base": {"s_va": 400000.0, "v_volt": 400.0},
    "buses": [
      {"id": 1, "original_id": "1", "slack": true},
      {"id": 2, "original_id": "2", "slack": false},
      {"id": 3, "original_id": "3", "slack": false},
      {"id": 4, "original_id": "4", "slack": false},
      {"id": 5, "original_id": "5", "slack": false}
    ],
    "branches": [],
    "devices": [{"bus": 99, "kind": "household", "annual_kwh": 1000.0, "phases": "1"}]
  })";
  try {
    parse_network(doc);
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    REQUIRE(std::string(e.what()).find("99") != std::string::npos);
    REQUIRE(std::string(e.what()).find("/devices/0") != std::string::npos);
  }
}

TEST_CASE("schema violations carry a JSON path", "[network]") {
  SECTION("missing base") {
    try {
      parse_network(R"({"buses": [], "branches": [], "devices": []})");
      FAIL("expected");
    } catch (const DataError& e) {
      REQUIRE(std::string(e.what()).find("base") != std::string::npos);
    }
  }
  SECTION("two slacks") {
    std::string doc = minimal_doc();
    const auto pos = doc.find("\"slack\": false");
    doc.replace(pos, 14, "\"slack\": true");
    REQUIRE_THROWS_AS(parse_network(doc), DataError);
  }
  SECTION("non-contiguous ids") {
    std::string doc = minimal_doc();
    const auto pos = doc.find("\"id\": 2");
    doc.replace(pos, 7, "\"id\": 7");
    REQUIRE_THROWS_AS(parse_network(doc), DataError);
  }
  SECTION("asymmetric impedance") {
    std::string doc = minimal_doc();
    const auto pos = doc.find("[0.01,0,0, 0,0.01,0, 0,0,0.01]");
    doc.replace(pos, 30, "[0.01,0.003,0, 0,0.01,0, 0,0,0.01]");
    REQUIRE_THROWS_AS(parse_network(doc), DataError);
  }
  SECTION("zero impedance non-switch branch") {
    std::string doc = minimal_doc();
    auto pos = doc.find("[0.01,0,0, 0,0.01,0, 0,0,0.01]");
    doc.replace(pos, 30, "[0,0,0, 0,0,0, 0,0,0]");
    pos = doc.find("[0.02,0,0, 0,0.02,0, 0,0,0.02]");
    doc.replace(pos, 30, "[0,0,0, 0,0,0, 0,0,0]");
    REQUIRE_THROWS_AS(parse_network(doc), DataError);
  }
  SECTION("bad phases field") {
    std::string doc = minimal_doc();
    const auto pos = doc.find("\"phases\": \"1\"");
    doc.replace(pos, 13, "\"phases\": \"2\"");
    REQUIRE_THROWS_AS(parse_network(doc), DataError);
  }
}

TEST_CASE("switch contraction merges and renumbers", "[network]") {
  const NetworkModel net = chain3_with_switch();
  const auto out = remove_switches(net);
  REQUIRE(out.net.buses.size() == 2);
  REQUIRE(out.net.branches.size() == 1);
  REQUIRE(out.id_map.at(1) == 1);
  REQUIRE(out.id_map.at(2) == 2);
  REQUIRE(out.id_map.at(3) == 2);  // merged into the surviving bus
  REQUIRE(out.net.devices[0].bus_id == 2);
  REQUIRE(validate_radial(out.net).is_radial);
}

TEST_CASE("switch removal without switches is the identity", "[network]") {
  const NetworkModel net = parse_network(minimal_doc());
  const auto out = remove_switches(net);
  REQUIRE(out.net == net);
  for (const auto& [o, n] : out.id_map) REQUIRE(o == n);
}

TEST_CASE("switch removal is idempotent", "[network]") {
  const auto once = remove_switches(chain3_with_switch());
  const auto twice = remove_switches(once.net);
  REQUIRE(twice.net == once.net);
}

TEST_CASE("parse-serialize-parse is stable", "[network]") {
  const NetworkModel net = parse_network(minimal_doc());
  const NetworkModel again = parse_network(serialize_network(net));
  REQUIRE(again == net);
  // and a generated feeder with 4x4 branches round-trips too
  FeederSpec spec;
  const auto gen = generate_feeder(spec);
  const NetworkModel parsed = parse_network(serialize_network(gen.raw));
  REQUIRE(parsed == gen.raw);
}

TEST_CASE("topology report flags cycles", "[network]") {
  NetworkModel net = parse_network(minimal_doc());
  auto rep = validate_radial(net);
  REQUIRE(rep.is_connected);
  REQUIRE(rep.is_radial);
  REQUIRE(rep.cycle_edges.empty());

  Branch extra = net.branches[0];  // parallel edge closes a cycle
  net.branches.push_back(extra);
  rep = validate_radial(net);
  REQUIRE(rep.is_connected);
  REQUIRE_FALSE(rep.is_radial);
  REQUIRE(rep.cycle_edges.size() == 1);
}

TEST_CASE("generated feeder matches its manifest", "[network][feeder]") {
  FeederSpec spec;
  const auto gen = generate_feeder(spec);
  const auto& man = gen.manifest;

  REQUIRE(gen.raw.buses.size() == man["raw"]["buses"].get<std::size_t>());
  REQUIRE(gen.raw.branches.size() == man["raw"]["branches"].get<std::size_t>());
  const int switches = man["raw"]["switches"].get<int>();
  int counted = 0;
  for (const auto& br : gen.raw.branches) counted += br.is_switch ? 1 : 0;
  REQUIRE(counted == switches);

  // every contraction removes exactly one bus
  REQUIRE(gen.net.buses.size() == gen.raw.buses.size() - static_cast<std::size_t>(switches));
  REQUIRE(gen.net.branches.size() == gen.net.buses.size() - 1);
  REQUIRE(man["radial"].get<bool>());
  REQUIRE(validate_radial(gen.net).is_radial);

  // switches are a small share of the branches, in the single-digit percents
  const double share = static_cast<double>(switches) / static_cast<double>(gen.raw.branches.size());
  REQUIRE(share > 0.03);
  REQUIRE(share < 0.12);

  // the parser agrees with the generator's own removal
  const NetworkModel reparsed = parse_network(serialize_network(gen.raw));
  const auto removal = remove_switches(reparsed);
  REQUIRE(removal.net == gen.net);

  REQUIRE(man["reference_final_bus"].size() == static_cast<std::size_t>(spec.references));
  REQUIRE(man["single_phase_consumers"].get<int>() == spec.consumers + spec.pv_units);
}
