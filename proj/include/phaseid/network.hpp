#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "phaseid/common.hpp"
#include "phaseid/impedance.hpp"

namespace phaseid {

struct Bus {
  int id = 0;                // 1-based, contiguous after renumbering
  std::string original_id;   // opaque upstream identifier
  bool is_slack = false;

  bool operator==(const Bus&) const = default;
};

enum class DeviceKind { Household, Pv, Chp, Other };

inline std::string to_string(DeviceKind k) {
  switch (k) {
    case DeviceKind::Household: return "household";
    case DeviceKind::Pv: return "pv";
    case DeviceKind::Chp: return "chp";
    case DeviceKind::Other: return "other";
  }
  return "?";
}

inline DeviceKind device_kind_from_string(const std::string& s) {
  if (s == "household") return DeviceKind::Household;
  if (s == "pv") return DeviceKind::Pv;
  if (s == "chp") return DeviceKind::Chp;
  if (s == "other") return DeviceKind::Other;
  throw DataError("unknown device kind: " + s);
}

struct Device {
  int bus_id = 0;
  DeviceKind kind = DeviceKind::Household;
  double annual_kwh = 0.0;
  bool single_phase = true;  // "1" in the file; three-phase devices need no identification
  double p_avail = 0.0;      // kW, generators only
  double q_avail = 0.0;      // kvar

  bool is_load() const { return kind == DeviceKind::Household || kind == DeviceKind::Other; }
  bool operator==(const Device&) const = default;
};

struct Branch {
  int from_bus = 0;
  int to_bus = 0;
  Mat4 impedance = Mat4::Zero();  // pu; 3x3 payloads stored in the top-left block
  bool four_wire = false;
  bool length_scaled = true;  // ohmic values were already base*length scaled upstream
  bool is_switch = false;

  // Phase-frame series impedance under the given neutral treatment.
  Mat3 phase_impedance(NeutralMode mode) const {
    if (!four_wire) return impedance.topLeftCorner<3, 3>();
    return reduce_4wire(impedance, mode);
  }

  bool operator==(const Branch& o) const {
    return from_bus == o.from_bus && to_bus == o.to_bus && impedance == o.impedance &&
           four_wire == o.four_wire && length_scaled == o.length_scaled && is_switch == o.is_switch;
  }
};

struct NetworkModel {
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Device> devices;
  double base_power_va = 0.0;   // three-phase total
  double base_voltage_v = 0.0;  // line-to-line

  int slack_id() const {
    for (const auto& b : buses)
      if (b.is_slack) return b.id;
    throw DataError("network has no slack bus");
  }

  const Bus& bus(int id) const { return buses.at(static_cast<std::size_t>(id - 1)); }

  bool operator==(const NetworkModel&) const = default;
};

struct TopologyReport {
  bool is_connected = false;
  bool is_radial = false;
  std::vector<std::pair<int, int>> cycle_edges;  // one representative edge per independent cycle
};

// Report-only: connectivity and radiality of the non-switch graph.
inline TopologyReport validate_radial(const NetworkModel& net) {
  const int n = static_cast<int>(net.buses.size());
  TopologyReport rep;
  if (n == 0) return rep;
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  int components = n;
  for (const auto& br : net.branches) {
    if (br.is_switch) continue;
    int a = find(br.from_bus - 1), b = find(br.to_bus - 1);
    if (a == b) {
      rep.cycle_edges.emplace_back(br.from_bus, br.to_bus);
    } else {
      parent[static_cast<std::size_t>(a)] = b;
      --components;
    }
  }
  rep.is_connected = components == 1;
  rep.is_radial = rep.is_connected && rep.cycle_edges.empty();
  return rep;
}

struct SwitchRemoval {
  NetworkModel net;
  std::map<int, int> id_map;  // old id -> new id (merged buses share a target)
};

// Contract every switch branch: endpoint buses merge, devices re-home to the
// surviving bus, ids are renumbered 1..N'. Contraction instead of a tiny
// series impedance keeps the admittance matrix well conditioned.
inline SwitchRemoval remove_switches(const NetworkModel& net) {
  const int n = static_cast<int>(net.buses.size());
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  // iterative contraction handles chained switches; union by smaller root id
  for (const auto& br : net.branches) {
    if (!br.is_switch) continue;
    int a = find(br.from_bus - 1), b = find(br.to_bus - 1);
    if (a == b) continue;  // switch in a cycle with an already-contracted switch
    if (net.buses[static_cast<std::size_t>(a)].is_slack && net.buses[static_cast<std::size_t>(b)].is_slack)
      throw DataError("switch contraction would merge two slack buses");
    if (a > b) std::swap(a, b);
    parent[static_cast<std::size_t>(b)] = a;
  }

  // survivors keep their relative order; representative = smallest old id in group
  std::map<int, int> new_id;  // old root index -> new 1-based id
  SwitchRemoval out;
  for (int i = 0; i < n; ++i) {
    int r = find(i);
    if (r == i) {
      int id = static_cast<int>(new_id.size()) + 1;
      new_id[r] = id;
      Bus b = net.buses[static_cast<std::size_t>(i)];
      b.id = id;
      out.net.buses.push_back(b);
    }
  }
  // merged slack flag must survive even when the representative is not the slack
  for (int i = 0; i < n; ++i) {
    if (net.buses[static_cast<std::size_t>(i)].is_slack)
      out.net.buses[static_cast<std::size_t>(new_id[find(i)] - 1)].is_slack = true;
  }
  for (int i = 0; i < n; ++i) out.id_map[i + 1] = new_id[find(i)];

  for (const auto& br : net.branches) {
    if (br.is_switch) continue;
    Branch nb = br;
    nb.from_bus = out.id_map[br.from_bus];
    nb.to_bus = out.id_map[br.to_bus];
    if (nb.from_bus == nb.to_bus)
      throw DataError("switch contraction collapsed a non-switch branch into a self-loop");
    out.net.branches.push_back(nb);
  }
  for (const auto& d : net.devices) {
    Device nd = d;
    nd.bus_id = out.id_map[d.bus_id];
    out.net.devices.push_back(nd);
  }
  out.net.base_power_va = net.base_power_va;
  out.net.base_voltage_v = net.base_voltage_v;

  const auto report = validate_radial(out.net);
  if (!report.is_radial)
    throw DataError("network is not radial after switch removal (" +
                    std::to_string(report.cycle_edges.size()) + " cycle edges)");
  return out;
}

}  // namespace phaseid
