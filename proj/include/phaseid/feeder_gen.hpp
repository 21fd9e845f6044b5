#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "phaseid/network.hpp"
#include "phaseid/network_json.hpp"
#include "phaseid/rng.hpp"

namespace phaseid {

// Desk-scale multi-feeder LV network: a slack, a transformer to the LV
// busbar, and radial feeders of four-wire cable with cubicle switches at the
// feeder heads and a couple of mid-feeder sectionalisers. Sized so the full
// case-study suite runs in minutes.
struct FeederSpec {
  std::uint64_t seed = 42;
  std::vector<int> feeder_lengths = {21, 18, 15};  // chain buses per feeder, trunk included
  int trunk_buses = 4;                             // device-free run from the substation
  int consumers = 40;                              // single-phase households
  int pv_units = 2;                                // single-phase PV infeed
  int references = 13;                             // substation + in-load-area points
  double s_va = 400e3;                             // three-phase base
  double v_volt = 400.0;                           // line-to-line base
  double segment_km = 0.11;
  double mean_annual_kwh = 4400.0;
  double transformer_z_pu_r = 0.004;
  double transformer_z_pu_x = 0.016;
};

struct GeneratedFeeder {
  NetworkModel raw;                 // with switches, as written to disk
  NetworkModel net;                 // after switch removal
  std::map<int, int> id_map;        // raw -> final bus ids
  std::vector<int> reference_raw;   // raw bus ids of measurement points
  std::vector<int> reference_final; // final bus ids
  std::vector<int> feeder_of_bus_final;  // final bus0 -> feeder index, -1 for slack/busbar
  nlohmann::json manifest;
};

namespace detail {

// Symmetric 4x4 cable block from per-km self/mutual/neutral impedances.
inline Mat4 cable_matrix(Complex zs, Complex zm_pp, Complex zm_pn, Complex zn, double km,
                         double z_base) {
  Mat4 z = Mat4::Zero();
  const double scale = km / z_base;
  for (int p = 0; p < 3; ++p) {
    z(p, p) = zs * scale;
    z(p, 3) = z(3, p) = zm_pn * scale;
    for (int q = 0; q < 3; ++q)
      if (p != q) z(p, q) = zm_pp * scale;
  }
  z(3, 3) = zn * scale;
  return z;
}

struct CableType {
  Complex zs, zm_pp, zm_pn, zn;  // ohm/km
};

// trunk / main run / lateral; neutral one size down from the phases
inline CableType trunk_cable() { return {{0.125, 0.0880}, {0.0493, 0.0482}, {0.0493, 0.0502}, {0.206, 0.0880}}; }
inline CableType main_cable() { return {{0.206, 0.0861}, {0.0493, 0.0472}, {0.0493, 0.0512}, {0.332, 0.0861}}; }
inline CableType branch_cable() { return {{0.641, 0.0851}, {0.0493, 0.0452}, {0.0493, 0.0492}, {0.821, 0.0851}}; }

}  // namespace detail

inline GeneratedFeeder generate_feeder(const FeederSpec& spec) {
  if (spec.feeder_lengths.empty()) throw ConfigError("feeder spec needs at least one feeder");
  int residential_total = 0;
  for (int len : spec.feeder_lengths) {
    if (len <= spec.trunk_buses)
      throw ConfigError("feeder shorter than its trunk");
    residential_total += len - spec.trunk_buses;
  }
  if (spec.consumers + spec.pv_units > residential_total)
    throw ConfigError("more devices than residential buses");

  GeneratedFeeder out;
  NetworkModel& raw = out.raw;
  raw.base_power_va = spec.s_va;
  raw.base_voltage_v = spec.v_volt;
  const double z_base = spec.v_volt * spec.v_volt / spec.s_va;

  auto add_bus = [&](const std::string& oid, bool slack) {
    Bus b;
    b.id = static_cast<int>(raw.buses.size()) + 1;
    b.original_id = oid;
    b.is_slack = slack;
    raw.buses.push_back(b);
    return b.id;
  };
  auto add_switch = [&](int from, int to) {
    Branch br;
    br.from_bus = from;
    br.to_bus = to;
    br.is_switch = true;
    raw.branches.push_back(br);
  };
  auto add_cable = [&](int from, int to, const detail::CableType& c, double km) {
    Branch br;
    br.from_bus = from;
    br.to_bus = to;
    br.four_wire = true;
    br.impedance = detail::cable_matrix(c.zs, c.zm_pp, c.zm_pn, c.zn, km, z_base);
    raw.branches.push_back(br);
  };

  const int slack = add_bus("SLACK", true);
  const int busbar = add_bus("BUSBAR", false);
  {
    Branch trafo;  // 3x3 diagonal, phases decoupled through the transformer
    trafo.from_bus = slack;
    trafo.to_bus = busbar;
    trafo.four_wire = false;
    trafo.impedance = Mat4::Zero();
    for (int p = 0; p < 3; ++p)
      trafo.impedance(p, p) = Complex(spec.transformer_z_pu_r, spec.transformer_z_pu_x);
    raw.branches.push_back(trafo);
  }

  std::vector<std::vector<int>> chains;    // raw bus ids per feeder
  std::vector<std::vector<int>> load_area; // residential part, past the trunk
  for (std::size_t f = 0; f < spec.feeder_lengths.size(); ++f) {
    const std::string tag = "F" + std::to_string(f + 1);
    const int cubicle = add_bus(tag + "_CUB", false);
    add_switch(busbar, cubicle);
    std::vector<int> chain, res;
    int prev = cubicle;
    for (int k = 0; k < spec.feeder_lengths[f]; ++k) {
      const int bus = add_bus(tag + "_N" + std::to_string(k + 1), false);
      RngStream rng(spec.seed, 0x7365676DULL, static_cast<std::uint64_t>(f * 1000 + k));
      const double km = spec.segment_km * (0.75 + 0.5 * rng.next_double());
      const detail::CableType cable = k < spec.trunk_buses ? detail::trunk_cable()
                                      : k < spec.feeder_lengths[f] * 2 / 3 ? detail::main_cable()
                                                                           : detail::branch_cable();
      add_cable(prev, bus, cable, k < spec.trunk_buses ? km * 1.5 : km);
      chain.push_back(bus);
      if (k >= spec.trunk_buses) res.push_back(bus);
      prev = bus;
      // sectionaliser cabinet partway down the two longest feeders
      if (f < 2 && k == spec.feeder_lengths[f] / 3) {
        const int cab = add_bus(tag + "_SEC", false);
        add_switch(bus, cab);
        chain.push_back(cab);
        if (k >= spec.trunk_buses) res.push_back(cab);
        prev = cab;
      }
    }
    chains.push_back(chain);
    load_area.push_back(res);
  }

  // Consumers spread over the residential buses by a seeded shuffle.
  std::vector<int> candidates;
  for (const auto& res : load_area) candidates.insert(candidates.end(), res.begin(), res.end());
  {
    RngStream rng(spec.seed, 0x73687566ULL);
    for (std::size_t i = candidates.size(); i > 1; --i)
      std::swap(candidates[i - 1], candidates[static_cast<std::size_t>(rng.next_below(i))]);
  }
  for (int i = 0; i < spec.consumers; ++i) {
    Device d;
    d.bus_id = candidates[static_cast<std::size_t>(i)];
    d.kind = DeviceKind::Household;
    RngStream rng(spec.seed, 0x6B7768ULL, static_cast<std::uint64_t>(i));
    d.annual_kwh = std::clamp(spec.mean_annual_kwh * std::exp(rng.next_normal(0.0, 0.35)), 1200.0, 8000.0);
    d.single_phase = true;
    raw.devices.push_back(d);
  }
  for (int i = 0; i < spec.pv_units; ++i) {
    Device d;
    d.bus_id = candidates[static_cast<std::size_t>(spec.consumers + i)];
    d.kind = DeviceKind::Pv;
    d.annual_kwh = 0.0;
    d.single_phase = true;
    d.p_avail = 4.0;
    raw.devices.push_back(d);
  }
  {
    Device chp;  // three-phase unit at the head of feeder 1, needs no identification
    chp.bus_id = chains[0][0];
    chp.kind = DeviceKind::Chp;
    chp.annual_kwh = 0.0;
    chp.single_phase = false;
    chp.p_avail = 6.0;
    raw.devices.push_back(chp);
  }

  // References: substation busbar, then measurement cabinets inside each load
  // area (head-of-area and feeder end), then extra mid-area points on the
  // longest feeders until the requested count is reached.
  out.reference_raw.push_back(busbar);
  for (const auto& res : load_area) {
    out.reference_raw.push_back(res[res.size() / 4]);
    out.reference_raw.push_back(res.back());
  }
  {
    std::vector<std::size_t> by_len(load_area.size());
    std::iota(by_len.begin(), by_len.end(), 0);
    std::stable_sort(by_len.begin(), by_len.end(), [&](std::size_t a, std::size_t b) {
      return load_area[a].size() > load_area[b].size();
    });
    const double extra_fractions[] = {5.0 / 8.0, 1.0 / 8.0, 3.0 / 8.0, 7.0 / 8.0};
    std::size_t round = 0, fi = 0;
    while (static_cast<int>(out.reference_raw.size()) < spec.references &&
           round < std::size(extra_fractions)) {
      const auto& res = load_area[by_len[fi]];
      const int bus = res[static_cast<std::size_t>(extra_fractions[round] * (res.size() - 1))];
      if (std::find(out.reference_raw.begin(), out.reference_raw.end(), bus) == out.reference_raw.end())
        out.reference_raw.push_back(bus);
      if (++fi == by_len.size()) {
        fi = 0;
        ++round;
      }
    }
  }

  const auto removal = remove_switches(raw);
  out.net = removal.net;
  out.id_map = removal.id_map;
  for (int r : out.reference_raw) out.reference_final.push_back(removal.id_map.at(r));

  out.feeder_of_bus_final.assign(out.net.buses.size(), -1);
  for (std::size_t f = 0; f < chains.size(); ++f)
    for (int b : chains[f])
      out.feeder_of_bus_final[static_cast<std::size_t>(removal.id_map.at(b) - 1)] = static_cast<int>(f);

  int switches = 0;
  for (const auto& br : raw.branches) switches += br.is_switch ? 1 : 0;
  nlohmann::json man;
  man["seed"] = spec.seed;
  man["raw"] = {{"buses", raw.buses.size()},
                {"branches", raw.branches.size()},
                {"switches", switches},
                {"devices", raw.devices.size()}};
  man["final"] = {{"buses", out.net.buses.size()}, {"branches", out.net.branches.size()}};
  man["radial"] = validate_radial(out.net).is_radial;
  man["feeders"] = spec.feeder_lengths.size();
  man["single_phase_consumers"] = spec.consumers + spec.pv_units;
  man["reference_raw_bus"] = out.reference_raw;
  man["reference_final_bus"] = out.reference_final;
  std::vector<int> heads, tails;
  for (const auto& chain : chains) {
    heads.push_back(out.id_map.at(chain.front()));
    tails.push_back(out.id_map.at(chain.back()));
  }
  man["feeder_head_final_bus"] = heads;
  man["feeder_tail_final_bus"] = tails;
  man["busbar_final_bus"] = out.id_map.at(busbar);
  man["feeder_of_final_bus"] = out.feeder_of_bus_final;
  out.manifest = man;
  return out;
}

}  // namespace phaseid
