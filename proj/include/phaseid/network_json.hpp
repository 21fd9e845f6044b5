#pragma once

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "phaseid/network.hpp"

namespace phaseid {

namespace detail {

using nlohmann::json;

inline DataError schema_error(const std::string& path, const std::string& what) {
  return DataError(path + ": " + what);
}

inline const json& require(const json& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) throw schema_error(path + "/" + key, "missing field");
  return *it;
}

inline double require_number(const json& j, const char* key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_number()) throw schema_error(path + "/" + key, "expected a number");
  return v.get<double>();
}

inline int require_int(const json& j, const char* key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_number_integer()) throw schema_error(path + "/" + key, "expected an integer");
  return v.get<int>();
}

inline bool require_bool(const json& j, const char* key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_boolean()) throw schema_error(path + "/" + key, "expected a boolean");
  return v.get<bool>();
}

inline std::string require_string(const json& j, const char* key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_string()) throw schema_error(path + "/" + key, "expected a string");
  return v.get<std::string>();
}

// r/x arrays are row-major, 9 entries (3x3) or 16 (4x4)
inline void read_matrix(const json& r, const json& x, const std::string& path, Branch& br) {
  if (!r.is_array() || !x.is_array()) throw schema_error(path, "r and x must be arrays");
  const std::size_t n = r.size();
  if (n != x.size()) throw schema_error(path, "r and x lengths differ");
  if (n != 9 && n != 16) throw schema_error(path, "expected 9 or 16 entries, got " + std::to_string(n));
  const int dim = n == 9 ? 3 : 4;
  br.four_wire = dim == 4;
  br.impedance = Mat4::Zero();
  for (int p = 0; p < dim; ++p)
    for (int q = 0; q < dim; ++q) {
      const json& re = r[static_cast<std::size_t>(p * dim + q)];
      const json& im = x[static_cast<std::size_t>(p * dim + q)];
      if (!re.is_number() || !im.is_number()) throw schema_error(path, "non-numeric impedance entry");
      br.impedance(p, q) = Complex(re.get<double>(), im.get<double>());
      if (!std::isfinite(re.get<double>()) || !std::isfinite(im.get<double>()))
        throw schema_error(path, "non-finite impedance entry");
    }
}

}  // namespace detail

// Flat network document. Structural invariants (contiguous ids, exactly one
// slack, live references, symmetric finite impedances) are enforced here;
// radiality is a property of the non-switch graph and is reported separately
// by validate_radial.
inline NetworkModel parse_network(const std::string& text) {
  using detail::require;
  using detail::require_bool;
  using detail::require_int;
  using detail::require_number;
  using detail::require_string;
  using detail::schema_error;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid JSON: ") + e.what());
  }

  NetworkModel net;
  const auto& base = require(doc, "base", "");
  net.base_power_va = require_number(base, "s_va", "/base");
  net.base_voltage_v = require_number(base, "v_volt", "/base");
  if (net.base_power_va <= 0 || net.base_voltage_v <= 0)
    throw schema_error("/base", "bases must be positive");

  const auto& buses = require(doc, "buses", "");
  if (!buses.is_array() || buses.empty()) throw schema_error("/buses", "expected a non-empty array");
  std::set<int> ids;
  int slack_count = 0;
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const std::string path = "/buses/" + std::to_string(i);
    Bus b;
    b.id = require_int(buses[i], "id", path);
    b.original_id = require_string(buses[i], "original_id", path);
    b.is_slack = require_bool(buses[i], "slack", path);
    if (!ids.insert(b.id).second) throw schema_error(path + "/id", "duplicate bus id");
    slack_count += b.is_slack ? 1 : 0;
    net.buses.push_back(b);
  }
  const int n = static_cast<int>(net.buses.size());
  if (*ids.begin() != 1 || *ids.rbegin() != n)
    throw schema_error("/buses", "ids must form the contiguous range 1.." + std::to_string(n));
  if (slack_count != 1)
    throw schema_error("/buses", "expected exactly one slack bus, found " + std::to_string(slack_count));
  std::sort(net.buses.begin(), net.buses.end(), [](const Bus& a, const Bus& b) { return a.id < b.id; });

  const auto& branches = require(doc, "branches", "");
  if (!branches.is_array()) throw schema_error("/branches", "expected an array");
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const std::string path = "/branches/" + std::to_string(i);
    Branch br;
    br.from_bus = require_int(branches[i], "from", path);
    br.to_bus = require_int(branches[i], "to", path);
    br.is_switch = require_bool(branches[i], "switch", path);
    if (!ids.count(br.from_bus)) throw schema_error(path + "/from", "dangling bus reference " + std::to_string(br.from_bus));
    if (!ids.count(br.to_bus)) throw schema_error(path + "/to", "dangling bus reference " + std::to_string(br.to_bus));
    detail::read_matrix(require(branches[i], "r", path), require(branches[i], "x", path), path, br);
    if (br.four_wire) {
      if (!is_symmetric(br.impedance)) throw schema_error(path, "impedance matrix is not symmetric");
    } else {
      Mat4 z = br.impedance;  // symmetry check on the 3x3 payload only
      for (int p = 0; p < 3; ++p)
        for (int q = p + 1; q < 3; ++q)
          if (std::abs(z(p, q) - z(q, p)) > 1e-9) throw schema_error(path, "impedance matrix is not symmetric");
    }
    if (!br.is_switch && br.phase_impedance(NeutralMode::Drop).norm() == 0.0)
      throw schema_error(path, "zero impedance on a non-switch branch");
    net.branches.push_back(br);
  }

  const auto& devices = require(doc, "devices", "");
  if (!devices.is_array()) throw schema_error("/devices", "expected an array");
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const std::string path = "/devices/" + std::to_string(i);
    Device d;
    d.bus_id = require_int(devices[i], "bus", path);
    if (!ids.count(d.bus_id)) throw schema_error(path + "/bus", "dangling bus reference " + std::to_string(d.bus_id));
    d.kind = device_kind_from_string(require_string(devices[i], "kind", path));
    d.annual_kwh = require_number(devices[i], "annual_kwh", path);
    const std::string ph = require_string(devices[i], "phases", path);
    if (ph != "1" && ph != "3") throw schema_error(path + "/phases", "expected \"1\" or \"3\"");
    d.single_phase = ph == "1";
    if (devices[i].contains("p_avail")) d.p_avail = require_number(devices[i], "p_avail", path);
    if (devices[i].contains("q_avail")) d.q_avail = require_number(devices[i], "q_avail", path);
    if (d.is_load() && d.annual_kwh <= 0)
      throw schema_error(path + "/annual_kwh", "load device needs annual_kwh > 0");
    net.devices.push_back(d);
  }
  return net;
}

inline NetworkModel load_network(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open network file: " + file);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_network(ss.str());
}

inline std::string serialize_network(const NetworkModel& net) {
  nlohmann::json doc;
  doc["base"] = {{"s_va", net.base_power_va}, {"v_volt", net.base_voltage_v}};
  doc["buses"] = nlohmann::json::array();
  for (const auto& b : net.buses)
    doc["buses"].push_back({{"id", b.id}, {"original_id", b.original_id}, {"slack", b.is_slack}});
  doc["branches"] = nlohmann::json::array();
  for (const auto& br : net.branches) {
    const int dim = br.four_wire ? 4 : 3;
    std::vector<double> r, x;
    for (int p = 0; p < dim; ++p)
      for (int q = 0; q < dim; ++q) {
        r.push_back(br.impedance(p, q).real());
        x.push_back(br.impedance(p, q).imag());
      }
    doc["branches"].push_back(
        {{"from", br.from_bus}, {"to", br.to_bus}, {"r", r}, {"x", x}, {"switch", br.is_switch}});
  }
  doc["devices"] = nlohmann::json::array();
  for (const auto& d : net.devices) {
    doc["devices"].push_back({{"bus", d.bus_id},
                              {"kind", to_string(d.kind)},
                              {"annual_kwh", d.annual_kwh},
                              {"phases", d.single_phase ? "1" : "3"},
                              {"p_avail", d.p_avail},
                              {"q_avail", d.q_avail}});
  }
  return doc.dump(2);
}

}  // namespace phaseid
