#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "phaseid/powerflow.hpp"

namespace phaseid {

// CSV: t,bus,phase,v_pu (t and bus 1-based, phase A/B/C)
inline void write_panel_csv(const VoltagePanel& panel, std::ostream& out) {
  out << "t,bus,phase,v_pu\n";
  char buf[96];
  for (int t = 0; t < panel.t_hours; ++t)
    for (int b = 0; b < panel.buses; ++b)
      for (int ph = 0; ph < 3; ++ph) {
        std::snprintf(buf, sizeof buf, "%d,%d,%c,%.17g\n", t + 1, b + 1, "ABC"[ph],
                      panel.at(t, b, ph));
        out << buf;
      }
}

// Compact columnar binary: magic, version, dims, then per-(bus,phase) columns
// of doubles over t.
inline void write_panel_binary(const VoltagePanel& panel, std::ostream& out) {
  const char magic[4] = {'P', 'H', 'V', 'P'};
  const std::uint32_t version = 1;
  const std::uint32_t t = static_cast<std::uint32_t>(panel.t_hours);
  const std::uint32_t n = static_cast<std::uint32_t>(panel.buses);
  out.write(magic, 4);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&t), 4);
  out.write(reinterpret_cast<const char*>(&n), 4);
  for (int b = 0; b < panel.buses; ++b)
    for (int ph = 0; ph < 3; ++ph)
      for (int ti = 0; ti < panel.t_hours; ++ti) {
        const double v = panel.at(ti, b, ph);
        out.write(reinterpret_cast<const char*>(&v), 8);
      }
}

inline VoltagePanel read_panel_binary(std::istream& in) {
  char magic[4];
  std::uint32_t version = 0, t = 0, n = 0;
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "PHVP", 4) != 0) throw DataError("not a voltage panel file");
  in.read(reinterpret_cast<char*>(&version), 4);
  if (version != 1) throw DataError("unsupported panel version " + std::to_string(version));
  in.read(reinterpret_cast<char*>(&t), 4);
  in.read(reinterpret_cast<char*>(&n), 4);
  VoltagePanel panel;
  panel.t_hours = static_cast<int>(t);
  panel.buses = static_cast<int>(n);
  panel.mag.assign(static_cast<std::size_t>(t) * n * 3, 0.0);
  for (int b = 0; b < panel.buses; ++b)
    for (int ph = 0; ph < 3; ++ph)
      for (int ti = 0; ti < panel.t_hours; ++ti) {
        double v;
        in.read(reinterpret_cast<char*>(&v), 8);
        if (!in) throw DataError("truncated voltage panel file");
        panel.at(ti, b, ph) = v;
      }
  return panel;
}

inline void save_panel_binary(const VoltagePanel& panel, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write panel file: " + path);
  write_panel_binary(panel, out);
}

inline VoltagePanel load_panel_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open panel file: " + path);
  return read_panel_binary(in);
}

}  // namespace phaseid
