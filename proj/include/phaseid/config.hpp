#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phaseid/consensus.hpp"
#include "phaseid/correlation.hpp"
#include "phaseid/impedance.hpp"
#include "phaseid/toml_lite.hpp"

namespace phaseid {

// Resolved scenario configuration. Seeds are mandatory: a run that cannot be
// reproduced is a run that cannot be debugged. Thread count is execution
// policy, not scenario, so it lives on the CLI instead.
struct PipelineConfig {
  std::string network_path;
  std::string manifest_path;
  std::string profiles_path;  // optional CSV import
  std::string out_dir;

  std::uint64_t seed_mapping = 0;
  std::uint64_t seed_loads = 0;
  std::uint64_t seed_noise = 0;
  std::uint64_t seed_clustering = 0;

  int t_hours = 720;
  double tau_ref = 0.0;
  double tau_consumer = 0.0;
  NeutralMode neutral_mode = NeutralMode::Eq1;

  int clusters = 0;  // 0 = pick by silhouette over [range_lo, range_hi]
  int range_lo = 2;
  int range_hi = 10;
  double beta_fraction = 0.4;
  bool incidence_weights = false;

  std::vector<Metric> metrics = {Metric::J1, Metric::J2, Metric::J3};
  std::vector<Scheme> schemes = {Scheme::S0, Scheme::S1, Scheme::S2, Scheme::S3, Scheme::S4};
  int naive_reference = 0;  // final bus id for S0; 0 = substation (first manifest reference)

  int mc_runs = 200;
  int case_study = 0;  // 0 = plain evaluate, 1..4 = case studies

  static PipelineConfig from_toml(const TomlTable& t) {
    PipelineConfig c;
    c.network_path = t.get_string("paths.network");
    c.manifest_path = t.get_string("paths.manifest", "");
    c.profiles_path = t.get_string("paths.profiles", "");
    c.out_dir = t.get_string("paths.out");

    for (const char* key : {"seeds.mapping", "seeds.loads", "seeds.noise", "seeds.clustering"})
      if (!t.has(key)) throw ConfigError(std::string("seed must be explicit: ") + key);
    c.seed_mapping = static_cast<std::uint64_t>(t.get_int("seeds.mapping"));
    c.seed_loads = static_cast<std::uint64_t>(t.get_int("seeds.loads"));
    c.seed_noise = static_cast<std::uint64_t>(t.get_int("seeds.noise"));
    c.seed_clustering = static_cast<std::uint64_t>(t.get_int("seeds.clustering"));

    c.t_hours = static_cast<int>(t.get_int("sim.t_hours", 720));
    if (c.t_hours < 24) throw ConfigError("sim.t_hours must be at least 24");
    c.tau_ref = t.get_double("sim.tau_ref", 0.0);
    c.tau_consumer = t.get_double("sim.tau_consumer", 0.0);
    if (c.tau_ref < 0 || c.tau_consumer < 0) throw ConfigError("tau must be non-negative");
    c.neutral_mode = neutral_mode_from_string(t.get_string("sim.neutral_mode", "eq1"));

    c.clusters = static_cast<int>(t.get_int("cluster.clusters", 0));
    c.range_lo = static_cast<int>(t.get_int("cluster.range_lo", 2));
    c.range_hi = static_cast<int>(t.get_int("cluster.range_hi", 10));
    c.beta_fraction = t.get_double("cluster.beta_fraction", 0.4);
    c.incidence_weights = t.get_bool("cluster.incidence_weights", false);

    if (t.has("identify.metrics")) {
      c.metrics.clear();
      for (const auto& m : t.get_string_array("identify.metrics")) c.metrics.push_back(metric_from_string(m));
    }
    if (t.has("identify.schemes")) {
      c.schemes.clear();
      for (const auto& s : t.get_string_array("identify.schemes")) c.schemes.push_back(scheme_from_string(s));
    }
    c.naive_reference = static_cast<int>(t.get_int("identify.naive_reference", 0));

    c.mc_runs = static_cast<int>(t.get_int("evaluate.q", 200));
    if (c.mc_runs < 1) throw ConfigError("evaluate.q must be positive");
    c.case_study = static_cast<int>(t.get_int("evaluate.case", 0));
    if (c.case_study < 0 || c.case_study > 4) throw ConfigError("evaluate.case must be 0..4");
    return c;
  }

  static PipelineConfig load(const std::string& path) { return from_toml(TomlTable::load(path)); }

  // Full echo of the resolved configuration, defaults included, for run
  // provenance.
  std::string to_toml() const {
    std::ostringstream out;
    out << "[paths]\n";
    out << "network = \"" << network_path << "\"\n";
    out << "manifest = \"" << manifest_path << "\"\n";
    out << "profiles = \"" << profiles_path << "\"\n";
    out << "out = \"" << out_dir << "\"\n\n";
    out << "[seeds]\n";
    out << "mapping = " << seed_mapping << "\n";
    out << "loads = " << seed_loads << "\n";
    out << "noise = " << seed_noise << "\n";
    out << "clustering = " << seed_clustering << "\n\n";
    out << "[sim]\n";
    out << "t_hours = " << t_hours << "\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", tau_ref);
    out << "tau_ref = " << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", tau_consumer);
    out << "tau_consumer = " << buf << "\n";
    out << "neutral_mode = \"" << to_string(neutral_mode) << "\"\n\n";
    out << "[cluster]\n";
    out << "clusters = " << clusters << "\n";
    out << "range_lo = " << range_lo << "\n";
    out << "range_hi = " << range_hi << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", beta_fraction);
    out << "beta_fraction = " << buf << "\n";
    out << "incidence_weights = " << (incidence_weights ? "true" : "false") << "\n\n";
    out << "[identify]\n";
    out << "metrics = [";
    for (std::size_t i = 0; i < metrics.size(); ++i)
      out << (i ? ", " : "") << "\"" << to_string(metrics[i]) << "\"";
    out << "]\n";
    out << "schemes = [";
    for (std::size_t i = 0; i < schemes.size(); ++i)
      out << (i ? ", " : "") << "\"" << to_string(schemes[i]) << "\"";
    out << "]\n";
    out << "naive_reference = " << naive_reference << "\n\n";
    out << "[evaluate]\n";
    out << "q = " << mc_runs << "\n";
    out << "case = " << case_study << "\n";
    return out.str();
  }
};

}  // namespace phaseid
