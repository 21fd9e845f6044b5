#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "phaseid/clustering.hpp"
#include "phaseid/config.hpp"
#include "phaseid/consensus.hpp"
#include "phaseid/correlation.hpp"
#include "phaseid/metrics.hpp"
#include "phaseid/network_json.hpp"
#include "phaseid/noise.hpp"
#include "phaseid/panel_io.hpp"
#include "phaseid/powerflow.hpp"
#include "phaseid/profiles.hpp"

namespace phaseid {

// Everything a run needs, resolved once: network after switch removal,
// reference roster, ground truth mapping, load profiles, the noise-free
// voltage panel, the zoning and its thresholds.
struct Scenario {
  PipelineConfig cfg;
  NetworkModel net;
  std::map<int, int> id_map;            // raw -> final bus ids
  std::vector<int> reference_bus0;      // final, 0-based
  PhaseMapping truth;
  LoadSeries loads;
  VoltagePanel truth_panel;
  Zoning zoning;
  std::vector<double> beta;
  ClusterCountSelection cluster_curve;  // empty curve when the count was pinned
};

inline std::vector<int> references_from_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open manifest: " + manifest_path);
  nlohmann::json man;
  in >> man;
  if (!man.contains("reference_final_bus"))
    throw DataError("manifest has no reference_final_bus: " + manifest_path);
  std::vector<int> refs;
  for (const auto& v : man["reference_final_bus"]) refs.push_back(v.get<int>() - 1);
  return refs;
}

inline Scenario build_scenario(const PipelineConfig& cfg, unsigned threads = 0) {
  Scenario s;
  s.cfg = cfg;
  const NetworkModel raw = load_network(cfg.network_path);
  auto removal = remove_switches(raw);
  s.net = std::move(removal.net);
  s.id_map = std::move(removal.id_map);

  if (cfg.manifest_path.empty())
    throw ConfigError("paths.manifest is required to locate the reference measurement points");
  s.reference_bus0 = references_from_manifest(cfg.manifest_path);
  for (int b : s.reference_bus0)
    if (b < 0 || b >= static_cast<int>(s.net.buses.size()))
      throw DataError("manifest reference bus " + std::to_string(b + 1) + " is out of range");

  s.truth = random_phase_mapping(s.net.devices, cfg.seed_mapping);

  if (!cfg.profiles_path.empty()) {
    std::ifstream in(cfg.profiles_path);
    if (!in) throw DataError("cannot open profiles CSV: " + cfg.profiles_path);
    s.loads = read_profiles_csv(in, s.net.devices.size());
    if (s.loads.t_hours < cfg.t_hours)
      throw DataError("imported profiles are shorter than sim.t_hours");
    s.loads.t_hours = cfg.t_hours;
    for (auto& pq : s.loads.pq) pq.resize(static_cast<std::size_t>(cfg.t_hours));
  } else {
    s.loads = generate_load_profiles(s.net.devices, cfg.t_hours, cfg.seed_loads, s.net.base_power_va);
  }

  PowerFlowOptions pf;
  pf.neutral_mode = cfg.neutral_mode;
  s.truth_panel = simulate_timeseries(s.net, s.truth, s.loads, pf, threads);

  ClusterOptions copt;
  copt.incidence_weights = cfg.incidence_weights;
  copt.neutral_mode = cfg.neutral_mode;
  int c = cfg.clusters;
  if (c <= 0) {
    std::vector<int> range;
    for (int k = cfg.range_lo; k <= cfg.range_hi; ++k) range.push_back(k);
    s.cluster_curve = select_cluster_count(s.net, range, cfg.seed_clustering, copt);
    c = s.cluster_curve.best_c;
  }
  const auto embedding = spectral_embedding(build_double_stochastic(s.net, copt), c);
  const auto labels = kmeans(embedding, c, copt.kmeans_restarts, cfg.seed_clustering);
  double sil = 0.0;
  if (c >= 2) sil = silhouette_mean(embedding, labels);
  s.zoning = build_zoning(labels, c, s.net, s.reference_bus0, sil);
  s.beta = zone_beta(s.truth_panel, s.zoning, cfg.beta_fraction);
  return s;
}

// Consumer measurements for one zone: each device's series on its true phase.
inline ConsumerMatrix zone_consumers(const Scenario& s, const VoltagePanel& consumer_panel, int zone) {
  const auto& devices = s.zoning.consumer_device[static_cast<std::size_t>(zone)];
  ConsumerMatrix cons;
  cons.zone = zone;
  cons.device = devices;
  cons.values.resize(consumer_panel.t_hours, static_cast<Eigen::Index>(devices.size()));
  std::map<int, Phase> phase_of;
  for (std::size_t i = 0; i < s.truth.size(); ++i)
    phase_of[s.truth.device_index[i]] = s.truth.phase[i];
  for (std::size_t j = 0; j < devices.size(); ++j) {
    const int bus0 = s.net.devices[static_cast<std::size_t>(devices[j])].bus_id - 1;
    const int ph = static_cast<int>(phase_of.at(devices[j]));
    for (int t = 0; t < consumer_panel.t_hours; ++t)
      cons.values(t, static_cast<Eigen::Index>(j)) = consumer_panel.at(t, bus0, ph);
  }
  return cons;
}

inline ReferenceMatrix reference_at(const VoltagePanel& ref_panel, int bus0, int zone) {
  ReferenceMatrix rm;
  rm.bus0 = bus0;
  rm.zone = zone;
  rm.values.resize(ref_panel.t_hours, 3);
  for (int t = 0; t < ref_panel.t_hours; ++t)
    for (int ph = 0; ph < 3; ++ph) rm.values(t, ph) = ref_panel.at(t, bus0, ph);
  return rm;
}

// Result of one Monte Carlo identification pass for one zone and metric.
struct ZoneRun {
  int zone = 0;
  Metric metric = Metric::J1;
  bool covered = false;  // false: no usable reference for this metric
  std::map<Scheme, ConsensusResult> by_scheme;
};

// Identify every configured (zone, metric, scheme) on the given noisy panels.
// The naive scheme S0 correlates each zone's consumers against one global
// reference instead of the zone roster.
inline std::vector<ZoneRun> run_identification(const Scenario& s, const VoltagePanel& ref_panel,
                                               const VoltagePanel& consumer_panel,
                                               const std::vector<Metric>& metrics,
                                               const std::vector<Scheme>& schemes,
                                               int naive_ref_bus0) {
  std::vector<ZoneRun> out;
  for (int z = 0; z < s.zoning.zones; ++z) {
    const auto& consumer_devices = s.zoning.consumer_device[static_cast<std::size_t>(z)];
    if (consumer_devices.empty()) continue;
    const ConsumerMatrix cons = zone_consumers(s, consumer_panel, z);
    std::vector<ReferenceMatrix> refs;
    for (int rb : s.zoning.ref_buses[static_cast<std::size_t>(z)])
      refs.push_back(reference_at(ref_panel, rb, z));

    for (Metric m : metrics) {
      ZoneRun zr;
      zr.zone = z;
      zr.metric = m;
      CorrelationTensor tensor;
      if (!refs.empty()) {
        tensor = build_tensor(m, refs, cons, s.beta[static_cast<std::size_t>(z)]);
        zr.covered = !tensor.rho.empty();
      }
      for (Scheme scheme : schemes) {
        if (scheme == Scheme::S0) {
          if (m != Metric::J1) continue;  // the naive baseline runs on J1 only
          const ReferenceMatrix naive = reference_at(ref_panel, naive_ref_bus0, -1);
          const Eigen::MatrixXd rho = corr_J1(naive, cons);
          ConsensusResult res;
          res.estimate = estimate_naive(rho, m, cons.device, z, naive_ref_bus0);
          res.weights.scheme = Scheme::S0;
          res.weights.g = rho;
          zr.by_scheme.emplace(scheme, std::move(res));
          continue;
        }
        if (!zr.covered) continue;
        if (scheme == Scheme::S1)
          zr.by_scheme.emplace(scheme, consensus_majority(tensor));
        else
          zr.by_scheme.emplace(scheme, consensus_weighted(tensor, scheme));
      }
      out.push_back(std::move(zr));
    }
  }
  return out;
}

struct EvaluateOptions {
  std::vector<Metric> metrics;
  std::vector<Scheme> schemes;
  int mc_runs = 200;
  double tau_ref = 0.0;
  double tau_consumer = 0.0;
  int naive_ref_bus0 = -1;  // default: first manifest reference
};

// Q Monte Carlo noise realizations; per-run seeds derive from (seed_noise, q)
// so runs can execute in parallel and still aggregate deterministically.
inline EstimationReport evaluate_mc(const Scenario& s, const EvaluateOptions& opt,
                                    unsigned threads = 0) {
  const int naive_ref = opt.naive_ref_bus0 >= 0 ? opt.naive_ref_bus0 : s.reference_bus0.at(0);
  std::vector<std::vector<ZoneRun>> runs(static_cast<std::size_t>(opt.mc_runs));
  parallel_for(static_cast<std::size_t>(opt.mc_runs), threads, [&](std::size_t q) {
    const VoltagePanel refp =
        inject_noise(s.truth_panel, opt.tau_ref, mix_key(mix_key(s.cfg.seed_noise, q), 0x726566ULL));
    const VoltagePanel conp = inject_noise(s.truth_panel, opt.tau_consumer,
                                           mix_key(mix_key(s.cfg.seed_noise, q), 0x636F6EULL));
    runs[q] = run_identification(s, refp, conp, opt.metrics, opt.schemes, naive_ref);
  });

  EstimationReport report;
  // aggregate keyed by (zone, metric, scheme); zone-run indexing is identical
  // across q, but per-run coverage may differ (salient exclusion under noise)
  for (std::size_t i = 0; i < runs[0].size(); ++i) {
    const ZoneRun& head = runs[0][i];
    std::set<Scheme> seen;
    for (const auto& run : runs)
      for (const auto& [scheme, res] : run[i].by_scheme) seen.insert(scheme);
    for (const Scheme scheme : seen) {
      ModelScore row;
      row.zone = head.zone;
      row.metric = head.metric;
      row.scheme = scheme;
      std::vector<Eigen::MatrixXd> gs;
      for (const auto& run : runs) {
        auto it = run[i].by_scheme.find(scheme);
        if (it == run[i].by_scheme.end()) continue;
        const ConsensusResult& res = it->second;
        row.per_run_accuracy.push_back(accuracy(res.estimate, s.truth));
        if (scheme != Scheme::S0)
          row.per_run_confidence.push_back(
              confidence_factor(res.weights, res.estimate.device, s.truth));
        gs.push_back(res.weights.g);
      }
      if (row.per_run_accuracy.empty()) continue;
      row.runs = static_cast<int>(row.per_run_accuracy.size());
      double asum = 0.0;
      for (double a : row.per_run_accuracy) asum += a;
      row.accuracy_pct = asum / row.runs;
      if (!row.per_run_confidence.empty()) {
        double fsum = 0.0;
        for (double f : row.per_run_confidence) fsum += f;
        row.confidence = fsum / static_cast<double>(row.per_run_confidence.size());
      }
      if (gs.size() >= 2) row.sensitivity = sensitivity_std(gs);
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

// Consumer-weighted overall accuracy for one (metric, scheme) across zones.
inline double overall_accuracy(const EstimationReport& report, const Scenario& s, Metric m,
                               Scheme scheme) {
  double weighted = 0.0;
  int consumers = 0;
  for (const auto& row : report.rows) {
    if (row.metric != m || row.scheme != scheme) continue;
    const int lc = static_cast<int>(s.zoning.consumer_device[static_cast<std::size_t>(row.zone)].size());
    weighted += row.accuracy_pct * lc;
    consumers += lc;
  }
  if (consumers == 0) throw DataError("no covered zones for " + to_string(m) + "-" + to_string(scheme));
  return weighted / consumers;
}

inline double mean_confidence(const EstimationReport& report, Metric m, Scheme scheme) {
  double sum = 0.0;
  int n = 0;
  for (const auto& row : report.rows) {
    if (row.metric != m || row.scheme != scheme || std::isnan(row.confidence)) continue;
    sum += row.confidence;
    ++n;
  }
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  return sum / n;
}

inline double mean_sensitivity(const EstimationReport& report, Metric m, Scheme scheme) {
  double sum = 0.0;
  int n = 0;
  for (const auto& row : report.rows) {
    if (row.metric != m || row.scheme != scheme || std::isnan(row.sensitivity)) continue;
    sum += row.sensitivity;
    ++n;
  }
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  return sum / n;
}

// ---- file outputs ----------------------------------------------------------

inline void write_zoning_json(const Zoning& zoning, const std::string& path) {
  nlohmann::json doc;
  nlohmann::json labels = nlohmann::json::object();
  for (std::size_t b = 0; b < zoning.zone_of_bus.size(); ++b)
    labels[std::to_string(b + 1)] = zoning.zone_of_bus[b] + 1;
  doc["bus_zone"] = labels;
  doc["zones"] = zoning.zones;
  doc["silhouette"] = zoning.silhouette;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << doc.dump(2) << "\n";
}

inline void write_silhouette_csv(const ClusterCountSelection& sel, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "clusters,silhouette\n";
  char buf[64];
  for (auto [c, score] : sel.curve) {
    std::snprintf(buf, sizeof buf, "%d,%.17g\n", c, score);
    out << buf;
  }
}

inline void write_estimates_csv(const Scenario& s, const std::vector<ZoneRun>& zone_runs,
                                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "consumer_node,zone,metric,scheme,phase,weightA,weightB,weightC\n";
  char buf[160];
  for (const auto& zr : zone_runs) {
    for (const auto& [scheme, res] : zr.by_scheme) {
      for (std::size_t w = 0; w < res.estimate.device.size(); ++w) {
        const int dev = res.estimate.device[w];
        const int node = s.net.devices[static_cast<std::size_t>(dev)].bus_id;
        std::snprintf(buf, sizeof buf, "%d,%d,%s,%s,%c,%.17g,%.17g,%.17g\n", node, zr.zone + 1,
                      to_string(zr.metric).c_str(), to_string(scheme).c_str(),
                      phase_letter(res.estimate.phase[w]), res.weights.g(static_cast<Eigen::Index>(w), 0),
                      res.weights.g(static_cast<Eigen::Index>(w), 1),
                      res.weights.g(static_cast<Eigen::Index>(w), 2));
        out << buf;
      }
    }
  }
}

inline void write_report_csv(const EstimationReport& report, const std::string& path,
                             double tau_label = 0.0) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "zone,metric,scheme,tau,A,F,D\n";
  char buf[160];
  for (const auto& row : report.rows) {
    std::snprintf(buf, sizeof buf, "%d,%s,%s,%.17g,%.17g,%.17g,%.17g\n", row.zone + 1,
                  to_string(row.metric).c_str(), to_string(row.scheme).c_str(), tau_label,
                  row.accuracy_pct, row.confidence, row.sensitivity);
    out << buf;
  }
}

inline nlohmann::json report_to_json(const EstimationReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : report.rows) {
    nlohmann::json r;
    r["zone"] = row.zone + 1;
    r["metric"] = to_string(row.metric);
    r["scheme"] = to_string(row.scheme);
    r["accuracy_pct"] = row.accuracy_pct;
    if (!std::isnan(row.confidence)) r["confidence"] = row.confidence;
    if (!std::isnan(row.sensitivity)) r["sensitivity"] = row.sensitivity;
    r["runs"] = row.runs;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace phaseid
