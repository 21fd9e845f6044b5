// Phase connectivity identification for LV distribution networks: parse the
// network, build synthetic voltage data on a digital twin, cluster into
// zones, correlate consumers against zone references, and score the
// consensus models.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "phaseid/casestudy.hpp"
#include "phaseid/feeder_gen.hpp"
#include "phaseid/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using namespace phaseid;

int run_parse(const std::string& network_path, bool as_json) {
  const NetworkModel raw = load_network(network_path);
  const auto removal = remove_switches(raw);
  const auto report = validate_radial(removal.net);
  int switches = 0;
  for (const auto& br : raw.branches) switches += br.is_switch ? 1 : 0;
  if (as_json) {
    nlohmann::json j;
    j["raw"] = {{"buses", raw.buses.size()}, {"branches", raw.branches.size()}, {"switches", switches},
                {"devices", raw.devices.size()}};
    j["final"] = {{"buses", removal.net.buses.size()}, {"branches", removal.net.branches.size()}};
    j["is_connected"] = report.is_connected;
    j["is_radial"] = report.is_radial;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "raw: " << raw.buses.size() << " buses, " << raw.branches.size() << " branches ("
              << switches << " switches), " << raw.devices.size() << " devices\n";
    std::cout << "after switch removal: " << removal.net.buses.size() << " buses, "
              << removal.net.branches.size() << " branches\n";
    std::cout << "connected: " << (report.is_connected ? "yes" : "no")
              << ", radial: " << (report.is_radial ? "yes" : "no") << "\n";
  }
  return 0;
}

int run_genfeeder(const FeederSpec& spec, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const GeneratedFeeder gen = generate_feeder(spec);
  const fs::path netfile = fs::path(out_dir) / "feeder_desk.json";
  const fs::path manfile = fs::path(out_dir) / "feeder_desk.manifest.json";
  std::ofstream net(netfile);
  net << serialize_network(gen.raw) << "\n";
  std::ofstream man(manfile);
  man << gen.manifest.dump(2) << "\n";
  std::cout << "wrote " << netfile.string() << " (" << gen.raw.buses.size() << " buses, "
            << gen.net.buses.size() << " after switch removal)\n";
  std::cout << "wrote " << manfile.string() << " (" << gen.reference_final.size()
            << " reference points)\n";
  return 0;
}

int run_cluster_cmd(const PipelineConfig& cfg, unsigned threads) {
  Scenario s = build_scenario(cfg, threads);
  fs::create_directories(cfg.out_dir);
  write_zoning_json(s.zoning, (fs::path(cfg.out_dir) / "zoning.json").string());
  if (!s.cluster_curve.curve.empty())
    write_silhouette_csv(s.cluster_curve, (fs::path(cfg.out_dir) / "silhouette.csv").string());
  std::cout << "zones: " << s.zoning.zones << " (mean silhouette " << s.zoning.silhouette << ")\n";
  for (int z = 0; z < s.zoning.zones; ++z)
    std::cout << "  zone " << z + 1 << ": " << s.zoning.node_count[static_cast<std::size_t>(z)]
              << " nodes, " << s.zoning.ref_buses[static_cast<std::size_t>(z)].size() << " references, "
              << s.zoning.consumer_device[static_cast<std::size_t>(z)].size() << " consumers\n";
  return 0;
}

int run_simulate_cmd(const PipelineConfig& cfg, unsigned threads) {
  Scenario s = build_scenario(cfg, threads);
  fs::create_directories(cfg.out_dir);
  const fs::path out(cfg.out_dir);
  save_panel_binary(s.truth_panel, (out / "panel_truth.bin").string());
  std::ofstream pcsv(out / "panel_truth.csv");
  write_panel_csv(s.truth_panel, pcsv);
  std::ofstream lcsv(out / "profiles.csv");
  write_profiles_csv(s.loads, lcsv);
  const VoltagePanel refp =
      inject_noise(s.truth_panel, cfg.tau_ref, mix_key(mix_key(cfg.seed_noise, 0), 0x726566ULL));
  save_panel_binary(refp, (out / "panel_ref_noisy.bin").string());
  std::cout << "simulated " << s.truth_panel.t_hours << " hours over " << s.truth_panel.buses
            << " buses (neutral mode " << to_string(cfg.neutral_mode) << ")\n";
  return 0;
}

int run_identify_cmd(const PipelineConfig& cfg, unsigned threads) {
  Scenario s = build_scenario(cfg, threads);
  fs::create_directories(cfg.out_dir);
  const VoltagePanel refp =
      inject_noise(s.truth_panel, cfg.tau_ref, mix_key(mix_key(cfg.seed_noise, 0), 0x726566ULL));
  const VoltagePanel conp =
      inject_noise(s.truth_panel, cfg.tau_consumer, mix_key(mix_key(cfg.seed_noise, 0), 0x636F6EULL));
  const int naive_ref = cfg.naive_reference > 0 ? cfg.naive_reference - 1 : s.reference_bus0.at(0);
  const auto zone_runs = run_identification(s, refp, conp, cfg.metrics, cfg.schemes, naive_ref);
  write_estimates_csv(s, zone_runs, (fs::path(cfg.out_dir) / "estimates.csv").string());
  int uncovered = 0;
  for (const auto& zr : zone_runs)
    if (!zr.covered) ++uncovered;
  std::cout << "estimates written";
  if (uncovered)
    std::cout << " (" << uncovered << " zone-metric cells had no usable reference and were skipped)";
  std::cout << "\n";
  return 0;
}

int run_evaluate_cmd(const PipelineConfig& cfg, unsigned threads) {
  if (cfg.case_study > 0) {
    run_case_study(cfg, threads);
    std::cout << "case study " << cfg.case_study << " written to " << cfg.out_dir << "/cs"
              << cfg.case_study << "\n";
    return 0;
  }
  Scenario s = build_scenario(cfg, threads);
  EvaluateOptions opt;
  opt.metrics = cfg.metrics;
  opt.schemes = cfg.schemes;
  opt.mc_runs = cfg.mc_runs;
  opt.tau_ref = cfg.tau_ref;
  opt.tau_consumer = cfg.tau_consumer;
  opt.naive_ref_bus0 = cfg.naive_reference > 0 ? cfg.naive_reference - 1 : -1;
  const EstimationReport rep = evaluate_mc(s, opt, threads);
  fs::create_directories(cfg.out_dir);
  write_report_csv(rep, (fs::path(cfg.out_dir) / "report.csv").string(), cfg.tau_ref);
  std::ofstream rj(fs::path(cfg.out_dir) / "report.json");
  rj << report_to_json(rep).dump(2) << "\n";
  std::cout << "report written to " << cfg.out_dir << " (Q=" << cfg.mc_runs << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Consensus phase identification on LV network voltage time series"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker thread cap (0 = hardware)");

  std::string network_path;
  bool parse_json = false;
  auto* parse = app.add_subcommand("parse", "validate a network file and report its topology");
  parse->add_option("network", network_path, "network JSON file")->required();
  parse->add_flag("--json", parse_json, "machine-readable output");

  FeederSpec spec;
  std::string gen_out = "data";
  auto* gen = app.add_subcommand("genfeeder", "generate the synthetic desk feeder and its manifest");
  gen->add_option("--out", gen_out, "output directory");
  gen->add_option("--seed", spec.seed, "generator seed");
  gen->add_option("--consumers", spec.consumers, "single-phase household count");
  gen->add_option("--references", spec.references, "reference measurement count");
  gen->add_option("--segment-km", spec.segment_km, "mean cable segment length");
  gen->add_option("--mean-kwh", spec.mean_annual_kwh, "mean annual consumption");

  std::string config_path;
  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "scenario TOML")->required();
  };
  auto* simulate = app.add_subcommand("simulate", "generate truth and noisy voltage panels");
  add_config(simulate);
  auto* cluster = app.add_subcommand("cluster", "zone the network and emit the silhouette curve");
  add_config(cluster);
  int cli_clusters = -1;
  std::string cli_range;
  double cli_beta = -1.0;
  cluster->add_option("--clusters", cli_clusters, "pin the zone count");
  cluster->add_option("--cluster-range", cli_range, "silhouette search range lo:hi");
  cluster->add_option("--beta-fraction", cli_beta, "zone threshold fraction");
  auto* identify = app.add_subcommand("identify", "estimate phases for one noise realization");
  add_config(identify);
  auto* evaluate = app.add_subcommand("evaluate", "Monte Carlo metric report or case study");
  add_config(evaluate);
  auto* pipeline = app.add_subcommand("pipeline", "parse, simulate, cluster, identify, evaluate");
  add_config(pipeline);

  CLI11_PARSE(app, argc, argv);

  try {
    if (parse->parsed()) return run_parse(network_path, parse_json);
    if (gen->parsed()) return run_genfeeder(spec, gen_out);
    PipelineConfig cfg = PipelineConfig::load(config_path);
    if (cluster->parsed()) {
      if (cli_clusters >= 0) cfg.clusters = cli_clusters;
      if (!cli_range.empty()) {
        const auto colon = cli_range.find(':');
        if (colon == std::string::npos) throw ConfigError("--cluster-range expects lo:hi");
        cfg.clusters = 0;
        cfg.range_lo = std::stoi(cli_range.substr(0, colon));
        cfg.range_hi = std::stoi(cli_range.substr(colon + 1));
      }
      if (cli_beta >= 0) cfg.beta_fraction = cli_beta;
      return run_cluster_cmd(cfg, threads);
    }
    if (simulate->parsed()) return run_simulate_cmd(cfg, threads);
    if (identify->parsed()) return run_identify_cmd(cfg, threads);
    if (evaluate->parsed()) return run_evaluate_cmd(cfg, threads);
    if (pipeline->parsed()) {
      run_pipeline(cfg, threads);
      std::cout << "pipeline outputs written to " << cfg.out_dir << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
