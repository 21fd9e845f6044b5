#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "phaseid/clustering.hpp"
#include "phaseid/consensus.hpp"
#include "phaseid/phase_map.hpp"

namespace phaseid {

// Percent of consumers whose estimated phase matches the truth.
inline double accuracy(const PhaseEstimate& est, const PhaseMapping& truth) {
  if (est.device.empty()) throw DataError("accuracy of an empty estimate");
  std::map<int, Phase> truth_of;
  for (std::size_t i = 0; i < truth.size(); ++i)
    truth_of[truth.device_index[i]] = truth.phase[i];
  int wrong = 0;
  for (std::size_t i = 0; i < est.device.size(); ++i) {
    auto it = truth_of.find(est.device[i]);
    if (it == truth_of.end())
      throw DataError("estimate covers device " + std::to_string(est.device[i]) +
                      " missing from the truth mapping");
    if (it->second != est.phase[i]) ++wrong;
  }
  return 100.0 * (1.0 - static_cast<double>(wrong) / static_cast<double>(est.device.size()));
}

// Worst-case margin between the weight on the true phase and the best wrong
// phase, over a zone's consumers. S2 weights are unbounded, so its margin is
// normalized by the spread of G over the zone.
inline double confidence_factor(const ConsensusWeights& weights, const std::vector<int>& device,
                                const PhaseMapping& truth) {
  const int l = static_cast<int>(weights.g.rows());
  if (l == 0) throw DataError("confidence factor of an empty zone");
  std::map<int, Phase> truth_of;
  for (std::size_t i = 0; i < truth.size(); ++i)
    truth_of[truth.device_index[i]] = truth.phase[i];

  double f = std::numeric_limits<double>::infinity();
  for (int w = 0; w < l; ++w) {
    const int true_ph = static_cast<int>(truth_of.at(device[static_cast<std::size_t>(w)]));
    const double gt = weights.g(w, true_ph);
    double worst_false = -std::numeric_limits<double>::infinity();
    for (int ph = 0; ph < 3; ++ph) {
      if (ph == true_ph || std::isnan(weights.g(w, ph))) continue;
      worst_false = std::max(worst_false, weights.g(w, ph));
    }
    if (std::isnan(gt) || !std::isfinite(worst_false)) continue;
    f = std::min(f, gt - worst_false);
  }
  if (!std::isfinite(f)) throw DataError("confidence factor undefined: no usable weight rows");

  if (weights.scheme == Scheme::S2) {
    const double span = weights.g.maxCoeff() - weights.g.minCoeff();
    if (span > 0.0) f /= span;
  }
  return f;
}

// Spread of the decision measure across Monte Carlo runs: population standard
// deviation per weight entry, averaged over consumers and phases.
inline double sensitivity_std(const std::vector<Eigen::MatrixXd>& per_run_weights) {
  const std::size_t q = per_run_weights.size();
  if (q < 2) throw DataError("sensitivity needs at least two runs");
  const Eigen::Index rows = per_run_weights[0].rows(), cols = per_run_weights[0].cols();
  for (const auto& g : per_run_weights)
    if (g.rows() != rows || g.cols() != cols) throw DataError("run weight shapes differ");
  double total = 0.0;
  std::size_t cells = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double mean = 0.0;
      bool defined = true;
      for (const auto& g : per_run_weights) {
        if (std::isnan(g(r, c))) {
          defined = false;
          break;
        }
        mean += g(r, c);
      }
      if (!defined) continue;
      mean /= static_cast<double>(q);
      double var = 0.0;
      for (const auto& g : per_run_weights) var += (g(r, c) - mean) * (g(r, c) - mean);
      total += std::sqrt(var / static_cast<double>(q));
      ++cells;
    }
  if (cells == 0) throw DataError("sensitivity undefined: all weight entries undefined");
  return total / static_cast<double>(cells);
}

// One aggregated row of an estimation report.
struct ModelScore {
  int zone = 0;
  Metric metric = Metric::J1;
  Scheme scheme = Scheme::S0;
  double accuracy_pct = 0.0;                    // mean over runs
  double confidence = std::numeric_limits<double>::quiet_NaN();
  double sensitivity = std::numeric_limits<double>::quiet_NaN();
  int runs = 0;
  std::vector<double> per_run_accuracy;
  std::vector<double> per_run_confidence;
};

struct EstimationReport {
  std::vector<ModelScore> rows;

  const ModelScore* find(int zone, Metric m, Scheme s) const {
    for (const auto& r : rows)
      if (r.zone == zone && r.metric == m && r.scheme == s) return &r;
    return nullptr;
  }
};

// Lexicographic model order: higher accuracy, then higher confidence, then
// lower sensitivity. NaN confidence sorts last.
inline bool model_better(const ModelScore& a, const ModelScore& b) {
  if (a.accuracy_pct != b.accuracy_pct) return a.accuracy_pct > b.accuracy_pct;
  const double fa = std::isnan(a.confidence) ? -std::numeric_limits<double>::infinity() : a.confidence;
  const double fb = std::isnan(b.confidence) ? -std::numeric_limits<double>::infinity() : b.confidence;
  if (fa != fb) return fa > fb;
  const double da = std::isnan(a.sensitivity) ? std::numeric_limits<double>::infinity() : a.sensitivity;
  const double db = std::isnan(b.sensitivity) ? std::numeric_limits<double>::infinity() : b.sensitivity;
  return da < db;
}

inline std::vector<ModelScore> rank_models(std::vector<ModelScore> rows) {
  std::stable_sort(rows.begin(), rows.end(), model_better);
  return rows;
}

// Per-zone neighbor levels over the zone-adjacency graph: L0 is the zone
// itself, L1 its direct neighbors, and so on. Zones are adjacent when a
// branch joins their node sets. Unreachable levels are simply absent.
inline std::vector<std::vector<std::vector<int>>> zone_level_map(const Zoning& zoning,
                                                                 const NetworkModel& net,
                                                                 int max_level = 3) {
  const int c = zoning.zones;
  std::vector<std::vector<bool>> adjacent(static_cast<std::size_t>(c),
                                          std::vector<bool>(static_cast<std::size_t>(c), false));
  for (const auto& br : net.branches) {
    if (br.is_switch) continue;
    const int za = zoning.zone_of(br.from_bus - 1);
    const int zb = zoning.zone_of(br.to_bus - 1);
    if (za != zb) {
      adjacent[static_cast<std::size_t>(za)][static_cast<std::size_t>(zb)] = true;
      adjacent[static_cast<std::size_t>(zb)][static_cast<std::size_t>(za)] = true;
    }
  }
  std::vector<std::vector<std::vector<int>>> levels(static_cast<std::size_t>(c));
  for (int z = 0; z < c; ++z) {
    std::vector<int> dist(static_cast<std::size_t>(c), -1);
    std::vector<int> queue{z};
    dist[static_cast<std::size_t>(z)] = 0;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const int cur = queue[qi];
      for (int nb = 0; nb < c; ++nb) {
        if (!adjacent[static_cast<std::size_t>(cur)][static_cast<std::size_t>(nb)]) continue;
        if (dist[static_cast<std::size_t>(nb)] >= 0) continue;
        dist[static_cast<std::size_t>(nb)] = dist[static_cast<std::size_t>(cur)] + 1;
        queue.push_back(nb);
      }
    }
    auto& zl = levels[static_cast<std::size_t>(z)];
    zl.resize(static_cast<std::size_t>(max_level) + 1);
    for (int other = 0; other < c; ++other) {
      const int d = dist[static_cast<std::size_t>(other)];
      if (d >= 0 && d <= max_level) zl[static_cast<std::size_t>(d)].push_back(other);
    }
  }
  return levels;
}

}  // namespace phaseid
