#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "phaseid/network.hpp"
#include "phaseid/parallel.hpp"
#include "phaseid/powerflow.hpp"
#include "phaseid/rng.hpp"

namespace phaseid {

struct ClusterOptions {
  bool incidence_weights = false;  // unit edge weights instead of |Y| Frobenius norm
  NeutralMode neutral_mode = NeutralMode::Eq1;
  int kmeans_restarts = 20;
  int kmeans_max_iter = 100;
  double sinkhorn_tol = 1e-12;
  int sinkhorn_max_iter = 10000;
};

// Symmetric doubly stochastic matrix over the bus graph: admittance-weighted
// adjacency plus degree self-loops, equilibrated by Sinkhorn-Knopp scaling.
// Self-loops give the matrix total support, which the scaling requires.
inline Eigen::MatrixXd build_double_stochastic(const NetworkModel& net,
                                               const ClusterOptions& opt = {}) {
  const int n = static_cast<int>(net.buses.size());
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (const auto& br : net.branches) {
    if (br.is_switch) continue;
    double weight = 1.0;
    if (!opt.incidence_weights) {
      const Mat3 z = br.phase_impedance(opt.neutral_mode);
      weight = z.inverse().norm();  // |Y| magnitude of the branch block
    }
    w(br.from_bus - 1, br.to_bus - 1) += weight;
    w(br.to_bus - 1, br.from_bus - 1) += weight;
  }
  for (int i = 0; i < n; ++i) {
    const double degree = w.row(i).sum();
    if (degree <= 0.0) throw DataError("isolated bus " + std::to_string(i + 1) + " in cluster graph");
    w(i, i) = degree;
  }
  // symmetric scaling D^-1/2 W D^-1/2 repeated until rows (hence columns) sum to 1
  for (int it = 0; it < opt.sinkhorn_max_iter; ++it) {
    Eigen::VectorXd r = w.rowwise().sum();
    if ((r.array() - 1.0).abs().maxCoeff() < opt.sinkhorn_tol) return w;
    Eigen::VectorXd s = r.array().sqrt().inverse();
    w = s.asDiagonal() * w * s.asDiagonal();
  }
  throw NumericalError("Sinkhorn-Knopp did not converge");
}

// Rows of the N x C matrix of top eigenvectors are the clustering points.
inline Eigen::MatrixXd spectral_embedding(const Eigen::MatrixXd& matrix, int c) {
  const int n = static_cast<int>(matrix.rows());
  if (c < 1 || c > n) throw ConfigError("embedding dimension out of range");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix);
  if (solver.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  // eigenvalues come back ascending; take the trailing C columns
  return solver.eigenvectors().rightCols(c);
}

namespace detail {

inline double sq_dist(const Eigen::MatrixXd& points, int i, const Eigen::RowVectorXd& center) {
  return (points.row(i) - center).squaredNorm();
}

struct KmeansRun {
  std::vector<int> labels;
  double wcss = std::numeric_limits<double>::infinity();
};

inline KmeansRun kmeans_single(const Eigen::MatrixXd& points, int c, RngStream rng, int max_iter) {
  const int n = static_cast<int>(points.rows());
  Eigen::MatrixXd centers(c, points.cols());
  // k-means++ seeding
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  int first = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
  centers.row(0) = points.row(first);
  for (int k = 1; k < c; ++k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      d2[static_cast<std::size_t>(i)] =
          std::min(d2[static_cast<std::size_t>(i)], sq_dist(points, i, centers.row(k - 1)));
      total += d2[static_cast<std::size_t>(i)];
    }
    int pick = n - 1;
    if (total > 0.0) {
      double target = rng.next_double() * total, acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += d2[static_cast<std::size_t>(i)];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
    }
    centers.row(k) = points.row(pick);
  }

  KmeansRun run;
  run.labels.assign(static_cast<std::size_t>(n), 0);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bestd = sq_dist(points, i, centers.row(0));
      for (int k = 1; k < c; ++k) {
        const double d = sq_dist(points, i, centers.row(k));
        if (d < bestd) {
          bestd = d;
          best = k;
        }
      }
      if (run.labels[static_cast<std::size_t>(i)] != best) {
        run.labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    centers.setZero();
    std::vector<int> count(static_cast<std::size_t>(c), 0);
    for (int i = 0; i < n; ++i) {
      centers.row(run.labels[static_cast<std::size_t>(i)]) += points.row(i);
      ++count[static_cast<std::size_t>(run.labels[static_cast<std::size_t>(i)])];
    }
    for (int k = 0; k < c; ++k)
      if (count[static_cast<std::size_t>(k)] > 0) centers.row(k) /= count[static_cast<std::size_t>(k)];
    for (int k = 0; k < c; ++k) {
      if (count[static_cast<std::size_t>(k)] > 0) continue;
      // re-seed an empty cluster on the point farthest from its assigned center
      int far_i = 0;
      double far_d = -1.0;
      for (int i = 0; i < n; ++i) {
        const int li = run.labels[static_cast<std::size_t>(i)];
        if (count[static_cast<std::size_t>(li)] == 0) continue;
        const double d = sq_dist(points, i, centers.row(li));
        if (d > far_d) {
          far_d = d;
          far_i = i;
        }
      }
      centers.row(k) = points.row(far_i);
      changed = true;
    }
    if (!changed && it > 0) break;
  }
  run.wcss = 0.0;
  for (int i = 0; i < n; ++i)
    run.wcss += sq_dist(points, i, centers.row(run.labels[static_cast<std::size_t>(i)]));
  return run;
}

}  // namespace detail

// Best of `restarts` seeded k-means++ runs by within-cluster sum of squares.
inline std::vector<int> kmeans(const Eigen::MatrixXd& points, int c, int restarts,
                               std::uint64_t seed, int max_iter = 100) {
  const int n = static_cast<int>(points.rows());
  if (c > n) throw ConfigError("more clusters than points");
  if (c < 1) throw ConfigError("cluster count must be positive");
  std::vector<detail::KmeansRun> runs(static_cast<std::size_t>(restarts));
  parallel_for(static_cast<std::size_t>(restarts), 0, [&](std::size_t r) {
    runs[r] = detail::kmeans_single(points, c, RngStream(seed, 0x6B6D6E73ULL, r), max_iter);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r)
    if (runs[r].wcss < runs[best].wcss) best = r;
  return runs[best].labels;
}

// Mean silhouette with Euclidean distance; singletons score 0.
inline double silhouette_mean(const Eigen::MatrixXd& points, const std::vector<int>& labels) {
  const int n = static_cast<int>(points.rows());
  if (n == 0) throw ConfigError("silhouette of empty point set");
  const int c = *std::max_element(labels.begin(), labels.end()) + 1;
  std::set<int> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) throw ConfigError("silhouette undefined for a single cluster");

  std::vector<int> count(static_cast<std::size_t>(c), 0);
  for (int l : labels) ++count[static_cast<std::size_t>(l)];

  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const int li = labels[static_cast<std::size_t>(i)];
    if (count[static_cast<std::size_t>(li)] == 1) continue;  // contributes 0
    std::vector<double> mean_dist(static_cast<std::size_t>(c), 0.0);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      mean_dist[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])] +=
          (points.row(i) - points.row(j)).norm();
    }
    double a = mean_dist[static_cast<std::size_t>(li)] / (count[static_cast<std::size_t>(li)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int k = 0; k < c; ++k) {
      if (k == li || count[static_cast<std::size_t>(k)] == 0) continue;
      b = std::min(b, mean_dist[static_cast<std::size_t>(k)] / count[static_cast<std::size_t>(k)]);
    }
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / n;
}

struct ClusterCountSelection {
  int best_c = 0;
  std::vector<std::pair<int, double>> curve;  // (C, mean silhouette)
};

// Silhouette sweep over a candidate range; argmax wins, smallest C on ties.
// Callers may override the choice the way operators do in practice.
inline ClusterCountSelection select_cluster_count(const NetworkModel& net,
                                                  const std::vector<int>& c_range,
                                                  std::uint64_t seed,
                                                  const ClusterOptions& opt = {}) {
  if (c_range.empty()) throw ConfigError("empty cluster-count range");
  const Eigen::MatrixXd m = build_double_stochastic(net, opt);
  ClusterCountSelection sel;
  double best_score = -2.0;
  for (int c : c_range) {
    const Eigen::MatrixXd emb = spectral_embedding(m, c);
    const auto labels = kmeans(emb, c, opt.kmeans_restarts, seed, opt.kmeans_max_iter);
    const double score = c == 1 ? -1.0 : silhouette_mean(emb, labels);
    sel.curve.emplace_back(c, score);
    if (score > best_score + 1e-15 || sel.best_c == 0) {
      best_score = score;
      sel.best_c = c;
    }
  }
  return sel;
}

namespace detail {

// Hungarian assignment (max agreement) on a small square cost matrix.
inline std::vector<int> hungarian_max(const Eigen::MatrixXd& gain) {
  const int n = static_cast<int>(gain.rows());
  Eigen::MatrixXd cost = -gain;
  std::vector<double> u(static_cast<std::size_t>(n + 1)), v(static_cast<std::size_t>(n + 1));
  std::vector<int> p(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), std::numeric_limits<double>::infinity());
    std::vector<bool> used(static_cast<std::size_t>(n + 1), false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      int i0 = p[static_cast<std::size_t>(j0)], j1 = 0;
      double delta = std::numeric_limits<double>::infinity();
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> match(static_cast<std::size_t>(n), 0);  // row -> column
  for (int j = 1; j <= n; ++j)
    if (p[static_cast<std::size_t>(j)] > 0) match[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return match;
}

inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b, int c) {
  Eigen::MatrixXd confusion = Eigen::MatrixXd::Zero(c, c);
  for (std::size_t i = 0; i < a.size(); ++i)
    confusion(a[i], b[i]) += 1.0;
  const auto match = hungarian_max(confusion);
  double agree = 0.0;
  for (int k = 0; k < c; ++k) agree += confusion(k, match[static_cast<std::size_t>(k)]);
  return agree == static_cast<double>(a.size());
}

}  // namespace detail

// Fraction of reseeded k-means runs that reproduce the first partition up to
// a relabeling.
inline double zone_stability(const NetworkModel& net, int c, int trials, std::uint64_t seed,
                             const ClusterOptions& opt = {}) {
  const Eigen::MatrixXd emb = spectral_embedding(build_double_stochastic(net, opt), c);
  std::vector<std::vector<int>> labelings(static_cast<std::size_t>(trials));
  parallel_for(static_cast<std::size_t>(trials), 0, [&](std::size_t t) {
    labelings[t] = kmeans(emb, c, opt.kmeans_restarts, mix_key(seed, t), opt.kmeans_max_iter);
  });
  int same = 0;
  for (const auto& l : labelings)
    if (detail::same_partition(labelings[0], l, c)) ++same;
  return static_cast<double>(same) / trials;
}

// Zone partition with per-zone rosters used by the identification stage.
struct Zoning {
  std::vector<int> zone_of_bus;  // bus0 -> zone index 0..C-1
  int zones = 0;
  double silhouette = 0.0;
  std::vector<std::vector<int>> ref_buses;        // per zone: bus0 of reference points
  std::vector<std::vector<int>> consumer_device;  // per zone: device indices (single-phase)
  std::vector<int> node_count;                    // N_c

  int zone_of(int bus0) const { return zone_of_bus[static_cast<std::size_t>(bus0)]; }
};

inline Zoning build_zoning(const std::vector<int>& labels, int c, const NetworkModel& net,
                           const std::vector<int>& reference_bus0, double silhouette = 0.0) {
  Zoning z;
  z.zone_of_bus = labels;
  z.zones = c;
  z.silhouette = silhouette;
  z.ref_buses.resize(static_cast<std::size_t>(c));
  z.consumer_device.resize(static_cast<std::size_t>(c));
  z.node_count.assign(static_cast<std::size_t>(c), 0);
  for (int l : labels) ++z.node_count[static_cast<std::size_t>(l)];
  for (int b : reference_bus0) z.ref_buses[static_cast<std::size_t>(labels[static_cast<std::size_t>(b)])].push_back(b);
  for (std::size_t d = 0; d < net.devices.size(); ++d)
    if (net.devices[d].single_phase)
      z.consumer_device[static_cast<std::size_t>(labels[static_cast<std::size_t>(net.devices[d].bus_id - 1)])]
          .push_back(static_cast<int>(d));
  return z;
}

// Voltage-change threshold per zone: a fixed fraction of the widest |V| range
// seen on any node/phase of the zone. The 0.4 default was fit to reported
// threshold-to-range ratios; it is a knob, not a law.
inline std::vector<double> zone_beta(const VoltagePanel& panel, const Zoning& zoning,
                                     double fraction = 0.4) {
  std::vector<double> beta(static_cast<std::size_t>(zoning.zones), 0.0);
  std::vector<bool> seen(static_cast<std::size_t>(zoning.zones), false);
  for (int b = 0; b < panel.buses; ++b) {
    const int z = zoning.zone_of(b);
    seen[static_cast<std::size_t>(z)] = true;
    for (int ph = 0; ph < 3; ++ph) {
      double lo = panel.at(0, b, ph), hi = lo;
      for (int t = 1; t < panel.t_hours; ++t) {
        lo = std::min(lo, panel.at(t, b, ph));
        hi = std::max(hi, panel.at(t, b, ph));
      }
      beta[static_cast<std::size_t>(z)] = std::max(beta[static_cast<std::size_t>(z)], hi - lo);
    }
  }
  for (std::size_t z = 0; z < beta.size(); ++z) {
    if (!seen[z]) throw DataError("zone " + std::to_string(z + 1) + " has no time series");
    beta[z] *= fraction;
  }
  return beta;
}

}  // namespace phaseid
