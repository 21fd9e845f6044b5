#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "phaseid/network.hpp"
#include "phaseid/parallel.hpp"
#include "phaseid/phase_map.hpp"
#include "phaseid/profiles.hpp"

namespace phaseid {

struct PowerFlowOptions {
  NeutralMode neutral_mode = NeutralMode::Eq1;
  double tolerance = 1e-8;  // pu, max |dV| between sweeps
  int max_iterations = 100;
  double slack_setpoint = 1.0;  // pu magnitude, balanced
};

inline Vec3 balanced_slack(double setpoint) {
  const double a = 2.0 * M_PI / 3.0;
  return Vec3(Complex(setpoint, 0.0), setpoint * Complex(std::cos(-a), std::sin(-a)),
              setpoint * Complex(std::cos(a), std::sin(a)));
}

// Backward-forward sweep on a radial network with 3x3 phase-coupled branch
// impedances and constant-power injections.
class PowerFlowSolver {
 public:
  PowerFlowSolver(const NetworkModel& net, const PowerFlowOptions& opt = {})
      : net_(net), opt_(opt), n_(static_cast<int>(net.buses.size())) {
    const auto rep = validate_radial(net);
    if (!rep.is_radial) throw DataError("power flow requires a connected radial network");
    build_tree();
  }

  // injections[bus-1](phase): complex power drawn at the bus (loads positive)
  std::vector<Vec3> solve(const std::vector<Vec3>& injections) const {
    if (static_cast<int>(injections.size()) != n_)
      throw DataError("injection vector size mismatch");
    const Vec3 vslack = balanced_slack(opt_.slack_setpoint);
    std::vector<Vec3> v(static_cast<std::size_t>(n_), vslack);
    std::vector<Vec3> branch_current(order_.size(), Vec3::Zero());

    double delta = 0.0;
    for (int it = 0; it < opt_.max_iterations; ++it) {
      // backward: accumulate load currents from the leaves toward the root
      for (auto rit = order_.rbegin(); rit != order_.rend(); ++rit) {
        const int bus = rit->child;
        Vec3 current = Vec3::Zero();
        for (int ph = 0; ph < 3; ++ph) {
          const Complex s = injections[static_cast<std::size_t>(bus)](ph);
          if (s != Complex(0.0, 0.0))
            current(ph) = std::conj(s / v[static_cast<std::size_t>(bus)](ph));
        }
        for (int e : children_edges_[static_cast<std::size_t>(bus)])
          current += branch_current[static_cast<std::size_t>(e)];
        branch_current[static_cast<std::size_t>(rit->edge)] = current;
      }
      // forward: propagate voltage drops from the slack outward
      delta = 0.0;
      for (const auto& step : order_) {
        const Vec3 vnew = v[static_cast<std::size_t>(step.parent)] -
                          z_[static_cast<std::size_t>(step.edge)] * branch_current[static_cast<std::size_t>(step.edge)];
        for (int ph = 0; ph < 3; ++ph) {
          delta = std::max(delta, std::abs(vnew(ph) - v[static_cast<std::size_t>(step.child)](ph)));
          if (std::abs(vnew(ph)) < 0.5)
            throw NumericalError("voltage collapse at bus " + std::to_string(step.child + 1));
        }
        v[static_cast<std::size_t>(step.child)] = vnew;
      }
      if (delta < opt_.tolerance) return v;
    }
    throw NumericalError("power flow did not converge in " + std::to_string(opt_.max_iterations) +
                         " iterations (worst mismatch " + std::to_string(delta) + " pu)");
  }

  // Complex power into the network from the slack bus.
  Vec3 slack_injection(const std::vector<Vec3>& v, const std::vector<Vec3>& injections) const {
    std::vector<Vec3> branch_current(order_.size(), Vec3::Zero());
    for (auto rit = order_.rbegin(); rit != order_.rend(); ++rit) {
      const int bus = rit->child;
      Vec3 current = Vec3::Zero();
      for (int ph = 0; ph < 3; ++ph) {
        const Complex s = injections[static_cast<std::size_t>(bus)](ph);
        if (s != Complex(0.0, 0.0)) current(ph) = std::conj(s / v[static_cast<std::size_t>(bus)](ph));
      }
      for (int e : children_edges_[static_cast<std::size_t>(bus)])
        current += branch_current[static_cast<std::size_t>(e)];
      branch_current[static_cast<std::size_t>(rit->edge)] = current;
    }
    Vec3 s = Vec3::Zero();
    const int root = net_.slack_id() - 1;
    for (int e : children_edges_[static_cast<std::size_t>(root)])
      for (int ph = 0; ph < 3; ++ph)
        s(ph) += v[static_cast<std::size_t>(root)](ph) * std::conj(branch_current[static_cast<std::size_t>(e)](ph));
    // slack-local load also comes out of the slack injection
    for (int ph = 0; ph < 3; ++ph) s(ph) += injections[static_cast<std::size_t>(root)](ph);
    return s;
  }

  int bus_count() const { return n_; }
  const NetworkModel& network() const { return net_; }

 private:
  struct Step {
    int parent, child, edge;
  };

  void build_tree() {
    std::vector<std::vector<std::pair<int, int>>> adj(static_cast<std::size_t>(n_));  // (nbr, edge)
    z_.resize(net_.branches.size());
    for (std::size_t e = 0; e < net_.branches.size(); ++e) {
      const auto& br = net_.branches[e];
      adj[static_cast<std::size_t>(br.from_bus - 1)].emplace_back(br.to_bus - 1, static_cast<int>(e));
      adj[static_cast<std::size_t>(br.to_bus - 1)].emplace_back(br.from_bus - 1, static_cast<int>(e));
      z_[e] = br.phase_impedance(opt_.neutral_mode);
    }
    children_edges_.assign(static_cast<std::size_t>(n_), {});
    std::vector<bool> seen(static_cast<std::size_t>(n_), false);
    std::vector<int> queue{net_.slack_id() - 1};
    seen[static_cast<std::size_t>(queue[0])] = true;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const int bus = queue[qi];
      for (auto [nbr, edge] : adj[static_cast<std::size_t>(bus)]) {
        if (seen[static_cast<std::size_t>(nbr)]) continue;
        seen[static_cast<std::size_t>(nbr)] = true;
        order_.push_back({bus, nbr, edge});
        children_edges_[static_cast<std::size_t>(bus)].push_back(edge);
        queue.push_back(nbr);
      }
    }
  }

  NetworkModel net_;
  PowerFlowOptions opt_;
  int n_;
  std::vector<Step> order_;  // BFS order from the slack; edge points toward child
  std::vector<std::vector<int>> children_edges_;
  std::vector<Mat3> z_;
};

// T x N x 3 voltage magnitudes in pu, hourly.
struct VoltagePanel {
  int t_hours = 0;
  int buses = 0;
  std::vector<double> mag;  // layout: [(t * buses + bus) * 3 + phase]

  double& at(int t, int bus0, int phase) {
    return mag[(static_cast<std::size_t>(t) * static_cast<std::size_t>(buses) +
                static_cast<std::size_t>(bus0)) * 3 + static_cast<std::size_t>(phase)];
  }
  double at(int t, int bus0, int phase) const {
    return mag[(static_cast<std::size_t>(t) * static_cast<std::size_t>(buses) +
                static_cast<std::size_t>(bus0)) * 3 + static_cast<std::size_t>(phase)];
  }

  std::vector<double> series(int bus0, int phase) const {
    std::vector<double> s(static_cast<std::size_t>(t_hours));
    for (int t = 0; t < t_hours; ++t) s[static_cast<std::size_t>(t)] = at(t, bus0, phase);
    return s;
  }

  bool operator==(const VoltagePanel&) const = default;
};

// Bus/phase injections at one time step, assembled from device profiles and a
// phase mapping. Single-phase devices land line-to-neutral on their mapped
// phase; three-phase devices split evenly.
inline std::vector<Vec3> injections_at(const NetworkModel& net, const PhaseMapping& mapping,
                                       const LoadSeries& loads, int t) {
  std::vector<Vec3> inj(net.buses.size(), Vec3::Zero());
  std::vector<int> phase_of(net.devices.size(), -1);
  for (std::size_t i = 0; i < mapping.size(); ++i)
    phase_of[static_cast<std::size_t>(mapping.device_index[i])] = static_cast<int>(mapping.phase[i]);
  for (std::size_t d = 0; d < net.devices.size(); ++d) {
    const auto [p, q] = loads.pq[d][static_cast<std::size_t>(t)];
    const Complex s(p, q);
    const auto& dev = net.devices[d];
    if (dev.single_phase) {
      if (phase_of[d] < 0) throw DataError("single-phase device " + std::to_string(d) + " has no mapped phase");
      inj[static_cast<std::size_t>(dev.bus_id - 1)](phase_of[d]) += s;
    } else {
      for (int ph = 0; ph < 3; ++ph) inj[static_cast<std::size_t>(dev.bus_id - 1)](ph) += s / 3.0;
    }
  }
  return inj;
}

// Hour-by-hour solve; steps are independent, so they run in parallel and each
// writes its own panel rows.
inline VoltagePanel simulate_timeseries(const NetworkModel& net, const PhaseMapping& mapping,
                                        const LoadSeries& loads, const PowerFlowOptions& opt = {},
                                        unsigned threads = 0) {
  if (loads.device_count() != net.devices.size())
    throw DataError("load series does not cover all devices");
  const PowerFlowSolver solver(net, opt);
  VoltagePanel panel;
  panel.t_hours = loads.t_hours;
  panel.buses = static_cast<int>(net.buses.size());
  panel.mag.assign(static_cast<std::size_t>(panel.t_hours) * static_cast<std::size_t>(panel.buses) * 3, 0.0);
  parallel_for(static_cast<std::size_t>(loads.t_hours), threads, [&](std::size_t t) {
    try {
      const auto v = solver.solve(injections_at(net, mapping, loads, static_cast<int>(t)));
      for (int b = 0; b < panel.buses; ++b)
        for (int ph = 0; ph < 3; ++ph)
          panel.at(static_cast<int>(t), b, ph) = std::abs(v[static_cast<std::size_t>(b)](ph));
    } catch (const std::exception& e) {
      throw NumericalError("t=" + std::to_string(t + 1) + ": " + e.what());
    }
  });
  return panel;
}

}  // namespace phaseid
