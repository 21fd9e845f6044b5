#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phaseid/correlation.hpp"

namespace phaseid {

enum class Scheme { S0 = 0, S1 = 1, S2 = 2, S3 = 3, S4 = 4 };

inline std::string to_string(Scheme s) { return "S" + std::to_string(static_cast<int>(s)); }

inline Scheme scheme_from_string(const std::string& s) {
  if (s == "S0") return Scheme::S0;
  if (s == "S1") return Scheme::S1;
  if (s == "S2") return Scheme::S2;
  if (s == "S3") return Scheme::S3;
  if (s == "S4") return Scheme::S4;
  throw ConfigError("unknown scheme: " + s);
}

struct PhaseEstimate {
  Metric metric = Metric::J1;
  Scheme scheme = Scheme::S0;
  int zone = 0;
  std::vector<int> device;        // consumer device indices
  std::vector<Phase> phase;       // estimated phase per consumer
  std::vector<bool> tie_flagged;  // argmax or vote tie resolved by policy
  std::vector<int> ref_bus0;      // references the estimate was built from
};

namespace detail {

// NaN -> -inf; ties resolve to the lowest phase index (A < B < C).
inline int argmax_row(const Eigen::MatrixXd& m, int row, bool& tie) {
  int best = -1;
  double bestv = -std::numeric_limits<double>::infinity();
  tie = false;
  for (int ph = 0; ph < 3; ++ph) {
    const double v = m(row, ph);
    if (std::isnan(v)) continue;
    if (v > bestv) {
      bestv = v;
      best = ph;
      tie = false;
    } else if (v == bestv) {
      tie = true;
    }
  }
  if (best < 0) throw DataError("all correlations undefined for consumer row " + std::to_string(row));
  return best;
}

}  // namespace detail

// Naive model: argmax over one reference's correlation matrix.
inline PhaseEstimate estimate_naive(const Eigen::MatrixXd& rho, Metric metric,
                                    const std::vector<int>& consumer_device, int zone,
                                    int ref_bus0) {
  PhaseEstimate est;
  est.metric = metric;
  est.scheme = Scheme::S0;
  est.zone = zone;
  est.device = consumer_device;
  est.ref_bus0 = {ref_bus0};
  const int l = static_cast<int>(rho.rows());
  est.phase.resize(static_cast<std::size_t>(l));
  est.tie_flagged.assign(static_cast<std::size_t>(l), false);
  for (int w = 0; w < l; ++w) {
    bool tie = false;
    est.phase[static_cast<std::size_t>(w)] = static_cast<Phase>(detail::argmax_row(rho, w, tie));
    est.tie_flagged[static_cast<std::size_t>(w)] = tie;
  }
  return est;
}

struct ConsensusWeights {
  Scheme scheme = Scheme::S2;
  Eigen::MatrixXd g;  // L x 3
};

struct ConsensusResult {
  ConsensusWeights weights;
  PhaseEstimate estimate;
};

// Majority vote over the per-reference argmax estimates. Vote shares are the
// weights (votes / M_c); vote ties fall back to the summed correlation of the
// tied phases and are flagged.
inline ConsensusResult consensus_majority(const CorrelationTensor& tensor) {
  const std::size_t m = tensor.rho.size();
  if (m == 0) throw DataError("majority consensus needs at least one reference");
  const int l = static_cast<int>(tensor.rho[0].rows());

  ConsensusResult out;
  out.weights.scheme = Scheme::S1;
  out.weights.g = Eigen::MatrixXd::Zero(l, 3);
  out.estimate.metric = tensor.metric;
  out.estimate.scheme = Scheme::S1;
  out.estimate.zone = tensor.zone;
  out.estimate.device = tensor.consumer_device;
  out.estimate.ref_bus0 = tensor.ref_bus0;
  out.estimate.phase.resize(static_cast<std::size_t>(l));
  out.estimate.tie_flagged.assign(static_cast<std::size_t>(l), false);

  for (int w = 0; w < l; ++w) {
    int votes[3] = {0, 0, 0};
    for (const auto& rho : tensor.rho) {
      bool tie = false;
      ++votes[detail::argmax_row(rho, w, tie)];
    }
    for (int ph = 0; ph < 3; ++ph)
      out.weights.g(w, ph) = static_cast<double>(votes[ph]) / static_cast<double>(m);
    const int top = *std::max_element(votes, votes + 3);
    std::vector<int> tied;
    for (int ph = 0; ph < 3; ++ph)
      if (votes[ph] == top) tied.push_back(ph);
    int pick = tied[0];
    if (tied.size() > 1) {
      // summed correlation of the tied phases decides
      double best = -std::numeric_limits<double>::infinity();
      for (int ph : tied) {
        double sum = 0.0;
        for (const auto& rho : tensor.rho)
          if (!std::isnan(rho(w, ph))) sum += rho(w, ph);
        if (sum > best) {
          best = sum;
          pick = ph;
        }
      }
      out.estimate.tie_flagged[static_cast<std::size_t>(w)] = true;
    }
    out.estimate.phase[static_cast<std::size_t>(w)] = static_cast<Phase>(pick);
  }
  return out;
}

// Weighted consensus over all references in the tensor.
//   S2: row-normalized signed sum of correlations
//   S3: row-normalized sum of absolute correlations (rows sum to 1)
//   S4: per-entry max of |rho| over references, row-normalized by its max
// Undefined (NaN) correlations are skipped rather than counted as zero, so a
// dead reference cannot dilute the denominators.
inline ConsensusResult consensus_weighted(const CorrelationTensor& tensor, Scheme scheme) {
  if (scheme != Scheme::S2 && scheme != Scheme::S3 && scheme != Scheme::S4)
    throw ConfigError("consensus_weighted handles S2, S3, S4");
  const std::size_t m = tensor.rho.size();
  if (m == 0) throw DataError("weighted consensus needs at least one reference");
  const int l = static_cast<int>(tensor.rho[0].rows());

  Eigen::MatrixXd g(l, 3);
  for (int w = 0; w < l; ++w) {
    double num[3] = {0.0, 0.0, 0.0};
    bool any[3] = {false, false, false};
    if (scheme == Scheme::S4) {
      for (int ph = 0; ph < 3; ++ph) num[ph] = -std::numeric_limits<double>::infinity();
    }
    for (const auto& rho : tensor.rho) {
      for (int ph = 0; ph < 3; ++ph) {
        const double v = rho(w, ph);
        if (std::isnan(v)) continue;
        any[ph] = true;
        switch (scheme) {
          case Scheme::S2: num[ph] += v; break;
          case Scheme::S3: num[ph] += std::abs(v); break;
          case Scheme::S4: num[ph] = std::max(num[ph], std::abs(v)); break;
          default: break;
        }
      }
    }
    double den = 0.0;
    if (scheme == Scheme::S4) {
      den = -std::numeric_limits<double>::infinity();
      for (int ph = 0; ph < 3; ++ph)
        if (any[ph]) den = std::max(den, num[ph]);
      if (!std::isfinite(den) || den == 0.0)
        throw DataError("consensus row denominator undefined for consumer row " + std::to_string(w));
    } else {
      bool all_undefined = true;
      for (int ph = 0; ph < 3; ++ph) {
        if (any[ph]) all_undefined = false;
        den += any[ph] ? num[ph] : 0.0;
      }
      if (all_undefined || den == 0.0)
        throw DataError("consensus row denominator zero for consumer row " + std::to_string(w));
    }
    for (int ph = 0; ph < 3; ++ph)
      g(w, ph) = any[ph] ? num[ph] / den : std::numeric_limits<double>::quiet_NaN();
  }

  ConsensusResult out;
  out.weights.scheme = scheme;
  out.weights.g = g;
  out.estimate.metric = tensor.metric;
  out.estimate.scheme = scheme;
  out.estimate.zone = tensor.zone;
  out.estimate.device = tensor.consumer_device;
  out.estimate.ref_bus0 = tensor.ref_bus0;
  out.estimate.phase.resize(static_cast<std::size_t>(l));
  out.estimate.tie_flagged.assign(static_cast<std::size_t>(l), false);
  for (int w = 0; w < l; ++w) {
    bool tie = false;
    out.estimate.phase[static_cast<std::size_t>(w)] = static_cast<Phase>(detail::argmax_row(g, w, tie));
    out.estimate.tie_flagged[static_cast<std::size_t>(w)] = tie;
  }
  return out;
}

}  // namespace phaseid
