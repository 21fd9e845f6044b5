#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phaseid/common.hpp"

namespace phaseid {

enum class Metric { J1 = 1, J2 = 2, J3 = 3 };

inline std::string to_string(Metric m) { return "J" + std::to_string(static_cast<int>(m)); }

inline Metric metric_from_string(const std::string& s) {
  if (s == "J1") return Metric::J1;
  if (s == "J2") return Metric::J2;
  if (s == "J3") return Metric::J3;
  throw ConfigError("unknown metric: " + s);
}

// Pearson correlation; NaN tags an undefined value (zero-variance input),
// which downstream treats as -inf in argmax and skips in sums.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DataError("pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 3) throw DataError("pearson: need at least 3 samples");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

// Three-phase voltage series at one measurement node (columns A,B,C).
struct ReferenceMatrix {
  Eigen::MatrixXd values;  // T x 3
  int bus0 = 0;
  int zone = 0;
};

// Voltage series of a zone's single-phase consumers, one column each.
struct ConsumerMatrix {
  Eigen::MatrixXd values;        // T x L
  std::vector<int> device;       // column -> device index
  int zone = 0;
};

namespace detail {

inline std::vector<double> column(const Eigen::MatrixXd& m, int c) {
  std::vector<double> v(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) v[static_cast<std::size_t>(i)] = m(i, c);
  return v;
}

inline std::vector<double> column_at(const Eigen::MatrixXd& m, int c, const std::vector<int>& rows) {
  std::vector<double> v(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) v[i] = m(rows[i], c);
  return v;
}

inline Eigen::MatrixXd diff_rows(const Eigen::MatrixXd& m) {
  return m.bottomRows(m.rows() - 1) - m.topRows(m.rows() - 1);
}

}  // namespace detail

// rho(w, phi) = pearson(consumer column w, reference phase phi) over the raw
// magnitude series.
inline Eigen::MatrixXd corr_J1(const ReferenceMatrix& ref, const ConsumerMatrix& cons) {
  if (ref.values.rows() != cons.values.rows()) throw DataError("corr_J1: length mismatch");
  const int l = static_cast<int>(cons.values.cols());
  Eigen::MatrixXd rho(l, 3);
  for (int w = 0; w < l; ++w) {
    const auto cw = detail::column(cons.values, w);
    for (int ph = 0; ph < 3; ++ph) rho(w, ph) = pearson(cw, detail::column(ref.values, ph));
  }
  return rho;
}

// Diff-row indices where any reference phase moves by more than beta.
// Index t refers to the change between samples t and t+1 (0-based).
inline std::vector<int> salient_indices(const ReferenceMatrix& ref, double beta) {
  const Eigen::MatrixXd d = detail::diff_rows(ref.values);
  std::vector<int> idx;
  for (Eigen::Index t = 0; t < d.rows(); ++t) {
    for (int ph = 0; ph < 3; ++ph) {
      if (std::abs(d(t, ph)) > beta) {
        idx.push_back(static_cast<int>(t));
        break;
      }
    }
  }
  return idx;
}

struct SalientTooSmall : DataError {
  using DataError::DataError;
};

// Correlation of voltage-difference series restricted to the reference's
// salient rows.
inline Eigen::MatrixXd corr_J2(const ReferenceMatrix& ref, const ConsumerMatrix& cons, double beta) {
  if (ref.values.rows() != cons.values.rows()) throw DataError("corr_J2: length mismatch");
  const auto idx = salient_indices(ref, beta);
  if (idx.size() < 3)
    throw SalientTooSmall("corr_J2: only " + std::to_string(idx.size()) +
                          " salient timestamps at reference bus " + std::to_string(ref.bus0 + 1));
  const Eigen::MatrixXd dref = detail::diff_rows(ref.values);
  const Eigen::MatrixXd dcons = detail::diff_rows(cons.values);
  const int l = static_cast<int>(cons.values.cols());
  Eigen::MatrixXd rho(l, 3);
  for (int w = 0; w < l; ++w) {
    const auto cw = detail::column_at(dcons, w, idx);
    for (int ph = 0; ph < 3; ++ph) rho(w, ph) = pearson(cw, detail::column_at(dref, ph, idx));
  }
  return rho;
}

// Salient diff index t maps to magnitude rows {t, t+1}; duplicates collapse.
inline std::vector<int> augment_salient(const std::vector<int>& salient) {
  std::vector<int> rows;
  rows.reserve(salient.size() * 2);
  for (int t : salient) {
    if (rows.empty() || rows.back() != t) rows.push_back(t);
    rows.push_back(t + 1);
  }
  return rows;
}

// Correlation of voltage magnitudes at the augmented salient rows.
inline Eigen::MatrixXd corr_J3(const ReferenceMatrix& ref, const ConsumerMatrix& cons, double beta) {
  if (ref.values.rows() != cons.values.rows()) throw DataError("corr_J3: length mismatch");
  const auto idx = augment_salient(salient_indices(ref, beta));
  if (idx.size() < 3)
    throw SalientTooSmall("corr_J3: only " + std::to_string(idx.size()) +
                          " salient timestamps at reference bus " + std::to_string(ref.bus0 + 1));
  const int l = static_cast<int>(cons.values.cols());
  Eigen::MatrixXd rho(l, 3);
  for (int w = 0; w < l; ++w) {
    const auto cw = detail::column_at(cons.values, w, idx);
    for (int ph = 0; ph < 3; ++ph) rho(w, ph) = pearson(cw, detail::column_at(ref.values, ph, idx));
  }
  return rho;
}

// Per-zone stack of L x 3 correlation matrices, one per usable reference.
struct CorrelationTensor {
  Metric metric = Metric::J1;
  int zone = 0;
  std::vector<int> consumer_device;          // row -> device index
  std::vector<Eigen::MatrixXd> rho;          // per included reference
  std::vector<int> ref_bus0;                 // included references
  std::vector<int> excluded_ref_bus0;        // references with too few salient rows
};

inline CorrelationTensor build_tensor(Metric metric, const std::vector<ReferenceMatrix>& refs,
                                      const ConsumerMatrix& cons, double beta) {
  CorrelationTensor t;
  t.metric = metric;
  t.zone = cons.zone;
  t.consumer_device = cons.device;
  for (const auto& ref : refs) {
    try {
      switch (metric) {
        case Metric::J1: t.rho.push_back(corr_J1(ref, cons)); break;
        case Metric::J2: t.rho.push_back(corr_J2(ref, cons, beta)); break;
        case Metric::J3: t.rho.push_back(corr_J3(ref, cons, beta)); break;
      }
      t.ref_bus0.push_back(ref.bus0);
    } catch (const SalientTooSmall&) {
      t.excluded_ref_bus0.push_back(ref.bus0);
    }
  }
  return t;
}

}  // namespace phaseid
