#pragma once

// Finite-size-scaling fits.
//
//   Binder:  U4(g, L) = Σ_k a_k x^k,              x = (g − g_c) L^{1/ν}
//   Order:   F(g, L)  = L^{−β/ν} Σ_k b_k x^k
//
// Weighted least squares; Levenberg–Marquardt for the Binder ansatz and a
// 1-D search over β with an inner linear solve for the order ansatz.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "rydberg/errors.hpp"
#include "rydberg/rng.hpp"
#include "rydberg/statistics.hpp"

namespace rydberg::scaling {

enum class ObservableKind { Binder, OrderParam };

inline std::string to_string(ObservableKind k) { return k == ObservableKind::Binder ? "binder" : "order"; }

inline ObservableKind observable_kind_from_string(const std::string& s) {
  if (s == "binder") return ObservableKind::Binder;
  if (s == "order") return ObservableKind::OrderParam;
  throw ConfigError("unknown observable kind '" + s + "' (expected binder or order)");
}

struct Row {
  int L = 0;
  double g = 0.0;
  double y = 0.0;
  double y_err = 0.0;
};

struct Dataset {
  ObservableKind kind = ObservableKind::Binder;
  std::vector<Row> rows;
  std::optional<double> temperature_constant;  // T = c / L when set

  std::set<int> sizes() const {
    std::set<int> out;
    for (const auto& r : rows) out.insert(r.L);
    return out;
  }

  // Rows with L ≥ l_min in a canonical order, so fits do not depend on the
  // order in which rows were supplied.
  Dataset restricted(int l_min) const {
    Dataset out{kind, {}, temperature_constant};
    for (const auto& r : rows)
      if (r.L >= l_min) out.rows.push_back(r);
    std::sort(out.rows.begin(), out.rows.end(), [](const Row& a, const Row& b) {
      return std::tie(a.L, a.g, a.y, a.y_err) < std::tie(b.L, b.g, b.y, b.y_err);
    });
    return out;
  }

  void validate() const {
    std::map<int, std::set<double>> per_size;
    for (const auto& r : rows) {
      if (r.L < 1) throw ValidationError("system size must be positive, got " + std::to_string(r.L));
      if (!(r.y_err > 0)) throw ValidationError("y_err must be positive");
      if (!std::isfinite(r.g) || !std::isfinite(r.y)) throw ValidationError("non-finite value in dataset");
      per_size[r.L].insert(r.g);
    }
    if (per_size.size() < 2)
      throw ValidationError("scaling fits need at least two system sizes; nu is unidentifiable from " +
                            std::to_string(per_size.size()));
    for (const auto& [L, gs] : per_size)
      if (gs.size() < 5)
        throw ValidationError("size L=" + std::to_string(L) + " has " + std::to_string(gs.size()) +
                              " coupling values, need at least 5");
  }
};

struct Bootstrap {
  int samples = 0;
  Estimate g_c;
  Estimate nu;
  std::optional<Estimate> beta;
};

struct FitResult {
  ObservableKind kind = ObservableKind::Binder;
  Estimate g_c;
  Estimate nu;
  std::optional<Estimate> beta;
  std::vector<Estimate> coefficients;  // a_k or b_k
  double chi2 = 0.0;
  int dof = 0;
  int l_min = 0;
  std::optional<Bootstrap> bootstrap;

  double chi2_per_dof() const { return dof > 0 ? chi2 / dof : std::numeric_limits<double>::quiet_NaN(); }
};

struct FitOptions {
  int order = 4;  // K
  int l_min = 0;
  int bootstrap = 0;  // number of row resamples; 0 disables
  std::uint64_t seed = 1;
  std::vector<double> nu_starts{0.5, 0.63, 0.8, 1.0};
  int max_iterations = 500;
};

inline double scaling_variable(double g, int L, double g_c, double nu) {
  return (g - g_c) * std::pow(static_cast<double>(L), 1.0 / nu);
}

inline double polynomial(const std::vector<double>& c, double x) {
  double acc = 0.0;
  for (auto k = c.size(); k-- > 0;) acc = acc * x + c[k];
  return acc;
}

inline double binder_model(const std::vector<double>& a, double g, int L, double g_c, double nu) {
  return polynomial(a, scaling_variable(g, L, g_c, nu));
}

inline double order_model(const std::vector<double>& b, double g, int L, double g_c, double nu, double beta) {
  return std::pow(static_cast<double>(L), -beta / nu) * polynomial(b, scaling_variable(g, L, g_c, nu));
}

namespace detail {

// Weighted linear least squares: minimize |W (A c − y)|²; returns c and
// the unscaled covariance (AᵀW²A)⁻¹.
struct LinearSolution {
  Eigen::VectorXd coef;
  Eigen::MatrixXd cov;
  double chi2 = 0.0;
};

inline LinearSolution weighted_linear(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  const Eigen::MatrixXd aw = w.asDiagonal() * a;
  const Eigen::VectorXd yw = w.cwiseProduct(y);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(aw);
  LinearSolution out;
  out.coef = qr.solve(yw);
  out.chi2 = (aw * out.coef - yw).squaredNorm();
  out.cov = (aw.transpose() * aw).completeOrthogonalDecomposition().pseudoInverse();
  return out;
}

struct BinderState {
  double g_c = 0.0;
  double nu = 1.0;
  std::vector<double> a;
};

inline double binder_chi2(const std::vector<Row>& rows, const BinderState& s) {
  double chi2 = 0.0;
  for (const auto& r : rows) {
    const double d = (r.y - binder_model(s.a, r.g, r.L, s.g_c, s.nu)) / r.y_err;
    chi2 += d * d;
  }
  return chi2;
}

// Rows × (2 + K + 1) Jacobian of the weighted residual model w.r.t.
// (g_c, ν, a_0..a_K).
inline Eigen::MatrixXd binder_jacobian(const std::vector<Row>& rows, const BinderState& s) {
  const auto k1 = static_cast<Eigen::Index>(s.a.size());
  Eigen::MatrixXd j(static_cast<Eigen::Index>(rows.size()), 2 + k1);
  for (std::size_t q = 0; q < rows.size(); ++q) {
    const Row& r = rows[q];
    const double lnl = std::log(static_cast<double>(r.L));
    const double lp = std::pow(static_cast<double>(r.L), 1.0 / s.nu);
    const double x = (r.g - s.g_c) * lp;
    double dpdx = 0.0, xk = 1.0;
    for (std::size_t k = 1; k < s.a.size(); ++k) {
      dpdx += static_cast<double>(k) * s.a[k] * xk;
      xk *= x;
    }
    const auto row = static_cast<Eigen::Index>(q);
    j(row, 0) = dpdx * (-lp) / r.y_err;
    j(row, 1) = dpdx * x * lnl * (-1.0 / (s.nu * s.nu)) / r.y_err;
    double p = 1.0;
    for (Eigen::Index k = 0; k < k1; ++k) {
      j(row, 2 + k) = p / r.y_err;
      p *= x;
    }
  }
  return j;
}

inline Eigen::VectorXd binder_residuals(const std::vector<Row>& rows, const BinderState& s) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t q = 0; q < rows.size(); ++q) {
    const Row& r = rows[q];
    out[static_cast<Eigen::Index>(q)] = (r.y - binder_model(s.a, r.g, r.L, s.g_c, s.nu)) / r.y_err;
  }
  return out;
}

inline std::vector<double> linear_coefficients(const std::vector<Row>& rows, double g_c, double nu, int order,
                                               double beta = 0.0, double* chi2 = nullptr,
                                               Eigen::MatrixXd* cov = nullptr) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd a(n, order + 1);
  Eigen::VectorXd y(n), w(n);
  for (Eigen::Index q = 0; q < n; ++q) {
    const Row& r = rows[static_cast<std::size_t>(q)];
    const double x = scaling_variable(r.g, r.L, g_c, nu);
    const double pre = std::pow(static_cast<double>(r.L), -beta / nu);
    double p = 1.0;
    for (int k = 0; k <= order; ++k) {
      a(q, k) = pre * p;
      p *= x;
    }
    y[q] = r.y;
    w[q] = 1.0 / r.y_err;
  }
  const LinearSolution sol = weighted_linear(a, y, w);
  if (chi2) *chi2 = sol.chi2;
  if (cov) *cov = sol.cov;
  return {sol.coef.data(), sol.coef.data() + sol.coef.size()};
}

struct LmOutcome {
  BinderState state;
  double chi2 = std::numeric_limits<double>::infinity();
  bool ok = false;
};

inline LmOutcome levenberg_marquardt(const std::vector<Row>& rows, BinderState s, int max_iterations) {
  double chi2 = binder_chi2(rows, s);
  double lambda = 1e-3;
  const std::size_t np = 2 + s.a.size();
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::MatrixXd j = binder_jacobian(rows, s);
    const Eigen::VectorXd res = binder_residuals(rows, s);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd jtr = j.transpose() * res;
    bool improved = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd m = jtj;
      for (std::size_t k = 0; k < np; ++k) m(k, k) += lambda * std::max(jtj(k, k), 1e-300);
      const Eigen::VectorXd step = m.ldlt().solve(jtr);
      BinderState t = s;
      t.g_c += step[0];
      t.nu += step[1];
      for (std::size_t k = 0; k < s.a.size(); ++k) t.a[k] += step[2 + static_cast<Eigen::Index>(k)];
      const double c = t.nu > 0.05 && t.nu < 20 ? binder_chi2(rows, t) : std::numeric_limits<double>::infinity();
      if (std::isfinite(c) && c <= chi2) {
        const double gain = chi2 - c;
        s = t;
        lambda = std::max(lambda / 10, 1e-15);
        improved = true;
        const bool tiny_step = step.norm() <= 1e-14 * (1 + std::abs(s.g_c) + s.nu);
        chi2 = c;
        if (gain <= 1e-14 * (chi2 + 1e-300) || tiny_step) return {s, chi2, true};
        break;
      }
      lambda *= 10;
    }
    if (!improved) return {s, chi2, true};
  }
  return {s, chi2, std::isfinite(chi2)};
}

inline std::vector<double> distinct_g(const std::vector<Row>& rows) {
  std::set<double> gs;
  for (const auto& r : rows) gs.insert(r.g);
  return {gs.begin(), gs.end()};
}

inline Estimate estimate_from(const std::vector<double>& xs) {
  const double m = mean(xs);
  return {m, xs.size() > 1 ? std::sqrt(variance(xs)) : 0.0};
}

}  // namespace detail

inline FitResult fit_binder_rows(const std::vector<Row>& rows, const FitOptions& opts,
                                 const std::vector<double>& g_starts, const std::vector<double>& nu_starts) {
  detail::LmOutcome best;
  for (double g0 : g_starts)
    for (double nu0 : nu_starts) {
      detail::BinderState s{g0, nu0, detail::linear_coefficients(rows, g0, nu0, opts.order)};
      const auto out = detail::levenberg_marquardt(rows, s, opts.max_iterations);
      if (out.ok && out.chi2 < best.chi2) best = out;
    }
  if (!best.ok || !std::isfinite(best.chi2) || !(best.state.nu > 0))
    throw FitError("Binder fit failed to converge from all starts; best chi2 = " + std::to_string(best.chi2));

  const Eigen::MatrixXd j = detail::binder_jacobian(rows, best.state);
  const Eigen::MatrixXd cov = (j.transpose() * j).completeOrthogonalDecomposition().pseudoInverse();
  FitResult r;
  r.kind = ObservableKind::Binder;
  r.g_c = {best.state.g_c, std::sqrt(std::max(0.0, cov(0, 0)))};
  r.nu = {best.state.nu, std::sqrt(std::max(0.0, cov(1, 1)))};
  for (std::size_t k = 0; k < best.state.a.size(); ++k) {
    const auto idx = static_cast<Eigen::Index>(2 + k);
    r.coefficients.push_back({best.state.a[k], std::sqrt(std::max(0.0, cov(idx, idx)))});
  }
  r.chi2 = best.chi2;
  r.dof = static_cast<int>(rows.size()) - static_cast<int>(2 + best.state.a.size());
  r.l_min = opts.l_min;
  return r;
}

inline std::vector<Row> resample(const std::vector<Row>& rows, Rng& rng) {
  std::vector<Row> out(rows.size());
  for (auto& r : out) r = rows[rng.below(rows.size())];
  return out;
}

inline FitResult fit_binder(const Dataset& data, const FitOptions& opts = {}) {
  if (data.kind != ObservableKind::Binder) throw UsageError("fit_binder needs a Binder dataset");
  if (opts.order < 0) throw ConfigError("polynomial order K must be non-negative");
  const Dataset d = data.restricted(opts.l_min);
  d.validate();
  if (d.rows.size() <= static_cast<std::size_t>(opts.order + 2))
    throw InsufficientDataError("not enough rows for K=" + std::to_string(opts.order));
  FitResult r = fit_binder_rows(d.rows, opts, detail::distinct_g(d.rows), opts.nu_starts);
  if (opts.bootstrap > 0) {
    Rng rng(opts.seed);
    std::vector<double> gcs, nus;
    for (int b = 0; b < opts.bootstrap; ++b) {
      const auto rows = resample(d.rows, rng);
      try {
        const FitResult f = fit_binder_rows(rows, opts, {r.g_c.value}, {r.nu.value});
        gcs.push_back(f.g_c.value);
        nus.push_back(f.nu.value);
      } catch (const FitError&) {
      }
    }
    if (gcs.size() >= 2)
      r.bootstrap = Bootstrap{static_cast<int>(gcs.size()), detail::estimate_from(gcs), detail::estimate_from(nus), {}};
  }
  return r;
}

namespace detail {

inline double order_chi2(const std::vector<Row>& rows, double g_c, double nu, int order, double beta) {
  double chi2 = 0.0;
  linear_coefficients(rows, g_c, nu, order, beta, &chi2);
  return chi2;
}

// Coarse scan followed by golden-section refinement of chi²(β).
inline double minimize_beta(const std::vector<Row>& rows, double g_c, double nu, int order) {
  const double lo = -1.0, hi = 3.0;
  const int n = 400;
  int best_k = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= n; ++k) {
    const double c = order_chi2(rows, g_c, nu, order, lo + (hi - lo) * k / n);
    if (c < best) {
      best = c;
      best_k = k;
    }
  }
  double a = lo + (hi - lo) * std::max(0, best_k - 1) / n;
  double b = lo + (hi - lo) * std::min(n, best_k + 1) / n;
  const double phi = (std::sqrt(5.0) - 1) / 2;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = order_chi2(rows, g_c, nu, order, x1), f2 = order_chi2(rows, g_c, nu, order, x2);
  for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = order_chi2(rows, g_c, nu, order, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = order_chi2(rows, g_c, nu, order, x2);
    }
  }
  return f1 <= f2 ? x1 : x2;
}

inline FitResult fit_order_rows(const std::vector<Row>& rows, double nu, double g_c, const FitOptions& opts) {
  const double beta = minimize_beta(rows, g_c, nu, opts.order);
  double chi2 = 0.0;
  const auto b = linear_coefficients(rows, g_c, nu, opts.order, beta, &chi2);
  if (!std::isfinite(chi2)) throw FitError("order-parameter fit produced a non-finite chi2");

  // Covariance of (β, b_0..b_K) from the full Jacobian at the optimum.
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto k1 = static_cast<Eigen::Index>(b.size());
  Eigen::MatrixXd j(n, 1 + k1);
  for (Eigen::Index q = 0; q < n; ++q) {
    const Row& r = rows[static_cast<std::size_t>(q)];
    const double x = scaling_variable(r.g, r.L, g_c, nu);
    const double pre = std::pow(static_cast<double>(r.L), -beta / nu);
    j(q, 0) = -std::log(static_cast<double>(r.L)) / nu * pre * polynomial(b, x) / r.y_err;
    double p = 1.0;
    for (Eigen::Index k = 0; k < k1; ++k) {
      j(q, 1 + k) = pre * p / r.y_err;
      p *= x;
    }
  }
  const Eigen::MatrixXd cov = (j.transpose() * j).completeOrthogonalDecomposition().pseudoInverse();
  FitResult out;
  out.kind = ObservableKind::OrderParam;
  out.g_c = {g_c, 0.0};
  out.nu = {nu, 0.0};
  out.beta = Estimate{beta, std::sqrt(std::max(0.0, cov(0, 0)))};
  for (Eigen::Index k = 0; k < k1; ++k) out.coefficients.push_back({b[static_cast<std::size_t>(k)], std::sqrt(std::max(0.0, cov(1 + k, 1 + k)))});
  out.chi2 = chi2;
  out.dof = static_cast<int>(rows.size()) - static_cast<int>(1 + b.size());
  out.l_min = opts.l_min;
  return out;
}

}  // namespace detail

// β and b_k at fixed ν and g_c (both taken from a Binder fit).
inline FitResult fit_order(const Dataset& data, double nu, double g_c, const FitOptions& opts = {}) {
  if (data.kind != ObservableKind::OrderParam) throw UsageError("fit_order needs an order-parameter dataset");
  if (!(nu > 0)) throw DomainError("nu must be positive");
  if (opts.order < 0) throw ConfigError("polynomial order K must be non-negative");
  const Dataset d = data.restricted(opts.l_min);
  d.validate();
  if (d.rows.size() <= static_cast<std::size_t>(opts.order + 1))
    throw InsufficientDataError("not enough rows for K=" + std::to_string(opts.order));
  FitResult r = detail::fit_order_rows(d.rows, nu, g_c, opts);
  if (opts.bootstrap > 0) {
    Rng rng(opts.seed);
    std::vector<double> betas;
    for (int b = 0; b < opts.bootstrap; ++b) {
      try {
        betas.push_back(detail::fit_order_rows(resample(d.rows, rng), nu, g_c, opts).beta->value);
      } catch (const FitError&) {
      }
    }
    if (betas.size() >= 2)
      r.bootstrap = Bootstrap{static_cast<int>(betas.size()), {g_c, 0.0}, {nu, 0.0}, detail::estimate_from(betas)};
  }
  return r;
}

// Mean squared deviation of the rescaled points from a pooled polynomial of
// the given degree over the x-range shared by all sizes, normalized by the
// variance of the rescaled y values.
inline double collapse_score(const Dataset& data, double g_c, double nu, std::optional<double> beta,
                             int degree = 4) {
  if (!(nu > 0)) throw DomainError("nu must be positive");
  if (data.kind == ObservableKind::OrderParam && !beta)
    throw UsageError("order-parameter collapse needs beta");
  std::map<int, std::pair<double, double>> range;
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : data.rows) {
    const double x = scaling_variable(r.g, r.L, g_c, nu);
    const double y = data.kind == ObservableKind::Binder ? r.y : r.y * std::pow(static_cast<double>(r.L), *beta / nu);
    auto [it, fresh] = range.try_emplace(r.L, x, x);
    if (!fresh) it->second = {std::min(it->second.first, x), std::max(it->second.second, x)};
    pts.emplace_back(x, y);
  }
  if (range.size() < 2) throw InsufficientDataError("collapse needs at least two system sizes");
  double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
  for (const auto& [L, r] : range) {
    lo = std::max(lo, r.first);
    hi = std::min(hi, r.second);
  }
  std::vector<std::pair<double, double>> inside;
  for (const auto& p : pts)
    if (p.first >= lo && p.first <= hi) inside.push_back(p);
  if (inside.size() < 3)
    throw InsufficientDataError("only " + std::to_string(inside.size()) + " points in the overlapping x-range");
  const int deg = std::min<int>(degree, static_cast<int>(inside.size()) - 1);
  const double mid = 0.5 * (lo + hi), half = std::max(0.5 * (hi - lo), 1e-300);
  const auto n = static_cast<Eigen::Index>(inside.size());
  Eigen::MatrixXd a(n, deg + 1);
  Eigen::VectorXd y(n);
  for (Eigen::Index q = 0; q < n; ++q) {
    const double t = (inside[static_cast<std::size_t>(q)].first - mid) / half;
    double p = 1.0;
    for (int k = 0; k <= deg; ++k) {
      a(q, k) = p;
      p *= t;
    }
    y[q] = inside[static_cast<std::size_t>(q)].second;
  }
  const Eigen::VectorXd c = a.colPivHouseholderQr().solve(y);
  const double mse = (a * c - y).squaredNorm() / static_cast<double>(n);
  const double ym = y.mean();
  const double var = (y.array() - ym).square().sum() / static_cast<double>(n);
  if (!(var > 0)) return mse > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  return mse / var;
}

// CSV with header L,g,y,y_err (column order free, extra columns rejected).
inline Dataset read_dataset_csv(std::istream& in, ObservableKind kind) {
  Dataset d;
  d.kind = kind;
  std::string line;
  std::size_t lineno = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string cell; std::getline(ss, cell, ',');) {
      const auto b = cell.find_first_not_of(" \t\r");
      const auto e = cell.find_last_not_of(" \t\r");
      out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  std::map<std::string, std::size_t> col;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    if (col.empty()) {
      for (std::size_t k = 0; k < cells.size(); ++k) col[cells[k]] = k;
      for (const char* name : {"L", "g", "y", "y_err"})
        if (!col.count(name)) throw ParseError("missing column '" + std::string(name) + "' in header", lineno);
      if (col.size() != 4 || cells.size() != 4) throw ParseError("header must be exactly L,g,y,y_err", lineno);
      continue;
    }
    if (cells.size() != 4) throw ParseError("expected 4 fields, got " + std::to_string(cells.size()), lineno);
    auto number = [&](const char* name) {
      const std::string& s = cells[col[name]];
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s, &used);
      } catch (const std::exception&) {
        throw ParseError("field '" + std::string(name) + "' is not a number: '" + s + "'", lineno);
      }
      if (used != s.size()) throw ParseError("field '" + std::string(name) + "' is not a number: '" + s + "'", lineno);
      return v;
    };
    const double L = number("L");
    if (L != std::floor(L) || L < 1) throw ParseError("L must be a positive integer", lineno);
    d.rows.push_back({static_cast<int>(L), number("g"), number("y"), number("y_err")});
  }
  if (col.empty()) throw ParseError("empty dataset file", lineno);
  return d;
}

// Synthetic data from the ansätze; y_err = rel_err·|y| and Gaussian noise
// of relative size `noise`.
inline Dataset synthetic_binder(const std::vector<double>& a, double g_c, double nu, const std::vector<int>& sizes,
                                const std::vector<double>& gs, double noise, double rel_err, Rng& rng) {
  Dataset d{ObservableKind::Binder, {}, {}};
  for (int L : sizes)
    for (double g : gs) {
      const double y = binder_model(a, g, L, g_c, nu);
      d.rows.push_back({L, g, y * (1 + noise * rng.normal()), rel_err * std::abs(y)});
    }
  return d;
}

inline Dataset synthetic_order(const std::vector<double>& b, double g_c, double nu, double beta,
                               const std::vector<int>& sizes, const std::vector<double>& gs, double noise,
                               double rel_err, Rng& rng) {
  Dataset d{ObservableKind::OrderParam, {}, {}};
  for (int L : sizes)
    for (double g : gs) {
      const double y = order_model(b, g, L, g_c, nu, beta);
      d.rows.push_back({L, g, y * (1 + noise * rng.normal()), rel_err * std::abs(y)});
    }
  return d;
}

inline std::vector<double> coupling_grid(double center, double half_width, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = center - half_width + 2 * half_width * k / (n - 1);
  return out;
}

// Generators taken from the disordered–checkerboard row of the reference table.
struct ReferenceExponents {
  double g_c = 1.0959;
  double nu = 0.632;
  double beta = 0.291;
  std::vector<double> a{0.7048, 0.122, -0.0096, -0.0025, 0.00034};
  std::vector<double> b{0.309, 0.0679, 0.0056, -0.00096, -0.000035};
};

}  // namespace rydberg::scaling
