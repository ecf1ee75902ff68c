#pragma once

// Mean-field Landau-Ginzburg-Wilson analysis.
//
// Striated sector: three real fields (Ψ1, Ψ2, Φ) for the (π,0), (0,π) and
// (π,π) density waves, with the homogeneous quartic potential
//
//   V = r(Ψ1²+Ψ2²) + sΦ² + gΨ1Ψ2Φ + u1(Ψ1²+Ψ2²)² + u2Φ⁴ + vΨ1²Ψ2² + wΦ²(Ψ1²+Ψ2²).
//
// Star sector: two complex fields for (π/2,π) and (π,π/2) with couplings
// r, z1, z2, z3, and the equivalent tetragonal (u0, v0, w0) parametrization.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rydberg/errors.hpp"
#include "rydberg/rng.hpp"

namespace rydberg::lgw {

struct Couplings {
  double r = 0.0;
  double s = 0.0;
  double g = -1.0;
  double u1 = 1.0;
  double u2 = 0.75;
  double v = -1.0;
  double w = 0.5;
};

// Couplings used for the reference mean-field phase diagram.
inline Couplings reference_couplings(double r = 0.0, double s = 0.0) { return {r, s, -1.0, 1.0, 0.75, -1.0, 0.5}; }

struct FieldPoint {
  double psi1 = 0.0;
  double psi2 = 0.0;
  double phi = 0.0;

  double psi_norm() const { return std::hypot(psi1, psi2); }
};

enum class Phase { Disordered, Checkerboard, Striated };

inline std::string to_string(Phase p) {
  switch (p) {
    case Phase::Disordered: return "disordered";
    case Phase::Checkerboard: return "checkerboard";
    case Phase::Striated: return "striated";
  }
  return "?";
}

inline constexpr double kCondensationThreshold = 1e-4;
inline constexpr double kFirstOrderJump = 0.05;

inline double potential(const Couplings& c, const FieldPoint& f) {
  const double a2 = f.psi1 * f.psi1;
  const double b2 = f.psi2 * f.psi2;
  const double p2 = f.phi * f.phi;
  const double q = a2 + b2;
  return c.r * q + c.s * p2 + c.g * f.psi1 * f.psi2 * f.phi + c.u1 * q * q + c.u2 * p2 * p2 + c.v * a2 * b2 +
         c.w * p2 * q;
}

inline Eigen::Vector3d gradient(const Couplings& c, const FieldPoint& f) {
  const double a = f.psi1, b = f.psi2, p = f.phi;
  const double q = a * a + b * b;
  return {2 * c.r * a + c.g * b * p + 4 * c.u1 * q * a + 2 * c.v * a * b * b + 2 * c.w * p * p * a,
          2 * c.r * b + c.g * a * p + 4 * c.u1 * q * b + 2 * c.v * b * a * a + 2 * c.w * p * p * b,
          2 * c.s * p + c.g * a * b + 4 * c.u2 * p * p * p + 2 * c.w * p * q};
}

inline Eigen::Matrix3d hessian(const Couplings& c, const FieldPoint& f) {
  const double a = f.psi1, b = f.psi2, p = f.phi;
  const double q = a * a + b * b;
  Eigen::Matrix3d h;
  h(0, 0) = 2 * c.r + 4 * c.u1 * (q + 2 * a * a) + 2 * c.v * b * b + 2 * c.w * p * p;
  h(1, 1) = 2 * c.r + 4 * c.u1 * (q + 2 * b * b) + 2 * c.v * a * a + 2 * c.w * p * p;
  h(2, 2) = 2 * c.s + 12 * c.u2 * p * p + 2 * c.w * q;
  h(0, 1) = h(1, 0) = c.g * p + 8 * c.u1 * a * b + 4 * c.v * a * b;
  h(0, 2) = h(2, 0) = c.g * b + 4 * c.w * p * a;
  h(1, 2) = h(2, 1) = c.g * a + 4 * c.w * p * b;
  return h;
}

// Strict copositivity of the quartic part written as a quadratic form in
// (Ψ1², Ψ2², Φ²); equivalent to V → +∞ in every direction.
inline bool is_bounded(const Couplings& c) {
  const double m11 = c.u1, m22 = c.u1, m33 = c.u2;
  const double m12 = c.u1 + 0.5 * c.v, m13 = 0.5 * c.w, m23 = 0.5 * c.w;
  if (!(m11 > 0 && m22 > 0 && m33 > 0)) return false;
  const double b12 = m12 + std::sqrt(m11 * m22);
  const double b13 = m13 + std::sqrt(m11 * m33);
  const double b23 = m23 + std::sqrt(m22 * m33);
  if (!(b12 > 0 && b13 > 0 && b23 > 0)) return false;
  return std::sqrt(m11 * m22 * m33) + m12 * std::sqrt(m33) + m13 * std::sqrt(m22) + m23 * std::sqrt(m11) +
             std::sqrt(2 * b12 * b13 * b23) >
         0;
}

// Stability conditions stated for the reference parameter family.
inline bool satisfies_reference_stability(const Couplings& c) {
  return c.u1 > -c.v / 4 && -c.v / 4 > 0 && c.u2 > 0 && c.u2 * (4 * c.u1 + c.v) > c.w * c.w;
}

inline Phase classify(const FieldPoint& f, double eps = kCondensationThreshold) {
  const bool psi = f.psi_norm() >= eps;
  const bool phi = std::abs(f.phi) >= eps;
  if (psi) return Phase::Striated;
  if (phi) return Phase::Checkerboard;
  return Phase::Disordered;
}

// Maps a minimizer onto the representative with Φ ≥ 0 and Ψ1 ≥ 0 using the
// translations, which leave V invariant.
inline FieldPoint canonical(FieldPoint f) {
  if (f.phi < 0) {
    f.psi1 = -f.psi1;
    f.phi = -f.phi;
  }
  if (f.psi1 < 0) {
    f.psi1 = -f.psi1;
    f.psi2 = -f.psi2;
  }
  return f;
}

struct Minimum {
  FieldPoint field;
  double value = 0.0;
  Phase phase = Phase::Disordered;
  double gradient_norm = 0.0;
};

struct MinimizeOptions {
  int random_starts = 64;
  std::uint64_t seed = 12345;
  double start_radius = 2.0;
  int max_iterations = 400;
  double gradient_tolerance = 1e-12;
};

// Damped Newton descent with an Armijo backtracking line search; falls back
// to the steepest-descent direction where the Hessian is not positive definite.
inline Minimum local_descent(const Couplings& c, FieldPoint start, const MinimizeOptions& opts) {
  Eigen::Vector3d x(start.psi1, start.psi2, start.phi);
  auto at = [](const Eigen::Vector3d& y) { return FieldPoint{y[0], y[1], y[2]}; };
  double fx = potential(c, at(x));
  for (int it = 0; it < opts.max_iterations; ++it) {
    const Eigen::Vector3d grad = gradient(c, at(x));
    if (grad.norm() <= opts.gradient_tolerance) break;
    Eigen::Vector3d dir = -grad;
    Eigen::LLT<Eigen::Matrix3d> llt(hessian(c, at(x)));
    if (llt.info() == Eigen::Success) {
      const Eigen::Vector3d newton = -llt.solve(grad);
      if (newton.dot(grad) < 0) dir = newton;
    }
    const double slope = dir.dot(grad);
    double step = 1.0;
    bool moved = false;
    for (int k = 0; k < 60; ++k) {
      const Eigen::Vector3d trial = x + step * dir;
      const double ft = potential(c, at(trial));
      if (ft <= fx + 1e-4 * step * slope) {
        moved = trial != x;
        x = trial;
        fx = ft;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  Minimum m;
  m.field = at(x);
  m.value = fx;
  m.gradient_norm = gradient(c, m.field).norm();
  return m;
}

inline std::vector<FieldPoint> starting_points(const MinimizeOptions& opts) {
  std::vector<FieldPoint> pts{{0, 0, 0}};
  for (int axis = 0; axis < 3; ++axis)
    for (double sign : {1.0, -1.0}) {
      std::array<double, 3> v{0, 0, 0};
      v[axis] = sign;
      pts.push_back({v[0], v[1], v[2]});
    }
  for (double a : {1.0, -1.0})
    for (double b : {1.0, -1.0})
      for (double p : {1.0, -1.0}) pts.push_back({a, b, p});
  pts.push_back({0.1, 0.1, 0.1});
  Rng rng(opts.seed);
  for (int k = 0; k < opts.random_starts; ++k) {
    auto u = [&] { return opts.start_radius * (2.0 * rng.uniform() - 1.0); };
    const double a = u(), b = u(), p = u();
    pts.push_back({a, b, p});
  }
  return pts;
}

inline Minimum minimize(const Couplings& c, const MinimizeOptions& opts = {}) {
  if (!is_bounded(c)) throw DomainError("quartic potential is unbounded below for these couplings");
  std::optional<Minimum> best;
  for (const FieldPoint& start : starting_points(opts)) {
    Minimum m = local_descent(c, start, opts);
    if (!best || m.value < best->value - 1e-14) best = m;
  }
  best->field = canonical(best->field);
  best->phase = classify(best->field);
  return *best;
}

// Checkerboard–striated second-order line r(s), s < 0.
inline double second_order_line(const Couplings& c, double s) {
  if (!(s < 0)) throw DomainError("checkerboard-striated line is defined for s < 0");
  return 0.5 * (-c.g * std::sqrt(-s / (2 * c.u2)) + s * c.w / c.u2);
}

struct Point {
  double r = 0.0;
  double s = 0.0;
};

// Left-hand side of the equation fixing s at T2.
inline double t2_residual(const Couplings& c, double s) {
  return c.g * c.g / s - 4 * c.g * c.w * std::sqrt(2 / (-s * c.u2)) + 8 * (4 * c.u1 + c.v - c.w * c.w / c.u2);
}

struct Tricritical {
  Point t1;
  Point t2;
  double t2_residual = 0.0;
};

inline Tricritical tricritical_points(const Couplings& c) {
  if (c.g == 0) throw DomainError("tricritical points require a nonzero cubic coupling");
  const double denom = 16 * c.u1 + 4 * c.v;
  if (denom == 0) throw DomainError("16 u1 + 4 v vanishes; T1 is at infinity");
  Tricritical out;
  out.t1 = {0.0, c.g * c.g / denom};

  // Log-spaced scan over s ∈ [−1e4, −1e−10] for a sign change, then bisection
  // down to adjacent doubles.
  const double lo_mag = 1e-10, hi_mag = 1e4;
  const int n = 4000;
  std::optional<std::pair<double, double>> bracket;
  double prev_s = -lo_mag;
  double prev_f = t2_residual(c, prev_s);
  for (int k = 1; k <= n && !bracket; ++k) {
    const double s = -lo_mag * std::pow(hi_mag / lo_mag, static_cast<double>(k) / n);
    const double f = t2_residual(c, s);
    if ((f > 0) != (prev_f > 0)) bracket = std::make_pair(s, prev_s);
    prev_s = s;
    prev_f = f;
  }
  if (!bracket)
    throw DomainError("no root of the T2 equation for s in [-1e4, -1e-10]; f(-1e-10) = " +
                      std::to_string(t2_residual(c, -lo_mag)) + ", f(-1e4) = " + std::to_string(prev_f));
  auto [a, b] = *bracket;  // a < b < 0
  double fa = t2_residual(c, a);
  while (true) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    const double fm = t2_residual(c, mid);
    if (fm == 0) {
      a = b = mid;
      break;
    }
    if ((fm > 0) == (fa > 0)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
    }
  }
  const double fa_abs = std::abs(t2_residual(c, a));
  const double fb_abs = std::abs(t2_residual(c, b));
  const double s2 = fa_abs <= fb_abs ? a : b;
  out.t2 = {second_order_line(c, s2), s2};
  out.t2_residual = t2_residual(c, s2);
  return out;
}

struct Cell {
  double r = 0.0;
  double s = 0.0;
  Minimum minimum;
};

enum class TransitionOrder { None, Second, First };

inline std::string to_string(TransitionOrder o) {
  switch (o) {
    case TransitionOrder::None: return "none";
    case TransitionOrder::Second: return "second";
    case TransitionOrder::First: return "first";
  }
  return "?";
}

struct BoundaryEdge {
  std::size_t a = 0;  // cell indices
  std::size_t b = 0;
  double jump = 0.0;
  TransitionOrder order = TransitionOrder::Second;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct PhaseMap {
  std::vector<double> r_values;
  std::vector<double> s_values;
  std::vector<Cell> cells;  // index = is * r_values.size() + ir
  std::vector<BoundaryEdge> edges;

  std::size_t nr() const { return r_values.size(); }
  std::size_t ns() const { return s_values.size(); }
  std::size_t index(std::size_t ir, std::size_t is) const { return is * nr() + ir; }
  const Cell& at(std::size_t ir, std::size_t is) const { return cells[index(ir, is)]; }
  double dr() const { return nr() > 1 ? r_values[1] - r_values[0] : 0.0; }
  double ds() const { return ns() > 1 ? s_values[1] - s_values[0] : 0.0; }

  TransitionOrder cell_flag(std::size_t idx) const {
    TransitionOrder flag = TransitionOrder::None;
    for (const auto& e : edges)
      if (e.a == idx || e.b == idx) flag = std::max(flag, e.order);
    return flag;
  }
};

inline double order_jump(const Minimum& x, const Minimum& y) {
  return std::max(std::abs(x.field.psi_norm() - y.field.psi_norm()), std::abs(std::abs(x.field.phi) - std::abs(y.field.phi)));
}

// Order-parameter jump at a label change, measured after bisecting the edge
// between two cells down to ~1e-12 so that a continuous onset (which grows
// like a square root) is not mistaken for a discontinuity.
inline double boundary_jump(Couplings c, const Cell& from, const Cell& to, const MinimizeOptions& opts,
                            int iterations = 40) {
  Minimum lo = from.minimum, hi = to.minimum;
  double t_lo = 0.0, t_hi = 1.0;
  for (int k = 0; k < iterations; ++k) {
    const double t = 0.5 * (t_lo + t_hi);
    c.r = from.r + t * (to.r - from.r);
    c.s = from.s + t * (to.s - from.s);
    Minimum mid = minimize(c, opts);
    if (mid.phase == lo.phase) {
      lo = mid;
      t_lo = t;
    } else {
      hi = mid;
      t_hi = t;
    }
  }
  return order_jump(lo, hi);
}

inline std::vector<double> linspace(Range range, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k)
    out[k] = n == 1 ? range.lo : range.lo + (range.hi - range.lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  return out;
}

// Minimizes on every grid cell and classifies each label change between
// horizontally or vertically adjacent cells by the jump of the order
// parameters across it.
inline PhaseMap phase_diagram(Couplings c, Range r_range, Range s_range, std::size_t nr, std::size_t ns,
                              const MinimizeOptions& opts = {}) {
  if (nr < 2 || ns < 2) throw DomainError("phase diagram grid needs at least 2x2 cells");
  PhaseMap map;
  map.r_values = linspace(r_range, nr);
  map.s_values = linspace(s_range, ns);
  map.cells.resize(nr * ns);
  for (std::size_t is = 0; is < ns; ++is)
    for (std::size_t ir = 0; ir < nr; ++ir) {
      c.r = map.r_values[ir];
      c.s = map.s_values[is];
      map.cells[map.index(ir, is)] = {c.r, c.s, minimize(c, opts)};
    }
  auto link = [&](std::size_t a, std::size_t b) {
    const auto& x = map.cells[a].minimum;
    const auto& y = map.cells[b].minimum;
    if (x.phase == y.phase) return;
    const double jump = boundary_jump(c, map.cells[a], map.cells[b], opts);
    map.edges.push_back({a, b, jump, jump > kFirstOrderJump ? TransitionOrder::First : TransitionOrder::Second});
  };
  for (std::size_t is = 0; is < ns; ++is)
    for (std::size_t ir = 0; ir < nr; ++ir) {
      if (ir + 1 < nr) link(map.index(ir, is), map.index(ir + 1, is));
      if (is + 1 < ns) link(map.index(ir, is), map.index(ir, is + 1));
    }
  return map;
}

// ---------------------------------------------------------------------------
// Star sector

struct StarCouplings {
  double r = 0.0;
  double z1 = 1.0;
  double z2 = 3.0;
  double z3 = 0.0;
};

struct StarFieldPoint {
  std::complex<double> psi1;
  std::complex<double> psi2;
};

inline double potential_star(const StarCouplings& c, const StarFieldPoint& f) {
  double v = 0.0;
  for (const auto& p : {f.psi1, f.psi2}) {
    const double n2 = std::norm(p);
    const std::complex<double> p4 = p * p * p * p;
    v += c.r * n2 + c.z1 * n2 * n2 + c.z3 * 2.0 * p4.real();
  }
  return v + c.z2 * std::norm(f.psi1) * std::norm(f.psi2);
}

struct StarStability {
  bool bounded = false;     // z1 − 2|z3| > 0 and 2z1 + z2 − 4|z3| > 0
  bool exclusive = false;   // z2 − 2(z1 − 2|z3|) > 0: one field condenses at a time
};

inline StarStability star_stability(const StarCouplings& c) {
  const double a = std::abs(c.z3);
  return {c.z1 - 2 * a > 0 && 2 * c.z1 + c.z2 - 4 * a > 0, c.z2 - 2 * (c.z1 - 2 * a) > 0};
}

struct Tetragonal {
  double u0 = 0.0;
  double v0 = 0.0;
  double w0 = 0.0;
};

inline Tetragonal tetragonal_map(double z1, double z2, double z3) {
  return {12 * z2, 12 * (2 * z1 - z2 - 12 * z3), 192 * z3};
}

struct StabilityPredicates {
  bool striated_stability = false;
  bool striated_condense = false;
  bool star_region = false;
};

inline StabilityPredicates stability_predicates(double u0, double v0, double w0, int n = 2) {
  if (n < 1) throw DomainError("number of field components must be at least 1");
  StabilityPredicates out;
  out.striated_stability = u0 + v0 > 0 && n * u0 + v0 > 0;
  out.striated_condense = v0 > 0;
  // For w0 = 0 both branches reduce to −(u0+v0) < 0 < −v0.
  const double mid = w0 > 0 ? w0 / 2 : w0;
  out.star_region = u0 > 0 && -(u0 + v0) < mid && mid < -v0;
  return out;
}

// ---------------------------------------------------------------------------
// Symmetry representations

template <class Scalar>
struct Representation {
  std::vector<std::string> names;
  std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> generators;
};

// Generators acting on (Ψ1, Ψ2, Φ).
inline Representation<double> striated_representation() {
  Representation<double> rep;
  auto diag = [](double a, double b, double c) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
    m(0, 0) = a;
    m(1, 1) = b;
    m(2, 2) = c;
    return m;
  };
  Eigen::MatrixXd c4 = Eigen::MatrixXd::Zero(3, 3);
  c4(0, 1) = c4(1, 0) = c4(2, 2) = 1;
  rep.names = {"Tx", "Ty", "Rx", "Ry", "C4"};
  rep.generators = {diag(-1, 1, -1), diag(1, -1, -1), diag(1, 1, 1), diag(1, 1, 1), c4};
  return rep;
}

// Generators acting on (Ψ1, Ψ2, Ψ1*, Ψ2*).
inline Representation<std::complex<double>> star_representation() {
  using M = Eigen::MatrixXcd;
  const std::complex<double> i{0, 1};
  Representation<std::complex<double>> rep;
  M tx = M::Zero(4, 4), ty = M::Zero(4, 4), rx = M::Zero(4, 4), ry = M::Zero(4, 4), c4 = M::Zero(4, 4);
  tx(0, 0) = i;
  tx(1, 1) = -1;
  tx(2, 2) = -i;
  tx(3, 3) = -1;
  ty(0, 0) = -1;
  ty(1, 1) = i;
  ty(2, 2) = -1;
  ty(3, 3) = -i;
  rx(0, 0) = rx(1, 3) = rx(2, 2) = rx(3, 1) = 1;
  ry(0, 2) = ry(1, 1) = ry(2, 0) = ry(3, 3) = 1;
  c4(0, 3) = c4(1, 0) = c4(2, 1) = c4(3, 2) = 1;
  rep.names = {"Tx", "Ty", "Rx", "Ry", "C4"};
  rep.generators = {tx, ty, rx, ry, c4};
  return rep;
}

// Largest |V(O f) − V(f)| over random field points and every product O of
// at most `max_word` generators.
template <class Scalar>
double symmetry_check(const std::function<double(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>&)>& functional,
                      const Representation<Scalar>& rep,
                      const std::function<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>(Rng&)>& random_field,
                      int trials, std::uint64_t seed = 2024, int max_word = 3) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (rep.generators.empty()) throw ValidationError("representation has no generators");
  const auto dim = rep.generators.front().rows();
  for (const auto& g : rep.generators)
    if (g.rows() != dim || g.cols() != dim) throw ValidationError("generator dimensions do not match");

  std::vector<Mat> words;
  std::vector<Mat> frontier{Mat::Identity(dim, dim)};
  for (int len = 1; len <= max_word; ++len) {
    std::vector<Mat> next;
    for (const auto& w : frontier)
      for (const auto& g : rep.generators) next.push_back(g * w);
    words.insert(words.end(), next.begin(), next.end());
    frontier = std::move(next);
  }

  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const auto f = random_field(rng);
    if (f.size() != dim) throw ValidationError("field dimension does not match the representation");
    const double base = functional(f);
    for (const auto& w : words) worst = std::max(worst, std::abs(functional(w * f) - base));
  }
  return worst;
}

// Convenience wrappers binding the two potentials to their representations.
inline double striated_symmetry_deviation(const Couplings& c, int trials, std::uint64_t seed = 2024) {
  std::function<double(const Eigen::VectorXd&)> fn = [c](const Eigen::VectorXd& x) {
    return potential(c, {x[0], x[1], x[2]});
  };
  std::function<Eigen::VectorXd(Rng&)> gen = [](Rng& rng) {
    Eigen::VectorXd x(3);
    for (int k = 0; k < 3; ++k) x[k] = 4.0 * rng.uniform() - 2.0;
    return x;
  };
  return symmetry_check<double>(fn, striated_representation(), gen, trials, seed);
}

inline double star_symmetry_deviation(const StarCouplings& c, int trials, std::uint64_t seed = 2024) {
  std::function<double(const Eigen::VectorXcd&)> fn = [c](const Eigen::VectorXcd& x) {
    return potential_star(c, {x[0], x[1]});
  };
  std::function<Eigen::VectorXcd(Rng&)> gen = [](Rng& rng) {
    Eigen::VectorXcd x(4);
    const std::complex<double> a{2 * rng.uniform() - 1, 2 * rng.uniform() - 1};
    const std::complex<double> b{2 * rng.uniform() - 1, 2 * rng.uniform() - 1};
    x << a, b, std::conj(a), std::conj(b);
    return x;
  };
  return symmetry_check<std::complex<double>>(fn, star_representation(), gen, trials, seed);
}

}  // namespace rydberg::lgw
