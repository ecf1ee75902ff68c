#pragma once

// Square-lattice geometry and truncated van der Waals couplings.
//
// Sites are numbered row-major: i = y * Lx + x. Lengths are in units of the
// lattice spacing a, couplings in units of the Rabi frequency.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iostream>
#include <string>
#include <vector>

#include "rydberg/errors.hpp"

namespace rydberg {

enum class Boundary { Periodic, Open };

inline std::string to_string(Boundary b) { return b == Boundary::Periodic ? "PBC" : "OBC"; }

inline Boundary boundary_from_string(const std::string& s) {
  if (s == "PBC" || s == "pbc" || s == "periodic") return Boundary::Periodic;
  if (s == "OBC" || s == "obc" || s == "open") return Boundary::Open;
  throw ConfigError("unknown boundary condition '" + s + "' (expected PBC or OBC)");
}

struct Coord {
  int x;
  int y;
  friend bool operator==(const Coord&, const Coord&) = default;
};

class LatticeSpec {
 public:
  LatticeSpec(int lx, int ly, Boundary boundary) : lx_(lx), ly_(ly), boundary_(boundary) {
    if (lx < 2 || ly < 2)
      throw ConfigError("lattice must be at least 2x2, got " + std::to_string(lx) + "x" +
                        std::to_string(ly));
  }

  int lx() const { return lx_; }
  int ly() const { return ly_; }
  Boundary boundary() const { return boundary_; }
  std::size_t num_sites() const { return static_cast<std::size_t>(lx_) * ly_; }

  Coord coord(std::size_t i) const {
    check_site(i);
    return {static_cast<int>(i % lx_), static_cast<int>(i / lx_)};
  }

  std::size_t site(Coord c) const {
    if (c.x < 0 || c.x >= lx_ || c.y < 0 || c.y >= ly_)
      throw IndexError("coordinate (" + std::to_string(c.x) + "," + std::to_string(c.y) +
                       ") outside lattice");
    return static_cast<std::size_t>(c.y) * lx_ + c.x;
  }

  void check_site(std::size_t i) const {
    if (i >= num_sites())
      throw IndexError("site index " + std::to_string(i) + " out of range [0, " +
                       std::to_string(num_sites()) + ")");
  }

  // Integer displacement after applying the minimum-image rule under PBC.
  Coord displacement(std::size_t i, std::size_t j) const {
    const Coord a = coord(i);
    const Coord b = coord(j);
    int dx = std::abs(a.x - b.x);
    int dy = std::abs(a.y - b.y);
    if (boundary_ == Boundary::Periodic) {
      dx = std::min(dx, lx_ - dx);
      dy = std::min(dy, ly_ - dy);
    }
    return {dx, dy};
  }

  friend bool operator==(const LatticeSpec&, const LatticeSpec&) = default;

 private:
  int lx_;
  int ly_;
  Boundary boundary_;
};

inline double pair_distance(const LatticeSpec& spec, std::size_t i, std::size_t j) {
  if (i == j) throw DomainError("pair_distance requires distinct sites");
  const Coord d = spec.displacement(i, j);
  return std::sqrt(static_cast<double>(d.x * d.x + d.y * d.y));
}

struct Neighbor {
  std::size_t site;
  double coupling;
};

struct Pair {
  std::size_t i;
  std::size_t j;
  double coupling;
};

class InteractionTable {
 public:
  InteractionTable(const LatticeSpec& spec, double blockade_radius, double cutoff,
                   std::vector<Pair> pairs)
      : spec_(spec), rb_(blockade_radius), r0_(cutoff), pairs_(std::move(pairs)),
        neighbors_(spec.num_sites()) {
    for (const Pair& p : pairs_) {
      neighbors_[p.i].push_back({p.j, p.coupling});
      neighbors_[p.j].push_back({p.i, p.coupling});
    }
  }

  const LatticeSpec& spec() const { return spec_; }
  double blockade_radius() const { return rb_; }
  double cutoff() const { return r0_; }
  const std::vector<Pair>& pairs() const { return pairs_; }
  const std::vector<Neighbor>& neighbors(std::size_t i) const { return neighbors_.at(i); }

 private:
  LatticeSpec spec_;
  double rb_;
  double r0_;
  std::vector<Pair> pairs_;
  std::vector<std::vector<Neighbor>> neighbors_;
};

struct InteractionOptions {
  // Accept L == 2*R0 under PBC. Pairs at exactly half the box are then counted
  // once, at their minimum-image distance.
  bool allow_half_box = false;
  bool warn = true;
};

inline InteractionTable build_interactions(const LatticeSpec& spec, double blockade_radius,
                                           double cutoff, InteractionOptions opts = {}) {
  if (!(blockade_radius > 0)) throw ConfigError("blockade radius must be positive");
  if (!(cutoff > 0)) throw ConfigError("interaction cutoff R0 must be positive");
  if (spec.boundary() == Boundary::Periodic) {
    const int lmin = std::min(spec.lx(), spec.ly());
    const bool strict_ok = lmin > 2.0 * cutoff;
    const bool half_box_ok = opts.allow_half_box && lmin >= 2.0 * cutoff;
    if (!strict_ok && !half_box_ok)
      throw ConfigError("periodic lattice requires Lx, Ly > 2*R0 (L=" + std::to_string(lmin) +
                        ", R0=" + std::to_string(cutoff) + "); set allow_half_box for L == 2*R0");
    if (!strict_ok && opts.warn)
      std::cerr << "warning: L = 2*R0 under PBC; half-box image pairs counted once\n";
  }

  const double r0_sq = cutoff * cutoff;
  const double rb6 = std::pow(blockade_radius, 6);
  std::vector<Pair> pairs;
  const std::size_t n = spec.num_sites();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Coord d = spec.displacement(i, j);
      const long d2 = static_cast<long>(d.x) * d.x + static_cast<long>(d.y) * d.y;
      if (static_cast<double>(d2) <= r0_sq) {
        const double d6 = static_cast<double>(d2) * static_cast<double>(d2) * static_cast<double>(d2);
        pairs.push_back({i, j, rb6 / d6});
      }
    }
  }
  return InteractionTable(spec, blockade_radius, cutoff, std::move(pairs));
}

// Perimeter sites of an open lattice, in increasing index order.
inline std::vector<std::size_t> boundary_sites(const LatticeSpec& spec) {
  if (spec.boundary() != Boundary::Open)
    throw UsageError("boundary_sites is only defined for open boundary conditions");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < spec.num_sites(); ++i) {
    const Coord c = spec.coord(i);
    if (c.x == 0 || c.x == spec.lx() - 1 || c.y == 0 || c.y == spec.ly() - 1) out.push_back(i);
  }
  return out;
}

}  // namespace rydberg
