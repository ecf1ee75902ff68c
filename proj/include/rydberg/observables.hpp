#pragma once

// Density-wave order parameters and the per-sweep measurement record.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "rydberg/errors.hpp"
#include "rydberg/lattice.hpp"
#include "rydberg/worldline.hpp"

namespace rydberg {

struct Momentum {
  double kx;
  double ky;
};

namespace momenta {
inline constexpr Momentum checkerboard{std::numbers::pi, std::numbers::pi};
inline constexpr Momentum striated{0.0, std::numbers::pi};
inline constexpr Momentum star{std::numbers::pi, std::numbers::pi / 2};
}  // namespace momenta

// Unsymmetrized complex amplitude (1/N) Σ_j n_j exp(i k·r_j) over `sites`.
inline std::complex<double> fourier_amplitude(std::span<const std::uint8_t> snap, const LatticeSpec& spec,
                                              Momentum k, std::span<const std::size_t> sites) {
  std::complex<double> sum{0.0, 0.0};
  for (std::size_t j : sites) {
    if (!snap[j]) continue;
    const Coord c = spec.coord(j);
    sum += std::polar(1.0, k.kx * c.x + k.ky * c.y);
  }
  return sum / static_cast<double>(sites.size());
}

inline void check_snapshot(std::span<const std::uint8_t> snap, const LatticeSpec& spec) {
  if (snap.size() != spec.num_sites())
    throw ValidationError("snapshot length " + std::to_string(snap.size()) + " does not match lattice size " +
                          std::to_string(spec.num_sites()));
}

// |[F̃(kx,ky) + F̃(ky,kx)] / 2| over all sites.
inline double fourier_order(std::span<const std::uint8_t> snap, const LatticeSpec& spec, Momentum k) {
  check_snapshot(snap, spec);
  std::vector<std::size_t> all(spec.num_sites());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto a = fourier_amplitude(snap, spec, k, all);
  const auto b = fourier_amplitude(snap, spec, {k.ky, k.kx}, all);
  return std::abs(0.5 * (a + b));
}

// |F̃_B(π,π)| restricted to the perimeter of an open lattice.
inline double boundary_order(std::span<const std::uint8_t> snap, const LatticeSpec& spec) {
  check_snapshot(snap, spec);
  const auto sites = boundary_sites(spec);
  return std::abs(fourier_amplitude(snap, spec, momenta::checkerboard, sites));
}

// Site-averaged time-averaged occupation, from exact worldline integrals.
inline double density(const Configuration& config) {
  double total = 0.0;
  for (const auto& line : config.lines()) total += line.occupied_time(0.0, config.beta());
  return total / (static_cast<double>(config.size()) * config.beta());
}

enum class Order { Checkerboard = 0, Striated = 1, Star = 2, Boundary = 3 };
inline constexpr std::size_t kNumOrders = 4;
inline constexpr std::array<const char*, kNumOrders> kOrderNames{"checkerboard", "striated", "star", "boundary"};

// Precomputed symmetrized phase factors, one table per order, so that the
// per-slice evaluation is a single pass over occupied sites.
class OrderKernel {
 public:
  explicit OrderKernel(const LatticeSpec& spec) : spec_(spec), has_boundary_(spec.boundary() == Boundary::Open) {
    const std::size_t n = spec.num_sites();
    const std::array<Momentum, 3> ks{momenta::checkerboard, momenta::striated, momenta::star};
    for (std::size_t o = 0; o < 3; ++o) {
      phases_[o].resize(n);
      for (std::size_t j = 0; j < n; ++j) {
        const Coord c = spec.coord(j);
        const auto a = std::polar(1.0, ks[o].kx * c.x + ks[o].ky * c.y);
        const auto b = std::polar(1.0, ks[o].ky * c.x + ks[o].kx * c.y);
        phases_[o][j] = 0.5 * (a + b) / static_cast<double>(n);
      }
    }
    phases_[3].assign(n, {0.0, 0.0});
    if (has_boundary_) {
      const auto sites = boundary_sites(spec);
      for (std::size_t j : sites) {
        const Coord c = spec.coord(j);
        phases_[3][j] = std::polar(1.0, std::numbers::pi * (c.x + c.y)) / static_cast<double>(sites.size());
      }
    }
  }

  bool has_boundary() const { return has_boundary_; }

  std::array<double, kNumOrders> evaluate(std::span<const std::uint8_t> snap) const {
    std::array<std::complex<double>, kNumOrders> acc{};
    for (std::size_t j = 0; j < snap.size(); ++j) {
      if (!snap[j]) continue;
      for (std::size_t o = 0; o < kNumOrders; ++o) acc[o] += phases_[o][j];
    }
    std::array<double, kNumOrders> out{};
    for (std::size_t o = 0; o < kNumOrders; ++o) out[o] = std::abs(acc[o]);
    return out;
  }

 private:
  LatticeSpec spec_;
  bool has_boundary_;
  std::array<std::vector<std::complex<double>>, kNumOrders> phases_;
};

// Moments of one order parameter averaged over the imaginary-time slices of a
// single measured sweep.
struct OrderMoments {
  double abs = 0.0;  // <|F|>
  double m2 = 0.0;   // <F^2>
  double m4 = 0.0;   // <F^4>
};

struct Sample {
  std::uint64_t sweep = 0;
  std::array<OrderMoments, kNumOrders> orders{};
  double density = 0.0;
  double diag_energy = 0.0;  // (1/β) ∫ H_diag dτ
  double kinks = 0.0;        // total kink count
  double energy = 0.0;       // diag_energy - kinks/β

  const OrderMoments& order(Order o) const { return orders[static_cast<std::size_t>(o)]; }
};

struct SeriesMetadata {
  int lx = 0;
  int ly = 0;
  std::string boundary;
  double blockade_radius = 0.0;
  double detuning = 0.0;
  double cutoff = 0.0;
  double temperature = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t measure_every = 1;
};

struct ObservableSeries {
  SeriesMetadata meta;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  template <class Fn>
  std::vector<double> column(Fn&& fn) const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(fn(s));
    return out;
  }

  std::vector<double> densities() const {
    return column([](const Sample& s) { return s.density; });
  }
  std::vector<double> order_m2(Order o) const {
    return column([o](const Sample& s) { return s.order(o).m2; });
  }
  std::vector<double> order_m4(Order o) const {
    return column([o](const Sample& s) { return s.order(o).m4; });
  }
  std::vector<double> order_abs(Order o) const {
    return column([o](const Sample& s) { return s.order(o).abs; });
  }
};

}  // namespace rydberg
