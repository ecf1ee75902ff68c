#pragma once

// Exact thermal averages of small arrays by dense diagonalization. Basis
// state s encodes n_i as bit i of s.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rydberg/errors.hpp"
#include "rydberg/lattice.hpp"
#include "rydberg/observables.hpp"
#include "rydberg/statistics.hpp"

namespace rydberg {

inline constexpr std::size_t kOracleMaxSites = 16;

enum class TransverseSign { Negative, Positive };

// Dense H for `n` sites with the given pair couplings.
inline Eigen::MatrixXd build_hamiltonian(std::size_t n, std::span<const Pair> pairs, double detuning,
                                         TransverseSign sign = TransverseSign::Negative) {
  if (n < 1) throw SizeError("oracle needs at least one site");
  if (n > kOracleMaxSites)
    throw SizeError("dense oracle is capped at " + std::to_string(kOracleMaxSites) + " sites, got " +
                    std::to_string(n));
  for (const Pair& p : pairs)
    if (p.i >= n || p.j >= n || p.i == p.j) throw IndexError("pair (" + std::to_string(p.i) + "," + std::to_string(p.j) + ") is invalid");
  const std::size_t dim = std::size_t{1} << n;
  const double hop = sign == TransverseSign::Negative ? -0.5 : 0.5;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  for (std::size_t s = 0; s < dim; ++s) {
    double diag = 0.0;
    for (const Pair& p : pairs)
      if (((s >> p.i) & 1) && ((s >> p.j) & 1)) diag += p.coupling;
    for (std::size_t i = 0; i < n; ++i) {
      if ((s >> i) & 1) diag -= detuning;
      h(s ^ (std::size_t{1} << i), s) = hop;
    }
    h(s, s) = diag;
  }
  return h;
}

inline Eigen::MatrixXd build_hamiltonian(const LatticeSpec& spec, const InteractionTable& table, double detuning,
                                         TransverseSign sign = TransverseSign::Negative) {
  if (spec.num_sites() > kOracleMaxSites)
    throw SizeError("dense oracle is capped at " + std::to_string(kOracleMaxSites) + " sites, got " +
                    std::to_string(spec.num_sites()));
  return build_hamiltonian(spec.num_sites(), table.pairs(), detuning, sign);
}

struct OrderExpectation {
  double abs = 0.0;
  double m2 = 0.0;
  double m4 = 0.0;
  double binder = 0.0;
};

struct ThermalExpectations {
  double density = 0.0;
  double energy = 0.0;
  std::array<OrderExpectation, kNumOrders> orders{};

  const OrderExpectation& order(Order o) const { return orders[static_cast<std::size_t>(o)]; }
};

namespace detail {

inline ThermalExpectations thermal_expectations(const Eigen::MatrixXd& h, double beta, std::size_t n,
                                                const LatticeSpec* spec) {
  if (!(beta > 0)) throw DomainError("beta must be positive");
  if (n < 1 || n > kOracleMaxSites) throw SizeError("oracle site count out of range");
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n);
  if (h.rows() != dim || h.cols() != dim)
    throw ValidationError("Hamiltonian dimension does not match the lattice");
  if (!h.isApprox(h.transpose(), 1e-12)) throw ValidationError("Hamiltonian is not Hermitian");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  const Eigen::VectorXd& e = solver.eigenvalues();
  const Eigen::MatrixXd& u = solver.eigenvectors();
  const double e0 = e.minCoeff();
  Eigen::VectorXd w = (-beta * (e.array() - e0)).exp();
  const double z = w.sum();
  const Eigen::VectorXd prob = (u.array().square().matrix() * w) / z;

  ThermalExpectations out;
  out.energy = (e.array() * w.array()).sum() / z;
  std::optional<OrderKernel> kernel;
  if (spec) kernel.emplace(*spec);
  std::vector<std::uint8_t> snap(n);
  for (Eigen::Index s = 0; s < dim; ++s) {
    int occupied = 0;
    for (std::size_t i = 0; i < n; ++i) {
      snap[i] = (s >> i) & 1;
      occupied += snap[i];
    }
    const double p = prob(s);
    out.density += p * occupied / static_cast<double>(n);
    if (!kernel) continue;
    const auto f = kernel->evaluate(snap);
    for (std::size_t o = 0; o < kNumOrders; ++o) {
      const double f2 = f[o] * f[o];
      out.orders[o].abs += p * f[o];
      out.orders[o].m2 += p * f2;
      out.orders[o].m4 += p * f2 * f2;
    }
  }
  for (auto& o : out.orders) o.binder = o.m2 > 0.0 ? binder_ratio(o.m2, o.m4) : 0.0;
  return out;
}

}  // namespace detail

// Boltzmann-weighted averages of diagonal observables; the diagonal of
// e^{−βH} in the computational basis is assembled from the eigenvectors.
inline ThermalExpectations thermal_expectations(const Eigen::MatrixXd& h, double beta, const LatticeSpec& spec) {
  return detail::thermal_expectations(h, beta, spec.num_sites(), &spec);
}

// Density and energy only, for site sets without lattice geometry.
inline ThermalExpectations thermal_expectations(const Eigen::MatrixXd& h, double beta, std::size_t n_sites) {
  return detail::thermal_expectations(h, beta, n_sites, nullptr);
}

}  // namespace rydberg
