#pragma once

// Continuous imaginary-time worldlines.
//
// A worldline is the occupation n(τ) of one site on [0, β), stored as its
// value at τ = 0 plus the sorted times at which it flips. A kink at time t
// changes the value from t onward, so n(t) is the post-kink value. The trace
// is periodic, hence the number of kinks is always even.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rydberg/errors.hpp"
#include "rydberg/lattice.hpp"

namespace rydberg {

struct Worldline {
  bool spin0 = false;
  std::vector<double> kinks;

  bool occupation_at(double tau) const {
    const auto passed = std::upper_bound(kinks.begin(), kinks.end(), tau) - kinks.begin();
    return spin0 ^ static_cast<bool>(passed & 1);
  }

  // Length of {τ ∈ [a, b) : n(τ) = 1}.
  double occupied_time(double a, double b) const {
    double total = 0.0;
    auto it = std::upper_bound(kinks.begin(), kinks.end(), a);
    bool n = spin0 ^ static_cast<bool>((it - kinks.begin()) & 1);
    double t = a;
    for (; it != kinks.end() && *it < b; ++it) {
      if (n) total += *it - t;
      t = *it;
      n = !n;
    }
    if (n) total += b - t;
    return total;
  }

  friend bool operator==(const Worldline&, const Worldline&) = default;
};

inline void check_time(double tau, double beta) {
  if (!(tau >= 0.0 && tau < beta))
    throw DomainError("imaginary time " + std::to_string(tau) + " outside [0, " +
                      std::to_string(beta) + ")");
}

inline bool occupation_at(const Worldline& line, double tau, double beta) {
  check_time(tau, beta);
  return line.occupation_at(tau);
}

// Throws if the line violates its structural invariants on [0, β).
inline void validate(const Worldline& line, double beta) {
  if (line.kinks.size() % 2 != 0) throw ValidationError("odd number of kinks on a worldline");
  for (std::size_t k = 0; k < line.kinks.size(); ++k) {
    const double t = line.kinks[k];
    if (!(t >= 0.0 && t < beta)) throw ValidationError("kink time outside [0, beta)");
    if (k > 0 && !(line.kinks[k - 1] < t)) throw ValidationError("kink times not strictly increasing");
  }
}

// Length of {τ ∈ [a, b) : n_i(τ) = n_j(τ) = 1}, by exact interval arithmetic.
inline double overlap_integral(const Worldline& li, const Worldline& lj, double a, double b) {
  if (!(a < b)) throw DomainError("overlap window requires a < b");
  auto it_i = std::upper_bound(li.kinks.begin(), li.kinks.end(), a);
  auto it_j = std::upper_bound(lj.kinks.begin(), lj.kinks.end(), a);
  bool ni = li.spin0 ^ static_cast<bool>((it_i - li.kinks.begin()) & 1);
  bool nj = lj.spin0 ^ static_cast<bool>((it_j - lj.kinks.begin()) & 1);
  double t = a;
  double total = 0.0;
  const auto end_i = li.kinks.end();
  const auto end_j = lj.kinks.end();
  while (true) {
    const double next_i = (it_i != end_i && *it_i < b) ? *it_i : b;
    const double next_j = (it_j != end_j && *it_j < b) ? *it_j : b;
    const double next = std::min(next_i, next_j);
    if (ni && nj) total += next - t;
    if (next >= b) break;
    if (next_i == next) { ni = !ni; ++it_i; }
    if (next_j == next) { nj = !nj; ++it_j; }
    t = next;
  }
  return total;
}

class Configuration {
 public:
  Configuration(const LatticeSpec& spec, double beta)
      : spec_(spec), beta_(beta), lines_(spec.num_sites()) {
    if (!(beta > 0)) throw ConfigError("inverse temperature must be positive");
  }

  const LatticeSpec& spec() const { return spec_; }
  double beta() const { return beta_; }
  std::size_t size() const { return lines_.size(); }

  const Worldline& line(std::size_t i) const { return lines_.at(i); }
  Worldline& line(std::size_t i) { return lines_.at(i); }
  const std::vector<Worldline>& lines() const { return lines_; }

  void validate() const {
    for (const auto& l : lines_) rydberg::validate(l, beta_);
  }

  std::size_t total_kinks() const {
    std::size_t n = 0;
    for (const auto& l : lines_) n += l.kinks.size();
    return n;
  }

  friend bool operator==(const Configuration&, const Configuration&) = default;

 private:
  LatticeSpec spec_;
  double beta_;
  std::vector<Worldline> lines_;
};

inline std::vector<std::uint8_t> snapshot(const Configuration& config, double tau) {
  check_time(tau, config.beta());
  std::vector<std::uint8_t> out(config.size());
  for (std::size_t i = 0; i < config.size(); ++i) out[i] = config.line(i).occupation_at(tau);
  return out;
}

}  // namespace rydberg
