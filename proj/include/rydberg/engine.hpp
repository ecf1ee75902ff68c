#pragma once

// Continuous-time worldline Monte Carlo for
//
//   H = Σ_{i<j} V_ij n_i n_j − Δ Σ_i n_i − (Ω/2) Σ_i σ^x_i,   Ω = 1.
//
// The transverse field is taken with a negative sign so that all worldline
// weights are positive. Conjugating by Π_i σ^z_i maps this onto the +σ^x
// form; diagonal observables are identical in both.
//
// One site update draws Poisson cut proposals at rate Ω/2 along the site's
// worldline, joins them with the existing kinks, and flips each resulting
// segment independently with probability min(1, exp(−ΔS)), where ΔS is the
// change of the diagonal action from the interaction with the neighbors'
// worldlines and the detuning.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "rydberg/errors.hpp"
#include "rydberg/lattice.hpp"
#include "rydberg/observables.hpp"
#include "rydberg/rng.hpp"
#include "rydberg/worldline.hpp"

namespace rydberg {

inline constexpr double kTransverseRate = 0.5;  // Ω/2 with Ω = 1

enum class InitialState { AllGround, RandomProduct, FromCheckpoint, FromSeedPhase };

inline std::string to_string(InitialState s) {
  switch (s) {
    case InitialState::AllGround: return "all_ground";
    case InitialState::RandomProduct: return "random_product";
    case InitialState::FromCheckpoint: return "from_checkpoint";
    case InitialState::FromSeedPhase: return "from_seed_phase";
  }
  return "?";
}

inline InitialState initial_state_from_string(const std::string& s) {
  if (s == "all_ground") return InitialState::AllGround;
  if (s == "random_product") return InitialState::RandomProduct;
  if (s == "from_checkpoint") return InitialState::FromCheckpoint;
  if (s == "from_seed_phase") return InitialState::FromSeedPhase;
  throw ConfigError("unknown initial state '" + s + "'");
}

struct QmcParams {
  double blockade_radius = 1.2;
  double detuning = 0.0;
  double cutoff = 4.0;
  double temperature = 0.1;
  std::uint64_t thermalization_sweeps = 1000;
  std::uint64_t measurement_sweeps = 1000;
  std::uint64_t measure_every = 1;
  std::uint64_t rng_seed = 1;
  InitialState initial_state = InitialState::AllGround;
  bool allow_half_box = false;
  std::size_t time_slices = 8;

  double beta() const { return 1.0 / temperature; }

  void validate() const {
    if (!(temperature > 0)) throw ConfigError("temperature must be positive");
    if (!(blockade_radius > 0)) throw ConfigError("blockade radius must be positive");
    if (!(cutoff > 0)) throw ConfigError("cutoff must be positive");
    if (measure_every < 1) throw ConfigError("measure_every must be at least 1");
    if (time_slices < 1) throw ConfigError("time_slices must be at least 1");
  }

  friend bool operator==(const QmcParams&, const QmcParams&) = default;
};

struct ParamsOverride {
  std::optional<double> blockade_radius;
  std::optional<double> detuning;
  std::optional<double> temperature;

  QmcParams apply(QmcParams p) const {
    if (blockade_radius) p.blockade_radius = *blockade_radius;
    if (detuning) p.detuning = *detuning;
    if (temperature) p.temperature = *temperature;
    return p;
  }
  friend bool operator==(const ParamsOverride&, const ParamsOverride&) = default;
};

struct Stage {
  ParamsOverride params;
  std::uint64_t sweeps = 0;
  friend bool operator==(const Stage&, const Stage&) = default;
};

struct Schedule {
  std::vector<Stage> stages;
  friend bool operator==(const Schedule&, const Schedule&) = default;
};

// Scratch buffers reused across site updates.
class SiteUpdater {
 public:
  // Updates the worldline of site i in place and returns the change of the
  // total diagonal action.
  double operator()(Configuration& config, std::size_t i, const InteractionTable& table, double detuning,
                    Rng& rng) {
    const double beta = config.beta();
    Worldline& line = config.line(i);

    propose_cuts(line, beta, rng);
    merge_cuts(line);
    const std::size_t m = cuts_.size();

    build_field(config, i, table);
    cumulative_field_at_cuts(beta);

    double delta_total = 0.0;
    if (m == 0) {
      const double len = beta;
      const double integral = field_total_;
      const double ds = (line.spin0 ? -1.0 : 1.0) * (integral - detuning * len);
      if (accept(ds, rng)) {
        line.spin0 = !line.spin0;
        delta_total += ds;
      }
      return delta_total;
    }

    // Segment k starts at cuts_[k]; the last one wraps through τ = 0.
    values_.resize(m);
    bool v = line.spin0;
    for (std::size_t k = 0; k < m; ++k) {
      if (cuts_[k].is_kink) v = !v;
      values_[k] = v;
    }
    for (std::size_t k = 0; k < m; ++k) {
      double len, integral;
      if (k + 1 < m) {
        len = cuts_[k + 1].t - cuts_[k].t;
        integral = field_at_cut_[k + 1] - field_at_cut_[k];
      } else {
        len = beta - cuts_[k].t + cuts_[0].t;
        integral = field_total_ - field_at_cut_[k] + field_at_cut_[0];
      }
      const double ds = (values_[k] ? -1.0 : 1.0) * (integral - detuning * len);
      if (accept(ds, rng)) {
        values_[k] = !values_[k];
        delta_total += ds;
      }
    }

    line.kinks.clear();
    for (std::size_t k = 0; k < m; ++k) {
      const bool prev = values_[(k + m - 1) % m];
      if (values_[k] != prev) line.kinks.push_back(cuts_[k].t);
    }
    line.spin0 = values_[m - 1];
    return delta_total;
  }

 private:
  struct Cut {
    double t;
    bool is_kink;
  };
  struct Event {
    double t;
    double delta;
  };

  // Heat-bath: flips with probability 1/(1+e^ΔS), so a field-free segment
  // flips with probability 1/2 instead of always.
  static bool accept(double ds, Rng& rng) { return rng.uniform() * (1.0 + std::exp(ds)) < 1.0; }

  void propose_cuts(const Worldline& line, double beta, Rng& rng) {
    proposals_.clear();
    for (double t = rng.exponential(kTransverseRate); t < beta; t += rng.exponential(kTransverseRate))
      proposals_.push_back(t);
    // Coincident times have measure zero but would make segments degenerate.
    for (double& t : proposals_) {
      while (t <= 0.0 || std::binary_search(line.kinks.begin(), line.kinks.end(), t)) t = rng.uniform() * beta;
    }
    std::sort(proposals_.begin(), proposals_.end());
    auto dup = std::adjacent_find(proposals_.begin(), proposals_.end());
    while (dup != proposals_.end()) {
      proposals_.erase(dup);
      dup = std::adjacent_find(proposals_.begin(), proposals_.end());
    }
  }

  void merge_cuts(const Worldline& line) {
    cuts_.clear();
    auto a = line.kinks.begin();
    auto b = proposals_.begin();
    while (a != line.kinks.end() || b != proposals_.end()) {
      if (b == proposals_.end() || (a != line.kinks.end() && *a < *b)) {
        cuts_.push_back({*a++, true});
      } else {
        cuts_.push_back({*b++, false});
      }
    }
  }

  // h(τ) = Σ_j V_ij n_j(τ) as a starting value plus sorted jump events.
  void build_field(const Configuration& config, std::size_t i, const InteractionTable& table) {
    events_.clear();
    field0_ = 0.0;
    for (const Neighbor& nb : table.neighbors(i)) {
      const Worldline& other = config.line(nb.site);
      if (other.spin0) field0_ += nb.coupling;
      double delta = other.spin0 ? -nb.coupling : nb.coupling;
      for (double t : other.kinks) {
        events_.push_back({t, delta});
        delta = -delta;
      }
    }
    std::sort(events_.begin(), events_.end(), [](const Event& x, const Event& y) { return x.t < y.t; });
  }

  // ∫_0^t h at every cut time and at β.
  void cumulative_field_at_cuts(double beta) {
    field_at_cut_.resize(cuts_.size());
    double h = field0_;
    double acc = 0.0;
    double t_prev = 0.0;
    std::size_t e = 0;
    auto advance_to = [&](double q) {
      while (e < events_.size() && events_[e].t <= q) {
        acc += h * (events_[e].t - t_prev);
        t_prev = events_[e].t;
        h += events_[e].delta;
        ++e;
      }
      return acc + h * (q - t_prev);
    };
    for (std::size_t k = 0; k < cuts_.size(); ++k) field_at_cut_[k] = advance_to(cuts_[k].t);
    field_total_ = advance_to(beta);
  }

  std::vector<double> proposals_;
  std::vector<Cut> cuts_;
  std::vector<Event> events_;
  std::vector<double> field_at_cut_;
  std::vector<bool> values_;
  double field0_ = 0.0;
  double field_total_ = 0.0;
};

inline double site_update(Configuration& config, std::size_t i, const InteractionTable& table, double detuning,
                          Rng& rng) {
  SiteUpdater updater;
  return updater(config, i, table, detuning, rng);
}

// ∫_0^β [Σ_{i<j} V_ij n_i n_j − Δ Σ_i n_i] dτ, evaluated from scratch.
inline double diagonal_action(const Configuration& config, const InteractionTable& table, double detuning) {
  const double beta = config.beta();
  double s = 0.0;
  for (const Pair& p : table.pairs()) s += p.coupling * overlap_integral(config.line(p.i), config.line(p.j), 0.0, beta);
  for (const auto& line : config.lines()) s -= detuning * line.occupied_time(0.0, beta);
  return s;
}

// One Markov chain: configuration, couplings, RNG and the running diagonal
// action. Owned by a single thread.
class Chain {
 public:
  Chain(const LatticeSpec& spec, const QmcParams& params)
      : params_(params),
        table_(std::make_shared<const InteractionTable>(
            build_interactions(spec, params.blockade_radius, params.cutoff, {params.allow_half_box, false}))),
        config_(spec, params.beta()),
        kernel_(spec),
        rng_(params.rng_seed) {
    params_.validate();
    if (params.initial_state == InitialState::RandomProduct) {
      for (std::size_t i = 0; i < config_.size(); ++i) config_.line(i).spin0 = rng_.uniform() < 0.5;
    }
    action_ = diagonal_action(config_, *table_, params_.detuning);
  }

  const QmcParams& params() const { return params_; }
  const Configuration& config() const { return config_; }
  const InteractionTable& table() const { return *table_; }
  const Rng& rng() const { return rng_; }
  double action() const { return action_; }
  std::uint64_t position() const { return position_; }

  // Restores a saved chain state; the caller is responsible for matching params.
  void restore(Configuration config, const std::string& rng_state, double action, std::uint64_t position) {
    if (!(config.spec() == config_.spec())) throw ConfigError("checkpoint lattice does not match run lattice");
    config.validate();
    config_ = std::move(config);
    rng_.set_state(rng_state);
    action_ = action;
    position_ = position;
  }

  void set_position(std::uint64_t p) { position_ = p; }

  // Switches couplings and temperature in place, keeping the worldlines.
  // Kink times are rescaled when β changes.
  void set_params(const QmcParams& p) {
    const bool couplings_changed = p.blockade_radius != params_.blockade_radius || p.cutoff != params_.cutoff ||
                                   p.allow_half_box != params_.allow_half_box;
    const bool beta_changed = p.temperature != params_.temperature;
    const bool detuning_changed = p.detuning != params_.detuning;
    if (!couplings_changed && !beta_changed && !detuning_changed) {
      params_ = p;
      return;
    }
    p.validate();
    if (couplings_changed)
      table_ = std::make_shared<const InteractionTable>(
          build_interactions(config_.spec(), p.blockade_radius, p.cutoff, {p.allow_half_box, false}));
    if (beta_changed) {
      const double scale = p.beta() / config_.beta();
      Configuration rescaled(config_.spec(), p.beta());
      for (std::size_t i = 0; i < config_.size(); ++i) {
        Worldline w = config_.line(i);
        for (double& t : w.kinks) t = std::min(t * scale, std::nextafter(p.beta(), 0.0));
        rescaled.line(i) = std::move(w);
      }
      config_ = std::move(rescaled);
    }
    params_ = p;
    action_ = diagonal_action(config_, *table_, params_.detuning);
  }

  double site_update(std::size_t i) {
    const double ds = updater_(config_, i, *table_, params_.detuning, rng_);
    action_ += ds;
    return ds;
  }

  // Visits every site once in a fresh uniformly random order.
  void sweep() {
    const std::size_t n = config_.size();
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    for (std::size_t k = n; k > 1; --k) std::swap(order_[k - 1], order_[rng_.below(k)]);
    for (std::size_t i : order_) site_update(i);
    ++position_;
  }

  double recompute_action() const { return diagonal_action(config_, *table_, params_.detuning); }

  Sample measure() {
    Sample s;
    s.sweep = position_;
    const double beta = config_.beta();
    const std::size_t slices = params_.time_slices;
    const double offset = rng_.uniform();
    for (std::size_t k = 0; k < slices; ++k) {
      const double tau = std::min((static_cast<double>(k) + offset) * beta / static_cast<double>(slices),
                                  std::nextafter(beta, 0.0));
      for (std::size_t i = 0; i < config_.size(); ++i) snap_[i] = config_.line(i).occupation_at(tau);
      const auto f = kernel_.evaluate(snap_);
      for (std::size_t o = 0; o < kNumOrders; ++o) {
        const double f2 = f[o] * f[o];
        s.orders[o].abs += f[o];
        s.orders[o].m2 += f2;
        s.orders[o].m4 += f2 * f2;
      }
    }
    for (auto& o : s.orders) {
      o.abs /= static_cast<double>(slices);
      o.m2 /= static_cast<double>(slices);
      o.m4 /= static_cast<double>(slices);
    }
    s.density = rydberg::density(config_);
    s.diag_energy = action_ / beta;
    s.kinks = static_cast<double>(config_.total_kinks());
    s.energy = (action_ - s.kinks) / beta;
    return s;
  }

 private:
  QmcParams params_;
  std::shared_ptr<const InteractionTable> table_;
  Configuration config_;
  OrderKernel kernel_;
  Rng rng_;
  SiteUpdater updater_;
  double action_ = 0.0;
  std::uint64_t position_ = 0;
  std::vector<std::size_t> order_;
  std::vector<std::uint8_t> snap_ = std::vector<std::uint8_t>(config_.size());
};

struct RunHooks {
  std::function<void(const Chain&, const Sample&)> on_sample;
  // Called after every sweep with the chain positioned after that sweep.
  std::function<void(const Chain&)> on_sweep;
  std::ostream* log = nullptr;
  std::uint64_t log_every = 0;
};

struct RunResult {
  ObservableSeries series;
  Configuration final_config;
};

inline SeriesMetadata make_metadata(const LatticeSpec& spec, const QmcParams& p) {
  return {spec.lx(), spec.ly(), to_string(spec.boundary()), p.blockade_radius, p.detuning, p.cutoff,
          p.temperature, p.rng_seed, p.measure_every};
}

inline std::uint64_t total_sweeps(const QmcParams& p, const Schedule& schedule) {
  std::uint64_t n = p.thermalization_sweeps + p.measurement_sweeps;
  for (const auto& st : schedule.stages) n += st.sweeps;
  return n;
}

// Parameters in force for the sweep at timeline position `pos`, and whether
// that sweep belongs to the measurement phase.
inline std::pair<QmcParams, bool> phase_at(const QmcParams& p, const Schedule& schedule, std::uint64_t pos) {
  std::uint64_t edge = 0;
  for (const auto& st : schedule.stages) {
    edge += st.sweeps;
    if (pos < edge) return {st.params.apply(p), false};
  }
  edge += p.thermalization_sweeps;
  return {p, pos >= edge};
}

// Drives a chain through the schedule stages, thermalization and measurement.
// The chain may have been restored from a checkpoint; it resumes at its
// recorded position.
inline ObservableSeries drive(Chain& chain, const QmcParams& params, const Schedule& schedule,
                              const RunHooks& hooks = {}) {
  ObservableSeries series;
  series.meta = make_metadata(chain.config().spec(), params);
  const std::uint64_t total = total_sweeps(params, schedule);
  const std::uint64_t meas_start = total - params.measurement_sweeps;
  for (std::uint64_t pos = chain.position(); pos < total; ++pos) {
    const auto [phase_params, measuring] = phase_at(params, schedule, pos);
    chain.set_params(phase_params);
    chain.sweep();
    if (measuring && (pos + 1 - meas_start) % params.measure_every == 0) {
      series.samples.push_back(chain.measure());
      if (hooks.on_sample) hooks.on_sample(chain, series.samples.back());
    }
    if (hooks.on_sweep) hooks.on_sweep(chain);
    if (hooks.log && hooks.log_every && (pos + 1) % hooks.log_every == 0)
      *hooks.log << "sweep " << pos + 1 << "/" << total << " action " << chain.action() << "\n";
  }
  return series;
}

inline RunResult run(const LatticeSpec& spec, const QmcParams& params, const Schedule& schedule = {},
                     const RunHooks& hooks = {}) {
  params.validate();
  if (params.initial_state == InitialState::FromCheckpoint)
    throw UsageError("from_checkpoint runs are resumed through the checkpoint loader");
  // Start in the parameters of the first phase so no rebuild is needed.
  QmcParams first = phase_at(params, schedule, 0).first;
  Chain chain(spec, first);
  auto series = drive(chain, params, schedule, hooks);
  return {std::move(series), chain.config()};
}

// Equilibrates at `seed`, then switches couplings to `target` keeping the
// worldlines, and thermalizes and measures there. Extra schedule stages run
// between the two (e.g. a ramp in Rb).
inline RunResult seeded_run(const LatticeSpec& spec, const QmcParams& seed, const QmcParams& target,
                            const Schedule& schedule = {}, const RunHooks& hooks = {}) {
  if (seed.temperature != target.temperature || seed.cutoff != target.cutoff ||
      seed.allow_half_box != target.allow_half_box)
    throw ConfigError("seed and target must share temperature and cutoff");
  Schedule full;
  full.stages.push_back({{seed.blockade_radius, seed.detuning, std::nullopt}, seed.thermalization_sweeps});
  full.stages.insert(full.stages.end(), schedule.stages.begin(), schedule.stages.end());
  QmcParams p = target;
  p.initial_state = seed.initial_state == InitialState::FromSeedPhase ? InitialState::AllGround : seed.initial_state;
  return run(spec, p, full, hooks);
}

}  // namespace rydberg
