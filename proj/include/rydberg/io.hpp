#pragma once

// Configuration, checkpoint and output formats.
//
// Run configurations are JSON documents with the sections lattice, physics,
// engine, sweep, outputs and analysis; every section and key is optional,
// unknown keys are rejected. Samples are written as JSON lines, tables as CSV
// with a header row.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "rydberg/engine.hpp"
#include "rydberg/errors.hpp"
#include "rydberg/lattice.hpp"
#include "rydberg/lgw.hpp"
#include "rydberg/observables.hpp"
#include "rydberg/oracle.hpp"
#include "rydberg/scaling.hpp"
#include "rydberg/statistics.hpp"
#include "rydberg/worldline.hpp"

namespace rydberg::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char* kCheckpointFormat = "rydberg-checkpoint";

// Shortest text that reads back to the same double.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Byte offset -> 1-based line number.
inline std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

inline json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), line_of(text, e.byte > 0 ? e.byte - 1 : 0));
  }
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Writes through a temporary file so readers never see a partial file.
inline void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw ConfigError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Strict JSON reading

namespace detail {

template <class T>
struct is_vector : std::false_type {};
template <class T>
struct is_vector<std::vector<T>> : std::true_type {};

template <class T>
T json_value(const json& v, const std::string& path) {
  if constexpr (is_vector<T>::value) {
    if (!v.is_array()) throw ConfigError(path + ": expected an array");
    T out;
    for (std::size_t k = 0; k < v.size(); ++k)
      out.push_back(json_value<typename T::value_type>(v[k], path + "[" + std::to_string(k) + "]"));
    return out;
  } else {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(path + ": expected true or false");
    } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned()) throw ConfigError(path + ": expected a non-negative integer");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(path + ": expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(path + ": expected a string");
    }
    return v.get<T>();
  }
}

class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError((path_.empty() ? "configuration" : path_) + ": expected an object");
  }

  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <class T>
  void read(const std::string& key, T& out) {
    if (const json* v = find(key)) out = json_value<T>(*v, sub(key));
  }

  template <class T>
  void read(const std::string& key, std::optional<T>& out) {
    if (const json* v = find(key)) out = json_value<T>(*v, sub(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown key '" + sub(it.key()) + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Run configuration

struct LatticeConfig {
  int lx = 8;
  int ly = 8;
  Boundary boundary = Boundary::Periodic;
  friend bool operator==(const LatticeConfig&, const LatticeConfig&) = default;
};

struct PhysicsConfig {
  double blockade_radius = 1.2;
  double detuning = 0.0;
  double cutoff = 4.0;
  std::optional<double> temperature;
  std::optional<double> temperature_constant;  // T = c / Lx
  bool allow_half_box = false;
  friend bool operator==(const PhysicsConfig&, const PhysicsConfig&) = default;
};

struct SeedPhaseConfig {
  double blockade_radius = 1.2;
  double detuning = 0.0;
  std::uint64_t sweeps = 0;
  friend bool operator==(const SeedPhaseConfig&, const SeedPhaseConfig&) = default;
};

struct EngineConfig {
  std::uint64_t thermalization_sweeps = 1000;
  std::uint64_t measurement_sweeps = 1000;
  std::uint64_t measure_every = 1;
  std::vector<std::uint64_t> seeds{1};
  InitialState initial_state = InitialState::AllGround;
  std::size_t time_slices = 8;
  std::uint64_t checkpoint_every = 0;  // sweeps; 0 = only at completion
  Schedule schedule;
  std::optional<SeedPhaseConfig> seed_phase;
  friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

struct SweepConfig {
  std::optional<std::vector<int>> L;
  std::optional<std::vector<double>> blockade_radius;
  std::optional<std::vector<double>> detuning;
  std::optional<std::vector<double>> temperature;

  bool any() const { return L || blockade_radius || detuning || temperature; }
  friend bool operator==(const SweepConfig&, const SweepConfig&) = default;
};

struct OutputConfig {
  std::string directory = "out";
  std::size_t histogram_bins = 40;
  friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct AnalysisConfig {
  bool binder = true;
  bool histograms = true;
  double dip_threshold = 0.2;
  friend bool operator==(const AnalysisConfig&, const AnalysisConfig&) = default;
};

struct RunConfig {
  LatticeConfig lattice;
  PhysicsConfig physics;
  EngineConfig engine;
  SweepConfig sweep;
  OutputConfig outputs;
  AnalysisConfig analysis;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline json to_json(const Stage& st) {
  json j = json::object();
  if (st.params.blockade_radius) j["blockade_radius"] = *st.params.blockade_radius;
  if (st.params.detuning) j["detuning"] = *st.params.detuning;
  if (st.params.temperature) j["temperature"] = *st.params.temperature;
  j["sweeps"] = st.sweeps;
  return j;
}

inline json to_json(const RunConfig& c) {
  json j;
  j["lattice"] = {{"lx", c.lattice.lx}, {"ly", c.lattice.ly}, {"boundary", to_string(c.lattice.boundary)}};
  json phys = {{"blockade_radius", c.physics.blockade_radius},
               {"detuning", c.physics.detuning},
               {"cutoff", c.physics.cutoff},
               {"allow_half_box", c.physics.allow_half_box}};
  if (c.physics.temperature) phys["temperature"] = *c.physics.temperature;
  if (c.physics.temperature_constant) phys["temperature_constant"] = *c.physics.temperature_constant;
  j["physics"] = phys;
  json eng = {{"thermalization_sweeps", c.engine.thermalization_sweeps},
              {"measurement_sweeps", c.engine.measurement_sweeps},
              {"measure_every", c.engine.measure_every},
              {"seeds", c.engine.seeds},
              {"initial_state", to_string(c.engine.initial_state)},
              {"time_slices", c.engine.time_slices},
              {"checkpoint_every", c.engine.checkpoint_every}};
  json sched = json::array();
  for (const auto& st : c.engine.schedule.stages) sched.push_back(to_json(st));
  eng["schedule"] = sched;
  if (c.engine.seed_phase)
    eng["seed_phase"] = {{"blockade_radius", c.engine.seed_phase->blockade_radius},
                         {"detuning", c.engine.seed_phase->detuning},
                         {"sweeps", c.engine.seed_phase->sweeps}};
  j["engine"] = eng;
  json sw = json::object();
  if (c.sweep.L) sw["L"] = *c.sweep.L;
  if (c.sweep.blockade_radius) sw["blockade_radius"] = *c.sweep.blockade_radius;
  if (c.sweep.detuning) sw["detuning"] = *c.sweep.detuning;
  if (c.sweep.temperature) sw["temperature"] = *c.sweep.temperature;
  j["sweep"] = sw;
  j["outputs"] = {{"directory", c.outputs.directory},
                  {"histogram_bins", c.outputs.histogram_bins}};
  j["analysis"] = {{"binder", c.analysis.binder},
                   {"histograms", c.analysis.histograms},
                   {"dip_threshold", c.analysis.dip_threshold}};
  return j;
}

inline RunConfig parse_config(const json& j) {
  using detail::ObjectReader;
  RunConfig c;
  ObjectReader top(j, "");
  if (const json* v = top.find("lattice")) {
    ObjectReader r(*v, "lattice");
    r.read("lx", c.lattice.lx);
    r.read("ly", c.lattice.ly);
    std::string b;
    r.read("boundary", b);
    if (!b.empty()) c.lattice.boundary = boundary_from_string(b);
    r.finish();
  }
  if (const json* v = top.find("physics")) {
    ObjectReader r(*v, "physics");
    r.read("blockade_radius", c.physics.blockade_radius);
    r.read("detuning", c.physics.detuning);
    r.read("cutoff", c.physics.cutoff);
    r.read("temperature", c.physics.temperature);
    r.read("temperature_constant", c.physics.temperature_constant);
    r.read("allow_half_box", c.physics.allow_half_box);
    r.finish();
  }
  if (const json* v = top.find("engine")) {
    ObjectReader r(*v, "engine");
    r.read("thermalization_sweeps", c.engine.thermalization_sweeps);
    r.read("measurement_sweeps", c.engine.measurement_sweeps);
    r.read("measure_every", c.engine.measure_every);
    r.read("seeds", c.engine.seeds);
    std::string init;
    r.read("initial_state", init);
    if (!init.empty()) c.engine.initial_state = initial_state_from_string(init);
    r.read("time_slices", c.engine.time_slices);
    r.read("checkpoint_every", c.engine.checkpoint_every);
    if (const json* s = r.find("schedule")) {
      if (!s->is_array()) throw ConfigError("engine.schedule: expected an array");
      for (std::size_t k = 0; k < s->size(); ++k) {
        ObjectReader sr((*s)[k], "engine.schedule[" + std::to_string(k) + "]");
        Stage st;
        sr.read("blockade_radius", st.params.blockade_radius);
        sr.read("detuning", st.params.detuning);
        sr.read("temperature", st.params.temperature);
        if (!sr.find("sweeps")) throw ConfigError(sr.sub("sweeps") + ": required");
        sr.read("sweeps", st.sweeps);
        sr.finish();
        c.engine.schedule.stages.push_back(st);
      }
    }
    if (const json* s = r.find("seed_phase")) {
      ObjectReader sr(*s, "engine.seed_phase");
      SeedPhaseConfig sp;
      sr.read("blockade_radius", sp.blockade_radius);
      sr.read("detuning", sp.detuning);
      sr.read("sweeps", sp.sweeps);
      sr.finish();
      c.engine.seed_phase = sp;
    }
    r.finish();
  }
  if (const json* v = top.find("sweep")) {
    ObjectReader r(*v, "sweep");
    r.read("L", c.sweep.L);
    r.read("blockade_radius", c.sweep.blockade_radius);
    r.read("detuning", c.sweep.detuning);
    r.read("temperature", c.sweep.temperature);
    r.finish();
  }
  if (const json* v = top.find("outputs")) {
    ObjectReader r(*v, "outputs");
    r.read("directory", c.outputs.directory);
    r.read("histogram_bins", c.outputs.histogram_bins);
    r.finish();
  }
  if (const json* v = top.find("analysis")) {
    ObjectReader r(*v, "analysis");
    r.read("binder", c.analysis.binder);
    r.read("histograms", c.analysis.histograms);
    r.read("dip_threshold", c.analysis.dip_threshold);
    r.finish();
  }
  top.finish();
  return c;
}

inline RunConfig parse_config_text(const std::string& text) { return parse_config(parse_json_text(text)); }

inline std::string serialize_config(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

inline RunConfig load_config(const fs::path& path) { return parse_config_text(read_file(path)); }

// ---------------------------------------------------------------------------
// Parameter points

struct Point {
  std::string label;
  LatticeSpec spec;
  QmcParams params;  // rng_seed is set per task
  Schedule schedule;
};

inline std::string point_label(const LatticeSpec& spec, const QmcParams& p) {
  return "L" + std::to_string(spec.lx()) + "x" + std::to_string(spec.ly()) + "_" + to_string(spec.boundary()) +
         "_rb" + format_number(p.blockade_radius) + "_d" + format_number(p.detuning) + "_T" +
         format_number(p.temperature);
}

// Cartesian product of the sweep axes in the order L, Rb, Δ, T.
inline std::vector<Point> expand_points(const RunConfig& c) {
  auto axis = [](const auto& opt, auto fallback) {
    using V = std::decay_t<decltype(fallback)>;
    return opt ? std::vector<V>(opt->begin(), opt->end()) : std::vector<V>{fallback};
  };
  const auto ls = axis(c.sweep.L, -1);
  const auto rbs = axis(c.sweep.blockade_radius, c.physics.blockade_radius);
  const auto ds = axis(c.sweep.detuning, c.physics.detuning);
  const auto ts = axis(c.sweep.temperature, -1.0);
  std::vector<Point> out;
  for (int l : ls)
    for (double rb : rbs)
      for (double d : ds)
        for (double t : ts) {
          const int lx = c.sweep.L ? l : c.lattice.lx;
          const int ly = c.sweep.L ? l : c.lattice.ly;
          LatticeSpec spec(lx, ly, c.lattice.boundary);
          QmcParams p;
          p.blockade_radius = rb;
          p.detuning = d;
          p.cutoff = c.physics.cutoff;
          if (c.sweep.temperature)
            p.temperature = t;
          else if (c.physics.temperature)
            p.temperature = *c.physics.temperature;
          else if (c.physics.temperature_constant)
            p.temperature = *c.physics.temperature_constant / lx;
          p.thermalization_sweeps = c.engine.thermalization_sweeps;
          p.measurement_sweeps = c.engine.measurement_sweeps;
          p.measure_every = c.engine.measure_every;
          p.initial_state = c.engine.initial_state;
          p.allow_half_box = c.physics.allow_half_box;
          p.time_slices = c.engine.time_slices;
          Schedule sched;
          if (c.engine.seed_phase)
            sched.stages.push_back(
                {{c.engine.seed_phase->blockade_radius, c.engine.seed_phase->detuning, std::nullopt},
                 c.engine.seed_phase->sweeps});
          sched.stages.insert(sched.stages.end(), c.engine.schedule.stages.begin(), c.engine.schedule.stages.end());
          out.push_back({point_label(spec, p), spec, p, sched});
        }
  return out;
}

// Checks the configuration against every precondition the run will hit.
inline void validate(const RunConfig& c) {
  const auto& e = c.engine;
  if (e.seeds.empty()) throw ConfigError("engine.seeds must not be empty");
  if (std::set<std::uint64_t>(e.seeds.begin(), e.seeds.end()).size() != e.seeds.size())
    throw ConfigError("engine.seeds contains duplicates");
  if (e.initial_state == InitialState::FromCheckpoint)
    throw ConfigError("initial_state from_checkpoint is reached through --resume, not the config");
  if (e.initial_state == InitialState::FromSeedPhase && !e.seed_phase)
    throw ConfigError("initial_state from_seed_phase requires engine.seed_phase");
  if (e.seed_phase && e.initial_state != InitialState::FromSeedPhase)
    throw ConfigError("engine.seed_phase requires initial_state from_seed_phase");
  if (e.seed_phase && !(e.seed_phase->blockade_radius > 0))
    throw ConfigError("engine.seed_phase.blockade_radius must be positive");
  for (const auto& st : e.schedule.stages) {
    if (st.sweeps == 0) throw ConfigError("engine.schedule stages need at least one sweep");
    if (st.params.temperature) throw ConfigError("engine.schedule stages may not change the temperature");
    if (st.params.blockade_radius && !(*st.params.blockade_radius > 0))
      throw ConfigError("engine.schedule blockade_radius must be positive");
  }
  if (c.sweep.temperature) {
    if (c.physics.temperature || c.physics.temperature_constant)
      throw ConfigError("sweep.temperature replaces physics.temperature and physics.temperature_constant");
  } else if (c.physics.temperature.has_value() == c.physics.temperature_constant.has_value()) {
    throw ConfigError("set exactly one of physics.temperature and physics.temperature_constant");
  }
  if (c.physics.temperature_constant && !(*c.physics.temperature_constant > 0))
    throw ConfigError("physics.temperature_constant must be positive");
  auto nonempty = [](const auto& axis, const char* name) {
    if (axis && axis->empty()) throw ConfigError(std::string("sweep.") + name + " is an empty grid");
  };
  nonempty(c.sweep.L, "L");
  nonempty(c.sweep.blockade_radius, "blockade_radius");
  nonempty(c.sweep.detuning, "detuning");
  nonempty(c.sweep.temperature, "temperature");
  if (c.outputs.directory.empty()) throw ConfigError("outputs.directory must not be empty");
  if (c.outputs.histogram_bins < 1) throw ConfigError("outputs.histogram_bins must be at least 1");
  if (!(c.analysis.dip_threshold > 0 && c.analysis.dip_threshold < 1))
    throw ConfigError("analysis.dip_threshold must lie in (0, 1)");

  const auto points = expand_points(c);
  std::set<std::string> labels;
  for (const auto& p : points) {
    if (!labels.insert(p.label).second) throw ConfigError("sweep produces duplicate point " + p.label);
    p.params.validate();
    InteractionOptions opts{p.params.allow_half_box, false};
    build_interactions(p.spec, p.params.blockade_radius, p.params.cutoff, opts);
    for (const auto& st : p.schedule.stages)
      if (st.params.blockade_radius)
        build_interactions(p.spec, *st.params.blockade_radius, p.params.cutoff, opts);
  }
}

inline json point_json(const Point& p) {
  json sched = json::array();
  for (const auto& st : p.schedule.stages) sched.push_back(to_json(st));
  return {{"lx", p.spec.lx()},
          {"ly", p.spec.ly()},
          {"boundary", to_string(p.spec.boundary())},
          {"blockade_radius", p.params.blockade_radius},
          {"detuning", p.params.detuning},
          {"cutoff", p.params.cutoff},
          {"temperature", p.params.temperature},
          {"allow_half_box", p.params.allow_half_box},
          {"thermalization_sweeps", p.params.thermalization_sweeps},
          {"measurement_sweeps", p.params.measurement_sweeps},
          {"measure_every", p.params.measure_every},
          {"time_slices", p.params.time_slices},
          {"initial_state", to_string(p.params.initial_state)},
          {"schedule", sched}};
}

// FNV-1a of the canonical (key-sorted, compact) point JSON.
inline std::string params_hash(const Point& p) { return hex64(fnv1a(point_json(p).dump())); }

// ---------------------------------------------------------------------------
// Samples as JSON lines

struct SampleRecord {
  Sample sample;
  std::uint64_t seed = 0;
  std::string params_hash;
};

inline json sample_json(const Sample& s, std::uint64_t seed, const std::string& hash) {
  json orders = json::object();
  for (std::size_t o = 0; o < kNumOrders; ++o)
    orders[kOrderNames[o]] = {{"abs", s.orders[o].abs}, {"m2", s.orders[o].m2}, {"m4", s.orders[o].m4}};
  return {{"sweep_index", s.sweep}, {"seed", seed},          {"params_hash", hash}, {"density", s.density},
          {"energy", s.energy},     {"diag_energy", s.diag_energy}, {"kinks", s.kinks},  {"orders", orders}};
}

inline SampleRecord parse_sample(const json& j) {
  SampleRecord r;
  r.sample.sweep = j.at("sweep_index").get<std::uint64_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.params_hash = j.at("params_hash").get<std::string>();
  r.sample.density = j.at("density").get<double>();
  r.sample.energy = j.at("energy").get<double>();
  r.sample.diag_energy = j.at("diag_energy").get<double>();
  r.sample.kinks = j.at("kinks").get<double>();
  const json& orders = j.at("orders");
  for (std::size_t o = 0; o < kNumOrders; ++o) {
    const json& m = orders.at(kOrderNames[o]);
    r.sample.orders[o] = {m.at("abs").get<double>(), m.at("m2").get<double>(), m.at("m4").get<double>()};
  }
  return r;
}

// Reads a JSON-lines sample stream; blank lines are skipped.
inline std::vector<SampleRecord> read_samples(std::istream& in) {
  std::vector<SampleRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_sample(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed sample record: ") + e.what(), n);
    }
  }
  return out;
}

inline std::vector<SampleRecord> read_samples_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  try {
    return read_samples(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

// ---------------------------------------------------------------------------
// Checkpoints

inline json configuration_json(const Configuration& c) {
  json spin0 = json::array();
  json kinks = json::array();
  for (const auto& l : c.lines()) {
    spin0.push_back(l.spin0 ? 1 : 0);
    kinks.push_back(l.kinks);
  }
  return {{"lx", c.spec().lx()},   {"ly", c.spec().ly()}, {"boundary", to_string(c.spec().boundary())},
          {"beta", c.beta()},      {"spin0", spin0},      {"kinks", kinks}};
}

inline Configuration parse_configuration(const json& j) {
  LatticeSpec spec(j.at("lx").get<int>(), j.at("ly").get<int>(), boundary_from_string(j.at("boundary").get<std::string>()));
  Configuration c(spec, j.at("beta").get<double>());
  const json& spin0 = j.at("spin0");
  const json& kinks = j.at("kinks");
  if (spin0.size() != c.size() || kinks.size() != c.size())
    throw ValidationError("checkpoint configuration has the wrong number of sites");
  for (std::size_t i = 0; i < c.size(); ++i) {
    c.line(i).spin0 = spin0[i].get<int>() != 0;
    c.line(i).kinks = kinks[i].get<std::vector<double>>();
  }
  c.validate();
  return c;
}

struct Checkpoint {
  int version = kCheckpointVersion;
  RunConfig config;
  std::string label;
  std::string params_hash;
  std::uint64_t seed = 0;
  std::uint64_t position = 0;
  std::uint64_t total_sweeps = 0;
  std::uint64_t samples_written = 0;
  double action = 0.0;
  std::string rng_state;
  std::optional<Configuration> configuration;

  bool complete() const { return position >= total_sweeps; }
};

inline json checkpoint_json(const Checkpoint& c) {
  return {{"format", kCheckpointFormat},
          {"version", c.version},
          {"config", to_json(c.config)},
          {"label", c.label},
          {"params_hash", c.params_hash},
          {"seed", c.seed},
          {"position", c.position},
          {"total_sweeps", c.total_sweeps},
          {"samples_written", c.samples_written},
          {"action", c.action},
          {"rng_state", c.rng_state},
          {"configuration", configuration_json(*c.configuration)}};
}

inline Checkpoint parse_checkpoint(const json& j) {
  if (!j.is_object() || j.value("format", std::string()) != kCheckpointFormat)
    throw VersionError("not a checkpoint file");
  const auto v = j.find("version");
  if (v == j.end() || !v->is_number_integer()) throw VersionError("checkpoint carries no version");
  if (v->get<int>() != kCheckpointVersion)
    throw VersionError("checkpoint version " + std::to_string(v->get<int>()) + " is not supported (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  Checkpoint c;
  try {
    c.config = parse_config(j.at("config"));
    c.label = j.at("label").get<std::string>();
    c.params_hash = j.at("params_hash").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.position = j.at("position").get<std::uint64_t>();
    c.total_sweeps = j.at("total_sweeps").get<std::uint64_t>();
    c.samples_written = j.at("samples_written").get<std::uint64_t>();
    c.action = j.at("action").get<double>();
    c.rng_state = j.at("rng_state").get<std::string>();
    c.configuration = parse_configuration(j.at("configuration"));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("corrupt checkpoint: ") + e.what());
  }
  return c;
}

inline void save_checkpoint(const fs::path& path, const Checkpoint& c) {
  write_file_atomic(path, checkpoint_json(c).dump() + "\n");
}

inline Checkpoint load_checkpoint(const fs::path& path) {
  return parse_checkpoint(parse_json_text(read_file(path)));
}

// ---------------------------------------------------------------------------
// Summaries

struct PointMeta {
  std::string label;
  int lx = 0;
  int ly = 0;
  std::string boundary;
  double blockade_radius = 0.0;
  double detuning = 0.0;
  double cutoff = 0.0;
  double temperature = 0.0;
};

inline PointMeta point_meta(const Point& p) {
  return {p.label,          p.spec.lx(),       p.spec.ly(), to_string(p.spec.boundary()),
          p.params.blockade_radius, p.params.detuning, p.params.cutoff, p.params.temperature};
}

inline json to_json(const PointMeta& m) {
  return {{"label", m.label},         {"lx", m.lx},           {"ly", m.ly},
          {"boundary", m.boundary},   {"blockade_radius", m.blockade_radius},
          {"detuning", m.detuning},   {"cutoff", m.cutoff},   {"temperature", m.temperature}};
}

inline PointMeta parse_point_meta(const json& j) {
  try {
    return {j.at("label").get<std::string>(),     j.at("lx").get<int>(),
            j.at("ly").get<int>(),                j.at("boundary").get<std::string>(),
            j.at("blockade_radius").get<double>(), j.at("detuning").get<double>(),
            j.at("cutoff").get<double>(),          j.at("temperature").get<double>()};
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed point metadata: ") + e.what());
  }
}

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct PointSummary {
  PointMeta meta;
  std::size_t seeds = 0;
  std::size_t samples = 0;
  Estimate density{kNaN, kNaN};
  double density_tau = kNaN;
  Estimate energy{kNaN, kNaN};
  std::array<Estimate, kNumOrders> order{};
  std::array<Estimate, kNumOrders> binder{};
  std::optional<Histogram> density_histogram;
  double dip_score = kNaN;
  bool bimodal = false;
};

// Binned statistics, or nothing when the series is too short for binning.
inline std::optional<BinnedError> try_binned(const std::vector<double>& xs) {
  try {
    return binned_error(xs);
  } catch (const InsufficientDataError&) {
    return std::nullopt;
  }
}

inline PointSummary summarize(const PointMeta& meta, const ObservableSeries& pooled, std::size_t seeds,
                              const AnalysisConfig& analysis, std::size_t bins) {
  PointSummary s;
  s.meta = meta;
  s.seeds = seeds;
  s.samples = pooled.size();
  for (std::size_t o = 0; o < kNumOrders; ++o) s.order[o] = s.binder[o] = {kNaN, kNaN};
  if (pooled.empty()) return s;
  const auto dens = pooled.densities();
  if (const auto bd = try_binned(dens)) {
    s.density = {bd->mean, bd->error};
    s.density_tau = bd->tau_int;
  }
  if (const auto be = try_binned(pooled.column([](const Sample& x) { return x.energy; })))
    s.energy = {be->mean, be->error};
  for (std::size_t o = 0; o < kNumOrders; ++o) {
    const auto ord = static_cast<Order>(o);
    if (const auto bo = try_binned(pooled.order_abs(ord))) s.order[o] = {bo->mean, bo->error};
    if (analysis.binder) {
      try {
        s.binder[o] = binder_from_moments(pooled.order_m2(ord), pooled.order_m4(ord));
      } catch (const DomainError&) {
      } catch (const InsufficientDataError&) {
      }
    }
  }
  if (analysis.histograms) {
    s.density_histogram = histogram(dens, bins);
    BimodalityOptions bo;
    bo.dip_threshold = analysis.dip_threshold;
    const auto bm = bimodality(*s.density_histogram, bo);
    s.dip_score = bm.dip_score;
    s.bimodal = bm.is_bimodal;
  }
  return s;
}

inline void write_summary_csv(std::ostream& os, const std::vector<PointSummary>& rows) {
  os << "label,lx,ly,boundary,blockade_radius,detuning,cutoff,temperature,seeds,samples,density,density_err,"
        "density_tau,energy,energy_err";
  for (const char* name : kOrderNames) os << ",F_" << name << ",F_" << name << "_err";
  for (const char* name : kOrderNames) os << ",U4_" << name << ",U4_" << name << "_err";
  os << ",dip_score,bimodal\n";
  for (const auto& r : rows) {
    const auto& m = r.meta;
    os << m.label << ',' << m.lx << ',' << m.ly << ',' << m.boundary << ',' << format_number(m.blockade_radius)
       << ',' << format_number(m.detuning) << ',' << format_number(m.cutoff) << ','
       << format_number(m.temperature) << ',' << r.seeds << ',' << r.samples << ','
       << format_number(r.density.value) << ',' << format_number(r.density.error) << ','
       << format_number(r.density_tau) << ',' << format_number(r.energy.value) << ','
       << format_number(r.energy.error);
    for (const auto& e : r.order) os << ',' << format_number(e.value) << ',' << format_number(e.error);
    for (const auto& e : r.binder) os << ',' << format_number(e.value) << ',' << format_number(e.error);
    os << ',' << format_number(r.dip_score) << ',' << (r.bimodal ? 1 : 0) << '\n';
  }
}

// Per-chain summary: one row per observable.
inline void write_series_summary_csv(std::ostream& os, const ObservableSeries& series) {
  os << "observable,mean,error,tau_int,samples\n";
  auto row = [&](const std::string& name, const std::vector<double>& xs) {
    os << name << ',';
    if (const auto b = try_binned(xs)) {
      os << format_number(b->mean) << ',' << format_number(b->error) << ',' << format_number(b->tau_int);
    } else {
      os << "nan,nan,nan";
    }
    os << ',' << xs.size() << '\n';
  };
  row("density", series.densities());
  row("energy", series.column([](const Sample& s) { return s.energy; }));
  row("diag_energy", series.column([](const Sample& s) { return s.diag_energy; }));
  row("kinks", series.column([](const Sample& s) { return s.kinks; }));
  for (std::size_t o = 0; o < kNumOrders; ++o) {
    const auto ord = static_cast<Order>(o);
    row(std::string("F_") + kOrderNames[o], series.order_abs(ord));
    row(std::string("F2_") + kOrderNames[o], series.order_m2(ord));
    row(std::string("F4_") + kOrderNames[o], series.order_m4(ord));
  }
  for (std::size_t o = 0; o < kNumOrders; ++o) {
    const auto ord = static_cast<Order>(o);
    os << "U4_" << kOrderNames[o] << ',';
    try {
      const auto u = binder_from_moments(series.order_m2(ord), series.order_m4(ord));
      os << format_number(u.value) << ',' << format_number(u.error);
    } catch (const Error&) {
      os << "nan,nan";
    }
    os << ",nan," << series.size() << '\n';
  }
}

inline void write_histogram_csv(std::ostream& os, const Histogram& h) {
  os << "bin_left,bin_right,count\n";
  for (std::size_t k = 0; k < h.counts.size(); ++k)
    os << format_number(h.left(k)) << ',' << format_number(h.right(k)) << ',' << h.counts[k] << '\n';
}

// ---------------------------------------------------------------------------
// Scaling, LGW and oracle outputs

inline json to_json(const Estimate& e) { return {{"value", e.value}, {"error", e.error}}; }

inline json to_json(const scaling::FitResult& f) {
  json j = {{"kind", scaling::to_string(f.kind)},
            {"g_c", to_json(f.g_c)},
            {"nu", to_json(f.nu)},
            {"chi2", f.chi2},
            {"dof", f.dof},
            {"chi2_per_dof", f.chi2_per_dof()},
            {"l_min", f.l_min}};
  if (f.beta) j["beta"] = to_json(*f.beta);
  json coeffs = json::array();
  for (const auto& c : f.coefficients) coeffs.push_back(to_json(c));
  j["coefficients"] = coeffs;
  if (f.bootstrap) {
    json b = {{"samples", f.bootstrap->samples}, {"g_c", to_json(f.bootstrap->g_c)}, {"nu", to_json(f.bootstrap->nu)}};
    if (f.bootstrap->beta) b["beta"] = to_json(*f.bootstrap->beta);
    j["bootstrap"] = b;
  }
  return j;
}

inline void write_dataset_csv(std::ostream& os, const scaling::Dataset& d) {
  os << "L,g,y,y_err\n";
  for (const auto& r : d.rows)
    os << r.L << ',' << format_number(r.g) << ',' << format_number(r.y) << ',' << format_number(r.y_err) << '\n';
}

inline void write_phase_map_csv(std::ostream& os, const lgw::PhaseMap& map) {
  std::vector<lgw::TransitionOrder> flags(map.cells.size(), lgw::TransitionOrder::None);
  for (const auto& e : map.edges) {
    flags[e.a] = std::max(flags[e.a], e.order);
    flags[e.b] = std::max(flags[e.b], e.order);
  }
  os << "r,s,phase_label,psi1,psi2,phi,V,order_flag\n";
  for (std::size_t k = 0; k < map.cells.size(); ++k) {
    const auto& c = map.cells[k];
    const auto& m = c.minimum;
    os << format_number(c.r) << ',' << format_number(c.s) << ',' << to_string(m.phase) << ','
       << format_number(m.field.psi1) << ',' << format_number(m.field.psi2) << ',' << format_number(m.field.phi) << ','
       << format_number(m.value) << ',' << to_string(flags[k]) << '\n';
  }
}

inline json to_json(const lgw::Couplings& c) {
  return {{"g", c.g}, {"u1", c.u1}, {"u2", c.u2}, {"v", c.v}, {"w", c.w}};
}

inline json tricritical_json(const lgw::Couplings& c, const lgw::Tricritical& t) {
  return {{"couplings", to_json(c)},
          {"T1", {{"r", t.t1.r}, {"s", t.t1.s}}},
          {"T2", {{"r", t.t2.r}, {"s", t.t2.s}, {"residual", t.t2_residual}}}};
}

struct OracleRow {
  int lx = 3;
  int ly = 3;
  Boundary boundary = Boundary::Open;
  double blockade_radius = 1.2;
  double cutoff = 4.0;
  double detuning = 0.0;
  double beta = 5.0;
  ThermalExpectations values;
};

inline OracleRow oracle_row(const LatticeSpec& spec, double blockade_radius, double cutoff, double detuning,
                            double beta, bool allow_half_box = false) {
  const auto table = build_interactions(spec, blockade_radius, cutoff, {allow_half_box, false});
  const auto h = build_hamiltonian(spec, table, detuning);
  return {spec.lx(), spec.ly(), spec.boundary(), blockade_radius, cutoff, detuning, beta,
          thermal_expectations(h, beta, spec)};
}

inline void write_oracle_csv(std::ostream& os, const std::vector<OracleRow>& rows) {
  os << "lx,ly,boundary,blockade_radius,cutoff,detuning,beta,density,energy,checkerboard_abs,checkerboard_m2,"
        "checkerboard_m4,checkerboard_binder,striated_m2,star_m2,boundary_m2\n";
  for (const auto& r : rows) {
    const auto& v = r.values;
    const auto& cb = v.order(Order::Checkerboard);
    os << r.lx << ',' << r.ly << ',' << to_string(r.boundary) << ',' << format_number(r.blockade_radius) << ','
       << format_number(r.cutoff) << ',' << format_number(r.detuning) << ',' << format_number(r.beta) << ','
       << format_number(v.density) << ',' << format_number(v.energy) << ',' << format_number(cb.abs) << ','
       << format_number(cb.m2) << ',' << format_number(cb.m4) << ',' << format_number(cb.binder) << ','
       << format_number(v.order(Order::Striated).m2) << ',' << format_number(v.order(Order::Star).m2) << ','
       << format_number(v.order(Order::Boundary).m2) << '\n';
  }
}

}  // namespace rydberg::io
