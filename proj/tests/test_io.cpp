#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "rydberg/runner.hpp"

using namespace rydberg;
using namespace rydberg::io;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rydberg_io_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
  return out;
}

// Column index by header name.
std::size_t column(const std::string& header, const std::string& name) {
  const auto h = split(header);
  for (std::size_t k = 0; k < h.size(); ++k)
    if (h[k] == name) return k;
  ADD_FAILURE() << "no column " << name;
  return 0;
}

// Four uncoupled sites: R0 below the lattice spacing.
RunConfig free_sites(double detuning, double temperature) {
  RunConfig c;
  c.lattice = {2, 2, Boundary::Open};
  c.physics.cutoff = 0.5;
  c.physics.detuning = detuning;
  c.physics.temperature = temperature;
  c.engine.thermalization_sweeps = 100;
  c.engine.measurement_sweeps = 2000;
  return c;
}

// Small interacting lattice for persistence tests.
RunConfig small_lattice() {
  RunConfig c;
  c.lattice = {3, 3, Boundary::Open};
  c.physics.blockade_radius = 1.2;
  c.physics.detuning = 1.0;
  c.physics.temperature = 0.25;
  c.engine.thermalization_sweeps = 60;
  c.engine.measurement_sweeps = 150;
  c.engine.measure_every = 2;
  return c;
}

RunConfig full_config() {
  RunConfig c;
  c.lattice = {12, 10, Boundary::Periodic};
  c.physics = {1.45, 2.25, 2.0, std::nullopt, 1.0, true};
  c.engine.thermalization_sweeps = 11;
  c.engine.measurement_sweeps = 22;
  c.engine.measure_every = 3;
  c.engine.seeds = {7, 3, 99};
  c.engine.initial_state = InitialState::FromSeedPhase;
  c.engine.time_slices = 5;
  c.engine.checkpoint_every = 4;
  c.engine.schedule.stages = {{{1.3, std::nullopt, std::nullopt}, 6}, {{std::nullopt, 2.0, std::nullopt}, 2}};
  c.engine.seed_phase = SeedPhaseConfig{1.2, 3.5, 9};
  c.sweep.L = std::vector<int>{8, 12};
  c.sweep.detuning = std::vector<double>{0.1, 1.0 / 3.0};
  c.outputs = {"somewhere/else", 17};
  c.analysis = {false, true, 0.3};
  return c;
}

ExecOptions at(const fs::path& out, std::size_t workers = 1) {
  ExecOptions o;
  o.out = out;
  o.workers = workers;
  return o;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

TEST(Config, RoundTripIsIdentity) {
  const RunConfig c = full_config();
  const std::string text = serialize_config(c);
  const RunConfig back = parse_config_text(text);
  EXPECT_EQ(back, c);
  EXPECT_EQ(serialize_config(back), text);
}

TEST(Config, RoundTripOfDefaults) {
  const RunConfig c = parse_config_text("{}");
  EXPECT_EQ(c, RunConfig{});
  EXPECT_EQ(parse_config_text(serialize_config(c)), c);
}

TEST(Config, PartialSectionsKeepDefaults) {
  const auto c = parse_config_text(R"({"lattice": {"lx": 5}, "physics": {"temperature": 0.5}})");
  EXPECT_EQ(c.lattice.lx, 5);
  EXPECT_EQ(c.lattice.ly, 8);
  EXPECT_EQ(c.physics.temperature, 0.5);
  EXPECT_EQ(c.engine.seeds, std::vector<std::uint64_t>{1});
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_THROW(parse_config_text(R"({"latice": {}})"), ConfigError);
  try {
    parse_config_text(R"({"physics": {"temperature": 0.5, "detunning": 1}})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("physics.detunning"), std::string::npos);
  }
  EXPECT_THROW(parse_config_text(R"({"engine": {"schedule": [{"sweeps": 3, "rb": 1}]}})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"engine": {"seed_phase": {"sweeps": 3, "x": 1}}})"), ConfigError);
}

TEST(Config, TypeErrorsRejected) {
  EXPECT_THROW(parse_config_text(R"({"lattice": {"lx": "8"}})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"lattice": {"lx": 8.5}})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"engine": {"seeds": [1, -2]}})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"engine": {"seeds": 3}})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"analysis": {"binder": 1}})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"lattice": {"boundary": "twisted"}})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"engine": {"initial_state": "hot"}})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"engine": {"schedule": [{"detuning": 1}]}})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"([1, 2])"), ConfigError);
}

TEST(Config, SyntaxErrorReportsLine) {
  try {
    parse_config_text("{\n  \"lattice\": {\"lx\": 4},\n  \"physics\": {\"temperature\": 0.5,}\n}\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Config, LoadFromFile) {
  const auto dir = scratch("load");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "c.json") << serialize_config(full_config());
  }
  EXPECT_EQ(load_config(dir / "c.json"), full_config());
  EXPECT_THROW(load_config(dir / "missing.json"), ConfigError);
}

TEST(Validate, AcceptsWellFormedConfigs) {
  EXPECT_NO_THROW(validate(free_sites(0.0, 1.0)));
  EXPECT_NO_THROW(validate(small_lattice()));
}

TEST(Validate, TemperatureRule) {
  auto c = small_lattice();
  c.physics.temperature_constant = 1.0;
  EXPECT_THROW(validate(c), ConfigError);
  c.physics.temperature.reset();
  EXPECT_NO_THROW(validate(c));
  c.physics.temperature_constant.reset();
  EXPECT_THROW(validate(c), ConfigError);
  c.sweep.temperature = std::vector<double>{0.5, 0.25};
  EXPECT_NO_THROW(validate(c));
  c.physics.temperature = 0.5;
  EXPECT_THROW(validate(c), ConfigError);
  c.physics.temperature.reset();
  c.sweep.temperature = std::vector<double>{0.5, -1.0};
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(Validate, RejectsModulePreconditionViolations) {
  auto base = small_lattice();
  auto c = base;
  c.lattice.boundary = Boundary::Periodic;  // 3 <= 2 R0
  EXPECT_THROW(validate(c), ConfigError);
  c = base;
  c.lattice.lx = 1;
  EXPECT_THROW(validate(c), ConfigError);
  c = base;
  c.physics.blockade_radius = 0.0;
  EXPECT_THROW(validate(c), ConfigError);
  c = base;
  c.engine.measure_every = 0;
  EXPECT_THROW(validate(c), ConfigError);
  c = base;
  c.engine.time_slices = 0;
  EXPECT_THROW(validate(c), ConfigError);
  c = base;
  c.engine.seeds = {};
  EXPECT_THROW(validate(c), ConfigError);
  c = base;
  c.engine.seeds = {4, 4};
  EXPECT_THROW(validate(c), ConfigError);
  c = base;
  c.engine.initial_state = InitialState::FromCheckpoint;
  EXPECT_THROW(validate(c), ConfigError);
  c = base;
  c.engine.initial_state = InitialState::FromSeedPhase;
  EXPECT_THROW(validate(c), ConfigError);
  c = base;
  c.engine.seed_phase = SeedPhaseConfig{1.2, 3.0, 10};
  EXPECT_THROW(validate(c), ConfigError);
  c = base;
  c.engine.schedule.stages = {{{std::nullopt, 2.0, std::nullopt}, 0}};
  EXPECT_THROW(validate(c), ConfigError);
  c = base;
  c.analysis.dip_threshold = 1.5;
  EXPECT_THROW(validate(c), ConfigError);
  c = base;
  c.outputs.histogram_bins = 0;
  EXPECT_THROW(validate(c), ConfigError);
  c = base;
  c.sweep.L = std::vector<int>{4, 1};
  EXPECT_THROW(validate(c), ConfigError);
  c = base;
  c.sweep.detuning = std::vector<double>{1.0, 1.0};
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(Validate, EmptyGridIsAnError) {
  auto c = small_lattice();
  c.sweep.detuning = std::vector<double>{};
  EXPECT_THROW(validate(c), ConfigError);
  EXPECT_THROW(execute(c, at(scratch("empty_grid"))), ConfigError);
}

TEST(Points, CartesianProductInAxisOrder) {
  auto c = small_lattice();
  c.lattice.boundary = Boundary::Periodic;
  c.physics.cutoff = 1.5;
  c.physics.temperature.reset();
  c.physics.temperature_constant = 1.0;
  c.sweep.L = std::vector<int>{4, 6};
  c.sweep.detuning = std::vector<double>{0.5, 1.0, 1.5};
  const auto pts = expand_points(c);
  ASSERT_EQ(pts.size(), 6u);
  std::set<std::string> labels;
  for (const auto& p : pts) labels.insert(p.label);
  EXPECT_EQ(labels.size(), 6u);
  EXPECT_EQ(pts[0].spec.lx(), 4);
  EXPECT_EQ(pts[0].spec.ly(), 4);
  EXPECT_DOUBLE_EQ(pts[0].params.temperature, 0.25);
  EXPECT_DOUBLE_EQ(pts[2].params.detuning, 1.5);
  EXPECT_EQ(pts[3].spec.lx(), 6);
  EXPECT_DOUBLE_EQ(pts[3].params.temperature, 1.0 / 6.0);
  EXPECT_EQ(pts[0].label, "L4x4_PBC_rb1.2_d0.5_T0.25");
}

TEST(Points, SeedPhasePrependsStage) {
  const auto c = full_config();
  const auto pts = expand_points(c);
  ASSERT_EQ(pts.size(), 4u);
  ASSERT_EQ(pts[0].schedule.stages.size(), 3u);
  EXPECT_EQ(pts[0].schedule.stages[0].sweeps, 9u);
  EXPECT_EQ(*pts[0].schedule.stages[0].params.blockade_radius, 1.2);
  EXPECT_EQ(*pts[0].schedule.stages[0].params.detuning, 3.5);
}

TEST(Points, ParamsHashTracksParameters) {
  auto c = small_lattice();
  const auto a = expand_points(c).front();
  EXPECT_EQ(params_hash(a), params_hash(expand_points(c).front()));
  EXPECT_EQ(params_hash(a).size(), 16u);
  c.engine.seeds = {5, 6};
  EXPECT_EQ(params_hash(a), params_hash(expand_points(c).front()));
  c.physics.detuning = 1.0000001;
  EXPECT_NE(params_hash(a), params_hash(expand_points(c).front()));
  c = small_lattice();
  c.engine.measurement_sweeps += 1;
  EXPECT_NE(params_hash(a), params_hash(expand_points(c).front()));
}

TEST(Hash, Fnv1aReferenceValues) {
  EXPECT_EQ(fnv1a(""), 14695981039346656037ull);
  EXPECT_EQ(hex64(fnv1a("a")), "af63dc4c8601ec8c");
  EXPECT_EQ(hex64(fnv1a("foobar")), "85944171f73967e8");
}

TEST(Format, NumbersRoundTrip) {
  for (double x : {0.0, 1.0, -2.5, 0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, std::nextafter(1.0, 2.0)})
    EXPECT_EQ(std::strtod(format_number(x).c_str(), nullptr), x);
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(std::nan("")), "nan");
}

// ---------------------------------------------------------------------------
// Samples

TEST(Samples, JsonRoundTripIsExact) {
  Sample s;
  s.sweep = 123;
  s.density = 1.0 / 3.0;
  s.energy = -0.1234567890123;
  s.diag_energy = 2.0 / 7.0;
  s.kinks = 41;
  for (std::size_t o = 0; o < kNumOrders; ++o) s.orders[o] = {0.1 * o + 1e-17, 1.0 / (o + 3), std::sqrt(o + 0.5)};
  const auto j = sample_json(s, 9, "00ff00ff00ff00ff");
  EXPECT_EQ(j.at("sweep_index"), 123);
  EXPECT_EQ(j.at("seed"), 9);
  EXPECT_EQ(j.at("params_hash"), "00ff00ff00ff00ff");
  const auto r = parse_sample(json::parse(j.dump()));
  EXPECT_EQ(r.seed, 9u);
  EXPECT_EQ(r.sample.sweep, 123u);
  EXPECT_EQ(r.sample.density, s.density);
  EXPECT_EQ(r.sample.energy, s.energy);
  EXPECT_EQ(r.sample.diag_energy, s.diag_energy);
  EXPECT_EQ(r.sample.kinks, s.kinks);
  for (std::size_t o = 0; o < kNumOrders; ++o) {
    EXPECT_EQ(r.sample.orders[o].abs, s.orders[o].abs);
    EXPECT_EQ(r.sample.orders[o].m2, s.orders[o].m2);
    EXPECT_EQ(r.sample.orders[o].m4, s.orders[o].m4);
  }
}

TEST(Samples, ReaderSkipsBlankLines) {
  Sample s;
  std::stringstream ss;
  ss << sample_json(s, 1, "h").dump() << "\n\n" << sample_json(s, 2, "h").dump() << "\n";
  const auto recs = read_samples(ss);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[1].seed, 2u);
}

TEST(Samples, MalformedLineReportsLineNumber) {
  Sample s;
  const std::string good = sample_json(s, 1, "h").dump();
  {
    std::stringstream ss(good + "\n" + good + "\n{\"seed\": 1,\n");
    try {
      read_samples(ss);
      FAIL();
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), 3u);
    }
  }
  {
    auto j = sample_json(s, 1, "h");
    j.erase("density");
    std::stringstream ss(good + "\n" + j.dump() + "\n");
    try {
      read_samples(ss);
      FAIL();
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), 2u);
    }
  }
}

// ---------------------------------------------------------------------------
// Checkpoints

TEST(Checkpoint, RoundTrip) {
  LatticeSpec spec(3, 2, Boundary::Open);
  Configuration conf(spec, 4.0);
  conf.line(0).spin0 = true;
  conf.line(1).kinks = {0.25, 1.0 / 3.0};
  conf.line(4).kinks = {1.5, 3.9999999};
  Checkpoint c;
  c.config = full_config();
  c.label = "x";
  c.params_hash = "abc";
  c.seed = 5;
  c.position = 77;
  c.total_sweeps = 100;
  c.samples_written = 12;
  c.action = -1.0 / 7.0;
  Rng rng(3);
  rng.uniform();
  c.rng_state = rng.state();
  c.configuration = conf;
  const auto back = parse_checkpoint(json::parse(checkpoint_json(c).dump()));
  EXPECT_EQ(back.config, c.config);
  EXPECT_EQ(back.label, "x");
  EXPECT_EQ(back.seed, 5u);
  EXPECT_EQ(back.position, 77u);
  EXPECT_EQ(back.samples_written, 12u);
  EXPECT_EQ(back.action, c.action);
  EXPECT_EQ(back.rng_state, c.rng_state);
  EXPECT_TRUE(*back.configuration == conf);
  EXPECT_FALSE(back.complete());
}

TEST(Checkpoint, VersionMismatchFailsLoudly) {
  LatticeSpec spec(2, 2, Boundary::Open);
  Checkpoint c;
  c.configuration = Configuration(spec, 1.0);
  auto j = checkpoint_json(c);
  EXPECT_EQ(j.at("version"), kCheckpointVersion);
  j["version"] = kCheckpointVersion + 1;
  EXPECT_THROW(parse_checkpoint(j), VersionError);
  j.erase("version");
  EXPECT_THROW(parse_checkpoint(j), VersionError);
  EXPECT_THROW(parse_checkpoint(json{{"version", 1}}), VersionError);
}

TEST(Checkpoint, CorruptConfigurationRejected) {
  LatticeSpec spec(2, 2, Boundary::Open);
  Checkpoint c;
  c.configuration = Configuration(spec, 1.0);
  auto j = checkpoint_json(c);
  j["configuration"]["kinks"][0] = {0.5, 0.2};  // unsorted
  EXPECT_THROW(parse_checkpoint(j), Error);
  j = checkpoint_json(c);
  j["configuration"]["spin0"] = {1, 0};
  EXPECT_THROW(parse_checkpoint(j), ValidationError);
  j = checkpoint_json(c);
  j.erase("rng_state");
  EXPECT_THROW(parse_checkpoint(j), ValidationError);
}

// ---------------------------------------------------------------------------
// Runs

TEST(Run, SingleSiteHalfFilledAtZeroDetuning) {
  auto c = free_sites(0.0, 1.0);
  c.engine.seeds = {1, 2};
  const auto out = scratch("single_site");
  const auto rep = execute(c, at(out));
  ASSERT_TRUE(rep.ok());
  ASSERT_EQ(rep.summaries.size(), 1u);
  const auto& s = rep.summaries[0];
  EXPECT_EQ(s.seeds, 2u);
  EXPECT_EQ(s.samples, 4000u);
  EXPECT_GT(s.density.error, 0.0);
  EXPECT_NEAR(s.density.value, 0.5, 3 * s.density.error);
  EXPECT_NEAR(s.energy.value, -2.0 * std::tanh(0.5), 4 * s.energy.error);  // four sites, −tanh(β/2)/2 each
}

TEST(Run, OutputLayout) {
  auto c = free_sites(0.5, 0.5);
  c.engine.seeds = {3, 4};
  c.engine.checkpoint_every = 500;
  const auto out = scratch("layout");
  const auto rep = execute(c, at(out));
  ASSERT_TRUE(rep.ok());
  const auto label = expand_points(c).front().label;
  EXPECT_TRUE(fs::exists(out / "config.json"));
  EXPECT_EQ(load_config(out / "config.json").outputs.directory, out.string());
  EXPECT_TRUE(fs::exists(point_dir(out, label) / "point.json"));
  EXPECT_TRUE(fs::exists(point_dir(out, label) / "density_histogram.csv"));
  EXPECT_EQ(lines_of(slurp(point_dir(out, label) / "density_histogram.csv")).front(), "bin_left,bin_right,count");
  for (std::uint64_t seed : {3u, 4u}) {
    const auto dir = task_dir(out, label, seed);
    const auto recs = read_samples_file(dir / "samples.jsonl");
    ASSERT_EQ(recs.size(), 2000u);
    for (const auto& r : recs) {
      EXPECT_EQ(r.seed, seed);
      EXPECT_EQ(r.params_hash, params_hash(expand_points(c).front()));
    }
    EXPECT_EQ(recs.front().sample.sweep, 101u);
    const auto ck = load_checkpoint(dir / "checkpoint.json");
    EXPECT_TRUE(ck.complete());
    EXPECT_EQ(ck.samples_written, 2000u);
    const auto sum = lines_of(slurp(dir / "summary.csv"));
    EXPECT_EQ(sum.front(), "observable,mean,error,tau_int,samples");
    EXPECT_EQ(split(sum[1])[0], "density");
  }
  const auto summary = lines_of(slurp(out / "summary.csv"));
  ASSERT_EQ(summary.size(), 2u);
  EXPECT_EQ(split(summary[1])[column(summary[0], "label")], label);
  EXPECT_EQ(split(summary[1])[column(summary[0], "seeds")], "2");
}

TEST(Run, SummaryMatchesBinnedErrorOfSamples) {
  auto c = small_lattice();
  const auto out = scratch("summary_stats");
  const auto rep = execute(c, at(out));
  ASSERT_TRUE(rep.ok());
  const auto recs = read_samples_file(task_dir(out, rep.summaries[0].meta.label, 1) / "samples.jsonl");
  std::vector<double> dens;
  for (const auto& r : recs) dens.push_back(r.sample.density);
  const auto be = binned_error(dens);
  EXPECT_EQ(rep.summaries[0].density.value, be.mean);
  EXPECT_EQ(rep.summaries[0].density.error, be.error);
}

TEST(Run, WorkerCountDoesNotChangeResults) {
  auto c = small_lattice();
  c.engine.seeds = {1, 2, 3};
  c.sweep.detuning = std::vector<double>{0.5, 1.5};
  const auto a = scratch("workers1");
  const auto b = scratch("workers3");
  ASSERT_TRUE(execute(c, at(a, 1)).ok());
  ASSERT_TRUE(execute(c, at(b, 3)).ok());
  for (const auto& p : expand_points(c))
    for (auto s : c.engine.seeds)
      EXPECT_EQ(slurp(task_dir(a, p.label, s) / "samples.jsonl"), slurp(task_dir(b, p.label, s) / "samples.jsonl"));
  EXPECT_EQ(slurp(a / "summary.csv"), slurp(b / "summary.csv"));
}

TEST(Run, SeedsOverride) {
  auto c = free_sites(0.0, 1.0);
  c.engine.measurement_sweeps = 50;
  const auto out = scratch("seeds_override");
  ExecOptions opts = at(out);
  opts.seeds = 3;
  const auto rep = execute(c, opts);
  EXPECT_EQ(rep.tasks, 3u);
  EXPECT_EQ(load_config(out / "config.json").engine.seeds, (std::vector<std::uint64_t>{1, 2, 3}));
  opts.seeds = 0;
  EXPECT_THROW(execute(c, opts), ConfigError);
}

TEST(Sweep, GridOfThreeDetuningsTimesTwoSeeds) {
  auto c = small_lattice();
  c.engine.seeds = {1, 2};
  c.sweep.detuning = std::vector<double>{0.5, 1.0, 2.0};
  const auto out = scratch("grid3x2");
  const auto rep = execute(c, at(out, 2));
  ASSERT_TRUE(rep.ok());
  std::size_t dirs = 0;
  for (const auto& e : fs::recursive_directory_iterator(out / "points"))
    if (e.is_directory() && e.path().filename().string().rfind("seed_", 0) == 0) ++dirs;
  EXPECT_EQ(dirs, 6u);
  const auto summary = lines_of(slurp(out / "summary.csv"));
  EXPECT_EQ(summary.size(), 4u);
  EXPECT_EQ(rep.summaries.size(), 3u);
}

TEST(Sweep, TwoDimensionalGridIsComplete) {
  auto c = small_lattice();
  c.engine.measurement_sweeps = 20;
  c.sweep.blockade_radius = std::vector<double>{1.1, 1.3};
  c.sweep.detuning = std::vector<double>{0.5, 1.0, 2.0};
  const auto out = scratch("grid2d");
  const auto rep = execute(c, at(out));
  ASSERT_TRUE(rep.ok()) << rep.failures.front();
  const auto summary = lines_of(slurp(out / "summary.csv"));
  ASSERT_EQ(summary.size(), 7u);
  const auto rb = column(summary[0], "blockade_radius");
  const auto d = column(summary[0], "detuning");
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t k = 1; k < summary.size(); ++k) {
    const auto f = split(summary[k]);
    seen.insert({f[rb], f[d]});
  }
  for (auto r : {"1.1", "1.3"})
    for (auto x : {"0.5", "1", "2"}) EXPECT_TRUE(seen.count({r, x})) << r << " " << x;
}

TEST(Sweep, FailuresAreIsolatedPerTask) {
  auto c = small_lattice();
  c.engine.seeds = {1, 2};
  c.sweep.detuning = std::vector<double>{0.5, 1.0};
  const auto out = scratch("isolation");
  const auto pts = expand_points(c);
  // A regular file where one task's directory should go.
  fs::create_directories(point_dir(out, pts[1].label));
  std::ofstream(task_dir(out, pts[1].label, 2)) << "blocker";
  const auto rep = execute(c, at(out, 2));
  EXPECT_FALSE(rep.ok());
  ASSERT_EQ(rep.failures.size(), 1u);
  EXPECT_NE(rep.failures[0].find(pts[1].label), std::string::npos);
  ASSERT_EQ(rep.summaries.size(), 2u);
  EXPECT_EQ(rep.summaries[0].seeds, 2u);
  EXPECT_EQ(rep.summaries[1].seeds, 1u);
  EXPECT_EQ(lines_of(slurp(out / "summary.csv")).size(), 3u);
}

TEST(Run, UnwritableOutputIsPreLaunchError) {
  const auto base = scratch("unwritable");
  fs::create_directories(base);
  std::ofstream(base / "file") << "x";
  EXPECT_THROW(execute(free_sites(0.0, 1.0), at(base / "file" / "out")), ConfigError);
}

TEST(Run, InvalidConfigIsPreLaunchError) {
  auto c = small_lattice();
  c.lattice.boundary = Boundary::Periodic;
  const auto out = scratch("invalid");
  EXPECT_THROW(execute(c, at(out)), ConfigError);
  EXPECT_FALSE(fs::exists(out));
}

// ---------------------------------------------------------------------------
// Resume

namespace {

RunConfig resume_config() {
  auto c = small_lattice();
  c.engine.checkpoint_every = 40;
  c.engine.seeds = {5, 6};
  c.engine.schedule.stages = {{{1.1, 0.4, std::nullopt}, 30}};
  return c;
}

}  // namespace

TEST(Resume, ReproducesUninterruptedRunBitExactly) {
  const auto c = resume_config();
  const auto ref = scratch("resume_ref");
  const auto cut = scratch("resume_cut");
  ASSERT_TRUE(execute(c, at(ref)).ok());
  for (std::uint64_t stop : {1u, 29u, 30u, 31u, 95u, 150u}) {
    fs::remove_all(cut);
    ExecOptions first = at(cut);
    first.control.stop_after = stop;
    const auto part = execute(c, first);
    EXPECT_EQ(part.interrupted, 2u);
    EXPECT_TRUE(part.summaries.empty());
    const auto rep = resume(cut);
    ASSERT_TRUE(rep.ok()) << stop;
    for (const auto& p : expand_points(c))
      for (auto s : c.engine.seeds) {
        EXPECT_EQ(slurp(task_dir(ref, p.label, s) / "samples.jsonl"), slurp(task_dir(cut, p.label, s) / "samples.jsonl"))
            << "stop " << stop;
        auto a = json::parse(slurp(task_dir(ref, p.label, s) / "checkpoint.json"));
        auto b = json::parse(slurp(task_dir(cut, p.label, s) / "checkpoint.json"));
        a["config"]["outputs"].erase("directory");
        b["config"]["outputs"].erase("directory");
        EXPECT_EQ(a, b);
      }
    EXPECT_EQ(slurp(ref / "summary.csv"), slurp(cut / "summary.csv"));
  }
}

TEST(Resume, DiscardsSamplesWrittenAfterTheCheckpoint) {
  const auto c = resume_config();
  const auto ref = scratch("resume_trunc_ref");
  const auto cut = scratch("resume_trunc_cut");
  ASSERT_TRUE(execute(c, at(ref)).ok());
  ExecOptions first = at(cut);
  first.control.stop_after = 120;
  execute(c, first);
  const auto label = expand_points(c).front().label;
  const auto dir = task_dir(cut, label, 5);
  {
    std::ofstream(dir / "samples.jsonl", std::ios::app) << "{\"partial\": tr";
  }
  const auto rep = resume(dir / "checkpoint.json");
  ASSERT_TRUE(rep.ok());
  EXPECT_EQ(slurp(task_dir(ref, label, 5) / "samples.jsonl"), slurp(dir / "samples.jsonl"));
}

TEST(Resume, FromPeriodicCheckpointOnly) {
  // Simulates a crash: roll the directory back to a periodic checkpoint.
  const auto c = resume_config();
  const auto ref = scratch("resume_periodic_ref");
  const auto cut = scratch("resume_periodic_cut");
  ASSERT_TRUE(execute(c, at(ref)).ok());
  ExecOptions first = at(cut);
  first.control.stop_after = 80;
  execute(c, first);
  const auto label = expand_points(c).front().label;
  const auto ck = load_checkpoint(task_dir(cut, label, 6) / "checkpoint.json");
  EXPECT_EQ(ck.position, 80u);
  const auto rep = resume(cut);
  ASSERT_TRUE(rep.ok());
  EXPECT_EQ(slurp(task_dir(ref, label, 6) / "samples.jsonl"), slurp(task_dir(cut, label, 6) / "samples.jsonl"));
}

TEST(Resume, CompletedRunIsUnchanged) {
  const auto c = resume_config();
  const auto out = scratch("resume_done");
  ASSERT_TRUE(execute(c, at(out)).ok());
  const auto before = slurp(out / "summary.csv");
  const auto rep = resume(out);
  ASSERT_TRUE(rep.ok());
  EXPECT_EQ(slurp(out / "summary.csv"), before);
}

TEST(Resume, MismatchedCheckpointVersionFails) {
  const auto c = resume_config();
  const auto out = scratch("resume_version");
  ExecOptions first = at(out);
  first.control.stop_after = 50;
  execute(c, first);
  const auto label = expand_points(c).front().label;
  const auto path = task_dir(out, label, 5) / "checkpoint.json";
  auto j = json::parse(slurp(path));
  j["version"] = 99;
  std::ofstream(path) << j.dump();
  EXPECT_THROW(load_checkpoint(path), VersionError);
  EXPECT_THROW(resume(path), VersionError);
  const auto rep = resume(out);
  EXPECT_EQ(rep.failures.size(), 1u);
}

TEST(Resume, MissingRunIsAnError) {
  const auto out = scratch("resume_missing");
  fs::create_directories(out);
  EXPECT_THROW(resume(out), ConfigError);
}

// ---------------------------------------------------------------------------
// Analyze

TEST(Analyze, EmptyDirectoryIsAnError) {
  const auto dir = scratch("analyze_empty");
  fs::create_directories(dir);
  EXPECT_THROW(analyze_directory(dir), InsufficientDataError);
  EXPECT_THROW(analyze_directory(dir / "nope"), ConfigError);
}

TEST(Analyze, ReproducesRunSummary) {
  auto c = small_lattice();
  c.engine.seeds = {1, 2};
  c.sweep.detuning = std::vector<double>{0.5, 2.0};
  const auto out = scratch("analyze_run");
  const auto rep = execute(c, at(out));
  ASSERT_TRUE(rep.ok());
  AnalyzeOptions opts;
  opts.bins = c.outputs.histogram_bins;
  const auto rows = analyze_directory(out, opts);
  ASSERT_EQ(rows.size(), 2u);
  std::ostringstream a, b;
  write_summary_csv(a, rows);
  write_summary_csv(b, rep.summaries);
  EXPECT_EQ(a.str(), b.str());
  for (const auto& r : rows) {
    EXPECT_TRUE(std::isfinite(r.binder[0].value));
    ASSERT_TRUE(r.density_histogram.has_value());
  }
}

TEST(Analyze, MalformedSamplesReportLine) {
  auto c = small_lattice();
  c.engine.measurement_sweeps = 10;
  const auto out = scratch("analyze_bad");
  ASSERT_TRUE(execute(c, at(out)).ok());
  const auto dir = task_dir(out, expand_points(c).front().label, 1);
  std::ofstream(dir / "samples.jsonl", std::ios::app) << "not json\n";
  try {
    analyze_directory(out);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 6u);
  }
}

TEST(Summary, BimodalHistogramDetected) {
  ObservableSeries s;
  for (int k = 0; k < 400; ++k) {
    Sample x;
    x.density = (k % 2 ? 0.2 : 0.6) + 0.001 * (k % 7);
    x.orders[0] = {0.3, 0.1, 0.02};
    s.samples.push_back(x);
  }
  PointMeta m;
  m.label = "p";
  const auto r = summarize(m, s, 1, {}, 40);
  EXPECT_TRUE(r.bimodal);
  EXPECT_GE(r.dip_score, 0.2);
  EXPECT_NEAR(r.binder[0].value, 0.5 * (3 - 0.02 / 0.01), 1e-12);
  EXPECT_TRUE(std::isnan(r.binder[3].value));  // <F_B^2> = 0
}

TEST(Summary, TooFewSamplesGiveNaN) {
  ObservableSeries s;
  s.samples.resize(1);
  const auto r = summarize({}, s, 1, {}, 10);
  EXPECT_TRUE(std::isnan(r.density.value));
  std::ostringstream os;
  write_summary_csv(os, {r});
  EXPECT_EQ(lines_of(os.str()).size(), 2u);
}

// ---------------------------------------------------------------------------
// fit, collapse, lgw, oracle

TEST(Fit, SyntheticCsvGivesJsonWithNu) {
  const auto ref = scaling::ReferenceExponents{};
  Rng rng(1);
  const auto data =
      scaling::synthetic_binder(ref.a, ref.g_c, ref.nu, {8, 12, 16}, scaling::coupling_grid(ref.g_c, 0.05, 11), 0.0, 0.01, rng);
  const auto dir = scratch("fit");
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "binder.csv");
    write_dataset_csv(os, data);
  }
  FitCommand cmd;
  cmd.input = dir / "binder.csv";
  const auto j = to_json(run_fit(cmd));
  ASSERT_TRUE(j.contains("nu"));
  EXPECT_NEAR(j["nu"]["value"].get<double>(), ref.nu, 1e-4);
  EXPECT_NEAR(j["g_c"]["value"].get<double>(), ref.g_c, 1e-6);
  EXPECT_EQ(j["kind"], "binder");
  EXPECT_FALSE(j.contains("beta"));
  EXPECT_EQ(j["coefficients"].size(), 5u);

  cmd.kind = scaling::ObservableKind::OrderParam;
  EXPECT_THROW(run_fit(cmd), UsageError);
  cmd.input = dir / "missing.csv";
  EXPECT_THROW(run_fit(cmd), ConfigError);
}

TEST(Fit, OrderCsvGivesBeta) {
  const auto ref = scaling::ReferenceExponents{};
  Rng rng(1);
  const auto data = scaling::synthetic_order(ref.b, ref.g_c, ref.nu, ref.beta, {8, 12, 16},
                                             scaling::coupling_grid(ref.g_c, 0.05, 11), 0.0, 0.01, rng);
  const auto dir = scratch("fit_order");
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "order.csv");
    write_dataset_csv(os, data);
  }
  FitCommand cmd;
  cmd.input = dir / "order.csv";
  cmd.kind = scaling::ObservableKind::OrderParam;
  cmd.nu = ref.nu;
  cmd.g_c = ref.g_c;
  const auto j = to_json(run_fit(cmd));
  ASSERT_TRUE(j.contains("beta"));
  EXPECT_NEAR(j["beta"]["value"].get<double>(), ref.beta, 1e-4);
}

TEST(Fit, MalformedCsvReportsLine) {
  const auto dir = scratch("fit_bad");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.csv") << "L,g,y,y_err\n8,1.0,0.5,0.01\n8,abc,0.5,0.01\n";
  FitCommand cmd;
  cmd.input = dir / "bad.csv";
  try {
    run_fit(cmd);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Collapse, ExactDataScoresNearZero) {
  const auto ref = scaling::ReferenceExponents{};
  Rng rng(1);
  const auto data =
      scaling::synthetic_binder(ref.a, ref.g_c, ref.nu, {8, 12, 16}, scaling::coupling_grid(ref.g_c, 0.05, 11), 0.0, 0.01, rng);
  const auto dir = scratch("collapse");
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "b.csv");
    write_dataset_csv(os, data);
  }
  CollapseCommand cmd{dir / "b.csv", scaling::ObservableKind::Binder, ref.g_c, ref.nu, std::nullopt, 4};
  const auto good = run_collapse(cmd)["score"].get<double>();
  cmd.nu = 1.2;
  const auto bad = run_collapse(cmd)["score"].get<double>();
  EXPECT_LT(good, 1e-8);
  EXPECT_GT(bad, good);
}

TEST(Lgw, PhaseMapFilesWithThreeLabels) {
  LgwCommand cmd;
  cmd.nr = 41;
  cmd.ns = 41;
  cmd.out = scratch("lgw");
  const auto res = run_lgw(cmd);
  const auto rows = lines_of(slurp(cmd.out / "phase_map.csv"));
  ASSERT_EQ(rows.size(), 1u + 41 * 41);
  EXPECT_EQ(rows.front(), "r,s,phase_label,psi1,psi2,phi,V,order_flag");
  std::set<std::string> labels, flags;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto f = split(rows[k]);
    ASSERT_EQ(f.size(), 8u);
    labels.insert(f[2]);
    flags.insert(f[7]);
  }
  EXPECT_EQ(labels, (std::set<std::string>{"disordered", "checkerboard", "striated"}));
  EXPECT_TRUE(flags.count("first"));
  EXPECT_TRUE(flags.count("second"));
  const auto tri = json::parse(slurp(cmd.out / "tricritical.json"));
  EXPECT_DOUBLE_EQ(tri["T1"]["r"].get<double>(), 0.0);
  EXPECT_DOUBLE_EQ(tri["T1"]["s"].get<double>(), 1.0 / 12.0);
  EXPECT_NEAR(tri["T2"]["r"].get<double>(), 0.0546875, 1e-12);
  EXPECT_NEAR(tri["T2"]["s"].get<double>(), -0.0234375, 1e-12);
  EXPECT_LE(std::abs(tri["T2"]["residual"].get<double>()), 1e-9);
  EXPECT_EQ(res.map.cells.size(), 41u * 41u);
}

TEST(Oracle, WriterReproducesGoldenFile) {
  const auto golden = lines_of(slurp(std::string(RYDBERG_TEST_DATA) + "/oracle_3x3_obc_rb1.2_beta5.csv"));
  std::ostringstream os;
  write_oracle_csv(os, run_oracle({}));
  const auto mine = lines_of(os.str());
  ASSERT_EQ(mine.size(), golden.size());
  EXPECT_EQ(mine[0], golden[0]);
  for (std::size_t k = 1; k < mine.size(); ++k) {
    const auto a = split(mine[k]);
    const auto b = split(golden[k]);
    ASSERT_EQ(a.size(), b.size());
    EXPECT_EQ(a[2], b[2]);
    for (std::size_t f = 3; f < a.size(); ++f)
      EXPECT_NEAR(std::stod(a[f]), std::stod(b[f]), 1e-10) << golden[0] << " col " << f;
  }
}

TEST(Oracle, CommandErrors) {
  OracleCommand cmd;
  cmd.detunings.clear();
  EXPECT_THROW(run_oracle(cmd), ConfigError);
  cmd = {};
  cmd.lx = 5;
  cmd.ly = 4;
  EXPECT_THROW(run_oracle(cmd), SizeError);
  cmd = {};
  cmd.beta = 0.0;
  EXPECT_THROW(run_oracle(cmd), ConfigError);
}

TEST(Pool, CoversEveryIndexOnce) {
  for (std::size_t workers : {0u, 1u, 3u, 16u}) {
    std::vector<std::atomic<int>> hits(37);
    parallel_for(hits.size(), workers, [&](std::size_t k) { ++hits[k]; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
  parallel_for(0, 4, [](std::size_t) { FAIL(); });
}
