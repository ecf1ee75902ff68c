#pragma once

// Run orchestration: one chain per (point, seed) task, a worker pool over the
// tasks, on-disk layout
//
//   <out>/config.json
//   <out>/summary.csv
//   <out>/points/<label>/point.json
//   <out>/points/<label>/density_histogram.csv
//   <out>/points/<label>/seed_<s>/{samples.jsonl, summary.csv, checkpoint.json}
//
// and the thin file-level wrappers behind the command line.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rydberg/io.hpp"

namespace rydberg::io {

inline fs::path point_dir(const fs::path& out, const std::string& label) { return out / "points" / label; }

inline fs::path task_dir(const fs::path& out, const std::string& label, std::uint64_t seed) {
  return point_dir(out, label) / ("seed_" + std::to_string(seed));
}

struct TaskControl {
  std::uint64_t stop_after = 0;  // interrupt after this timeline position (0 = run to completion)
};

struct TaskResult {
  std::string label;
  std::uint64_t seed = 0;
  fs::path dir;
  bool ok = false;
  bool interrupted = false;
  std::string error;
  ObservableSeries series;
};

namespace detail {
struct Interrupted {};

inline std::vector<std::string> read_lines(const fs::path& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::vector<std::string> lines;
  std::string line;
  while (lines.size() < n && std::getline(in, line)) lines.push_back(line);
  if (lines.size() < n)
    throw ValidationError(path.string() + " holds " + std::to_string(lines.size()) +
                          " samples, checkpoint expects " + std::to_string(n));
  return lines;
}
}  // namespace detail

// Runs (or resumes) one chain and writes its directory. Errors are captured in
// the result rather than thrown.
inline TaskResult run_task(const RunConfig& cfg, const Point& pt, std::uint64_t seed, const fs::path& out,
                           const TaskControl& ctl = {}, const Checkpoint* resume = nullptr) {
  TaskResult res;
  res.label = pt.label;
  res.seed = seed;
  res.dir = task_dir(out, pt.label, seed);
  try {
    fs::create_directories(res.dir);
    QmcParams p = pt.params;
    p.rng_seed = seed;
    const std::string hash = params_hash(pt);
    const std::uint64_t total = total_sweeps(p, pt.schedule);
    const fs::path samples_path = res.dir / "samples.jsonl";
    std::vector<Sample> prior;
    std::optional<Chain> chain;
    std::ofstream samples_out;
    std::uint64_t written = 0;

    if (resume) {
      if (resume->label != pt.label || resume->seed != seed || resume->params_hash != hash)
        throw ConfigError("checkpoint belongs to " + resume->label + " seed " + std::to_string(resume->seed));
      if (resume->total_sweeps != total) throw ConfigError("checkpoint sweep count does not match the configuration");
      const auto lines = detail::read_lines(samples_path, resume->samples_written);
      std::size_t n = 0;
      for (const auto& line : lines) {
        ++n;
        try {
          prior.push_back(parse_sample(json::parse(line)).sample);
        } catch (const json::exception& e) {
          throw ParseError(samples_path.string() + ": " + e.what(), n);
        }
      }
      samples_out.open(samples_path, std::ios::trunc);
      for (const auto& line : lines) samples_out << line << '\n';
      written = resume->samples_written;
      const std::uint64_t pos = resume->position;
      chain.emplace(pt.spec, phase_at(p, pt.schedule, pos > 0 ? pos - 1 : 0).first);
      chain->restore(*resume->configuration, resume->rng_state, resume->action, pos);
    } else {
      samples_out.open(samples_path, std::ios::trunc);
      chain.emplace(pt.spec, phase_at(p, pt.schedule, 0).first);
    }
    if (!samples_out) throw ConfigError("cannot write '" + samples_path.string() + "'");

    const fs::path ckpt_path = res.dir / "checkpoint.json";
    auto checkpoint = [&](const Chain& c) {
      samples_out.flush();
      if (!samples_out) throw ConfigError("write failed for '" + samples_path.string() + "'");
      Checkpoint ck;
      ck.config = cfg;
      ck.label = pt.label;
      ck.params_hash = hash;
      ck.seed = seed;
      ck.position = c.position();
      ck.total_sweeps = total;
      ck.samples_written = written;
      ck.action = c.action();
      ck.rng_state = c.rng().state();
      ck.configuration = c.config();
      save_checkpoint(ckpt_path, ck);
    };

    RunHooks hooks;
    hooks.on_sample = [&](const Chain&, const Sample& s) {
      samples_out << sample_json(s, seed, hash).dump() << '\n';
      ++written;
    };
    hooks.on_sweep = [&](const Chain& c) {
      const std::uint64_t pos = c.position();
      if (pos >= total) return;
      if (ctl.stop_after && pos >= ctl.stop_after) {
        checkpoint(c);
        throw detail::Interrupted{};
      }
      if (cfg.engine.checkpoint_every && pos % cfg.engine.checkpoint_every == 0) checkpoint(c);
    };

    ObservableSeries fresh = drive(*chain, p, pt.schedule, hooks);
    checkpoint(*chain);
    res.series.meta = fresh.meta;
    res.series.samples = std::move(prior);
    res.series.samples.insert(res.series.samples.end(), fresh.samples.begin(), fresh.samples.end());
    std::ofstream sum(res.dir / "summary.csv");
    write_series_summary_csv(sum, res.series);
    if (!sum) throw ConfigError("cannot write summary in '" + res.dir.string() + "'");
    res.ok = true;
  } catch (const detail::Interrupted&) {
    res.interrupted = true;
  } catch (const std::exception& e) {
    res.error = e.what();
  }
  return res;
}

// Runs fn(0..n-1) on up to `workers` threads (0 = hardware concurrency).
inline void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < n; k = next++) fn(k);
    });
  for (auto& t : pool) t.join();
}

struct ExecOptions {
  std::optional<fs::path> out;
  std::optional<std::size_t> seeds;  // replaces the seed list with 1..N
  std::size_t workers = 1;
  bool resume = false;  // continue from checkpoints found under the output directory
  TaskControl control;
  std::ostream* log = nullptr;
};

struct ExecReport {
  fs::path out;
  std::size_t points = 0;
  std::size_t tasks = 0;
  std::size_t interrupted = 0;
  std::vector<PointSummary> summaries;
  std::vector<std::string> failures;

  bool ok() const { return failures.empty(); }
};

// Applies command-line overrides to a configuration.
inline RunConfig effective_config(RunConfig cfg, const ExecOptions& opts) {
  if (opts.out) cfg.outputs.directory = opts.out->string();
  if (opts.seeds) {
    if (*opts.seeds < 1) throw ConfigError("--seeds must be at least 1");
    cfg.engine.seeds.clear();
    for (std::size_t s = 1; s <= *opts.seeds; ++s) cfg.engine.seeds.push_back(s);
  }
  return cfg;
}

inline void write_summaries(const fs::path& path, const std::vector<PointSummary>& rows) {
  std::ostringstream os;
  write_summary_csv(os, rows);
  write_file_atomic(path, os.str());
}

inline void write_histograms(const fs::path& out, const std::vector<PointSummary>& rows) {
  for (const auto& r : rows) {
    if (!r.density_histogram) continue;
    std::ostringstream os;
    write_histogram_csv(os, *r.density_histogram);
    write_file_atomic(point_dir(out, r.meta.label) / "density_histogram.csv", os.str());
  }
}

inline ExecReport execute(const RunConfig& config, const ExecOptions& opts = {}) {
  const RunConfig cfg = effective_config(config, opts);
  validate(cfg);
  const auto points = expand_points(cfg);
  const fs::path out = cfg.outputs.directory;
  std::error_code ec;
  fs::create_directories(out / "points", ec);
  if (ec) throw ConfigError("cannot create output directory '" + out.string() + "': " + ec.message());
  const fs::path config_path = out / "config.json";
  if (opts.resume && fs::exists(config_path) && !(load_config(config_path) == cfg))
    throw ConfigError("configuration differs from the one recorded in '" + config_path.string() + "'");
  write_file_atomic(config_path, serialize_config(cfg));
  for (const auto& p : points) {
    fs::create_directories(point_dir(out, p.label));
    json meta = to_json(point_meta(p));
    meta["params_hash"] = params_hash(p);
    meta["seeds"] = cfg.engine.seeds;
    write_file_atomic(point_dir(out, p.label) / "point.json", meta.dump(2) + "\n");
  }

  struct Task {
    std::size_t point;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t k = 0; k < points.size(); ++k)
    for (auto s : cfg.engine.seeds) tasks.push_back({k, s});

  std::vector<TaskResult> results(tasks.size());
  std::mutex log_mutex;
  parallel_for(tasks.size(), opts.workers, [&](std::size_t k) {
    const Point& pt = points[tasks[k].point];
    const std::uint64_t seed = tasks[k].seed;
    std::optional<Checkpoint> ck;
    const fs::path ckpt = task_dir(out, pt.label, seed) / "checkpoint.json";
    if (opts.resume && fs::exists(ckpt)) {
      try {
        ck = load_checkpoint(ckpt);
      } catch (const std::exception& e) {
        results[k].label = pt.label;
        results[k].seed = seed;
        results[k].error = e.what();
        return;
      }
    }
    results[k] = run_task(cfg, pt, seed, out, opts.control, ck ? &*ck : nullptr);
    if (opts.log) {
      std::lock_guard<std::mutex> lock(log_mutex);
      const auto& r = results[k];
      *opts.log << pt.label << " seed " << seed << ": "
                << (r.ok ? "done, " + std::to_string(r.series.size()) + " samples"
                         : r.interrupted ? std::string("interrupted") : "failed: " + r.error)
                << "\n";
    }
  });

  ExecReport report;
  report.out = out;
  report.points = points.size();
  report.tasks = tasks.size();
  for (std::size_t k = 0; k < points.size(); ++k) {
    ObservableSeries pooled;
    std::size_t seeds = 0;
    bool complete = true;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      if (tasks[t].point != k) continue;
      auto& r = results[t];
      if (r.interrupted) {
        ++report.interrupted;
        complete = false;
      } else if (!r.ok) {
        report.failures.push_back(points[k].label + " seed " + std::to_string(tasks[t].seed) + ": " + r.error);
      } else {
        ++seeds;
        pooled.meta = r.series.meta;
        pooled.samples.insert(pooled.samples.end(), r.series.samples.begin(), r.series.samples.end());
        r.series = {};
      }
    }
    if (complete && seeds > 0)
      report.summaries.push_back(
          summarize(point_meta(points[k]), pooled, seeds, cfg.analysis, cfg.outputs.histogram_bins));
  }
  write_summaries(out / "summary.csv", report.summaries);
  write_histograms(out, report.summaries);
  return report;
}

// Resumes a run from its output directory or from one of its checkpoint files.
inline ExecReport resume(const fs::path& path, ExecOptions opts = {}) {
  fs::path out = path;
  if (fs::is_regular_file(path)) {
    load_checkpoint(path);  // fails loudly on a foreign or mismatched file
    out = path.parent_path().parent_path().parent_path().parent_path();
  }
  const fs::path config_path = out / "config.json";
  if (!fs::exists(config_path)) throw ConfigError("no config.json under '" + out.string() + "'");
  opts.out = out;
  opts.resume = true;
  return execute(load_config(config_path), opts);
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeOptions {
  std::size_t bins = 40;
  AnalysisConfig analysis;
};

// Re-reads every point under an output directory and recomputes summaries,
// Binder ratios, histograms and bimodality.
inline std::vector<PointSummary> analyze_directory(const fs::path& dir, const AnalyzeOptions& opts = {}) {
  if (!fs::is_directory(dir)) throw ConfigError("'" + dir.string() + "' is not a directory");
  std::vector<fs::path> point_files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() == "point.json") point_files.push_back(e.path());
  std::sort(point_files.begin(), point_files.end());
  std::vector<PointSummary> rows;
  for (const auto& pf : point_files) {
    const PointMeta meta = parse_point_meta(parse_json_text(read_file(pf)));
    ObservableSeries pooled;
    std::size_t seeds = 0;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(pf.parent_path()))
      if (e.is_directory() && fs::exists(e.path() / "samples.jsonl")) files.push_back(e.path() / "samples.jsonl");
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const auto records = read_samples_file(f);
      if (records.empty()) continue;
      ++seeds;
      for (const auto& r : records) pooled.samples.push_back(r.sample);
    }
    if (seeds == 0) continue;
    rows.push_back(summarize(meta, pooled, seeds, opts.analysis, opts.bins));
  }
  if (rows.empty()) throw InsufficientDataError("no samples found under '" + dir.string() + "'");
  return rows;
}

// ---------------------------------------------------------------------------
// fit, collapse, lgw, oracle

inline scaling::Dataset load_dataset(const fs::path& path, scaling::ObservableKind kind) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  try {
    return scaling::read_dataset_csv(in, kind);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

struct FitCommand {
  fs::path input;
  scaling::ObservableKind kind = scaling::ObservableKind::Binder;
  std::optional<double> nu;   // required for order fits
  std::optional<double> g_c;  // required for order fits
  scaling::FitOptions options;
};

inline scaling::FitResult run_fit(const FitCommand& cmd) {
  const auto data = load_dataset(cmd.input, cmd.kind);
  if (cmd.kind == scaling::ObservableKind::Binder) return scaling::fit_binder(data, cmd.options);
  if (!cmd.nu || !cmd.g_c) throw UsageError("order-parameter fits need --nu and --gc");
  return scaling::fit_order(data, *cmd.nu, *cmd.g_c, cmd.options);
}

struct CollapseCommand {
  fs::path input;
  scaling::ObservableKind kind = scaling::ObservableKind::Binder;
  double g_c = 0.0;
  double nu = 1.0;
  std::optional<double> beta;
  int degree = 4;
};

inline json run_collapse(const CollapseCommand& cmd) {
  const auto data = load_dataset(cmd.input, cmd.kind);
  const double score = scaling::collapse_score(data, cmd.g_c, cmd.nu, cmd.beta, cmd.degree);
  json j = {{"kind", scaling::to_string(cmd.kind)}, {"g_c", cmd.g_c}, {"nu", cmd.nu}, {"degree", cmd.degree},
            {"score", score}};
  if (cmd.beta) j["beta"] = *cmd.beta;
  return j;
}

struct LgwCommand {
  lgw::Couplings couplings = lgw::reference_couplings();
  lgw::Range r{-0.2, 0.6};
  lgw::Range s{-0.4, 0.4};
  std::size_t nr = 200;
  std::size_t ns = 200;
  fs::path out = "lgw";
};

struct LgwResult {
  lgw::PhaseMap map;
  lgw::Tricritical tricritical;
};

inline LgwResult run_lgw(const LgwCommand& cmd) {
  LgwResult res{lgw::phase_diagram(cmd.couplings, cmd.r, cmd.s, cmd.nr, cmd.ns),
                lgw::tricritical_points(cmd.couplings)};
  std::error_code ec;
  fs::create_directories(cmd.out, ec);
  if (ec) throw ConfigError("cannot create output directory '" + cmd.out.string() + "': " + ec.message());
  std::ostringstream map;
  write_phase_map_csv(map, res.map);
  write_file_atomic(cmd.out / "phase_map.csv", map.str());
  write_file_atomic(cmd.out / "tricritical.json", tricritical_json(cmd.couplings, res.tricritical).dump(2) + "\n");
  return res;
}

struct OracleCommand {
  int lx = 3;
  int ly = 3;
  Boundary boundary = Boundary::Open;
  double blockade_radius = 1.2;
  double cutoff = 4.0;
  std::vector<double> detunings{0.5, 1.0, 2.0};
  double beta = 5.0;
  bool allow_half_box = false;
};

inline std::vector<OracleRow> run_oracle(const OracleCommand& cmd) {
  if (cmd.detunings.empty()) throw ConfigError("oracle needs at least one detuning");
  if (!(cmd.beta > 0)) throw ConfigError("beta must be positive");
  const LatticeSpec spec(cmd.lx, cmd.ly, cmd.boundary);
  std::vector<OracleRow> rows;
  for (double d : cmd.detunings)
    rows.push_back(oracle_row(spec, cmd.blockade_radius, cmd.cutoff, d, cmd.beta, cmd.allow_half_box));
  return rows;
}

}  // namespace rydberg::io
