#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rydberg/runner.hpp"

namespace io = rydberg::io;
namespace fs = std::filesystem;

namespace {

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  io::write_file_atomic(path, text);
}

int report(const io::ExecReport& r) {
  std::cerr << r.summaries.size() << "/" << r.points << " points summarized in " << (r.out / "summary.csv").string()
            << "\n";
  if (r.interrupted) std::cerr << r.interrupted << " tasks interrupted; continue with --resume " << r.out.string() << "\n";
  for (const auto& f : r.failures) std::cerr << "error: " << f << "\n";
  return r.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rydberg square-lattice quantum Monte Carlo and analysis toolkit"};
  app.require_subcommand(1);

  std::string config_path, out, resume_path;
  std::size_t seeds = 0, workers = 1;
  std::uint64_t stop_after = 0;
  auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "run configuration (JSON)");
    cmd->add_option("--out", out, "output directory (overrides outputs.directory)");
    cmd->add_option("--seeds", seeds, "use seeds 1..N instead of engine.seeds");
    cmd->add_option("--workers", workers, "parallel chains (0 = all cores)");
    cmd->add_option("--resume", resume_path, "output directory or checkpoint file to continue");
    cmd->add_option("--stop-after", stop_after, "interrupt every chain after N sweeps (checkpointed)");
  };
  auto* run = app.add_subcommand("run", "run the chains of a configuration");
  add_run_flags(run);
  auto* sweep = app.add_subcommand("sweep", "run a 1-D or 2-D grid over L, Rb, detuning, T");
  add_run_flags(sweep);

  auto* analyze = app.add_subcommand("analyze", "recompute summaries, Binder ratios and histograms");
  std::string analyze_dir;
  std::size_t bins = 40;
  double dip_threshold = 0.2;
  analyze->add_option("dir", analyze_dir, "run output directory")->required();
  analyze->add_option("--bins", bins, "density histogram bins");
  analyze->add_option("--dip-threshold", dip_threshold, "bimodality dip threshold");
  analyze->add_option("--out", out, "analysis CSV (default <dir>/analysis.csv)");

  io::FitCommand fit_cmd;
  std::string kind = "binder", fit_input;
  std::optional<double> nu, gc;
  auto* fit = app.add_subcommand("fit", "finite-size-scaling fit of an L,g,y,y_err CSV");
  fit->add_option("--input", fit_input, "dataset CSV")->required();
  fit->add_option("--kind", kind, "binder or order");
  fit->add_option("--nu", nu, "nu (order fits)");
  fit->add_option("--gc", gc, "g_c (order fits)");
  fit->add_option("--K", fit_cmd.options.order, "polynomial order");
  fit->add_option("--lmin", fit_cmd.options.l_min, "smallest size kept");
  fit->add_option("--bootstrap", fit_cmd.options.bootstrap, "bootstrap resamples");
  fit->add_option("--seed", fit_cmd.options.seed, "bootstrap seed");
  fit->add_option("--out", out, "result JSON (default stdout)");

  io::CollapseCommand col_cmd;
  std::optional<double> col_beta;
  auto* collapse = app.add_subcommand("collapse", "data-collapse quality for given exponents");
  collapse->add_option("--input", fit_input, "dataset CSV")->required();
  collapse->add_option("--kind", kind, "binder or order");
  collapse->add_option("--gc", col_cmd.g_c, "g_c")->required();
  collapse->add_option("--nu", col_cmd.nu, "nu")->required();
  collapse->add_option("--beta", col_beta, "beta (order data)");
  collapse->add_option("--degree", col_cmd.degree, "master-curve polynomial degree");
  collapse->add_option("--out", out, "result JSON (default stdout)");

  io::LgwCommand lgw_cmd;
  auto* lgw = app.add_subcommand("lgw", "mean-field phase map of the striated LGW functional");
  lgw->add_option("--out", out, "output directory (default lgw)");
  lgw->add_option("--nr", lgw_cmd.nr, "grid points along r");
  lgw->add_option("--ns", lgw_cmd.ns, "grid points along s");
  lgw->add_option("--r-min", lgw_cmd.r.lo);
  lgw->add_option("--r-max", lgw_cmd.r.hi);
  lgw->add_option("--s-min", lgw_cmd.s.lo);
  lgw->add_option("--s-max", lgw_cmd.s.hi);
  lgw->add_option("--g", lgw_cmd.couplings.g);
  lgw->add_option("--u1", lgw_cmd.couplings.u1);
  lgw->add_option("--u2", lgw_cmd.couplings.u2);
  lgw->add_option("--v", lgw_cmd.couplings.v);
  lgw->add_option("--w", lgw_cmd.couplings.w);

  io::OracleCommand or_cmd;
  std::string boundary = "OBC";
  auto* oracle = app.add_subcommand("oracle", "exact thermal expectations of a small lattice");
  oracle->add_option("--config", config_path, "take lattice and physics from a run configuration");
  oracle->add_option("--lx", or_cmd.lx);
  oracle->add_option("--ly", or_cmd.ly);
  oracle->add_option("--boundary", boundary, "PBC or OBC");
  oracle->add_option("--rb", or_cmd.blockade_radius);
  oracle->add_option("--cutoff", or_cmd.cutoff);
  oracle->add_option("--detuning", or_cmd.detunings, "one or more detunings");
  oracle->add_option("--beta", or_cmd.beta);
  oracle->add_option("--out", out, "golden CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed() || sweep->parsed()) {
      io::ExecOptions opts;
      if (!out.empty()) opts.out = out;
      if (seeds) opts.seeds = seeds;
      opts.workers = workers;
      opts.control.stop_after = stop_after;
      opts.log = &std::cerr;
      if (!resume_path.empty()) {
        if (!config_path.empty()) throw rydberg::UsageError("--resume takes the configuration from the run itself");
        return report(io::resume(resume_path, opts));
      }
      if (config_path.empty()) throw rydberg::UsageError("--config is required");
      const auto cfg = io::load_config(config_path);
      if (sweep->parsed() && !cfg.sweep.any()) throw rydberg::ConfigError("sweep needs at least one axis in 'sweep'");
      return report(io::execute(cfg, opts));
    }
    if (analyze->parsed()) {
      io::AnalyzeOptions opts;
      opts.bins = bins;
      opts.analysis.dip_threshold = dip_threshold;
      const auto rows = io::analyze_directory(analyze_dir, opts);
      std::ostringstream os;
      io::write_summary_csv(os, rows);
      emit(os.str(), out.empty() ? (fs::path(analyze_dir) / "analysis.csv").string() : out);
      io::write_histograms(analyze_dir, rows);
      std::cerr << rows.size() << " points analyzed\n";
      return 0;
    }
    if (fit->parsed()) {
      fit_cmd.input = fit_input;
      fit_cmd.kind = rydberg::scaling::observable_kind_from_string(kind);
      fit_cmd.nu = nu;
      fit_cmd.g_c = gc;
      emit(io::to_json(io::run_fit(fit_cmd)).dump(2) + "\n", out);
      return 0;
    }
    if (collapse->parsed()) {
      col_cmd.input = fit_input;
      col_cmd.kind = rydberg::scaling::observable_kind_from_string(kind);
      col_cmd.beta = col_beta;
      emit(io::run_collapse(col_cmd).dump(2) + "\n", out);
      return 0;
    }
    if (lgw->parsed()) {
      if (!out.empty()) lgw_cmd.out = out;
      const auto res = io::run_lgw(lgw_cmd);
      std::cerr << "phase map written to " << (lgw_cmd.out / "phase_map.csv").string() << "\n";
      std::cout << io::tricritical_json(lgw_cmd.couplings, res.tricritical).dump(2) << "\n";
      return 0;
    }
    if (oracle->parsed()) {
      or_cmd.boundary = rydberg::boundary_from_string(boundary);
      if (!config_path.empty()) {
        const auto cfg = io::load_config(config_path);
        io::validate(cfg);
        const auto points = io::expand_points(cfg);
        const auto& p0 = points.front();
        or_cmd.lx = p0.spec.lx();
        or_cmd.ly = p0.spec.ly();
        or_cmd.boundary = p0.spec.boundary();
        or_cmd.blockade_radius = p0.params.blockade_radius;
        or_cmd.cutoff = p0.params.cutoff;
        or_cmd.beta = p0.params.beta();
        or_cmd.allow_half_box = p0.params.allow_half_box;
        or_cmd.detunings = cfg.sweep.detuning ? *cfg.sweep.detuning : std::vector<double>{cfg.physics.detuning};
      }
      std::ostringstream os;
      io::write_oracle_csv(os, io::run_oracle(or_cmd));
      emit(os.str(), out);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
