// rotsync command-line tool: synth | solve | eval | bench.
//
// Exit codes: 0 ok, 2 invalid flags, 3 I/O or malformed input, 4 disconnected
// measurement graph, 5 solver failure, 6 estimate/ground-truth length mismatch.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rotsync/rotsync.hpp"

namespace {

using namespace rotsync;

enum ExitCode : int {
  kOk = 0,
  kBadFlags = 2,
  kIo = 3,
  kDisconnected = 4,
  kSolverFailure = 5,
  kLengthMismatch = 6,
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError:
    case ErrorCode::ParseError:
    case ErrorCode::DuplicateEdge:
    case ErrorCode::InvalidEdge:
      return kIo;
    case ErrorCode::DisconnectedGraph:
      return kDisconnected;
    case ErrorCode::LengthMismatch:
      return kLengthMismatch;
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidRange:
      return kBadFlags;
    default:
      return kSolverFailure;
  }
}

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct SynthFlags {
  int n = 0;
  double missing = 0.0;
  double outliers = 0.0;
  double noise_min = 0.0;
  double noise_max = 0.0;
  std::string mode = "euler";
  std::uint64_t seed = 0;
  std::string prefix;
};

int run_synth(const SynthFlags& f) {
  synth::SynthConfig cfg;
  cfg.n = f.n;
  cfg.missing_fraction = f.missing;
  cfg.outlier_fraction = f.outliers;
  cfg.noise_min_deg = f.noise_min;
  cfg.noise_max_deg = f.noise_max;
  cfg.ground_truth_mode = f.mode == "haar" ? synth::GroundTruthMode::Haar : synth::GroundTruthMode::Euler;
  cfg.seed = f.seed;
  const synth::SyntheticInstance inst = synth::generate(cfg);
  io::save_measurements(f.prefix + ".rel", inst.measurements);
  io::save_rotations(f.prefix + ".gt", inst.truth.rotations);
  io::write_file(f.prefix + ".outliers", io::format_edge_list(inst.truth.outlier_edges));
  std::cout << "n=" << cfg.n << " edges=" << inst.measurements.edges.size()
            << " outliers=" << inst.truth.outlier_edges.size() << '\n';
  return kOk;
}

struct SolveFlags {
  std::string method;
  std::string input;
  std::string output;
  std::string lambda = "auto";
  double sigma = 0.02;
  double eps = 1e-10;
  int max_iter = 100;
  std::uint64_t seed = 0;
  std::string labels_out;
};

int run_solve(const SolveFlags& f) {
  std::optional<double> lambda;
  if (f.lambda != "auto") {
    double v = 0.0;
    const auto res = std::from_chars(f.lambda.data(), f.lambda.data() + f.lambda.size(), v);
    if (res.ec != std::errc() || res.ptr != f.lambda.data() + f.lambda.size() || !(v >= 0.0)) {
      std::cerr << "--lambda must be 'auto' or a nonnegative number\n";
      return kBadFlags;
    }
    lambda = v;
  }
  const io::LoadedMeasurements loaded = io::load_measurements(f.input);
  const sync::BlockObservationMatrix obs = sync::assemble(loaded.set);

  sync::SyncSolution sol;
  if (f.method == "rgodec") {
    sync::RgodecParams p;
    p.lambda = lambda;
    p.sigma = f.sigma;
    p.eps = f.eps;
    p.max_iter = f.max_iter;
    sync::Rng rng(f.seed);
    sol = sync::solve_rgodec(obs, p, rng);
  } else if (f.method == "eig") {
    sol = sync::solve_eig(obs);
  } else {
    sync::IrlsParams p;
    p.max_rounds = f.max_iter;
    sol = sync::solve_eig_irls(obs, p);
  }

  io::save_rotations(f.output, sol.rotations);
  if (!f.labels_out.empty()) {
    std::string text;
    for (std::size_t e = 0; e < sol.edges.size(); ++e) {
      text += std::to_string(sol.edges[e].first + 1) + ' ' + std::to_string(sol.edges[e].second + 1) + ' ' +
              (sol.edge_labels[e] == sync::EdgeLabel::Outlier ? "outlier" : "inlier") + '\n';
    }
    io::write_file(f.labels_out, text);
  }
  const double objective = sol.objective_trace.empty() ? 0.0 : sol.objective_trace.back();
  std::cout << "method=" << sol.method << " n=" << obs.n << " edges=" << obs.edges.size()
            << " iterations=" << sol.iterations << " runtime_s=" << io::format_fixed(sol.runtime_seconds, 6)
            << " objective=" << io::format_double(objective, 10);
  if (f.method == "rgodec") {
    std::cout << " m=" << obs.specified_entries() << " lambda=" << io::format_fixed(sol.lambda, 6);
  }
  std::cout << " projected_inputs=" << loaded.projected << '\n';
  return kOk;
}

struct EvalFlags {
  std::string est;
  std::string gt;
  std::string csv_out;
  std::string method_tag = "unknown";
  double runtime = 0.0;
};

int run_eval(const EvalFlags& f) {
  const auto est = io::load_rotations(f.est);
  const auto gt = io::load_rotations(f.gt);
  const auto aligned = eval::align(est.rotations, gt.rotations, eval::Gauge::Right);
  const eval::ErrorReport rep = eval::error_report(aligned, gt.rotations, f.runtime);
  const bool fresh = !std::filesystem::exists(f.csv_out) || std::filesystem::file_size(f.csv_out) == 0;
  std::string text;
  if (fresh) text += "method_tag,n,mean_deg,median_deg,max_deg,runtime_s\n";
  text += f.method_tag + ',' + std::to_string(gt.rotations.size()) + ',' + shortest(rep.mean) + ',' +
          shortest(rep.median) + ',' + shortest(rep.max) + ',' + shortest(f.runtime) + '\n';
  io::append_file(f.csv_out, text);
  std::cout << "mean_deg=" << shortest(rep.mean) << " median_deg=" << shortest(rep.median)
            << " max_deg=" << shortest(rep.max) << '\n';
  return kOk;
}

struct BenchFlags {
  std::string sweep;
  std::string grid;
  int n = 100;
  double missing = 0.5;
  double noise_deg = 5.0;
  double outliers = 0.0;
  int trials = 20;
  std::string methods = "rgodec,eig,eig-irls";
  std::uint64_t seed = 0;
  std::string csv_out;
  std::optional<double> sigma;
  int max_iter = 100;
  double eps = 1e-10;
  bool omit_timing = false;
};

int run_bench(const BenchFlags& f) {
  eval::SweepSpec spec;
  spec.variable = f.sweep == "noise"      ? eval::SweepVariable::Noise
                  : f.sweep == "outliers" ? eval::SweepVariable::Outliers
                                          : eval::SweepVariable::N;
  for (const auto& tok : split_list(f.grid)) {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      std::cerr << "bad grid value '" << tok << "'\n";
      return kBadFlags;
    }
    spec.grid.push_back(v);
  }
  spec.fixed.n = f.n;
  spec.fixed.missing_fraction = f.missing;
  spec.fixed.outlier_fraction = f.outliers;
  spec.fixed.noise_min_deg = f.noise_deg;
  spec.fixed.noise_max_deg = f.noise_deg;
  spec.fixed.seed = f.seed;
  spec.trials = f.trials;
  spec.methods = split_list(f.methods);
  spec.sigma = f.sigma;
  spec.rgodec.max_iter = f.max_iter;
  spec.rgodec.eps = f.eps;
  spec.irls.max_rounds = f.max_iter;

  const std::vector<eval::SweepRow> rows = eval::run_sweep(spec);
  std::string text = "method,variable,value,trial,mean_deg,median_deg,runtime_s\n";
  int failures = 0;
  for (const auto& r : rows) {
    text += r.method + ',' + eval::to_string(spec.variable) + ',' + shortest(r.value) + ',' +
            (r.is_average() ? std::string("avg") : std::to_string(r.trial)) + ',';
    if (r.failed) {
      ++failures;
      text += "nan,nan,";
    } else {
      text += shortest(r.mean_err) + ',' + shortest(r.median_err) + ',';
    }
    text += f.omit_timing ? std::string("NA") : shortest(r.runtime);
    text += '\n';
  }
  io::write_file(f.csv_out, text);
  std::cout << "rows=" << rows.size() << " failed=" << failures << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust rotation synchronization by low-rank and sparse decomposition"};
  app.require_subcommand(1);

  SynthFlags synth_flags;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic instance");
  synth_cmd->add_option("--n", synth_flags.n, "number of frames")->required()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--missing", synth_flags.missing, "fraction of missing pairs")->required();
  synth_cmd->add_option("--outliers", synth_flags.outliers, "fraction of outlier edges")->required();
  synth_cmd->add_option("--noise-min-deg", synth_flags.noise_min, "minimum noise angle")->required();
  synth_cmd->add_option("--noise-max-deg", synth_flags.noise_max, "maximum noise angle")->required();
  synth_cmd->add_option("--mode", synth_flags.mode, "ground truth sampling")
      ->check(CLI::IsMember({"euler", "haar"}));
  synth_cmd->add_option("--seed", synth_flags.seed, "random seed");
  synth_cmd->add_option("--out-prefix", synth_flags.prefix, "output path prefix")->required();

  SolveFlags solve_flags;
  auto* solve_cmd = app.add_subcommand("solve", "estimate absolute rotations");
  solve_cmd->add_option("--method", solve_flags.method, "rgodec | eig | eig-irls")
      ->required()
      ->check(CLI::IsMember({"rgodec", "eig", "eig-irls"}));
  solve_cmd->add_option("--input", solve_flags.input, "measurement file (.rel)")->required();
  solve_cmd->add_option("--output", solve_flags.output, "rotation file to write")->required();
  solve_cmd->add_option("--lambda", solve_flags.lambda, "auto or explicit value");
  solve_cmd->add_option("--sigma", solve_flags.sigma, "noise scale for automatic lambda")
      ->check(CLI::NonNegativeNumber);
  solve_cmd->add_option("--eps", solve_flags.eps, "relative residual tolerance")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--max-iter", solve_flags.max_iter, "iteration cap")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--seed", solve_flags.seed, "random seed");
  solve_cmd->add_option("--labels-out", solve_flags.labels_out, "edge label file to write");

  EvalFlags eval_flags;
  auto* eval_cmd = app.add_subcommand("eval", "align an estimate and append its errors to a CSV");
  eval_cmd->add_option("--est", eval_flags.est, "estimated rotations")->required();
  eval_cmd->add_option("--gt", eval_flags.gt, "ground-truth rotations")->required();
  eval_cmd->add_option("--csv-out", eval_flags.csv_out, "CSV file to append to")->required();
  eval_cmd->add_option("--method-tag", eval_flags.method_tag, "label for the method column");
  eval_cmd->add_option("--runtime", eval_flags.runtime, "runtime to record, seconds");

  BenchFlags bench_flags;
  auto* bench_cmd = app.add_subcommand("bench", "run a synthetic sweep");
  bench_cmd->add_option("--sweep", bench_flags.sweep, "noise | outliers | n")
      ->required()
      ->check(CLI::IsMember({"noise", "outliers", "n"}));
  bench_cmd->add_option("--grid", bench_flags.grid, "comma-separated values")->required();
  bench_cmd->add_option("--n", bench_flags.n, "number of frames")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--missing", bench_flags.missing, "fraction of missing pairs");
  bench_cmd->add_option("--noise-deg", bench_flags.noise_deg, "noise angle");
  bench_cmd->add_option("--outliers", bench_flags.outliers, "fraction of outlier edges");
  bench_cmd->add_option("--trials", bench_flags.trials, "trials per grid value")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--methods", bench_flags.methods, "comma-separated solver tags");
  bench_cmd->add_option("--seed", bench_flags.seed, "base seed");
  bench_cmd->add_option("--csv-out", bench_flags.csv_out, "CSV file to write")->required();
  bench_cmd->add_option("--sigma", bench_flags.sigma, "R-GoDec noise scale (default: matched to noise)");
  bench_cmd->add_option("--max-iter", bench_flags.max_iter, "iteration cap")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--eps", bench_flags.eps, "R-GoDec relative residual tolerance")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_flag("--omit-timing", bench_flags.omit_timing, "write NA in runtime_s for reproducible output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kBadFlags;
  }

  try {
    if (*synth_cmd) return run_synth(synth_flags);
    if (*solve_cmd) return run_solve(solve_flags);
    if (*eval_cmd) return run_eval(eval_flags);
    if (*bench_cmd) return run_bench(bench_flags);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolverFailure;
  }
  return kBadFlags;
}
