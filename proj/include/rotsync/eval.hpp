#pragma once

// Evaluation: gauge alignment by L1 single averaging, angular error
// statistics, and benchmark sweeps over synthetic instances.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rotsync/error.hpp"
#include "rotsync/so3.hpp"
#include "rotsync/sync.hpp"
#include "rotsync/synth.hpp"

namespace rotsync::eval {

using so3::Rotation;

/// Side on which the unknown global rotation acts. Under R_ij = R_i R_j^T the
/// absolute rotations are determined up to R_i -> R_i Q, i.e. Gauge::Right.
enum class Gauge { Left, Right };

/// Left: S = mean{R_i Rhat_i^T}, returns {S Rhat_i}.
/// Right: S = mean{Rhat_i^T R_i}, returns {Rhat_i S}.
inline std::vector<Rotation> align(const std::vector<Rotation>& estimates,
                                   const std::vector<Rotation>& ground_truth, Gauge gauge = Gauge::Left) {
  if (estimates.size() != ground_truth.size()) {
    throw Error(ErrorCode::LengthMismatch, "estimate and ground-truth counts differ");
  }
  if (estimates.empty()) return {};
  std::vector<Rotation> offsets;
  offsets.reserve(estimates.size());
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    offsets.push_back(gauge == Gauge::Left ? Rotation(ground_truth[i] * estimates[i].transpose())
                                           : Rotation(estimates[i].transpose() * ground_truth[i]));
  }
  const Rotation S = so3::l1_single_average(offsets);
  std::vector<Rotation> aligned;
  aligned.reserve(estimates.size());
  for (const Rotation& R : estimates) {
    aligned.push_back(so3::project_to_so3(gauge == Gauge::Left ? Rotation(S * R) : Rotation(R * S)));
  }
  return aligned;
}

struct Histogram {
  std::vector<double> edges;  // degrees, one more than counts
  std::vector<int> counts;
};

struct ErrorReport {
  std::vector<double> per_node_errors;  // degrees
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;
  Histogram histogram;
  double runtime_seconds = 0.0;
};

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

inline ErrorReport error_report(const std::vector<Rotation>& aligned,
                                const std::vector<Rotation>& ground_truth, double runtime_seconds = 0.0) {
  if (aligned.size() != ground_truth.size()) {
    throw Error(ErrorCode::LengthMismatch, "estimate and ground-truth counts differ");
  }
  ErrorReport rep;
  rep.runtime_seconds = runtime_seconds;
  rep.per_node_errors.reserve(aligned.size());
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    rep.per_node_errors.push_back(so3::geodesic_distance(ground_truth[i], aligned[i]));
  }
  if (rep.per_node_errors.empty()) return rep;
  const auto& e = rep.per_node_errors;
  rep.mean = std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size());
  rep.median = median_of(e);
  rep.max = *std::max_element(e.begin(), e.end());

  // 1 degree bins on [0, ceil(max)]; at least one bin.
  const int bins = std::max(1, static_cast<int>(std::ceil(rep.max)));
  rep.histogram.counts.assign(static_cast<std::size_t>(bins), 0);
  for (int b = 0; b <= bins; ++b) rep.histogram.edges.push_back(b);
  for (double x : e) {
    const int b = std::min(bins - 1, static_cast<int>(std::floor(x)));
    ++rep.histogram.counts[static_cast<std::size_t>(b)];
  }
  return rep;
}

enum class SweepVariable { Noise, Outliers, N };

inline const char* to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::Noise: return "noise";
    case SweepVariable::Outliers: return "outliers";
    case SweepVariable::N: return "n";
  }
  return "?";
}

struct SweepSpec {
  SweepVariable variable = SweepVariable::Outliers;
  std::vector<double> grid;
  synth::SynthConfig fixed;  // base configuration; fixed.seed is the base seed
  int trials = 20;
  std::vector<std::string> methods = {"rgodec", "eig", "eig-irls"};
  std::optional<double> sigma;  // R-GoDec noise scale; matched to the noise level when unset
  sync::RgodecParams rgodec;
  sync::IrlsParams irls;
};

struct SweepRow {
  std::string method;
  double value = 0.0;
  int trial = 0;  // kAverageTrial for aggregate rows
  double mean_err = 0.0;
  double median_err = 0.0;
  double runtime = 0.0;
  int iterations = 0;
  bool failed = false;
  std::string error;

  static constexpr int kAverageTrial = -1;
  bool is_average() const { return trial == kAverageTrial; }
};

inline bool is_known_method(const std::string& tag) {
  return tag == "rgodec" || tag == "eig" || tag == "eig-irls";
}

/// Per-entry noise scale of a block perturbed by `deg` degrees: ||R (N - I)||_F / 3 = 2 sqrt(2) sin(t / 2) / 3.
/// Falls back to 0.02 for noise-free data, where any positive value works.
inline double matched_sigma(double noise_deg) {
  if (!(noise_deg > 0.0)) return 0.02;
  return 2.0 * std::sqrt(2.0) * std::sin(0.5 * so3::deg2rad(noise_deg)) / 3.0;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::size_t grid_index, int trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(grid_index), static_cast<std::uint32_t>(trial)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

inline synth::SynthConfig cell_config(const SweepSpec& spec, std::size_t grid_index, int trial) {
  synth::SynthConfig c = spec.fixed;
  const double v = spec.grid[grid_index];
  switch (spec.variable) {
    case SweepVariable::Noise:
      c.noise_min_deg = v;
      c.noise_max_deg = v;
      break;
    case SweepVariable::Outliers:
      c.outlier_fraction = v;
      break;
    case SweepVariable::N:
      c.n = static_cast<int>(std::lround(v));
      break;
  }
  c.seed = derive_seed(spec.fixed.seed, grid_index, trial);
  return c;
}

inline sync::SyncSolution solve_with(const std::string& method, const sync::BlockObservationMatrix& obs,
                                     const SweepSpec& spec, const synth::SynthConfig& config,
                                     std::uint64_t solver_seed) {
  if (method == "eig") return sync::solve_eig(obs);
  if (method == "eig-irls") return sync::solve_eig_irls(obs, spec.irls);
  if (method == "rgodec") {
    sync::RgodecParams p = spec.rgodec;
    p.sigma = spec.sigma.value_or(matched_sigma(config.noise_max_deg));
    sync::Rng rng(solver_seed);
    return sync::solve_rgodec(obs, p, rng);
  }
  throw Error(ErrorCode::InvalidConfig, "unknown method '" + method + "'");
}

/// Runs every (grid value, trial, method) cell; methods share the instance of a cell.
/// Rows come out sorted by method, grid value, trial, with one aggregate row per
/// (method, grid value) after its trials.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  if (spec.trials < 1) throw Error(ErrorCode::InvalidConfig, "trials must be at least 1");
  if (spec.grid.empty() || !std::is_sorted(spec.grid.begin(), spec.grid.end())) {
    throw Error(ErrorCode::InvalidConfig, "grid must be nonempty and sorted");
  }
  for (const auto& m : spec.methods) {
    if (!is_known_method(m)) throw Error(ErrorCode::InvalidConfig, "unknown method '" + m + "'");
  }
  std::vector<std::string> methods = spec.methods;
  std::sort(methods.begin(), methods.end());
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());

  // cells[method][grid][trial]
  std::vector<std::vector<std::vector<SweepRow>>> cells(
      methods.size(), std::vector<std::vector<SweepRow>>(spec.grid.size()));
  for (std::size_t g = 0; g < spec.grid.size(); ++g) {
    for (int t = 0; t < spec.trials; ++t) {
      const synth::SynthConfig config = cell_config(spec, g, t);
      std::optional<synth::SyntheticInstance> instance;
      std::optional<sync::BlockObservationMatrix> obs;
      std::string setup_error;
      try {
        instance = synth::generate(config);
        obs = sync::assemble(instance->measurements);
      } catch (const std::exception& ex) {
        setup_error = ex.what();
      }
      for (std::size_t m = 0; m < methods.size(); ++m) {
        SweepRow row;
        row.method = methods[m];
        row.value = spec.grid[g];
        row.trial = t;
        if (!obs) {
          row.failed = true;
          row.error = setup_error;
        } else {
          try {
            const sync::SyncSolution sol = solve_with(methods[m], *obs, spec, config, config.seed ^ 0x5bd1e995ULL);
            const auto aligned = align(sol.rotations, instance->truth.rotations, Gauge::Right);
            const ErrorReport rep = error_report(aligned, instance->truth.rotations, sol.runtime_seconds);
            row.mean_err = rep.mean;
            row.median_err = rep.median;
            row.runtime = sol.runtime_seconds;
            row.iterations = sol.iterations;
          } catch (const std::exception& ex) {
            row.failed = true;
            row.error = ex.what();
          }
        }
        cells[m][g].push_back(std::move(row));
      }
    }
  }

  std::vector<SweepRow> table;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    for (std::size_t g = 0; g < spec.grid.size(); ++g) {
      SweepRow avg;
      avg.method = methods[m];
      avg.value = spec.grid[g];
      avg.trial = SweepRow::kAverageTrial;
      int ok = 0;
      for (const SweepRow& r : cells[m][g]) {
        table.push_back(r);
        if (r.failed) continue;
        ++ok;
        avg.mean_err += r.mean_err;
        avg.median_err += r.median_err;
        avg.runtime += r.runtime;
        avg.iterations += r.iterations;
      }
      if (ok > 0) {
        avg.mean_err /= ok;
        avg.median_err /= ok;
        avg.runtime /= ok;
        avg.iterations /= ok;
      } else {
        avg.failed = true;
        avg.error = "all trials failed";
      }
      table.push_back(std::move(avg));
    }
  }
  return table;
}

}  // namespace rotsync::eval
