#pragma once

// Synthetic synchronization instances: random ground truth, a connected
// measurement graph with controlled density, multiplicative angular noise,
// and Haar-random outliers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <random>
#include <set>
#include <vector>

#include "rotsync/error.hpp"
#include "rotsync/so3.hpp"
#include "rotsync/sync.hpp"

namespace rotsync::synth {

using so3::Rotation;
using sync::EdgeKey;
using Rng = std::mt19937_64;

enum class GroundTruthMode { Euler, Haar };

struct SynthConfig {
  int n = 10;
  double missing_fraction = 0.0;
  double outlier_fraction = 0.0;
  double noise_min_deg = 0.0;
  double noise_max_deg = 0.0;
  GroundTruthMode ground_truth_mode = GroundTruthMode::Euler;
  std::uint64_t seed = 0;
};

struct GroundTruth {
  std::vector<Rotation> rotations;
  std::vector<EdgeKey> outlier_edges;  // sorted
};

struct SyntheticInstance {
  sync::RelativeMeasurementSet measurements;
  GroundTruth truth;
};

inline void validate(const SynthConfig& c) {
  if (c.n < 1) throw Error(ErrorCode::InvalidConfig, "n must be positive");
  if (!(c.missing_fraction >= 0.0 && c.missing_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "missing fraction must lie in [0, 1)");
  }
  if (!(c.outlier_fraction >= 0.0 && c.outlier_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "outlier fraction must lie in [0, 1]");
  }
  if (!(c.noise_min_deg >= 0.0 && c.noise_min_deg <= c.noise_max_deg && c.noise_max_deg <= 180.0)) {
    throw Error(ErrorCode::InvalidConfig, "noise range must satisfy 0 <= min <= max <= 180");
  }
}

/// Uniformly random labeled spanning tree on n nodes (Pruefer sequence decoding).
/// Edges are returned with i < j, sorted.
inline std::vector<EdgeKey> spanning_tree_uniform(int n, Rng& rng) {
  std::vector<EdgeKey> edges;
  if (n < 2) return edges;
  std::vector<int> code(static_cast<std::size_t>(n - 2));
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (int& c : code) c = pick(rng);

  std::vector<int> degree(static_cast<std::size_t>(n), 1);
  for (int c : code) ++degree[c];
  std::priority_queue<int, std::vector<int>, std::greater<>> leaves;
  for (int v = 0; v < n; ++v)
    if (degree[v] == 1) leaves.push(v);
  for (int c : code) {
    const int leaf = leaves.top();
    leaves.pop();
    edges.emplace_back(std::min(leaf, c), std::max(leaf, c));
    if (--degree[c] == 1) leaves.push(c);
  }
  const int u = leaves.top();
  leaves.pop();
  const int v = leaves.top();
  edges.emplace_back(std::min(u, v), std::max(u, v));
  std::sort(edges.begin(), edges.end());
  return edges;
}

inline SyntheticInstance generate(const SynthConfig& config) {
  validate(config);
  Rng rng(config.seed);
  const int n = config.n;

  SyntheticInstance out;
  out.measurements.n = n;
  auto& truth = out.truth.rotations;
  truth.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    truth.push_back(config.ground_truth_mode == GroundTruthMode::Euler ? so3::random_rotation_euler(rng)
                                                                        : so3::random_rotation_uniform(rng));
  }

  // A protected spanning tree, then every other pair kept independently so the
  // expected number of edges is (1 - missing) * n (n - 1) / 2.
  const std::vector<EdgeKey> tree = spanning_tree_uniform(n, rng);
  const std::set<EdgeKey> tree_set(tree.begin(), tree.end());
  const double pairs = 0.5 * n * (n - 1.0);
  const double others = pairs - static_cast<double>(tree.size());
  double keep = 0.0;
  if (others > 0.0) {
    keep = std::clamp(((1.0 - config.missing_fraction) * pairs - static_cast<double>(tree.size())) / others,
                      0.0, 1.0);
  }
  std::bernoulli_distribution retain(keep);
  std::vector<EdgeKey> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (tree_set.count({i, j}) != 0 || retain(rng)) edges.emplace_back(i, j);
    }
  }

  const auto outlier_count = static_cast<std::size_t>(
      std::floor(config.outlier_fraction * static_cast<double>(edges.size()) + 1e-9));
  std::vector<std::size_t> order(edges.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> is_outlier(edges.size(), false);
  for (std::size_t k = 0; k < outlier_count; ++k) is_outlier[order[k]] = true;

  out.measurements.edges.reserve(edges.size());
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto [i, j] = edges[k];
    Rotation Rij;
    if (is_outlier[k]) {
      Rij = so3::random_rotation_uniform(rng);
      out.truth.outlier_edges.emplace_back(i, j);
    } else {
      const Rotation noise = so3::random_perturbation(rng, config.noise_min_deg, config.noise_max_deg);
      Rij = truth[i] * truth[j].transpose() * noise;
    }
    out.measurements.edges.push_back({i, j, Rij});
  }
  return out;
}

}  // namespace rotsync::synth
