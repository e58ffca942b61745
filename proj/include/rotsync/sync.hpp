#pragma once

// Rotation synchronization: block observation matrix assembly and the
// R-GoDec, spectral (EIG) and Cauchy-IRLS spectral solvers.

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rotsync/error.hpp"
#include "rotsync/lowrank_sparse.hpp"
#include "rotsync/so3.hpp"

namespace rotsync::sync {

using Eigen::Index;
using Eigen::MatrixXd;
using lowrank::SparsityPattern;
using so3::Rotation;
using Rng = std::mt19937_64;

/// Relative rotation between frames i < j (0-based), ideally R_i R_j^T.
struct Edge {
  int i = 0;
  int j = 0;
  Rotation R = Rotation::Identity();
};

struct RelativeMeasurementSet {
  int n = 0;
  std::vector<Edge> edges;
};

using EdgeKey = std::pair<int, int>;

/// Throws InvalidEdge, DuplicateEdge or DisconnectedGraph.
inline void validate(const RelativeMeasurementSet& m) {
  if (m.n < 1) throw Error(ErrorCode::InvalidConfig, "at least one frame is required");
  std::set<EdgeKey> seen;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(m.n));
  for (const Edge& e : m.edges) {
    if (e.i < 0 || e.j < 0 || e.i >= m.n || e.j >= m.n || e.i >= e.j) {
      throw Error(ErrorCode::InvalidEdge, "edge (" + std::to_string(e.i + 1) + "," +
                                              std::to_string(e.j + 1) + ") violates 1 <= i < j <= n");
    }
    if (!seen.emplace(e.i, e.j).second) {
      throw Error(ErrorCode::DuplicateEdge,
                  "edge (" + std::to_string(e.i + 1) + "," + std::to_string(e.j + 1) + ") repeated");
    }
    adj[e.i].push_back(e.j);
    adj[e.j].push_back(e.i);
  }
  std::vector<bool> visited(static_cast<std::size_t>(m.n), false);
  std::queue<int> frontier;
  frontier.push(0);
  visited[0] = true;
  int reached = 1;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v : adj[u]) {
      if (!visited[v]) {
        visited[v] = true;
        ++reached;
        frontier.push(v);
      }
    }
  }
  if (reached != m.n) {
    throw Error(ErrorCode::DisconnectedGraph,
                std::to_string(m.n - reached) + " frame(s) unreachable from frame 1");
  }
}

/// The 3n x 3n matrix of relative rotations with its pattern Omega = A (x) 1_3x3.
struct BlockObservationMatrix {
  int n = 0;
  MatrixXd data;
  SparsityPattern pattern;
  MatrixXd adjacency;  // n x n, unit diagonal
  std::vector<EdgeKey> edges;

  /// Number of specified scalar entries (9 per observed block, diagonal included).
  Index specified_entries() const { return pattern.count(); }
};

inline BlockObservationMatrix assemble(const RelativeMeasurementSet& m) {
  validate(m);
  const Index dim = 3 * static_cast<Index>(m.n);
  BlockObservationMatrix obs;
  obs.n = m.n;
  obs.data = MatrixXd::Zero(dim, dim);
  obs.adjacency = MatrixXd::Identity(m.n, m.n);
  for (int i = 0; i < m.n; ++i) obs.data.block<3, 3>(3 * i, 3 * i).setIdentity();
  obs.edges.reserve(m.edges.size());
  for (const Edge& e : m.edges) {
    obs.data.block<3, 3>(3 * e.i, 3 * e.j) = e.R;
    obs.data.block<3, 3>(3 * e.j, 3 * e.i) = e.R.transpose();
    obs.adjacency(e.i, e.j) = 1.0;
    obs.adjacency(e.j, e.i) = 1.0;
    obs.edges.emplace_back(e.i, e.j);
  }
  obs.pattern = SparsityPattern(
      MatrixXd(Eigen::kroneckerProduct(obs.adjacency, Eigen::Matrix3d::Ones())));
  return obs;
}

enum class EdgeLabel { Inlier, Outlier };

struct SyncSolution {
  std::vector<Rotation> rotations;
  std::vector<EdgeKey> edges;
  std::vector<EdgeLabel> edge_labels;  // parallel to edges
  std::string method;
  int iterations = 0;
  double runtime_seconds = 0.0;
  std::vector<double> objective_trace;
  double lambda = 0.0;            // R-GoDec only
  std::vector<double> weights;    // EIG-IRLS only, parallel to edges
  bool converged = true;
};

/// (parameter count of X, minimal number of specified entries): both 9 (2n - 1).
inline std::pair<long long, long long> dof_check(long long n) {
  if (n < 1) throw Error(ErrorCode::InvalidRange, "n must be positive");
  const long long v = 9 * (2 * n - 1);
  return {v, v};
}

namespace detail {

/// Right-multiplies every rotation so that frame 0 becomes the identity.
inline void fix_gauge(std::vector<Rotation>& rotations) {
  if (rotations.empty()) return;
  const Rotation ref = rotations.front().transpose();
  for (Rotation& R : rotations) R = so3::project_to_so3(R * ref);
}

inline std::vector<Rotation> project_blocks(const MatrixXd& stacked, int n) {
  std::vector<Rotation> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    try {
      out.push_back(so3::project_to_so3(stacked.block<3, 3>(3 * i, 0)));
    } catch (const Error&) {
      throw Error(ErrorCode::ExtractionDegenerate,
                  "block " + std::to_string(i + 1) + " of the estimate is rank-deficient");
    }
  }
  return out;
}

inline int max_degree_node(const MatrixXd& adjacency) {
  Index best = 0;
  adjacency.rowwise().sum().maxCoeff(&best);  // first maximum, lowest index
  return static_cast<int>(best);
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace detail

struct RgodecParams {
  std::optional<double> lambda;  // nullopt: sigma * sqrt(2 ln m)
  double sigma = 0.02;
  double eps = 1e-10;
  int max_iter = 100;
  int power_iters = 2;
  double outlier_threshold = 1e-9;  // Frobenius norm of an S1 block
};

inline SyncSolution solve_rgodec(const BlockObservationMatrix& obs, const RgodecParams& params,
                                 Rng& rng) {
  const detail::Stopwatch clock;
  double lambda = 0.0;
  if (params.lambda) {
    lambda = *params.lambda;
  } else {
    if (params.sigma < 0.0) throw Error(ErrorCode::InvalidRange, "sigma must be nonnegative");
    lambda = lowrank::auto_lambda(params.sigma, obs.specified_entries());
  }

  lowrank::SolverOptions opt;
  opt.rank = 3;
  opt.eps = params.eps;
  opt.max_iter = params.max_iter;
  opt.power_iters = params.power_iters;
  const lowrank::DecompositionResult dec =
      lowrank::rgodec(obs.data, obs.pattern, lambda, lowrank::ShrinkageMode::Block, opt, rng);

  const int c = detail::max_degree_node(obs.adjacency);
  SyncSolution sol;
  sol.rotations = detail::project_blocks(dec.L.middleCols<3>(3 * c), obs.n);
  detail::fix_gauge(sol.rotations);
  sol.edges = obs.edges;
  sol.edge_labels.reserve(obs.edges.size());
  for (const auto& [i, j] : obs.edges) {
    const double norm = dec.S1.block<3, 3>(3 * i, 3 * j).norm();
    sol.edge_labels.push_back(norm > params.outlier_threshold ? EdgeLabel::Outlier : EdgeLabel::Inlier);
  }
  sol.method = "rgodec";
  sol.iterations = dec.iterations;
  sol.objective_trace = dec.objective_trace;
  sol.lambda = lambda;
  sol.converged = dec.converged;
  sol.runtime_seconds = clock.seconds();
  return sol;
}

/// Row sums of a (weighted) adjacency matrix, diagonal included: the diagonal of D.
inline Eigen::VectorXd degrees(const MatrixXd& weighted_adjacency) { return weighted_adjacency.rowwise().sum(); }

namespace detail {

/// Top three eigenvectors of D^-1 W, W = (A_w (x) 1) o X, through the
/// similar symmetric matrix D^-1/2 W D^-1/2.
inline std::vector<Rotation> spectral_rotations(const BlockObservationMatrix& obs,
                                                const MatrixXd& weighted_adjacency) {
  const int n = obs.n;
  const Eigen::VectorXd degree = degrees(weighted_adjacency);
  for (int i = 0; i < n; ++i) {
    if (!(degree(i) > 0.0)) {
      throw Error(ErrorCode::ZeroDegreeNode, "frame " + std::to_string(i + 1) + " has zero degree");
    }
  }
  const Eigen::VectorXd inv_sqrt = degree.cwiseSqrt().cwiseInverse();
  MatrixXd sym(3 * n, 3 * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double s = weighted_adjacency(i, j) * inv_sqrt(i) * inv_sqrt(j);
      sym.block<3, 3>(3 * i, 3 * j) = s * obs.data.block<3, 3>(3 * i, 3 * j);
    }
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::ExtractionDegenerate, "eigendecomposition failed");
  }
  MatrixXd top = eig.eigenvectors().rightCols<3>();  // eigenvalues ascending
  for (int i = 0; i < n; ++i) top.middleRows<3>(3 * i) *= inv_sqrt(i);

  // The eigenvector basis may be a reflection of the true one.
  double det_sum = 0.0;
  for (int i = 0; i < n; ++i) det_sum += top.block<3, 3>(3 * i, 0).determinant();
  if (det_sum < 0.0) top.col(2) *= -1.0;

  std::vector<Rotation> rotations = project_blocks(top, n);
  fix_gauge(rotations);
  return rotations;
}

inline MatrixXd edge_weight_matrix(const BlockObservationMatrix& obs, const std::vector<double>& w) {
  MatrixXd A = MatrixXd::Identity(obs.n, obs.n);
  for (std::size_t e = 0; e < obs.edges.size(); ++e) {
    const auto [i, j] = obs.edges[e];
    A(i, j) = w[e];
    A(j, i) = w[e];
  }
  return A;
}

}  // namespace detail

/// Spectral relaxation. `weights` is an optional n x n weighted adjacency with
/// entries in [0, 1]; entries off the measurement graph are ignored.
inline SyncSolution solve_eig(const BlockObservationMatrix& obs,
                              const std::optional<MatrixXd>& weights = std::nullopt) {
  const detail::Stopwatch clock;
  MatrixXd A = obs.adjacency;
  if (weights) {
    if (weights->rows() != obs.n || weights->cols() != obs.n) {
      throw Error(ErrorCode::LengthMismatch, "weight matrix must be n x n");
    }
    if (weights->minCoeff() < 0.0 || weights->maxCoeff() > 1.0) {
      throw Error(ErrorCode::InvalidRange, "weights must lie in [0, 1]");
    }
    A = weights->cwiseProduct(obs.adjacency);
  }
  SyncSolution sol;
  sol.rotations = detail::spectral_rotations(obs, A);
  sol.edges = obs.edges;
  sol.edge_labels.assign(obs.edges.size(), EdgeLabel::Inlier);
  sol.method = "eig";
  sol.iterations = 1;
  sol.runtime_seconds = clock.seconds();
  return sol;
}

inline double cauchy_weight(double residual, double c) {
  const double t = residual / c;
  return 1.0 / (1.0 + t * t);
}

enum class ResidualScaling {
  None,  // weight = cauchy(r, c)
  Median,  // weight = cauchy(r / s, c) with s = median(r) / 0.6745
};

struct IrlsParams {
  int max_rounds = 50;
  double c = 2.385;
  double tolerance = 1e-6;  // max absolute weight change
  ResidualScaling scaling = ResidualScaling::Median;
  double min_scale = 1e-6;
};

/// Robust scale of nonnegative residual norms: their median, normalized for Gaussian data.
inline double robust_scale(std::vector<double> r) {
  if (r.empty()) return 0.0;
  const std::size_t mid = r.size() / 2;
  std::nth_element(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(mid), r.end());
  double med = r[mid];
  if (r.size() % 2 == 0) med = 0.5 * (med + *std::max_element(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(mid)));
  return med / 0.6745;
}

/// Spectral relaxation re-solved with Cauchy weights on the chordal residuals
/// r_ij = ||R_i R_j^T - R_ij||_F until the weights settle.
inline SyncSolution solve_eig_irls(const BlockObservationMatrix& obs, const IrlsParams& params = {}) {
  const detail::Stopwatch clock;
  if (params.max_rounds < 1) throw Error(ErrorCode::InvalidRange, "max_rounds must be positive");
  if (!(params.c > 0.0)) throw Error(ErrorCode::InvalidRange, "c must be positive");

  const std::size_t m = obs.edges.size();
  std::vector<double> w(m, 1.0);
  std::vector<double> residual(m, 0.0);
  std::vector<Rotation> rotations;
  int rounds = 0;
  bool settled = false;
  std::vector<double> trace;
  while (rounds < params.max_rounds && !settled) {
    ++rounds;
    rotations = detail::spectral_rotations(obs, detail::edge_weight_matrix(obs, w));
    double cost = 0.0;
    for (std::size_t e = 0; e < m; ++e) {
      const auto [i, j] = obs.edges[e];
      residual[e] = (rotations[i] * rotations[j].transpose() - obs.data.block<3, 3>(3 * i, 3 * j)).norm();
      cost += residual[e] * residual[e];
    }
    trace.push_back(cost);
    double scale = 1.0;
    if (params.scaling == ResidualScaling::Median) scale = std::max(robust_scale(residual), params.min_scale);
    double change = 0.0;
    for (std::size_t e = 0; e < m; ++e) {
      const double next = cauchy_weight(residual[e] / scale, params.c);
      change = std::max(change, std::abs(next - w[e]));
      w[e] = next;
    }
    settled = change < params.tolerance;
  }

  SyncSolution sol;
  sol.rotations = std::move(rotations);
  sol.edges = obs.edges;
  sol.weights = w;
  sol.edge_labels.reserve(m);
  for (double we : w) sol.edge_labels.push_back(we < 0.5 ? EdgeLabel::Outlier : EdgeLabel::Inlier);
  sol.method = "eig-irls";
  sol.iterations = rounds;
  sol.objective_trace = std::move(trace);
  sol.converged = settled;
  sol.runtime_seconds = clock.seconds();
  return sol;
}

}  // namespace rotsync::sync
