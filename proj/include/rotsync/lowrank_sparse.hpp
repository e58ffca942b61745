#pragma once

// Low-rank plus sparse decomposition kernels: bilateral random projection,
// shrinkage operators, and the GoDec family of block-coordinate solvers
// (RPCA, matrix completion, and robust completion R-GoDec).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "rotsync/error.hpp"

namespace rotsync::lowrank {

using Eigen::Index;
using Eigen::MatrixXd;
using Rng = std::mt19937_64;

/// 0/1 mask of specified entries (Omega). The complement is the unspecified set.
class SparsityPattern {
 public:
  SparsityPattern() = default;

  explicit SparsityPattern(MatrixXd mask) : mask_(std::move(mask)) {
    for (Index k = 0; k < mask_.size(); ++k) {
      const double v = mask_.data()[k];
      if (v != 0.0 && v != 1.0) throw Error(ErrorCode::InvalidConfig, "pattern entries must be 0 or 1");
    }
  }

  static SparsityPattern full(Index rows, Index cols) {
    return SparsityPattern(MatrixXd::Ones(rows, cols));
  }

  Index rows() const { return mask_.rows(); }
  Index cols() const { return mask_.cols(); }
  const MatrixXd& mask() const { return mask_; }
  MatrixXd complement() const { return MatrixXd::Ones(rows(), cols()) - mask_; }

  /// Number of specified entries.
  Index count() const { return static_cast<Index>(mask_.sum()); }
  bool is_complete() const { return count() == mask_.size(); }

  /// P_Omega(M)
  MatrixXd project(const MatrixXd& M) const { return M.cwiseProduct(mask_); }
  /// P_complement(M)
  MatrixXd project_complement(const MatrixXd& M) const { return M - M.cwiseProduct(mask_); }

 private:
  MatrixXd mask_;
};

struct DecompositionResult {
  MatrixXd L;
  MatrixXd S1;  // outliers (GoDec S, R-GoDec S1); empty for godec_mc
  MatrixXd S2;  // completion term (GoDec-MC S, R-GoDec S2); empty for godec
  std::vector<double> objective_trace;
  int iterations = 0;
  bool converged = false;  // false means max_iter was exhausted
  double relative_residual = 0.0;
  int brp_fallbacks = 0;
};

inline MatrixXd truncated_svd_approx(const MatrixXd& M, Index r) {
  if (r < 0 || r > std::min(M.rows(), M.cols())) {
    throw Error(ErrorCode::InvalidRange, "rank must not exceed min(rows, cols)");
  }
  if (r == 0 || M.size() == 0) return MatrixXd::Zero(M.rows(), M.cols());
  Eigen::BDCSVD<MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
         svd.matrixV().leftCols(r).transpose();
}

namespace detail {

inline MatrixXd orthonormal_basis(const MatrixXd& Y) {
  Eigen::HouseholderQR<MatrixXd> qr(Y);
  return qr.householderQ() * MatrixXd::Identity(Y.rows(), Y.cols());
}

/// Squared condition number of the r x r Gram factor Y^T Y, read off the R factor of Y.
inline double gram_condition(const MatrixXd& Y) {
  Eigen::HouseholderQR<MatrixXd> qr(Y);
  const Eigen::VectorXd diag = qr.matrixQR().diagonal().cwiseAbs();
  const double hi = diag.maxCoeff();
  const double lo = diag.minCoeff();
  if (!(hi > 0.0) || !(lo > 0.0)) return std::numeric_limits<double>::infinity();
  const double c = hi / lo;
  return c * c;
}

struct RangeEstimate {
  MatrixXd basis;  // rows x r, orthonormal columns
  int draws = 0;
  bool svd_fallback = false;
};

inline MatrixXd gaussian_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd A(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) A(i, j) = normal(rng);
  return A;
}

/// Range of the bilateral random projection Y1 = (M M^T)^q M A1.
/// The BRP estimate Y1 (Y1^T Y1)^-1 Y1^T M equals Q Q^T M for Q = orth(Y1).
inline RangeEstimate brp_range(const MatrixXd& M, Index r, int power_iters, Rng& rng) {
  constexpr int kMaxDraws = 4;  // first draw plus three retries
  constexpr double kMaxGramCondition = 1e12;
  RangeEstimate out;
  for (int draw = 0; draw < kMaxDraws; ++draw) {
    ++out.draws;
    const MatrixXd A1 = gaussian_matrix(M.cols(), r, rng);
    MatrixXd Y1 = M * A1;
    for (int q = 0; q < power_iters; ++q) {
      const MatrixXd Y2 = M.transpose() * orthonormal_basis(Y1);
      Y1 = M * orthonormal_basis(Y2);
    }
    if (gram_condition(Y1) <= kMaxGramCondition) {
      out.basis = orthonormal_basis(Y1);
      return out;
    }
  }
  out.svd_fallback = true;
  if (M.isZero(0.0)) {
    out.basis = MatrixXd::Identity(M.rows(), r);
  } else {
    Eigen::BDCSVD<MatrixXd> svd(M, Eigen::ComputeThinU);
    out.basis = svd.matrixU().leftCols(r);
  }
  return out;
}

/// Rank-r update used by every solver. The new L is the projection of M onto
/// either the fresh BRP range or the previous iterate's range, whichever
/// captures more of M; the latter is never worse than the previous L, so the
/// L step cannot increase the objective.
class LowRankUpdater {
 public:
  LowRankUpdater(Index rank, int power_iters) : rank_(rank), power_iters_(power_iters) {}

  MatrixXd update(const MatrixXd& M, Rng& rng) {
    RangeEstimate est = brp_range(M, rank_, power_iters_, rng);
    if (est.svd_fallback) ++fallbacks_;
    MatrixXd coeffs = est.basis.transpose() * M;
    if (previous_) {
      MatrixXd prev_coeffs = previous_->transpose() * M;
      if (prev_coeffs.squaredNorm() > coeffs.squaredNorm()) {
        return *previous_ * prev_coeffs;
      }
    }
    previous_ = std::move(est.basis);
    return *previous_ * coeffs;
  }

  int fallbacks() const { return fallbacks_; }

 private:
  Index rank_;
  int power_iters_;
  std::optional<MatrixXd> previous_;
  int fallbacks_ = 0;
};

inline void check_rank(const MatrixXd& M, Index r) {
  if (r < 1 || r > std::min(M.rows(), M.cols())) {
    throw Error(ErrorCode::InvalidRange, "rank must be in [1, min(rows, cols)]");
  }
}

inline void check_blocks(const MatrixXd& M) {
  if (M.rows() % 3 != 0 || M.cols() % 3 != 0) {
    throw Error(ErrorCode::BadBlockShape, "dimensions must be multiples of 3");
  }
}

inline double relative(double num, double den) { return den > 0.0 ? num / den : num; }

}  // namespace detail

/// Rank-r approximation by bilateral random projection with `power_iters` power rounds.
/// Falls back to the truncated SVD when four Gaussian draws all give a singular projection.
inline MatrixXd brp_lowrank_approx(const MatrixXd& M, Index r, int power_iters, Rng& rng) {
  detail::check_rank(M, r);
  const detail::RangeEstimate est = detail::brp_range(M, r, power_iters, rng);
  return est.basis * (est.basis.transpose() * M);
}

inline MatrixXd soft_threshold(const MatrixXd& M, double lambda) {
  if (lambda < 0.0) throw Error(ErrorCode::InvalidRange, "lambda must be nonnegative");
  return M.unaryExpr([lambda](double x) {
    const double mag = std::abs(x) - lambda;
    return mag > 0.0 ? std::copysign(mag, x) : 0.0;
  });
}

/// Keeps the k largest-magnitude entries; ties go to the smaller (row, col).
inline MatrixXd hard_threshold_topk(const MatrixXd& M, Index k) {
  if (k < 0 || k > M.size()) throw Error(ErrorCode::InvalidRange, "k must be in [0, rows*cols]");
  MatrixXd out = MatrixXd::Zero(M.rows(), M.cols());
  if (k == 0) return out;
  std::vector<Index> order(static_cast<std::size_t>(M.size()));
  std::iota(order.begin(), order.end(), Index{0});
  const Index rows = M.rows();
  auto before = [&](Index a, Index b) {
    const double va = std::abs(M.data()[a]);
    const double vb = std::abs(M.data()[b]);
    if (va != vb) return va > vb;
    const Index ra = a % rows, rb = b % rows;
    if (ra != rb) return ra < rb;
    return a / rows < b / rows;
  };
  std::partial_sort(order.begin(), order.begin() + k, order.end(), before);
  for (Index i = 0; i < k; ++i) out.data()[order[i]] = M.data()[order[i]];
  return out;
}

/// Group shrinkage on 3x3 blocks: B -> B * max(1 - lambda / ||B||_F, 0).
inline MatrixXd block_soft_threshold(const MatrixXd& M, double lambda) {
  detail::check_blocks(M);
  if (lambda < 0.0) throw Error(ErrorCode::InvalidRange, "lambda must be nonnegative");
  MatrixXd out = M;
  for (Index bj = 0; bj < M.cols(); bj += 3) {
    for (Index bi = 0; bi < M.rows(); bi += 3) {
      auto block = out.block<3, 3>(bi, bj);
      const double norm = block.norm();
      const double factor = norm > 0.0 ? std::max(1.0 - lambda / norm, 0.0) : 0.0;
      block *= factor;
    }
  }
  return out;
}

/// Sum of Frobenius norms of the 3x3 blocks.
inline double block_l21_norm(const MatrixXd& M) {
  detail::check_blocks(M);
  double total = 0.0;
  for (Index bj = 0; bj < M.cols(); bj += 3)
    for (Index bi = 0; bi < M.rows(); bi += 3) total += M.block<3, 3>(bi, bj).norm();
  return total;
}

/// lambda = sigma * sqrt(2 ln m)
inline double auto_lambda(double sigma, Index m) {
  if (m < 1) throw Error(ErrorCode::InvalidRange, "m must be at least 1");
  if (sigma < 0.0) throw Error(ErrorCode::InvalidRange, "sigma must be nonnegative");
  return sigma * std::sqrt(2.0 * std::log(static_cast<double>(m)));
}

/// Numerical rank: singular values above rel_tol * sigma_max.
inline Index numerical_rank(const MatrixXd& M, double rel_tol = 1e-9) {
  if (M.size() == 0) return 0;
  Eigen::BDCSVD<MatrixXd> svd(M);
  const Eigen::VectorXd& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  return (s.array() > rel_tol * s(0)).count();
}

struct SolverOptions {
  Index rank = 3;
  double eps = 1e-10;
  int max_iter = 100;
  int power_iters = 2;
};

struct Cardinality {
  Index k = 0;
};
struct Weight {
  double lambda = 0.0;
};
using Sparsity = std::variant<Cardinality, Weight>;

enum class ShrinkageMode { Scalar, Block };

/// GoDec for RPCA: X = L + S with rank(L) <= r and S either k-sparse (hard
/// thresholding) or l1-penalized with weight lambda (soft thresholding).
inline DecompositionResult godec(const MatrixXd& X, const Sparsity& sparsity,
                                 const SolverOptions& opt, Rng& rng) {
  detail::check_rank(X, opt.rank);
  if (!(opt.eps > 0.0)) throw Error(ErrorCode::InvalidRange, "eps must be positive");
  if (const auto* w = std::get_if<Weight>(&sparsity); w && w->lambda < 0.0) {
    throw Error(ErrorCode::InvalidRange, "lambda must be nonnegative");
  }

  DecompositionResult res;
  res.L = X;
  res.S1 = MatrixXd::Zero(X.rows(), X.cols());
  const double denom = X.squaredNorm();
  detail::LowRankUpdater low_rank(opt.rank, opt.power_iters);

  do {
    ++res.iterations;
    res.L = low_rank.update(X - res.S1, rng);
    const MatrixXd R = X - res.L;
    double penalty = 0.0;
    if (const auto* card = std::get_if<Cardinality>(&sparsity)) {
      res.S1 = hard_threshold_topk(R, card->k);
    } else {
      const double lambda = std::get<Weight>(sparsity).lambda;
      res.S1 = soft_threshold(R, lambda);
      penalty = lambda * res.S1.cwiseAbs().sum();
    }
    const double resid = (R - res.S1).squaredNorm();
    const bool weighted = std::holds_alternative<Weight>(sparsity);
    res.objective_trace.push_back(weighted ? 0.5 * resid + penalty : resid);
    res.relative_residual = detail::relative(resid, denom);
    res.converged = res.relative_residual <= opt.eps;
  } while (!res.converged && res.iterations < opt.max_iter);

  res.brp_fallbacks = low_rank.fallbacks();
  return res;
}

/// GoDec for matrix completion: P_Omega(X) = L + S with supp(S) on the complement.
inline DecompositionResult godec_mc(const MatrixXd& X, const SparsityPattern& omega,
                                    const SolverOptions& opt, Rng& rng) {
  detail::check_rank(X, opt.rank);
  if (omega.rows() != X.rows() || omega.cols() != X.cols()) {
    throw Error(ErrorCode::InvalidConfig, "pattern shape does not match the data");
  }
  if (!(opt.eps > 0.0)) throw Error(ErrorCode::InvalidRange, "eps must be positive");

  const MatrixXd PX = omega.project(X);
  const double denom = PX.squaredNorm();
  DecompositionResult res;
  res.L = PX;
  res.S2 = MatrixXd::Zero(X.rows(), X.cols());
  detail::LowRankUpdater low_rank(opt.rank, opt.power_iters);

  do {
    ++res.iterations;
    res.L = low_rank.update(PX - res.S2, rng);
    res.S2 = -omega.project_complement(res.L);
    const double resid = (PX - res.L - res.S2).squaredNorm();
    res.objective_trace.push_back(resid);
    res.relative_residual = detail::relative(resid, denom);
    res.converged = res.relative_residual <= opt.eps;
  } while (!res.converged && res.iterations < opt.max_iter);

  res.brp_fallbacks = low_rank.fallbacks();
  return res;
}

/// R-GoDec: P_Omega(X) = L + S1 + S2, S1 sparse on Omega (outliers, l1 or
/// block l2,1 penalty), S2 on the complement (completion).
inline DecompositionResult rgodec(const MatrixXd& X, const SparsityPattern& omega, double lambda,
                                  ShrinkageMode mode, const SolverOptions& opt, Rng& rng) {
  detail::check_rank(X, opt.rank);
  if (omega.rows() != X.rows() || omega.cols() != X.cols()) {
    throw Error(ErrorCode::InvalidConfig, "pattern shape does not match the data");
  }
  if (mode == ShrinkageMode::Block) detail::check_blocks(X);
  if (lambda < 0.0) throw Error(ErrorCode::InvalidRange, "lambda must be nonnegative");
  if (!(opt.eps > 0.0)) throw Error(ErrorCode::InvalidRange, "eps must be positive");

  const MatrixXd PX = omega.project(X);
  const double denom = PX.squaredNorm();
  DecompositionResult res;
  res.L = PX;
  res.S1 = MatrixXd::Zero(X.rows(), X.cols());
  res.S2 = MatrixXd::Zero(X.rows(), X.cols());
  detail::LowRankUpdater low_rank(opt.rank, opt.power_iters);

  do {
    ++res.iterations;
    res.L = low_rank.update(PX - res.S1 - res.S2, rng);
    const MatrixXd R = omega.project(X - res.L);
    double penalty;
    if (mode == ShrinkageMode::Block) {
      res.S1 = block_soft_threshold(R, lambda);
      penalty = lambda * block_l21_norm(res.S1);
    } else {
      res.S1 = soft_threshold(R, lambda);
      penalty = lambda * res.S1.cwiseAbs().sum();
    }
    res.S2 = -omega.project_complement(res.L);
    const double resid = (PX - res.L - res.S1 - res.S2).squaredNorm();
    res.objective_trace.push_back(0.5 * resid + penalty);
    res.relative_residual = detail::relative(resid, denom);
    res.converged = res.relative_residual <= opt.eps;
  } while (!res.converged && res.iterations < opt.max_iter);

  res.brp_fallbacks = low_rank.fallbacks();
  return res;
}

}  // namespace rotsync::lowrank
