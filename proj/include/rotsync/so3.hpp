#pragma once

// Rotations in SO(3): metrics, logarithm/exponential maps, projection,
// sampling, and the geodesic L1 single average.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "rotsync/error.hpp"

namespace rotsync::so3 {

using Rotation = Eigen::Matrix3d;
using Vector3 = Eigen::Vector3d;
using Rng = std::mt19937_64;

inline constexpr double kPi = std::numbers::pi;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

struct AxisAngle {
  Vector3 axis = Vector3::UnitX();
  double angle = 0.0;  // radians, [0, pi]
};

/// True when R is orthonormal with unit determinant, entrywise within tol.
inline bool is_rotation(const Eigen::Matrix3d& R, double tol = 1e-12) {
  if (!R.allFinite()) return false;
  const Eigen::Matrix3d gram = R * R.transpose() - Eigen::Matrix3d::Identity();
  return gram.cwiseAbs().maxCoeff() <= tol && std::abs(R.determinant() - 1.0) <= tol;
}

inline Eigen::Matrix3d hat(const Vector3& w) {
  Eigen::Matrix3d K;
  K << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return K;
}

/// vee of the skew part: returns w with hat(w) = (M - M^T) / 2.
inline Vector3 vee_skew(const Eigen::Matrix3d& M) {
  return 0.5 * Vector3(M(2, 1) - M(1, 2), M(0, 2) - M(2, 0), M(1, 0) - M(0, 1));
}

/// Rotation angle in [0, pi], computed with atan2 so it stays accurate near 0 and pi.
inline double rotation_angle(const Rotation& R) {
  const double s = vee_skew(R).norm();
  const double c = 0.5 * (R.trace() - 1.0);
  return std::atan2(s, c);
}

inline Rotation exp_map(const Vector3& w) {
  const double theta = w.norm();
  const Eigen::Matrix3d K = hat(w);
  double a;
  double b;
  if (theta < 1e-6) {
    const double t2 = theta * theta;
    a = 1.0 - t2 / 6.0;
    b = 0.5 - t2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / (theta * theta);
  }
  return Eigen::Matrix3d::Identity() + a * K + b * K * K;
}

/// Rotation vector (axis * angle) with angle in [0, pi].
inline Vector3 log_map(const Rotation& R) {
  const Vector3 v = vee_skew(R);
  const double s = v.norm();
  const double c = 0.5 * (R.trace() - 1.0);
  const double theta = std::atan2(s, c);
  if (theta < 1e-6) {
    return v * (1.0 + theta * theta / 6.0);
  }
  if (kPi - theta < 1e-6) {
    // sin(theta) is tiny here; read the axis off the quaternion instead.
    Eigen::Quaterniond q(R);
    if (q.w() < 0.0) q.coeffs() *= -1.0;
    Vector3 axis = q.vec();
    const double n = axis.norm();
    if (n == 0.0) return Vector3::Zero();
    axis /= n;
    return axis * (2.0 * std::atan2(n, q.w()));
  }
  return v * (theta / s);
}

inline AxisAngle to_axis_angle(const Rotation& R) {
  const Vector3 w = log_map(R);
  const double angle = w.norm();
  if (angle == 0.0) return {};
  return {w / angle, angle};
}

inline Rotation from_axis_angle(const Vector3& axis, double angle) {
  return exp_map(axis.normalized() * angle);
}

/// Nearest rotation in Frobenius norm: U diag(1, 1, det(U V^T)) V^T.
template <class Derived>
Rotation project_to_so3(const Eigen::MatrixBase<Derived>& M) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(Eigen::Matrix3d(M), Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector3& sv = svd.singularValues();
  if (!(sv(2) > 1e-12)) {
    throw Error(ErrorCode::RankDeficientInput, "smallest singular value is not above 1e-12");
  }
  const Eigen::Matrix3d& U = svd.matrixU();
  const Eigen::Matrix3d& V = svd.matrixV();
  Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
  D(2, 2) = (U * V.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return U * D * V.transpose();
}

/// Angle of B A^T in degrees, [0, 180].
inline double geodesic_distance(const Rotation& A, const Rotation& B) {
  if (A == B) return 0.0;
  return rad2deg(rotation_angle(B * A.transpose()));
}

inline double chordal_distance(const Rotation& A, const Rotation& B) { return (A - B).norm(); }

inline Rotation rotation_z(double rad) {
  return Eigen::AngleAxisd(rad, Vector3::UnitZ()).toRotationMatrix();
}
inline Rotation rotation_y(double rad) {
  return Eigen::AngleAxisd(rad, Vector3::UnitY()).toRotationMatrix();
}
inline Rotation rotation_x(double rad) {
  return Eigen::AngleAxisd(rad, Vector3::UnitX()).toRotationMatrix();
}

/// Intrinsic ZYX composition Rz(alpha) Ry(beta) Rx(gamma).
inline Rotation from_euler_zyx(double alpha, double beta, double gamma) {
  return rotation_z(alpha) * rotation_y(beta) * rotation_x(gamma);
}

inline Vector3 random_unit_vector(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector3 v;
  do {
    v = Vector3(normal(rng), normal(rng), normal(rng));
  } while (v.norm() < 1e-12);
  return v.normalized();
}

/// Haar-distributed rotation from a normalized Gaussian quaternion.
inline Rotation random_rotation_uniform(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Vector4d q;
  do {
    q = Eigen::Vector4d(normal(rng), normal(rng), normal(rng), normal(rng));
  } while (q.norm() < 1e-12);
  q.normalize();
  return Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix();
}

inline Rotation random_rotation_euler(Rng& rng) {
  std::uniform_real_distribution<double> full_turn(0.0, 2.0 * kPi);
  std::uniform_real_distribution<double> half_turn(-0.5 * kPi, 0.5 * kPi);
  const double alpha = full_turn(rng);
  const double beta = half_turn(rng);
  const double gamma = full_turn(rng);
  return from_euler_zyx(alpha, beta, gamma);
}

/// Rotation with angle uniform in [angle_min, angle_max] degrees and a uniform axis.
inline Rotation random_perturbation(Rng& rng, double angle_min_deg, double angle_max_deg) {
  if (!(angle_min_deg >= 0.0 && angle_min_deg <= angle_max_deg && angle_max_deg <= 180.0)) {
    throw Error(ErrorCode::InvalidRange, "perturbation angles must satisfy 0 <= min <= max <= 180");
  }
  const Vector3 axis = random_unit_vector(rng);
  double angle_deg = angle_min_deg;
  if (angle_max_deg > angle_min_deg) {
    angle_deg = std::uniform_real_distribution<double>(angle_min_deg, angle_max_deg)(rng);
  }
  return from_axis_angle(axis, deg2rad(angle_deg));
}

struct WeiszfeldOptions {
  double delta = 1e-8;        // rad, floor on distances in the weights
  double tolerance = 1e-10;   // rad, stop when the update angle drops below
  int max_iterations = 100;
};

/// Geodesic L1 mean (single rotation averaging) by Weiszfeld iteration in the tangent space.
inline Rotation l1_single_average(std::span<const Rotation> rotations,
                                  const WeiszfeldOptions& options = {}) {
  if (rotations.empty()) throw Error(ErrorCode::EmptyInput, "cannot average an empty set");
  const std::size_t n = rotations.size();

  // Start from the data point with the smallest summed distance to the others.
  std::size_t best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double cost = 0.0;
    for (std::size_t j = 0; j < n; ++j) cost += rotation_angle(rotations[i].transpose() * rotations[j]);
    if (cost < best_cost) {
      best_cost = cost;
      best = i;
    }
  }

  Rotation R = rotations[best];
  for (int it = 0; it < options.max_iterations; ++it) {
    Vector3 step = Vector3::Zero();
    double weight_sum = 0.0;
    for (const Rotation& Ri : rotations) {
      const Vector3 v = log_map(R.transpose() * Ri);
      const double w = 1.0 / std::max(v.norm(), options.delta);
      step += w * v;
      weight_sum += w;
    }
    step /= weight_sum;
    R = project_to_so3(R * exp_map(step));
    if (step.norm() < options.tolerance) break;
  }
  return R;
}

inline Rotation l1_single_average(const std::vector<Rotation>& rotations,
                                  const WeiszfeldOptions& options = {}) {
  return l1_single_average(std::span<const Rotation>(rotations), options);
}

}  // namespace rotsync::so3
