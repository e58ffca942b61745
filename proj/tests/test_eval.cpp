#include <cmath>

#include "test_helpers.hpp"

namespace {

using namespace rotsync;
using so3::Rotation;

TEST(Align, IdentityWhenEqual) {
  so3::Rng rng(1);
  const auto gt = test_util::random_rotations(10, rng);
  for (auto gauge : {eval::Gauge::Left, eval::Gauge::Right}) {
    const auto out = eval::align(gt, gt, gauge);
    for (std::size_t i = 0; i < gt.size(); ++i) EXPECT_LT((out[i] - gt[i]).norm(), 1e-12);
  }
}

TEST(Align, RemovesGlobalRotation) {
  so3::Rng rng(2);
  const auto gt = test_util::random_rotations(10, rng);
  const Rotation Q = so3::random_rotation_uniform(rng);
  std::vector<Rotation> left;
  std::vector<Rotation> right;
  for (const Rotation& R : gt) {
    left.push_back(Q * R);
    right.push_back(R * Q);
  }
  const auto a = eval::align(left, gt, eval::Gauge::Left);
  const auto b = eval::align(right, gt, eval::Gauge::Right);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    EXPECT_LT(so3::geodesic_distance(a[i], gt[i]), 1e-6);
    EXPECT_LT(so3::geodesic_distance(b[i], gt[i]), 1e-6);
  }
}

TEST(Align, BoundedPerturbationsStayBounded) {
  so3::Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto gt = test_util::random_rotations(20, rng);
    const Rotation Q = so3::random_rotation_uniform(rng);
    std::vector<Rotation> est;
    for (const Rotation& R : gt) est.push_back(Q * R * so3::random_perturbation(rng, 0.0, 2.0));
    const auto out = eval::align(est, gt, eval::Gauge::Left);
    for (std::size_t i = 0; i < gt.size(); ++i) EXPECT_LE(so3::geodesic_distance(out[i], gt[i]), 4.0);
  }
}

TEST(Align, LengthMismatch) {
  so3::Rng rng(4);
  try {
    eval::align(test_util::random_rotations(3, rng), test_util::random_rotations(4, rng));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
  }
}

TEST(Align, InvariantToGlobalPreRotation) {
  so3::Rng rng(5);
  const auto gt = test_util::random_rotations(15, rng);
  std::vector<Rotation> est;
  for (const Rotation& R : gt) est.push_back(R * so3::random_perturbation(rng, 0.0, 8.0));
  const Rotation Q = so3::random_rotation_uniform(rng);
  std::vector<Rotation> moved;
  for (const Rotation& R : est) moved.push_back(R * Q);
  const auto a = eval::error_report(eval::align(est, gt, eval::Gauge::Right), gt);
  const auto b = eval::error_report(eval::align(moved, gt, eval::Gauge::Right), gt);
  for (std::size_t i = 0; i < gt.size(); ++i) EXPECT_NEAR(a.per_node_errors[i], b.per_node_errors[i], 1e-9);
}

TEST(ErrorReport, Examples) {
  so3::Rng rng(6);
  const auto gt = test_util::random_rotations(5, rng);
  const auto zero = eval::error_report(gt, gt, 1.5);
  EXPECT_EQ(zero.mean, 0.0);
  EXPECT_EQ(zero.median, 0.0);
  EXPECT_EQ(zero.max, 0.0);
  EXPECT_EQ(zero.runtime_seconds, 1.5);

  auto est = gt;
  est[2] = est[2] * so3::from_axis_angle(so3::random_unit_vector(rng), so3::deg2rad(10.0));
  const auto one = eval::error_report(est, gt);
  EXPECT_NEAR(one.max, 10.0, 1e-9);
  EXPECT_EQ(one.median, 0.0);
  EXPECT_EQ(one.histogram.counts.size(), static_cast<std::size_t>(std::ceil(one.max)));
  EXPECT_EQ(one.histogram.counts.back(), 1);
  EXPECT_EQ(one.histogram.counts.front(), 4);
}

TEST(ErrorReport, PlantedAngles) {
  so3::Rng rng(7);
  const auto gt = test_util::random_rotations(30, rng);
  std::vector<Rotation> est;
  std::vector<double> planted;
  std::uniform_real_distribution<double> angle(0.0, 170.0);
  for (const Rotation& R : gt) {
    planted.push_back(angle(rng));
    est.push_back(so3::from_axis_angle(so3::random_unit_vector(rng), so3::deg2rad(planted.back())) * R);
  }
  const auto rep = eval::error_report(est, gt);
  for (std::size_t i = 0; i < gt.size(); ++i) EXPECT_NEAR(rep.per_node_errors[i], planted[i], 1e-9);
  int total = 0;
  for (int c : rep.histogram.counts) total += c;
  EXPECT_EQ(total, 30);
}

eval::SweepSpec small_spec() {
  eval::SweepSpec spec;
  spec.variable = eval::SweepVariable::Outliers;
  spec.grid = {0.0, 0.2};
  spec.fixed.n = 20;
  spec.fixed.missing_fraction = 0.3;
  spec.fixed.noise_min_deg = 3.0;
  spec.fixed.noise_max_deg = 3.0;
  spec.fixed.seed = 42;
  spec.trials = 3;
  return spec;
}

TEST(Sweep, ExactDataGivesZeroError) {
  eval::SweepSpec spec;
  spec.variable = eval::SweepVariable::Outliers;
  spec.grid = {0.0};
  spec.fixed.n = 30;
  spec.fixed.missing_fraction = 0.5;
  spec.trials = 1;
  spec.rgodec.eps = 1e-20;  // run to machine precision rather than the default tolerance
  for (const auto& row : eval::run_sweep(spec)) {
    EXPECT_FALSE(row.failed) << row.error;
    EXPECT_LT(row.mean_err, 1e-6) << row.method;
  }
}

TEST(Sweep, DeterministicAndOrdered) {
  const auto spec = small_spec();
  const auto a = eval::run_sweep(spec);
  const auto b = eval::run_sweep(spec);
  ASSERT_EQ(a.size(), 3u * 2u * 4u);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].method, b[k].method);
    EXPECT_EQ(a[k].value, b[k].value);
    EXPECT_EQ(a[k].trial, b[k].trial);
    EXPECT_EQ(a[k].mean_err, b[k].mean_err);
    EXPECT_EQ(a[k].median_err, b[k].median_err);
  }
  EXPECT_EQ(a.front().method, "eig");
  EXPECT_EQ(a.back().method, "rgodec");
  EXPECT_TRUE(a[3].is_average());
}

TEST(Sweep, AggregateIsMeanOfTrials) {
  const auto rows = eval::run_sweep(small_spec());
  double sum = 0.0;
  int count = 0;
  for (const auto& r : rows) {
    if (r.is_average()) {
      EXPECT_NEAR(r.mean_err, sum / count, 1e-12);
      sum = 0.0;
      count = 0;
    } else {
      sum += r.mean_err;
      ++count;
    }
  }
}

TEST(Sweep, MethodsShareInstances) {
  // Same cell seed for every method, and distinct seeds across cells.
  const auto spec = small_spec();
  EXPECT_NE(eval::cell_config(spec, 0, 0).seed, eval::cell_config(spec, 0, 1).seed);
  EXPECT_NE(eval::cell_config(spec, 0, 0).seed, eval::cell_config(spec, 1, 0).seed);
  EXPECT_EQ(eval::cell_config(spec, 1, 2).seed, eval::cell_config(spec, 1, 2).seed);
  EXPECT_EQ(eval::cell_config(spec, 1, 0).outlier_fraction, 0.2);
}

TEST(Sweep, FailedCellsAreRecorded) {
  auto spec = small_spec();
  spec.fixed.missing_fraction = 0.3;
  spec.irls.max_rounds = 0;  // rejected by the solver
  spec.methods = {"eig-irls", "eig"};
  const auto rows = eval::run_sweep(spec);
  int failed = 0;
  for (const auto& r : rows) failed += r.failed;
  EXPECT_EQ(failed, 2 * 4);
}

TEST(Sweep, RejectsBadSpec) {
  auto spec = small_spec();
  spec.methods = {"sdp"};
  EXPECT_THROW(eval::run_sweep(spec), Error);
  spec = small_spec();
  spec.trials = 0;
  EXPECT_THROW(eval::run_sweep(spec), Error);
}

TEST(MatchedSigma, PerEntryScale) {
  so3::Rng rng(8);
  const Rotation R = so3::random_rotation_uniform(rng);
  const Rotation N = so3::from_axis_angle(so3::random_unit_vector(rng), so3::deg2rad(5.0));
  EXPECT_NEAR(eval::matched_sigma(5.0), (R * N - R).norm() / 3.0, 1e-12);
  EXPECT_EQ(eval::matched_sigma(0.0), 0.02);
}

}  // namespace
