#include "test_helpers.hpp"

namespace {

using namespace rotsync;
using so3::Rotation;

ErrorCode parse_error_code(const std::string& text, bool rotations = false) {
  try {
    if (rotations) {
      io::parse_rotations(text);
    } else {
      io::parse_measurements(text);
    }
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidConfig;  // sentinel: no error
}

TEST(Io, MeasurementRoundTrip) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    synth::SynthConfig c;
    c.n = 5 + static_cast<int>(seed % 20);
    c.missing_fraction = 0.3;
    c.outlier_fraction = 0.2;
    c.noise_max_deg = 10.0;
    c.seed = seed;
    const auto inst = synth::generate(c);
    const auto back = io::parse_measurements(io::format_measurements(inst.measurements));
    EXPECT_EQ(back.projected, 0);
    ASSERT_EQ(back.set.n, inst.measurements.n);
    ASSERT_EQ(back.set.edges.size(), inst.measurements.edges.size());
    for (std::size_t k = 0; k < back.set.edges.size(); ++k) {
      EXPECT_EQ(back.set.edges[k].i, inst.measurements.edges[k].i);
      EXPECT_EQ(back.set.edges[k].j, inst.measurements.edges[k].j);
      EXPECT_EQ(back.set.edges[k].R, inst.measurements.edges[k].R);
    }
    const auto rot = io::parse_rotations(io::format_rotations(inst.truth.rotations));
    EXPECT_EQ(rot.rotations, inst.truth.rotations);
    EXPECT_EQ(io::parse_edge_list(io::format_edge_list(inst.truth.outlier_edges)), inst.truth.outlier_edges);
  }
}

TEST(Io, ProjectsSlightlyOffBlocks) {
  std::string text = "2 1\n1 2 1.001 0 0 0 1 0 0 0 1\n";
  const auto m = io::parse_measurements(text);
  EXPECT_EQ(m.projected, 1);
  EXPECT_TRUE(so3::is_rotation(m.set.edges[0].R, 1e-12));
  const auto r = io::parse_rotations("1\n1 1 0 0 0 1 0 0 0 1\n");
  EXPECT_EQ(r.projected, 0);
}

TEST(Io, MalformedMeasurements) {
  EXPECT_EQ(parse_error_code(""), ErrorCode::ParseError);
  EXPECT_EQ(parse_error_code("2\n"), ErrorCode::ParseError);
  EXPECT_EQ(parse_error_code("2 2\n1 2 1 0 0 0 1 0 0 0 1\n"), ErrorCode::ParseError);
  EXPECT_EQ(parse_error_code("2 1\n1 2 1 0 0 0 1 0 0 0\n"), ErrorCode::ParseError);
  EXPECT_EQ(parse_error_code("2 1\n2 1 1 0 0 0 1 0 0 0 1\n"), ErrorCode::ParseError);
  EXPECT_EQ(parse_error_code("2 1\n1 3 1 0 0 0 1 0 0 0 1\n"), ErrorCode::ParseError);
  EXPECT_EQ(parse_error_code("2 1\n1 2 1 0 0 0 1 0 0 0 x\n"), ErrorCode::ParseError);
  EXPECT_EQ(parse_error_code("2 1\n1 2 1 0 0 0 1 0 0 0 nan\n"), ErrorCode::ParseError);
  EXPECT_EQ(parse_error_code("2 1\n1 2 0 0 0 0 0 0 0 0 0\n"), ErrorCode::ParseError);
  EXPECT_EQ(parse_error_code("-1 0\n"), ErrorCode::ParseError);
}

TEST(Io, MalformedRotations) {
  EXPECT_EQ(parse_error_code("2\n1 1 0 0 0 1 0 0 0 1\n", true), ErrorCode::ParseError);
  EXPECT_EQ(parse_error_code("2\n1 1 0 0 0 1 0 0 0 1\n1 1 0 0 0 1 0 0 0 1\n", true), ErrorCode::ParseError);
  EXPECT_EQ(parse_error_code("1\n1 1 0 0 0 1 0 0 0\n", true), ErrorCode::ParseError);
  EXPECT_EQ(parse_error_code("1 1\n", true), ErrorCode::ParseError);
}

TEST(Io, GarbageNeverCrashes) {
  std::mt19937_64 rng(1);
  const std::string alphabet = "0123456789 .-e\nxn";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::uniform_int_distribution<int> len(0, 200);
  for (int t = 0; t < 2000; ++t) {
    std::string s;
    const int l = len(rng);
    for (int k = 0; k < l; ++k) s += alphabet[pick(rng)];
    try {
      io::parse_measurements(s);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ParseError);
    }
    try {
      io::parse_rotations(s);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ParseError);
    }
  }
}

TEST(Io, MissingFile) {
  try {
    io::read_file("/nonexistent/rotsync/file.rel");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
}

}  // namespace
