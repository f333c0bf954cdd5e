#include "doctest.h"

#include "netadmm/data.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace netadmm;
using doctest::Approx;

namespace {

std::string csv_grid(int rows, int cols, bool header) {
  std::ostringstream out;
  if (header) {
    for (int c = 0; c < cols; ++c) out << (c ? "," : "") << "p" << c;
    out << '\n';
  }
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out << (c ? "," : "") << r * 0.5 - c;
    out << '\n';
  }
  return out.str();
}

MeasurementMatrix parse(const std::string& text) {
  std::istringstream in(text);
  return parse_measurements(in);
}

}  // namespace

TEST_CASE("even partition sizes") {
  const Eigen::MatrixXd data = Eigen::MatrixXd::Random(3, 500);
  const auto twenty = partition_even(data, 20);
  REQUIRE(twenty.size() == 20);
  for (const auto& s : twenty) CHECK(s.cols() == 25);

  const Eigen::MatrixXd ten = Eigen::MatrixXd::Random(2, 10);
  const auto three = partition_even(ten, 3);
  REQUIRE(three.size() == 3);
  CHECK(three[0].cols() == 4);
  CHECK(three[1].cols() == 3);
  CHECK(three[2].cols() == 3);

  const auto one = partition_even(ten, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == ten);

  CHECK_THROWS_AS(partition_even(ten, 11), std::invalid_argument);
  CHECK_THROWS_AS(partition_even(ten, 0), std::invalid_argument);
}

TEST_CASE("partition is an exact ordered cover") {
  for (Eigen::Index n : {7, 20, 53}) {
    for (std::size_t j : {1u, 2u, 5u, 7u}) {
      const Eigen::MatrixXd data = Eigen::MatrixXd::Random(4, n);
      const auto shards = partition_even(data, j);
      Eigen::Index offset = 0;
      const Eigen::Index lo = n / static_cast<Eigen::Index>(j);
      for (const auto& s : shards) {
        CHECK((s.cols() == lo || s.cols() == lo + 1));
        CHECK(s == data.middleCols(offset, s.cols()));
        offset += s.cols();
      }
      CHECK(offset == n);
    }
  }
}

TEST_CASE("noiseless synthetic data lies in the true subspace") {
  SyntheticSpec spec;
  spec.noise_variance = 0.0;
  spec.seed = 3;
  const SyntheticData d = generate_synthetic(spec);
  CHECK(d.X.rows() == 20);
  CHECK(d.X.cols() == 500);
  CHECK((d.W_true.transpose() * d.W_true - Eigen::MatrixXd::Identity(5, 5)).norm() < 1e-12);
  const Eigen::MatrixXd residual = d.X - d.W_true * (d.W_true.transpose() * d.X);
  CHECK(residual.colwise().norm().maxCoeff() < 1e-10);
}

TEST_CASE("synthetic spectrum matches the generative covariance") {
  SyntheticSpec spec;
  spec.seed = 8;
  const SyntheticData d = generate_synthetic(spec);
  const Eigen::MatrixXd centered = d.X.colwise() - d.X.rowwise().mean();
  const Eigen::MatrixXd cov = centered * centered.transpose() / static_cast<double>(d.X.cols() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd ev = eig.eigenvalues().reverse();
  for (int k = 0; k < 5; ++k) CHECK(ev(k) == Approx(1.2).epsilon(0.3));
  for (int k = 5; k < 20; ++k) CHECK(ev(k) == Approx(0.2).epsilon(0.3));
}

TEST_CASE("synthetic mean is near zero") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SyntheticSpec spec;
    spec.seed = seed;
    const SyntheticData d = generate_synthetic(spec);
    // coordinate variance is sum_k W_dk^2 + 0.2 <= 1.2 for orthonormal W
    const double sigma = std::sqrt(1.2);
    const double bound = 5.0 * sigma / std::sqrt(500.0);
    CHECK(d.X.rowwise().mean().cwiseAbs().maxCoeff() < bound);
  }
}

TEST_CASE("synthetic generation is deterministic") {
  SyntheticSpec spec;
  spec.seed = 42;
  const SyntheticData a = generate_synthetic(spec);
  const SyntheticData b = generate_synthetic(spec);
  CHECK(a.X == b.X);
  CHECK(a.W_true == b.W_true);
  spec.seed = 43;
  CHECK(generate_synthetic(spec).X != a.X);
}

TEST_CASE("synthetic spec validation") {
  SyntheticSpec spec;
  spec.latent_dim = 21;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = {};
  spec.latent_dim = 0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = {};
  spec.noise_variance = -0.1;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = {};
  spec.num_samples = 0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("measurement csv shapes") {
  const MeasurementMatrix m = parse(csv_grid(60, 62, false));
  CHECK(m.frames() == 30);
  CHECK(m.points() == 62);
  CHECK(m.values(3, 2) == Approx(3 * 0.5 - 2));

  const MeasurementMatrix with_header = parse(csv_grid(60, 62, true));
  CHECK(with_header.values == m.values);

  const MeasurementMatrix spaced = parse("1, 2 ,3\r\n\n4,5,6\n");
  CHECK(spaced.values.rows() == 2);
  CHECK(spaced.values(1, 2) == 6.0);
}

TEST_CASE("measurement csv rejections carry positions") {
  CHECK_THROWS_AS(parse(csv_grid(3, 4, false)), ParseError);
  CHECK_THROWS_AS(parse(""), ParseError);
  CHECK_THROWS_AS(parse("x,y\n"), ParseError);

  try {
    parse("1,2,3\n4,5\n");
    FAIL("ragged row accepted");
  } catch (const ParseError& e) {
    CHECK(e.row() == 2);
    CHECK(e.col() == 3);
  }
  try {
    parse("1,2\n3,abc\n");
    FAIL("non-numeric cell accepted");
  } catch (const ParseError& e) {
    CHECK(e.row() == 2);
    CHECK(e.col() == 2);
  }
  try {
    parse("a,b\n1,2\n3,nan\n");
    FAIL("non-finite value accepted");
  } catch (const ParseError& e) {
    CHECK(e.row() == 3);
    CHECK(e.col() == 2);
  }
}

TEST_CASE("measurement files round trip") {
  SfmSpec spec;
  spec.frames = 6;
  spec.points = 9;
  spec.seed = 2;
  const MeasurementMatrix m = generate_synthetic_sfm(spec);
  const auto path = std::filesystem::temp_directory_path() / "netadmm_measurements_roundtrip.csv";
  {
    std::ofstream out(path);
    write_measurements(out, m);
  }
  const MeasurementMatrix back = load_measurements(path);
  CHECK(back.values == m.values);
  std::filesystem::remove(path);
  CHECK_THROWS(load_measurements(path));
}

TEST_CASE("frame partition transposes row pairs") {
  SfmSpec spec;
  spec.frames = 7;
  spec.points = 11;
  const MeasurementMatrix m = generate_synthetic_sfm(spec);
  const auto shards = partition_frames(m, 3);
  REQUIRE(shards.size() == 3);
  CHECK(shards[0].cols() == 6);
  CHECK(shards[1].cols() == 4);
  CHECK(shards[2].cols() == 4);
  Eigen::Index row = 0;
  for (const auto& s : shards) {
    CHECK(s.rows() == 11);
    CHECK(s == m.values.middleRows(row, s.cols()).transpose());
    row += s.cols();
  }
  CHECK(row == 14);
  CHECK_THROWS_AS(partition_frames(m, 8), std::invalid_argument);
}

TEST_CASE("synthetic measurements are rank three after centering") {
  SfmSpec spec;
  spec.noise_sigma = 0.0;
  spec.seed = 4;
  const MeasurementMatrix m = generate_synthetic_sfm(spec);
  CHECK(m.frames() == 30);
  CHECK(m.points() == 100);
  const Eigen::MatrixXd centered = m.values.colwise() - m.values.rowwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
  const Eigen::VectorXd sv = svd.singularValues();
  CHECK(sv(2) > 1e-3 * sv(0));
  CHECK(sv(3) < 1e-10 * sv(0));
}
