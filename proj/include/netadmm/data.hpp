#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace netadmm {

struct SyntheticSpec {
  Eigen::Index num_samples = 500;
  Eigen::Index ambient_dim = 20;
  Eigen::Index latent_dim = 5;
  double noise_variance = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticData {
  Eigen::MatrixXd X;        // D x N
  Eigen::MatrixXd W_true;   // D x M, orthonormal columns
};

// x_n = W z_n + eps_n with z_n ~ N(0, I_M), eps_n ~ N(0, noise_variance I_D)
// and W the Q factor of a standard-normal D x M matrix.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

// Contiguous column blocks; the first N mod J shards get one extra column.
std::vector<Eigen::MatrixXd> partition_even(const Eigen::MatrixXd& data, std::size_t num_nodes);

// 2F x N image measurements: rows 2f and 2f+1 are the x and y coordinates of
// all N tracked points in frame f.
struct MeasurementMatrix {
  Eigen::MatrixXd values;

  Eigen::Index frames() const { return values.rows() / 2; }
  Eigen::Index points() const { return values.cols(); }
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t col)
      : std::runtime_error(what + " (row " + std::to_string(row) + ", col " + std::to_string(col) + ")"),
        row_(row),
        col_(col) {}
  std::size_t row() const { return row_; }
  std::size_t col() const { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

// CSV with 2F numeric rows of N columns; an optional non-numeric header row
// is skipped. Rows and columns in errors are 1-based file positions.
MeasurementMatrix parse_measurements(std::istream& in);
MeasurementMatrix load_measurements(const std::filesystem::path& path);
void write_measurements(std::ostream& out, const MeasurementMatrix& m);

// Splits frames (row pairs) evenly across nodes and returns each node's
// shard with one column per measurement row: D = N points, samples = 2F_i.
std::vector<Eigen::MatrixXd> partition_frames(const MeasurementMatrix& m, std::size_t num_nodes);

struct SfmSpec {
  Eigen::Index frames = 30;
  Eigen::Index points = 100;
  double noise_sigma = 0.01;
  std::uint64_t seed = 0;
};

// Rigid scene under random orthographic cameras with per-frame translation.
MeasurementMatrix generate_synthetic_sfm(const SfmSpec& spec);

}  // namespace netadmm
