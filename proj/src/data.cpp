#include "netadmm/data.hpp"

#include <Eigen/QR>

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace netadmm {

namespace {

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) out(r, c) = normal(rng);
  return out;
}

Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& A) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  return qr.householderQ() * Eigen::MatrixXd::Identity(A.rows(), A.cols());
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_double(std::string_view cell, double& value) {
  cell = trim(cell);
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (latent_dim < 1 || ambient_dim < latent_dim)
    throw std::invalid_argument("synthetic spec needs ambient_dim >= latent_dim >= 1");
  if (num_samples < 1) throw std::invalid_argument("num_samples must be >= 1");
  if (!(noise_variance >= 0.0)) throw std::invalid_argument("noise_variance must be >= 0");
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  SyntheticData out;
  out.W_true = orthonormal_columns(gaussian(spec.ambient_dim, spec.latent_dim, rng));
  const Eigen::MatrixXd Z = gaussian(spec.latent_dim, spec.num_samples, rng);
  out.X = out.W_true * Z;
  if (spec.noise_variance > 0.0)
    out.X += gaussian(spec.ambient_dim, spec.num_samples, rng, std::sqrt(spec.noise_variance));
  return out;
}

std::vector<Eigen::MatrixXd> partition_even(const Eigen::MatrixXd& data, std::size_t num_nodes) {
  if (num_nodes == 0) throw std::invalid_argument("partition_even: num_nodes must be >= 1");
  const auto total = static_cast<std::size_t>(data.cols());
  if (total < num_nodes) throw std::invalid_argument("partition_even: fewer samples than nodes");
  std::vector<Eigen::MatrixXd> shards;
  shards.reserve(num_nodes);
  const std::size_t base = total / num_nodes;
  const std::size_t extra = total % num_nodes;
  Eigen::Index start = 0;
  for (std::size_t i = 0; i < num_nodes; ++i) {
    const auto width = static_cast<Eigen::Index>(base + (i < extra ? 1 : 0));
    shards.emplace_back(data.middleCols(start, width));
    start += width;
  }
  return shards;
}

MeasurementMatrix parse_measurements(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool header_checked = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    std::vector<double> row(cells.size());
    bool numeric = true;
    std::size_t bad_col = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!parse_double(cells[c], row[c])) {
        numeric = false;
        bad_col = c + 1;
        break;
      }
    }
    if (!header_checked) {
      header_checked = true;
      if (!numeric) continue;  // header row
    }
    if (!numeric) throw ParseError("non-numeric cell", line_no, bad_col);
    for (std::size_t c = 0; c < row.size(); ++c)
      if (!std::isfinite(row[c])) throw ParseError("non-finite value", line_no, c + 1);
    if (rows.empty()) {
      width = row.size();
    } else if (row.size() != width) {
      throw ParseError("ragged row: expected " + std::to_string(width) + " columns, found " +
                           std::to_string(row.size()),
                       line_no, std::min(row.size(), width) + 1);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("no measurement rows", line_no, 0);
  if (rows.size() % 2 != 0)
    throw ParseError("odd number of measurement rows (" + std::to_string(rows.size()) + ")", line_no, 0);
  MeasurementMatrix m;
  m.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < width; ++c)
      m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return m;
}

MeasurementMatrix load_measurements(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open measurement file " + path.string());
  return parse_measurements(in);
}

void write_measurements(std::ostream& out, const MeasurementMatrix& m) {
  std::ostringstream buf;
  buf.precision(17);
  for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.values.cols(); ++c) {
      if (c) buf << ',';
      buf << m.values(r, c);
    }
    buf << '\n';
  }
  out << buf.str();
}

std::vector<Eigen::MatrixXd> partition_frames(const MeasurementMatrix& m, std::size_t num_nodes) {
  if (num_nodes == 0) throw std::invalid_argument("partition_frames: num_nodes must be >= 1");
  const auto frames = static_cast<std::size_t>(m.frames());
  if (frames < num_nodes) throw std::invalid_argument("partition_frames: more nodes than frames");
  std::vector<Eigen::MatrixXd> shards;
  const std::size_t base = frames / num_nodes;
  const std::size_t extra = frames % num_nodes;
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < num_nodes; ++i) {
    const auto count = static_cast<Eigen::Index>(2 * (base + (i < extra ? 1 : 0)));
    shards.emplace_back(m.values.middleRows(row, count).transpose());
    row += count;
  }
  return shards;
}

MeasurementMatrix generate_synthetic_sfm(const SfmSpec& spec) {
  if (spec.frames < 1 || spec.points < 4) throw std::invalid_argument("synthetic sfm needs frames >= 1, points >= 4");
  std::mt19937_64 rng(spec.seed);
  const Eigen::MatrixXd structure = gaussian(3, spec.points, rng);
  MeasurementMatrix m;
  m.values.resize(2 * spec.frames, spec.points);
  for (Eigen::Index f = 0; f < spec.frames; ++f) {
    const Eigen::MatrixXd rotation = orthonormal_columns(gaussian(3, 3, rng));
    const Eigen::MatrixXd translation = gaussian(2, 1, rng, 5.0);
    m.values.middleRows(2 * f, 2) =
        (rotation.topRows(2) * structure).colwise() + translation.col(0);
  }
  if (spec.noise_sigma > 0.0) m.values += gaussian(m.values.rows(), m.values.cols(), rng, spec.noise_sigma);
  return m;
}

}  // namespace netadmm
