#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace h2nmf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IndexSet = std::vector<std::size_t>;

// Pixel grid of an image cube. Pixels are stored in row-major image order,
// so column j of the data matrix is pixel (j % width, j / width).
struct Geometry {
  std::size_t width = 0;
  std::size_t height = 0;

  std::size_t pixels() const { return width * height; }
  bool operator==(const Geometry&) const = default;
};

// m x n nonnegative data matrix: one spectrum (m bands) per column.
struct DataMatrix {
  Matrix values;
  std::optional<Geometry> geometry;

  std::size_t bands() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t pixels() const { return static_cast<std::size_t>(values.cols()); }
};

// Copies M(:, cols) into a contiguous matrix.
inline Matrix gather_columns(const Matrix& m, std::span<const std::size_t> cols) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = m.col(static_cast<Eigen::Index>(cols[j]));
  }
  return out;
}

inline IndexSet all_columns(std::size_t n) {
  IndexSet out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = j;
  return out;
}

}  // namespace h2nmf
