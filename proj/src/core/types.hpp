#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace ospca {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when an input violates a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a computation fails numerically (singular system, divergence, ...).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a file cannot be read, written, or parsed.
class IOError : public std::runtime_error {
 public:
  explicit IOError(const std::string& what) : std::runtime_error(what) {}
};

/// Shape of the 2D grid behind a flattened parameter vector.
///
/// Flattening is row-major: grid entry (iy, ix) maps to index iy*nx + ix.
/// Every flattened field in the library follows this convention.
struct GridShape {
  int nx = 0;
  int ny = 0;

  int cells() const { return nx * ny; }
  bool operator==(const GridShape&) const = default;
};

/// A set of flattened parameter fields, one sample per column.
struct SampleMatrix {
  Matrix data;     // d x M, column s is sample s
  GridShape grid;  // nx*ny == d

  int dim() const { return static_cast<int>(data.rows()); }
  int count() const { return static_cast<int>(data.cols()); }
};

inline Vector flatten_row_major(const Matrix& grid) {
  Vector v(grid.size());
  const auto ny = grid.rows();
  const auto nx = grid.cols();
  for (Eigen::Index iy = 0; iy < ny; ++iy)
    for (Eigen::Index ix = 0; ix < nx; ++ix) v[iy * nx + ix] = grid(iy, ix);
  return v;
}

inline Matrix unflatten_row_major(const Vector& v, const GridShape& shape) {
  if (v.size() != shape.cells()) throw ValidationError("unflatten: vector length does not match grid shape");
  Matrix grid(shape.ny, shape.nx);
  for (int iy = 0; iy < shape.ny; ++iy)
    for (int ix = 0; ix < shape.nx; ++ix) grid(iy, ix) = v[iy * static_cast<Eigen::Index>(shape.nx) + ix];
  return grid;
}

}  // namespace ospca
