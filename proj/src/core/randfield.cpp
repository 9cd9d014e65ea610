#include "randfield.hpp"

#include <cmath>
#include <random>

namespace ospca {

namespace {

constexpr double kPi = 3.14159265358979323846;

/// Gaussian deviates via Box-Muller over mt19937_64. The transform is spelled
/// out (rather than using std::normal_distribution) because the standard
/// leaves the normal distribution's algorithm implementation-defined and the
/// generated datasets must be bit-reproducible everywhere.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite; u2 in [0, 1).
    const double u1 = ((engine_() >> 11) + 1) * 0x1.0p-53;
    const double u2 = (engine_() >> 11) * 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * kPi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

void validate(const SurfaceParams& params) {
  if (params.n < 2) throw ValidationError("gaussian_surface: grid needs at least 2 points per side");
  if (!(params.side > 0.0)) throw ValidationError("gaussian_surface: side length must be positive");
  if (!(params.rms > 0.0)) throw ValidationError("gaussian_surface: rms height must be positive");
  if (!(params.corr_len > 0.0)) throw ValidationError("gaussian_surface: correlation length must be positive");
  if (!(params.corr_len < params.side))
    throw ValidationError("gaussian_surface: correlation length must be smaller than the side length");
}

/// Circular convolution of each column of `field` with `kernel` (length n,
/// kernel[t] is the weight at circular offset t).
Matrix convolve_columns(const Matrix& field, const Vector& kernel) {
  const int n = static_cast<int>(field.rows());
  Matrix out(n, field.cols());
  for (int i = 0; i < n; ++i) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(field.cols());
    for (int t = 0; t < n; ++t) {
      const int j = (i + t) % n;
      acc += kernel[t] * field.row(j);
    }
    out.row(i) = acc;
  }
  return out;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer applied to the seed xored with a distinct stream id.
  std::uint64_t z = seed ^ (0x9E3779B97F4A7C15ULL * (index + 1));
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Matrix gaussian_surface(const SurfaceParams& params) {
  validate(params);
  const int n = params.n;
  const double dx = params.side / n;

  GaussianStream stream(params.seed);
  Matrix noise(n, n);
  // Fill in row-major node order so the draw order matches the flattening.
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) noise(iy, ix) = stream.next();

  // Gaussian filter at circular lag distances; separable in x and y.
  Vector kernel(n);
  for (int t = 0; t < n; ++t) {
    const double lag = std::min(t, n - t) * dx;
    kernel[t] = std::exp(-2.0 * lag * lag / (params.corr_len * params.corr_len));
  }

  Matrix surface = convolve_columns(noise, kernel);                   // along y
  surface = convolve_columns(surface.transpose(), kernel).transpose();  // along x

  // The filter output is only asymptotically zero-mean/unit-scale; enforce the
  // moments exactly so rms == params.rms holds sample by sample.
  surface.array() -= surface.mean();
  const double rms = std::sqrt(surface.array().square().mean());
  if (!(rms > 0.0)) throw NumericalError("gaussian_surface: degenerate (constant) filtered noise");
  surface *= params.rms / rms;
  return surface;
}

Matrix rescale_log_perm(const Matrix& tau, double kmin, double kmax) {
  if (!(kmin > 0.0)) throw ValidationError("rescale_log_perm: kmin must be positive");
  if (!(kmax > kmin)) throw ValidationError("rescale_log_perm: kmax must exceed kmin");
  const double lo = tau.minCoeff();
  const double hi = tau.maxCoeff();
  if (!(hi > lo)) throw ValidationError("rescale_log_perm: constant surface cannot be rescaled");
  const double span = std::log(kmax / kmin);
  return (span * (tau.array() - lo) / (hi - lo) + std::log(kmin)).matrix();
}

SampleMatrix make_dataset(int count, const SurfaceParams& params, double kmin, double kmax) {
  if (count < 1) throw ValidationError("make_dataset: count must be at least 1");
  validate(params);

  SampleMatrix samples;
  samples.grid = GridShape{params.n, params.n};
  samples.data.resize(samples.grid.cells(), count);
  for (int s = 0; s < count; ++s) {
    SurfaceParams draw = params;
    draw.seed = mix_seed(params.seed, static_cast<std::uint64_t>(s));
    samples.data.col(s) = flatten_row_major(rescale_log_perm(gaussian_surface(draw), kmin, kmax));
  }
  return samples;
}

}  // namespace ospca
