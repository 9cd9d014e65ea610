#pragma once

#include <cstdint>

#include "types.hpp"

namespace ospca {

/// Parameters of one Gaussian-correlated random surface draw.
struct SurfaceParams {
  int n = 21;             // grid points per side
  double side = 3.0;      // physical side length of the square domain
  double rms = 1.0;       // rms height of the surface
  double corr_len = 1.0;  // isotropic correlation length, same units as side
  std::uint64_t seed = 0;
};

/// Derives the seed for sample `index` from a dataset-level seed.
///
/// The mixing is a fixed 64-bit finalizer (splitmix64 applied to
/// seed ^ golden_gamma*(index+1)), so sample k of a dataset is reproducible
/// in isolation and datasets with different base seeds never share streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

/// Draws one zero-mean Gaussian random surface with an isotropic Gaussian
/// autocorrelation function of 1/e-width `corr_len`.
///
/// The surface is built by circular convolution of white Gaussian noise with
/// the kernel exp(-2*(x^2+y^2)/corr_len^2) on the periodic n x n grid (grid
/// spacing side/n), then shifted to exact zero mean and rescaled to exact
/// rms `rms`. The normal deviates come from a hand-rolled Box-Muller transform
/// over mt19937_64 so the byte stream is identical across standard libraries;
/// std::normal_distribution is implementation-defined and is avoided on
/// purpose.
///
/// Returns the n x n surface; entry (iy, ix) is the height at grid node
/// (x, y) = (ix, iy)*side/n.
Matrix gaussian_surface(const SurfaceParams& params);

/// Maps a surface tau affinely into log-permeability:
///   mu = ln(kmax/kmin) * (tau - min(tau)) / (max(tau) - min(tau)) + ln(kmin)
/// so mu spans exactly [ln kmin, ln kmax]. min/max are taken over this sample
/// alone. Constant surfaces (max == min) are rejected.
Matrix rescale_log_perm(const Matrix& tau, double kmin, double kmax);

/// Generates `count` independent log-permeability samples and flattens them
/// into the columns of a SampleMatrix. Sample s uses seed mix_seed(seed, s)
/// with the dataset-level seed taken from params.seed.
SampleMatrix make_dataset(int count, const SurfaceParams& params, double kmin, double kmax);

}  // namespace ospca
