#pragma once

#include "types.hpp"

namespace ospca {

/// Second-moment eigenvalues below kRankCutoff * sigma_max are treated as
/// numerical zeros and dropped when a basis is fitted. The cutoff is chosen so
/// that the total dropped mass stays below ~1e-10 of the trace even when most
/// of the spectrum is discarded, keeping the trace identity
/// sum(sigma) == mean|mu|^2 tight.
inline constexpr double kRankCutoff = 1e-13;

/// A leading component block whose metric Gram matrix deviates from identity
/// by more than this is treated as non-orthonormal when projecting; see
/// project().
inline constexpr double kGramDefectTolerance = 1e-8;

enum class MetricKind { kEuclidean, kGradientWeighted };

/// Inner product the basis is orthonormal under.
///
/// Euclidean:          <x, y> = x^T y
/// Gradient-weighted:  <x, y> = x^T W y with W = I + eps * J J^T,
/// where J is a stored objective-gradient direction. W is symmetric positive
/// definite for eps >= 0 (and for any eps > -1/|J|^2).
struct MetricDescriptor {
  MetricKind kind = MetricKind::kEuclidean;
  Vector gradient;       // J; empty for the Euclidean metric
  double epsilon = 0.0;  // eps; 0 for the Euclidean metric

  static MetricDescriptor euclidean() { return {}; }
  static MetricDescriptor gradient_weighted(Vector gradient, double epsilon);

  /// W x without forming W (rank-one update of the identity).
  Vector apply(const Vector& x) const;
  /// Applies W to every column; column c equals apply(columns.col(c)) exactly.
  Matrix apply(const Matrix& columns) const;
  double inner(const Vector& x, const Vector& y) const;
  double squared_norm(const Vector& x) const { return inner(x, x); }
};

/// An ordered set of components with their spectrum.
///
/// Columns of `components` are unit-norm under `metric` and mutually
/// W-orthogonal for every fit that solves its problem exactly;
/// first-order-corrected bases satisfy this only approximately, with the
/// deviation growing with the sensitivity weight (see project() for how
/// truncation stays well defined regardless). singular_values[i] is the
/// second-moment eigenvalue carried by component i (in the hat space for
/// gradient-weighted bases). Freshly fitted bases are sorted by descending
/// singular value; bases produced by first-order correction or tail extension
/// keep their construction order instead, and the spectrum may be locally
/// unsorted there.
struct SpectralBasis {
  Matrix components;       // d x m, column i is component i
  Vector singular_values;  // m entries, nonnegative
  MetricDescriptor metric;

  int dim() const { return static_cast<int>(components.rows()); }
  int rank() const { return static_cast<int>(components.cols()); }
};

/// Result of projecting one sample onto the first n components.
struct Truncation {
  Vector coefficients;    // n entries; expansion coefficients, see project()
  Vector reconstruction;  // sum_i a_i phi_i
  Vector residual;        // mu - reconstruction
  int n_kept = 0;
};

/// Fits the second-moment decomposition of a sample set.
///
/// NOTE: samples are NOT mean-centered. This decomposes the raw second moment
/// K = (1/M) sum_s mu_s mu_s^T, so the leading component absorbs the sample
/// mean. This is deliberate: downstream reconstructions are plain truncated
/// sums a_1 phi_1 + ... + a_n phi_n with no mean added back, and the
/// singular_values are the eigenvalues of K (the squared singular values of
/// the column-stacked sample matrix scaled by 1/sqrt(M)).
///
/// Components come out Euclidean-orthonormal, sorted by descending eigenvalue,
/// with numerically zero directions dropped (see kRankCutoff) and the sign of
/// each component fixed so its largest-magnitude entry is positive.
SpectralBasis pca_fit(const SampleMatrix& samples);

/// Projects mu onto the first n_kept components of the basis, under the
/// basis's own metric.
///
/// For metric-orthonormal components (every fit routine produces these) the
/// coefficients are plain inner products a_i = <phi_i, mu>_W. A first-order
/// perturbed basis driven far outside its small-sensitivity regime loses
/// that orthonormality, and raw inner products would overshoot arbitrarily;
/// once the leading block's Gram defect exceeds kGramDefectTolerance the
/// coefficients instead solve the leading-block Gram system, so the
/// reconstruction is always the metric-orthogonal projection onto the
/// component span and the residual never exceeds mu in metric norm.
Truncation project(const SpectralBasis& basis, const Vector& mu, int n_kept);

/// Bulk variant of project(): expansion coefficients of every column of
/// `columns` in the first n_kept components, as an n_kept x M matrix, under
/// the same orthonormal-block / Gram-system rule. project() and sample-loop
/// statistics both route through this, so the two can never disagree.
Matrix project_coefficients(const SpectralBasis& basis, const Matrix& columns, int n_kept);

/// Fraction of spectral mass carried by the first n values:
/// sum_{i<=n} sigma_i / sum_i sigma_i. n == 0 gives 0.
double energy_fraction(const Vector& singular_values, int n);

/// Smallest n with energy_fraction(sigma, n) >= threshold.
int select_dimension(const Vector& singular_values, double threshold);

/// Largest principal angle (radians) between the spans of the first n
/// components of two bases, computed from the singular values of the overlap
/// matrix of the orthonormalized spans.
double subspace_angle(const SpectralBasis& a, const SpectralBasis& b, int n);

/// Flips each column so its largest-magnitude entry is positive. Ties on
/// magnitude are broken by the lowest index. Applied by every fit so that
/// components are reproducible across runs and platforms.
void apply_sign_convention(Matrix& components);

}  // namespace ospca
