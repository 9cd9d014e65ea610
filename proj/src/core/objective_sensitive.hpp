#pragma once

#include <utility>
#include <vector>

#include "decomposition.hpp"
#include "types.hpp"

namespace ospca {

/// Pairs of reference components closer than kDegeneracyGuard * sigma_1 in
/// eigenvalue have their first-order mixing coefficient zeroed (the
/// perturbative denominator is unreliable there).
inline constexpr double kDegeneracyGuard = 1e-8;

/// An objective gradient evaluated at a trial point, expressed against a
/// reference basis.
///
/// coefficients[i] (b_i) is the component of the gradient along reference
/// component i: b_i = phi_i^T J. Entries past the probed range are zero.
struct GradientProbe {
  Vector trial_point;   // eta, the point the gradient was taken at
  Vector gradient;      // J, full-dimension gradient vector
  double epsilon = 0.0; // weight eps used to build W = I + eps * J J^T
  Vector coefficients;  // b, one entry per reference component
};

/// Symmetric square root A of the rank-one-updated metric W = I + eps*J*J^T,
/// with A^T A = A^2 = W, and its inverse. Both are rank-one updates of the
/// identity:
///   A     = I + scale_forward * u u^T,  u = J / |J|
///   A^-1  = I + scale_inverse * u u^T
/// where scale_forward = sqrt(1 + eps|J|^2) - 1 and
/// scale_inverse = 1/sqrt(1 + eps|J|^2) - 1. Applying either is O(d).
struct MetricSqrt {
  Vector unit_direction;        // u; empty when the metric is Euclidean
  double scale_forward = 0.0;
  double scale_inverse = 0.0;

  Vector forward(const Vector& x) const;   // A x
  Vector inverse(const Vector& x) const;   // A^-1 x
  void forward_in_place(Matrix& columns) const;
  void inverse_in_place(Matrix& columns) const;
};

/// Builds the symmetric square root of W = I + eps * J J^T.
///
/// scale_forward is computed as w / (sqrt(1 + w) + 1) with w = eps|J|^2, which
/// is exact for w = 0 and loses no precision for small w (no cancellation).
/// eps == 0 or J == 0 yields the identity transform.
MetricSqrt metric_sqrt(const Vector& gradient, double epsilon);

/// First-order correction data produced by a perturbative refit.
struct PerturbationCorrection {
  Matrix alpha;        // m x m mixing coefficients, zero diagonal
  Vector sigma_shift;  // per-component eigenvalue corrections, eps*b_k^2*sigma_k
  std::vector<std::pair<int, int>> guarded_pairs;  // (k, n) couplings zeroed by the degeneracy guard
};

/// Packages a gradient into a probe against `reference`, computing the
/// per-component coefficients b_i = phi_i^T J for all reference components.
GradientProbe make_probe(const SpectralBasis& reference, const Vector& trial_point, const Vector& gradient,
                         double epsilon);

/// Exact objective-sensitive fit: runs the second-moment decomposition under
/// the inner product W = I + eps * J J^T instead of the Euclidean one.
///
/// Implemented through the hat transform: samples are mapped by the symmetric
/// square root A (mu_hat = A mu), fitted by the ordinary decomposition there,
/// and the components mapped back by A^-1. The returned components are
/// W-orthonormal and singular_values holds the hat-space spectrum, so the
/// usual tail identities hold verbatim in the W norm. eps == 0 (or a zero
/// gradient) degrades to pca_fit exactly, including the recorded metric.
SpectralBasis gspca_fit(const SampleMatrix& samples, const Vector& gradient, double epsilon);

/// First-order (perturbative) objective-sensitive refit of an existing
/// Euclidean basis, avoiding any new decomposition.
///
/// Component k is corrected to phi_k + sum_n alpha_kn phi_n with
///   alpha_kn = eps * b_k * b_n * sigma_n / (sigma_k - sigma_n),  k != n,
/// and its eigenvalue to sigma_k * (1 + eps * b_k^2). Couplings with
/// |sigma_k - sigma_n| < kDegeneracyGuard * sigma_1 are zeroed and reported in
/// guarded_pairs. The corrected components are NOT re-orthonormalized and NOT
/// re-sorted: they stay in the reference order, accurate to first order in
/// eps * b^2, and the recorded metric is W = I + eps * J J^T.
std::pair<SpectralBasis, PerturbationCorrection> agspca_fit(const SpectralBasis& reference,
                                                            const GradientProbe& probe);

/// Residual norms of the corrected components in the perturbed eigenproblem
/// (diagnostic for the first-order refit): entry k is
///   | K phi_k + eps * b_k * K J - sigma_k phi_k |
/// where K is applied through the reference decomposition
/// K = Phi diag(sigma) Phi^T (so K J = Phi (sigma . b)). The corrected pairs
/// satisfy this equation to first order; the norms are second-order-small in
/// eps*b^2.
Vector perturbed_eigen_residual(const SpectralBasis& reference, const GradientProbe& probe,
                                const SpectralBasis& corrected);

/// Outcome of selecting tail components for a basis extension.
struct ExtensionSelection {
  std::vector<int> indices;           // zero-based reference indices, all >= n_kept
  bool sigma_order_fallback = false;  // true when every tail coefficient was zero
};

/// Picks `count` components beyond the first n_kept, in decreasing order of
/// squared gradient coefficient b_i^2. Ties are broken by the lower index. If
/// every tail coefficient is exactly zero the selection falls back to spectral
/// order (n_kept, n_kept+1, ...) and says so in sigma_order_fallback.
ExtensionSelection egspca_select(const GradientProbe& probe, int n_kept, int count);

/// Extends the first n_kept components of `reference` with the egspca_select
/// choice. The result keeps the reference's Euclidean metric and component
/// vectors; only the order of the appended tail differs from spectral order,
/// so the spectrum is generally not sorted past n_kept.
SpectralBasis egspca_extend(const SpectralBasis& reference, const GradientProbe& probe, int n_kept, int count);

/// Re-orthonormalizes the components of a basis under the given metric by
/// modified Gram-Schmidt, keeping the singular values and component order.
///
/// No fit routine applies this automatically: the first-order perturbed
/// basis is deliberately returned as constructed, and this utility is the
/// opt-in way to restore strict metric orthonormality afterwards. Components
/// that are already orthonormal under the metric pass through unchanged up
/// to roundoff (in particular, signs are preserved).
///
/// Throws NumericalError if the components are linearly dependent under the
/// metric.
SpectralBasis orthonormalize(const SpectralBasis& basis, const MetricDescriptor& metric);

}  // namespace ospca
