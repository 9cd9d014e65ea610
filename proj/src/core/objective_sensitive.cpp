#include "objective_sensitive.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ospca {

namespace {

void check_epsilon(double epsilon) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ValidationError("epsilon must be finite and >= 0");
}

}  // namespace

Vector MetricSqrt::forward(const Vector& x) const {
  if (unit_direction.size() == 0) return x;
  return x + (scale_forward * unit_direction.dot(x)) * unit_direction;
}

Vector MetricSqrt::inverse(const Vector& x) const {
  if (unit_direction.size() == 0) return x;
  return x + (scale_inverse * unit_direction.dot(x)) * unit_direction;
}

void MetricSqrt::forward_in_place(Matrix& columns) const {
  if (unit_direction.size() == 0) return;
  columns.noalias() += unit_direction * (scale_forward * (unit_direction.transpose() * columns));
}

void MetricSqrt::inverse_in_place(Matrix& columns) const {
  if (unit_direction.size() == 0) return;
  columns.noalias() += unit_direction * (scale_inverse * (unit_direction.transpose() * columns));
}

MetricSqrt metric_sqrt(const Vector& gradient, double epsilon) {
  check_epsilon(epsilon);
  if (!gradient.allFinite()) throw ValidationError("metric_sqrt: gradient has non-finite entries");

  MetricSqrt sqrt;
  const double weight = epsilon * gradient.squaredNorm();  // eps * |J|^2
  if (weight == 0.0) return sqrt;                          // identity transform

  const double root = std::sqrt(1.0 + weight);
  sqrt.unit_direction = gradient / gradient.norm();
  // w / (sqrt(1+w) + 1) == sqrt(1+w) - 1 without cancellation for small w.
  sqrt.scale_forward = weight / (root + 1.0);
  sqrt.scale_inverse = 1.0 / root - 1.0;
  return sqrt;
}

GradientProbe make_probe(const SpectralBasis& reference, const Vector& trial_point, const Vector& gradient,
                         double epsilon) {
  check_epsilon(epsilon);
  if (trial_point.size() != reference.dim()) throw ValidationError("make_probe: trial point length mismatch");
  if (gradient.size() != reference.dim()) throw ValidationError("make_probe: gradient length mismatch");
  if (!gradient.allFinite() || !trial_point.allFinite())
    throw ValidationError("make_probe: non-finite entries in trial point or gradient");

  GradientProbe probe;
  probe.trial_point = trial_point;
  probe.gradient = gradient;
  probe.epsilon = epsilon;
  probe.coefficients = reference.components.transpose() * gradient;
  return probe;
}

SpectralBasis gspca_fit(const SampleMatrix& samples, const Vector& gradient, double epsilon) {
  if (gradient.size() != samples.dim()) throw ValidationError("gspca_fit: gradient length does not match samples");
  const MetricSqrt root = metric_sqrt(gradient, epsilon);

  // eps*|J|^2 == 0 makes W the identity; the plain fit is returned unchanged
  // (Euclidean metric recorded) so the two paths produce identical artifacts.
  if (root.unit_direction.size() == 0) return pca_fit(samples);

  SampleMatrix hat = samples;
  root.forward_in_place(hat.data);
  SpectralBasis basis = pca_fit(hat);

  // Components map back with A^-1; they are then W-orthonormal. The spectrum
  // stays the hat-space one, which is what the W-norm tail identities use.
  root.inverse_in_place(basis.components);
  apply_sign_convention(basis.components);
  basis.metric = MetricDescriptor::gradient_weighted(gradient, epsilon);
  return basis;
}

std::pair<SpectralBasis, PerturbationCorrection> agspca_fit(const SpectralBasis& reference,
                                                            const GradientProbe& probe) {
  if (reference.metric.kind != MetricKind::kEuclidean)
    throw ValidationError("agspca_fit: reference basis must be Euclidean");
  const int m = reference.rank();
  if (m < 1) throw ValidationError("agspca_fit: reference basis is empty");
  if (probe.coefficients.size() != m)
    throw ValidationError("agspca_fit: probe coefficient count does not match reference rank");
  check_epsilon(probe.epsilon);

  // The coefficients must actually belong to this basis; a stale probe would
  // silently corrupt the correction otherwise.
  const Vector recomputed = reference.components.transpose() * probe.gradient;
  const double tol = 1e-12 * std::max(1.0, probe.gradient.norm());
  if ((probe.coefficients - recomputed).cwiseAbs().maxCoeff() > tol)
    throw ValidationError("agspca_fit: probe coefficients do not match the reference basis");

  const Vector& sigma = reference.singular_values;
  const Vector& b = probe.coefficients;
  const double eps = probe.epsilon;
  const double guard = kDegeneracyGuard * sigma[0];

  PerturbationCorrection correction;
  correction.alpha = Matrix::Zero(m, m);
  correction.sigma_shift.resize(m);
  for (int k = 0; k < m; ++k) {
    correction.sigma_shift[k] = eps * b[k] * b[k] * sigma[k];
    for (int n = 0; n < m; ++n) {
      if (n == k) continue;
      const double numerator = eps * b[k] * b[n] * sigma[n];
      if (numerator == 0.0) continue;
      const double denominator = sigma[k] - sigma[n];
      if (std::abs(denominator) < guard) {
        correction.guarded_pairs.emplace_back(k, n);
        continue;
      }
      correction.alpha(k, n) = numerator / denominator;
    }
  }

  SpectralBasis corrected;
  // phi_k += sum_n alpha_kn phi_n, i.e. new columns = Phi (I + alpha^T).
  corrected.components = reference.components * (Matrix::Identity(m, m) + correction.alpha.transpose());
  corrected.singular_values = sigma + correction.sigma_shift;
  apply_sign_convention(corrected.components);

  // Corrected components are first-order accurate, deliberately not
  // re-orthonormalized and kept in reference order (no re-sort): the
  // correction is only meaningful relative to the reference indexing.
  const double weight = probe.epsilon * probe.gradient.squaredNorm();
  corrected.metric = weight == 0.0 ? MetricDescriptor::euclidean()
                                   : MetricDescriptor::gradient_weighted(probe.gradient, probe.epsilon);
  return {std::move(corrected), std::move(correction)};
}

Vector perturbed_eigen_residual(const SpectralBasis& reference, const GradientProbe& probe,
                                const SpectralBasis& corrected) {
  if (corrected.dim() != reference.dim()) throw ValidationError("perturbed_eigen_residual: dimension mismatch");
  if (corrected.rank() > reference.rank())
    throw ValidationError("perturbed_eigen_residual: corrected rank exceeds reference rank");
  if (probe.coefficients.size() != reference.rank())
    throw ValidationError("perturbed_eigen_residual: probe does not match reference basis");

  const Matrix& ref = reference.components;
  const Vector& sigma0 = reference.singular_values;
  const Vector& b = probe.coefficients;

  // K phi_i = sigma_i phi_i for the reference components, so the probed part
  // of K J expands as Phi (sigma .* b) without ever forming K.
  const Vector kj = ref * sigma0.cwiseProduct(b);

  Vector defect(corrected.rank());
  for (int k = 0; k < corrected.rank(); ++k) {
    const Vector phi = corrected.components.col(k);
    const Vector k_phi = ref * sigma0.cwiseProduct(ref.transpose() * phi);
    defect[k] = (k_phi + probe.epsilon * b[k] * kj - corrected.singular_values[k] * phi).norm();
  }
  return defect;
}

ExtensionSelection egspca_select(const GradientProbe& probe, int n_kept, int count) {
  const int m = static_cast<int>(probe.coefficients.size());
  if (n_kept < 0 || n_kept > m) throw ValidationError("egspca_select: n_kept out of range");
  if (count < 0 || n_kept + count > m)
    throw ValidationError("egspca_select: not enough tail components to extend by count");

  ExtensionSelection selection;
  std::vector<int> tail(m - n_kept);
  std::iota(tail.begin(), tail.end(), n_kept);

  bool any_nonzero = false;
  for (int i : tail) any_nonzero = any_nonzero || probe.coefficients[i] != 0.0;
  if (!any_nonzero) {
    selection.sigma_order_fallback = true;  // nothing to rank; keep spectral order
    selection.indices.assign(tail.begin(), tail.begin() + count);
    return selection;
  }

  std::stable_sort(tail.begin(), tail.end(), [&](int i, int j) {
    const double bi = probe.coefficients[i] * probe.coefficients[i];
    const double bj = probe.coefficients[j] * probe.coefficients[j];
    return bi > bj;  // stable: equal weights keep ascending index order
  });
  selection.indices.assign(tail.begin(), tail.begin() + count);
  return selection;
}

SpectralBasis egspca_extend(const SpectralBasis& reference, const GradientProbe& probe, int n_kept, int count) {
  if (reference.metric.kind != MetricKind::kEuclidean)
    throw ValidationError("egspca_extend: reference basis must be Euclidean");
  if (probe.coefficients.size() != reference.rank())
    throw ValidationError("egspca_extend: probe does not match reference basis");
  const ExtensionSelection selection = egspca_select(probe, n_kept, count);

  SpectralBasis extended;
  extended.metric = MetricDescriptor::euclidean();
  extended.components.resize(reference.dim(), n_kept + count);
  extended.singular_values.resize(n_kept + count);
  extended.components.leftCols(n_kept) = reference.components.leftCols(n_kept);
  extended.singular_values.head(n_kept) = reference.singular_values.head(n_kept);
  for (int j = 0; j < count; ++j) {
    extended.components.col(n_kept + j) = reference.components.col(selection.indices[j]);
    extended.singular_values[n_kept + j] = reference.singular_values[selection.indices[j]];
  }
  return extended;
}

SpectralBasis orthonormalize(const SpectralBasis& basis, const MetricDescriptor& metric) {
  SpectralBasis result = basis;
  result.metric = metric;
  for (int k = 0; k < result.rank(); ++k) {
    Vector v = result.components.col(k);
    for (int j = 0; j < k; ++j) {
      const Vector& q = result.components.col(j);
      v -= metric.inner(q, v) * q;
    }
    const double norm = std::sqrt(metric.inner(v, v));
    // After removing the span of the previous components nothing measurable
    // may remain; that means the inputs were linearly dependent.
    if (!(norm > 1e-12 * basis.components.col(k).norm()))
      throw NumericalError("orthonormalize: components are linearly dependent under the metric");
    result.components.col(k) = v / norm;
  }
  return result;
}

}  // namespace ospca
