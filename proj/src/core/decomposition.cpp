#include "decomposition.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace ospca {

MetricDescriptor MetricDescriptor::gradient_weighted(Vector gradient, double epsilon) {
  if (gradient.size() == 0) throw ValidationError("metric: gradient must be non-empty");
  if (!gradient.allFinite()) throw ValidationError("metric: gradient has non-finite entries");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ValidationError("metric: epsilon must be finite and >= 0");
  MetricDescriptor metric;
  metric.kind = MetricKind::kGradientWeighted;
  metric.gradient = std::move(gradient);
  metric.epsilon = epsilon;
  return metric;
}

Vector MetricDescriptor::apply(const Vector& x) const {
  if (kind == MetricKind::kEuclidean) return x;
  if (x.size() != gradient.size()) throw ValidationError("metric: vector length does not match gradient length");
  return x + (epsilon * gradient.dot(x)) * gradient;
}

Matrix MetricDescriptor::apply(const Matrix& columns) const {
  if (kind == MetricKind::kEuclidean) return columns;
  Matrix out(columns.rows(), columns.cols());
  for (Eigen::Index c = 0; c < columns.cols(); ++c) out.col(c) = apply(Vector(columns.col(c)));
  return out;
}

double MetricDescriptor::inner(const Vector& x, const Vector& y) const {
  if (kind == MetricKind::kEuclidean) return x.dot(y);
  if (x.size() != gradient.size() || y.size() != gradient.size())
    throw ValidationError("metric: vector length does not match gradient length");
  return x.dot(y) + epsilon * gradient.dot(x) * gradient.dot(y);
}

SpectralBasis pca_fit(const SampleMatrix& samples) {
  if (samples.count() < 1) throw ValidationError("pca_fit: need at least one sample");
  if (samples.grid.cells() != samples.dim()) throw ValidationError("pca_fit: grid shape does not match sample length");
  if (!samples.data.allFinite()) throw ValidationError("pca_fit: samples have non-finite entries");

  // Thin SVD of X / sqrt(M); squared singular values are the eigenvalues of
  // the second moment K = (1/M) X X^T. No mean removal, by design.
  const double scale = 1.0 / std::sqrt(static_cast<double>(samples.count()));
  Eigen::BDCSVD<Matrix> svd(samples.data * scale, Eigen::ComputeThinU);

  const Vector& sv = svd.singularValues();  // descending by construction
  const double cutoff = sv.size() > 0 ? kRankCutoff * sv[0] * sv[0] : 0.0;
  int rank = 0;
  while (rank < sv.size() && sv[rank] * sv[rank] > cutoff) ++rank;

  SpectralBasis basis;
  basis.metric = MetricDescriptor::euclidean();
  basis.components = svd.matrixU().leftCols(rank);
  basis.singular_values = sv.head(rank).array().square();
  apply_sign_convention(basis.components);
  return basis;
}

Truncation project(const SpectralBasis& basis, const Vector& mu, int n_kept) {
  if (mu.size() != basis.dim()) throw ValidationError("project: vector length does not match basis dimension");
  if (n_kept < 0 || n_kept > basis.rank()) throw ValidationError("project: n_kept out of range [0, rank]");

  Truncation result;
  result.n_kept = n_kept;
  result.coefficients = project_coefficients(basis, mu, n_kept);
  result.reconstruction = basis.components.leftCols(n_kept) * result.coefficients;
  result.residual = mu - result.reconstruction;
  return result;
}

Matrix project_coefficients(const SpectralBasis& basis, const Matrix& columns, int n_kept) {
  if (columns.rows() != basis.dim()) throw ValidationError("project: vector length does not match basis dimension");
  if (n_kept < 0 || n_kept > basis.rank()) throw ValidationError("project: n_kept out of range [0, rank]");

  const auto leading = basis.components.leftCols(n_kept);
  Matrix coefficients = leading.transpose() * basis.metric.apply(columns);
  if (n_kept > 0) {
    const Matrix gram = leading.transpose() * basis.metric.apply(Matrix(leading));
    const double defect = (gram - Matrix::Identity(n_kept, n_kept)).cwiseAbs().maxCoeff();
    // Orthonormal leading block: the inner products already are the expansion
    // coefficients. Otherwise solve the Gram system so the reconstruction is
    // the metric-orthogonal projection onto the span.
    if (defect > kGramDefectTolerance) coefficients = gram.ldlt().solve(coefficients).eval();
  }
  return coefficients;
}

double energy_fraction(const Vector& singular_values, int n) {
  if (n < 0 || n > singular_values.size()) throw ValidationError("energy_fraction: n out of range");
  const double total = singular_values.sum();
  if (!(total > 0.0)) return 0.0;
  return singular_values.head(n).sum() / total;
}

int select_dimension(const Vector& singular_values, double threshold) {
  if (!(threshold > 0.0) || !(threshold <= 1.0)) throw ValidationError("select_dimension: threshold must be in (0, 1]");
  const double total = singular_values.sum();
  if (!(total > 0.0)) throw ValidationError("select_dimension: spectrum is empty or all zero");
  double partial = 0.0;
  for (int i = 0; i < singular_values.size(); ++i) {
    partial += singular_values[i];
    if (partial / total >= threshold) return i + 1;
  }
  return static_cast<int>(singular_values.size());
}

double subspace_angle(const SpectralBasis& a, const SpectralBasis& b, int n) {
  if (n < 1 || n > a.rank() || n > b.rank()) throw ValidationError("subspace_angle: n out of range");
  if (a.dim() != b.dim()) throw ValidationError("subspace_angle: bases live in different dimensions");

  // Compare the raw column spans in Euclidean geometry regardless of the
  // bases' own metrics: orthonormalize both spans, then take the angle from
  // the out-of-plane part of one span against the other. The sine form
  // sin(theta_max) = |(I - Qa Qa^T) Qb|_2 resolves tiny angles that the
  // cosine form (acos near 1) cannot.
  const auto thin_q = [](const Matrix& cols) {
    Eigen::HouseholderQR<Matrix> qr(cols);
    return Matrix(qr.householderQ() * Matrix::Identity(cols.rows(), cols.cols()));
  };
  const Matrix qa = thin_q(a.components.leftCols(n));
  const Matrix qb = thin_q(b.components.leftCols(n));
  const Matrix out_of_plane = qb - qa * (qa.transpose() * qb);
  Eigen::BDCSVD<Matrix> svd(out_of_plane);
  const double sine = svd.singularValues().maxCoeff();
  return std::asin(std::clamp(sine, 0.0, 1.0));
}

void apply_sign_convention(Matrix& components) {
  for (Eigen::Index c = 0; c < components.cols(); ++c) {
    Eigen::Index lead = 0;
    double best = 0.0;
    for (Eigen::Index r = 0; r < components.rows(); ++r) {
      const double mag = std::abs(components(r, c));
      if (mag > best) {  // strict: ties keep the lowest row index
        best = mag;
        lead = r;
      }
    }
    if (best > 0.0 && components(lead, c) < 0.0) components.col(c) = -components.col(c);
  }
}

}  // namespace ospca
