#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "core/decomposition.hpp"
#include "core/randfield.hpp"
#include "core/types.hpp"
#include "test_support.hpp"

using ospca::GridShape;
using ospca::Matrix;
using ospca::MetricDescriptor;
using ospca::MetricKind;
using ospca::SampleMatrix;
using ospca::SpectralBasis;
using ospca::Truncation;
using ospca::ValidationError;
using ospca::Vector;

namespace {

SampleMatrix column_samples(const Matrix& data) {
  SampleMatrix s;
  s.data = data;
  s.grid = GridShape{static_cast<int>(data.rows()), 1};
  return s;
}

}  // namespace

TEST_SUITE("decomposition") {
  TEST_CASE("two opposite samples give a rank-one axis basis") {
    Matrix data(2, 2);
    data.col(0) = Vector{{1.0, 0.0}};
    data.col(1) = Vector{{-1.0, 0.0}};
    SpectralBasis basis = ospca::pca_fit(column_samples(data));

    // The exact second eigenvalue is zero; the rank cutoff drops it.
    REQUIRE(basis.rank() == 1);
    CHECK(basis.singular_values(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(basis.components(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(basis.components(1, 0)) < 1e-14);
    CHECK(basis.metric.kind == MetricKind::kEuclidean);
  }

  TEST_CASE("perfectly correlated samples give the diagonal direction") {
    Matrix data(2, 2);
    data.col(0) = Vector{{1.0, 1.0}};
    data.col(1) = Vector{{-1.0, -1.0}};
    SpectralBasis basis = ospca::pca_fit(column_samples(data));

    REQUIRE(basis.rank() == 1);
    CHECK(basis.singular_values(0) == doctest::Approx(2.0).epsilon(1e-14));
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(basis.components(0, 0) == doctest::Approx(inv_sqrt2).epsilon(1e-14));
    CHECK(basis.components(1, 0) == doctest::Approx(inv_sqrt2).epsilon(1e-14));
  }

  TEST_CASE("sign convention: largest-magnitude entry positive, ties to the lowest index") {
    Matrix data(2, 2);
    data.col(0) = Vector{{1.0, -2.0}};
    data.col(1) = Vector{{-1.0, 2.0}};
    SpectralBasis basis = ospca::pca_fit(column_samples(data));
    REQUIRE(basis.rank() == 1);
    // Direction (1,-2)/sqrt5 has its largest entry negative, so it is flipped.
    CHECK(basis.components(0, 0) == doctest::Approx(-1.0 / std::sqrt(5.0)).epsilon(1e-14));
    CHECK(basis.components(1, 0) == doctest::Approx(2.0 / std::sqrt(5.0)).epsilon(1e-14));

    Matrix cols(2, 2);
    cols.col(0) = Vector{{3.0, -4.0}};  // largest |entry| is -4 -> flip
    cols.col(1) = Vector{{-1.0, 1.0}};  // tie; entry 0 must end up positive
    ospca::apply_sign_convention(cols);
    CHECK(cols(0, 0) == -3.0);
    CHECK(cols(1, 0) == 4.0);
    CHECK(cols(0, 1) == 1.0);
    CHECK(cols(1, 1) == -1.0);
  }

  TEST_CASE("fit matches a dense eigensolver of the second-moment matrix") {
    const int d = 16, m = 10;
    Matrix data = ospca_test::random_matrix(d, m, 3);
    SpectralBasis basis = ospca::pca_fit(column_samples(data));
    REQUIRE(basis.rank() == m);

    Matrix k = data * data.transpose() / static_cast<double>(m);
    Eigen::SelfAdjointEigenSolver<Matrix> es(k);
    REQUIRE(es.info() == Eigen::Success);

    const double sigma1 = basis.singular_values(0);
    for (int i = 0; i < m; ++i) {
      const double lambda = es.eigenvalues()(d - 1 - i);  // descending order
      CHECK(std::abs(basis.singular_values(i) - lambda) < 1e-10 * sigma1);
      const Vector v = es.eigenvectors().col(d - 1 - i);
      CHECK(std::abs(basis.components.col(i).dot(v)) == doctest::Approx(1.0).epsilon(1e-6));
    }

    // Orthonormality of the fitted components.
    Matrix gram = basis.components.transpose() * basis.components;
    CHECK((gram - Matrix::Identity(m, m)).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("fitting twice is bit-for-bit deterministic") {
    Matrix data = ospca_test::random_matrix(9, 6, 17);
    SpectralBasis a = ospca::pca_fit(column_samples(data));
    SpectralBasis b = ospca::pca_fit(column_samples(data));
    CHECK((a.components.array() == b.components.array()).all());
    CHECK((a.singular_values.array() == b.singular_values.array()).all());
  }

  TEST_CASE("trace identity: spectrum sums to the mean squared sample norm") {
    ospca::SurfaceParams params;
    params.n = 11;
    params.seed = 77;
    SampleMatrix samples = ospca::make_dataset(150, params, 1.0, 100.0);
    SpectralBasis basis = ospca::pca_fit(samples);

    const double trace = samples.data.colwise().squaredNorm().mean();
    const double spectrum_sum = basis.singular_values.sum();
    CHECK(std::abs(spectrum_sum - trace) < 1e-10 * trace);
  }

  TEST_CASE("full-rank projection reproduces each sample") {
    Matrix data = ospca_test::random_matrix(12, 20, 11);
    SampleMatrix samples = column_samples(data);
    SpectralBasis basis = ospca::pca_fit(samples);
    REQUIRE(basis.rank() == 12);

    const Vector mu = data.col(3);
    Truncation full = ospca::project(basis, mu, basis.rank());
    CHECK(full.n_kept == 12);
    CHECK(full.residual.norm() < 1e-10 * mu.norm());
    CHECK((full.reconstruction - mu).norm() < 1e-10 * mu.norm());

    Truncation none = ospca::project(basis, mu, 0);
    CHECK(none.coefficients.size() == 0);
    CHECK(none.reconstruction.norm() == 0.0);
    CHECK((none.residual - mu).norm() == 0.0);
  }

  TEST_CASE("tail identity: mean squared residual equals the dropped spectrum") {
    ospca::SurfaceParams params;
    params.n = 11;
    params.seed = 5150;
    SampleMatrix samples = ospca::make_dataset(24, params, 1.0, 100.0);
    SpectralBasis basis = ospca::pca_fit(samples);
    const int rank = basis.rank();
    REQUIRE(rank == 24);  // fewer samples than dimensions: nothing dropped

    const double total = basis.singular_values.sum();
    double previous = total * 2;
    for (int n = 0; n <= rank; ++n) {
      double mean_sq = 0.0;
      for (int s = 0; s < samples.count(); ++s)
        mean_sq += ospca::project(basis, samples.data.col(s), n).residual.squaredNorm();
      mean_sq /= samples.count();

      const double tail = basis.singular_values.tail(rank - n).sum();
      CHECK(std::abs(mean_sq - tail) < 1e-8 * total);
      CHECK(mean_sq <= previous + 1e-12 * total);  // monotone in n
      previous = mean_sq;
    }
  }

  TEST_CASE("gradient-weighted metric arithmetic and projection") {
    const Vector j{{1.0, 0.0}};
    MetricDescriptor metric = MetricDescriptor::gradient_weighted(j, 3.0);  // W = diag(4, 1)

    const Vector e1{{1.0, 0.0}}, e2{{0.0, 1.0}};
    CHECK((metric.apply(e1) - Vector{{4.0, 0.0}}).norm() == 0.0);
    CHECK(metric.squared_norm(e1) == doctest::Approx(4.0));
    CHECK(metric.squared_norm(e2) == doctest::Approx(1.0));
    CHECK(metric.inner(e1, e2) == doctest::Approx(0.0));

    SpectralBasis basis;
    basis.components = Matrix(2, 1);
    basis.components << 0.5, 0.0;  // unit norm under W
    basis.singular_values = Vector{{1.0}};
    basis.metric = metric;
    CHECK(metric.squared_norm(basis.components.col(0)) == doctest::Approx(1.0));

    Truncation t = ospca::project(basis, e1, 1);
    CHECK(t.coefficients(0) == doctest::Approx(2.0));
    CHECK((t.reconstruction - e1).norm() < 1e-15);
    CHECK(t.residual.norm() < 1e-15);

    CHECK_THROWS_AS(MetricDescriptor::gradient_weighted(j, -1.0), ValidationError);
    CHECK_THROWS_AS(MetricDescriptor::gradient_weighted(Vector(), 1.0), ValidationError);
  }

  TEST_CASE("projection onto non-orthonormal components solves the Gram system") {
    // Two unit vectors 60 degrees apart: they span the plane but are far from
    // orthogonal, so raw inner products would over-count the shared direction.
    const double c = 0.5, s = std::sqrt(3.0) / 2.0;
    SpectralBasis basis;
    basis.components = Matrix(2, 2);
    basis.components << 1.0, c, 0.0, s;
    basis.singular_values = Vector{{2.0, 1.0}};
    basis.metric = MetricDescriptor::euclidean();

    const Vector mu{{1.0, 1.0}};

    // The leading single component is orthonormal on its own; plain inner
    // product applies.
    Truncation one = ospca::project(basis, mu, 1);
    CHECK(one.coefficients(0) == 1.0);
    CHECK(one.residual(0) == 0.0);
    CHECK(one.residual(1) == 1.0);

    // Both components span the whole plane, so the projection must reproduce
    // mu exactly; raw inner products would leave a residual of about 0.7.
    Truncation both = ospca::project(basis, mu, 2);
    CHECK(both.residual.norm() < 1e-12);
    // Hand solve of [[1, c], [c, 1]] a = (1, c + s).
    CHECK(both.coefficients(1) == doctest::Approx(1.0 / s));
    CHECK(both.coefficients(0) == doctest::Approx(1.0 - c / s));

    // Weighted metric: e1 has W-norm 2, not 1. The projection onto its span
    // is still mu's first coordinate; the raw inner product would give 4.
    SpectralBasis weighted;
    weighted.components = Matrix(2, 1);
    weighted.components << 1.0, 0.0;
    weighted.singular_values = Vector{{1.0}};
    weighted.metric = MetricDescriptor::gradient_weighted(Vector{{1.0, 0.0}}, 3.0);  // W = diag(4, 1)
    Truncation w = ospca::project(weighted, mu, 1);
    CHECK(w.coefficients(0) == doctest::Approx(1.0));
    CHECK(w.residual(0) == doctest::Approx(0.0));
    // The residual is W-orthogonal to the span and no longer than mu.
    CHECK(std::abs(weighted.metric.inner(weighted.components.col(0), w.residual)) < 1e-12);
    CHECK(weighted.metric.squared_norm(w.residual) <= weighted.metric.squared_norm(mu) + 1e-12);
  }

  TEST_CASE("energy_fraction on a hand spectrum") {
    const Vector sigma{{3.0, 1.0, 1.0}};
    CHECK(ospca::energy_fraction(sigma, 0) == doctest::Approx(0.0));
    CHECK(ospca::energy_fraction(sigma, 1) == doctest::Approx(0.6));
    CHECK(ospca::energy_fraction(sigma, 2) == doctest::Approx(0.8));
    CHECK(ospca::energy_fraction(sigma, 3) == doctest::Approx(1.0));
    CHECK_THROWS_AS(ospca::energy_fraction(sigma, 4), ValidationError);
    CHECK_THROWS_AS(ospca::energy_fraction(sigma, -1), ValidationError);
    // An all-zero spectrum carries no mass at all; the fraction is defined as 0.
    CHECK(ospca::energy_fraction(Vector::Zero(2), 1) == 0.0);
  }

  TEST_CASE("select_dimension on a hand spectrum") {
    const Vector sigma{{3.0, 1.0, 1.0}};
    CHECK(ospca::select_dimension(sigma, 0.6) == 1);
    CHECK(ospca::select_dimension(sigma, 0.8) == 2);
    CHECK(ospca::select_dimension(sigma, 0.95) == 3);
    CHECK(ospca::select_dimension(sigma, 1.0) == 3);
    CHECK_THROWS_AS(ospca::select_dimension(sigma, 0.0), ValidationError);
    CHECK_THROWS_AS(ospca::select_dimension(sigma, 1.5), ValidationError);
    CHECK_THROWS_AS(ospca::select_dimension(Vector::Zero(3), 0.5), ValidationError);
  }

  TEST_CASE("subspace_angle separates identical, rotated, and orthogonal spans") {
    SpectralBasis a;
    a.components = Matrix::Identity(3, 2);
    a.singular_values = Vector{{2.0, 1.0}};

    SpectralBasis same = a;
    CHECK(ospca::subspace_angle(a, same, 2) < 1e-7);

    // Any rotation within the span keeps the angle at zero.
    SpectralBasis rotated = a;
    const double c = std::cos(0.7), s = std::sin(0.7);
    rotated.components << c, -s, s, c, 0, 0;
    CHECK(ospca::subspace_angle(a, rotated, 2) < 1e-7);

    SpectralBasis other = a;
    other.components = Matrix::Zero(3, 2);
    other.components(0, 0) = 1.0;  // e1
    other.components(2, 1) = 1.0;  // e3
    CHECK(ospca::subspace_angle(a, other, 2) == doctest::Approx(M_PI / 2).epsilon(1e-10));
    CHECK(ospca::subspace_angle(a, other, 1) < 1e-7);

    CHECK_THROWS_AS(ospca::subspace_angle(a, other, 0), ValidationError);
    CHECK_THROWS_AS(ospca::subspace_angle(a, other, 3), ValidationError);
  }

  TEST_CASE("fit and projection input validation") {
    SampleMatrix empty;
    empty.data = Matrix(4, 0);
    empty.grid = GridShape{4, 1};
    CHECK_THROWS_AS(ospca::pca_fit(empty), ValidationError);

    SampleMatrix mismatched = column_samples(ospca_test::random_matrix(4, 3, 1));
    mismatched.grid = GridShape{5, 1};
    CHECK_THROWS_AS(ospca::pca_fit(mismatched), ValidationError);

    SampleMatrix bad = column_samples(ospca_test::random_matrix(4, 3, 1));
    bad.data(1, 1) = std::nan("");
    CHECK_THROWS_AS(ospca::pca_fit(bad), ValidationError);

    SpectralBasis basis = ospca::pca_fit(column_samples(ospca_test::random_matrix(4, 3, 2)));
    CHECK_THROWS_AS(ospca::project(basis, Vector::Zero(5), 1), ValidationError);
    CHECK_THROWS_AS(ospca::project(basis, Vector::Zero(4), basis.rank() + 1), ValidationError);
    CHECK_THROWS_AS(ospca::project(basis, Vector::Zero(4), -1), ValidationError);
  }
}
