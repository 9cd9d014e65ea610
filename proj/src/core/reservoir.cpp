#include "reservoir.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <set>
#include <string>

namespace ospca {

namespace {

constexpr double kPi = 3.14159265358979323846;

void validate_case(const ReservoirCase& rc) {
  if (rc.grid.nx < 2 || rc.grid.ny < 2) throw ValidationError("reservoir: grid must be at least 2x2");
  if (!(rc.dx > 0.0) || !(rc.dy > 0.0) || !(rc.dz > 0.0)) throw ValidationError("reservoir: cell sizes must be positive");
  if (!(rc.viscosity > 0.0)) throw ValidationError("reservoir: viscosity must be positive");
  if (rc.wells.empty()) throw ValidationError("reservoir: at least one well is required");

  const double re = 0.14 * std::hypot(rc.dx, rc.dy);
  std::set<int> cells;
  int injectors = 0;
  for (const Well& well : rc.wells) {
    if (well.cell < 0 || well.cell >= rc.grid.cells()) throw ValidationError("reservoir: well cell out of grid");
    if (!cells.insert(well.cell).second) throw ValidationError("reservoir: two wells share a cell");
    if (!std::isfinite(well.bhp)) throw ValidationError("reservoir: well pressure must be finite");
    if (!(well.radius > 0.0) || !(well.radius < re))
      throw ValidationError("reservoir: well radius must be positive and below the equivalent radius");
    if (well.role == WellRole::kInjector) ++injectors;
  }
  if (injectors != 1) throw ValidationError("reservoir: exactly one injector is required");
}

/// Peaceman well index for a vertical well in a cell of permeability k (m^2).
double well_index(const ReservoirCase& rc, const Well& well, double k) {
  const double re = 0.14 * std::hypot(rc.dx, rc.dy);
  return 2.0 * kPi * k * rc.dz / (rc.viscosity * std::log(re / well.radius));
}

}  // namespace

int ReservoirCase::injector_index() const {
  int found = -1;
  for (std::size_t w = 0; w < wells.size(); ++w) {
    if (wells[w].role != WellRole::kInjector) continue;
    if (found >= 0) throw ValidationError("reservoir: more than one injector");
    found = static_cast<int>(w);
  }
  if (found < 0) throw ValidationError("reservoir: no injector");
  return found;
}

ReservoirCase make_five_spot_case(int nx, int ny, double dx, double dy, double dz, double viscosity,
                                  double injector_bhp, double producer_bhp, double well_radius) {
  ReservoirCase rc;
  rc.grid = GridShape{nx, ny};
  rc.dx = dx;
  rc.dy = dy;
  rc.dz = dz;
  rc.viscosity = viscosity;
  const int center = (ny / 2) * nx + nx / 2;
  rc.wells.push_back(Well{center, injector_bhp, well_radius, WellRole::kInjector});
  rc.wells.push_back(Well{0, producer_bhp, well_radius, WellRole::kProducer});
  rc.wells.push_back(Well{nx - 1, producer_bhp, well_radius, WellRole::kProducer});
  rc.wells.push_back(Well{(ny - 1) * nx, producer_bhp, well_radius, WellRole::kProducer});
  rc.wells.push_back(Well{(ny - 1) * nx + nx - 1, producer_bhp, well_radius, WellRole::kProducer});
  validate_case(rc);
  return rc;
}

Vector simulate(const ReservoirCase& rc, const Vector& mu) {
  validate_case(rc);
  const int cells = rc.grid.cells();
  if (mu.size() != cells) throw ValidationError("simulate: field length does not match grid");
  if (!mu.allFinite()) throw ValidationError("simulate: field has non-finite entries");

  // log-millidarcy -> m^2
  Vector k(cells);
  for (int c = 0; c < cells; ++c) k[c] = std::exp(mu[c]) * kMilliDarcyToM2;
  if (!k.allFinite()) throw NumericalError("simulate: permeability overflow");

  // Two-point fluxes with harmonic inter-cell transmissibilities; no-flow
  // outer boundary (simply no connection terms there).
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(cells) * 5);
  Vector diagonal = Vector::Zero(cells);
  const auto couple = [&](int a, int b, double geometry) {
    const double harmonic = 2.0 * k[a] * k[b] / (k[a] + k[b]);
    const double t = geometry * harmonic / rc.viscosity;
    diagonal[a] += t;
    diagonal[b] += t;
    entries.emplace_back(a, b, -t);
    entries.emplace_back(b, a, -t);
  };
  for (int iy = 0; iy < rc.grid.ny; ++iy) {
    for (int ix = 0; ix < rc.grid.nx; ++ix) {
      const int c = iy * rc.grid.nx + ix;
      if (ix + 1 < rc.grid.nx) couple(c, c + 1, rc.dy * rc.dz / rc.dx);
      if (iy + 1 < rc.grid.ny) couple(c, c + rc.grid.nx, rc.dx * rc.dz / rc.dy);
    }
  }

  // BHP-controlled wells add WI to the diagonal and WI*bhp to the source,
  // keeping the system symmetric positive definite.
  Vector rhs = Vector::Zero(cells);
  std::vector<double> wi(rc.wells.size());
  for (std::size_t w = 0; w < rc.wells.size(); ++w) {
    const Well& well = rc.wells[w];
    wi[w] = well_index(rc, well, k[well.cell]);
    diagonal[well.cell] += wi[w];
    rhs[well.cell] += wi[w] * well.bhp;
  }
  for (int c = 0; c < cells; ++c) entries.emplace_back(c, c, diagonal[c]);

  Eigen::SparseMatrix<double> system(cells, cells);
  system.setFromTriplets(entries.begin(), entries.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(system);
  if (solver.info() != Eigen::Success) throw NumericalError("simulate: pressure system factorization failed");
  const Vector pressure = solver.solve(rhs);
  if (solver.info() != Eigen::Success || !pressure.allFinite())
    throw NumericalError("simulate: pressure solve failed");

  Vector rates(rc.wells.size());
  for (std::size_t w = 0; w < rc.wells.size(); ++w)
    rates[static_cast<int>(w)] = wi[w] * (rc.wells[w].bhp - pressure[rc.wells[w].cell]);
  return rates;
}

double objective(const ReservoirCase& rc, const Vector& mu) {
  if (rc.observations.size() != static_cast<Eigen::Index>(rc.wells.size()))
    throw ValidationError("objective: case has no reference observations");
  const Vector rates = simulate(rc, mu);
  return (rates - rc.observations).squaredNorm();
}

GradientProbe fd_gradient(const ObjectiveFn& objective_fn, const SpectralBasis& basis, const Vector& eta,
                          int probe_count, double delta) {
  if (eta.size() != basis.dim()) throw ValidationError("fd_gradient: trial point length mismatch");
  if (probe_count < 1 || probe_count > basis.rank()) throw ValidationError("fd_gradient: probe_count out of range");
  if (!(delta > 0.0)) throw ValidationError("fd_gradient: delta must be positive");

  GradientProbe probe;
  probe.trial_point = eta;
  probe.epsilon = 0.0;
  probe.coefficients = Vector::Zero(basis.rank());
  for (int i = 0; i < probe_count; ++i) {
    const double step = delta * std::sqrt(basis.singular_values[i]);
    if (!(step > 0.0)) throw ValidationError("fd_gradient: component has zero spectral scale");
    const Vector direction = basis.components.col(i);
    try {
      const double forward = objective_fn(eta + step * direction);
      const double backward = objective_fn(eta - step * direction);
      probe.coefficients[i] = (forward - backward) / (2.0 * step);
    } catch (const NumericalError& err) {
      throw NumericalError("fd_gradient: objective failed at probe " + std::to_string(i) + ": " + err.what());
    }
  }
  if (!probe.coefficients.allFinite()) throw NumericalError("fd_gradient: non-finite difference quotient");
  probe.gradient = basis.components.leftCols(probe_count) * probe.coefficients.head(probe_count);
  return probe;
}

GradientProbe fd_gradient(const ReservoirCase& rc, const SpectralBasis& basis, const Vector& eta, int probe_count,
                          double delta) {
  return fd_gradient([&rc](const Vector& mu) { return objective(rc, mu); }, basis, eta, probe_count, delta);
}

GradientProbe direction_gradient(const SpectralBasis& basis, const Vector& eta, const Vector& mu_star,
                                 double objective_at_eta, int n_known) {
  if (eta.size() != basis.dim() || mu_star.size() != basis.dim())
    throw ValidationError("direction_gradient: vector length mismatch");
  if (n_known < 0 || n_known > basis.rank()) throw ValidationError("direction_gradient: n_known out of range");
  if (!(objective_at_eta >= 0.0) || !std::isfinite(objective_at_eta))
    throw ValidationError("direction_gradient: objective value must be finite and nonnegative");

  const Vector residual = mu_star - eta;
  const double dist2 = residual.squaredNorm();
  if (!(dist2 > 0.0)) throw ValidationError("direction_gradient: trial point coincides with the target");

  GradientProbe probe;
  probe.trial_point = eta;
  probe.epsilon = 0.0;
  probe.gradient = (-objective_at_eta / dist2) * residual;
  // eta matches the target on the first n_known components by assumption, so
  // those coefficients are exact zeros rather than round-off noise.
  probe.coefficients = Vector::Zero(basis.rank());
  for (int i = n_known; i < basis.rank(); ++i) probe.coefficients[i] = basis.components.col(i).dot(probe.gradient);
  return probe;
}

double gradient_cosine(const Vector& g1, const Vector& g2) {
  if (g1.size() != g2.size()) throw ValidationError("gradient_cosine: length mismatch");
  const double n1 = g1.norm();
  const double n2 = g2.norm();
  if (n1 == 0.0 || n2 == 0.0) throw ValidationError("gradient_cosine: zero gradient vector");
  return std::clamp(g1.dot(g2) / (n1 * n2), -1.0, 1.0);
}

void set_scaled_epsilon(GradientProbe& probe, double eps_scaled) {
  if (!(eps_scaled >= 0.0) || !std::isfinite(eps_scaled))
    throw ValidationError("set_scaled_epsilon: eps_scaled must be finite and >= 0");
  const double norm2 = probe.gradient.squaredNorm();
  probe.epsilon = norm2 > 0.0 ? eps_scaled / norm2 : 0.0;
}

}  // namespace ospca
