#pragma once

#include <functional>
#include <vector>

#include "objective_sensitive.hpp"
#include "types.hpp"

namespace ospca {

/// Unit conversion for permeability: the parameter fields are log-millidarcy,
/// the solver works in SI (m^2).
inline constexpr double kMilliDarcyToM2 = 9.869233e-16;

enum class WellRole { kInjector, kProducer };

/// A bottom-hole-pressure controlled vertical well in one cell.
struct Well {
  int cell = 0;       // row-major cell index
  double bhp = 0.0;   // controlled bottom-hole pressure, Pa
  double radius = 0.1;  // wellbore radius, m
  WellRole role = WellRole::kProducer;
};

/// A steady single-phase incompressible flow problem on a regular 2D grid.
///
/// The parameter vector mu attached to this case is a flattened log(k) field
/// in log-millidarcy on the (nx, ny) grid; permeability is k = exp(mu) mD.
struct ReservoirCase {
  GridShape grid;
  double dx = 10.0, dy = 10.0, dz = 1.0;  // cell sizes, m
  double viscosity = 1.0e-3;              // fluid viscosity, Pa s
  std::vector<Well> wells;
  Vector observations;  // reference well rates S0 (m^3/s); empty until set

  int injector_index() const;  // index into wells of the unique injector
};

/// Builds the default well pattern on an nx x ny grid: one injector in the
/// center cell and four producers in the corner cells.
ReservoirCase make_five_spot_case(int nx, int ny, double dx = 10.0, double dy = 10.0, double dz = 1.0,
                                  double viscosity = 1.0e-3, double injector_bhp = 2.0e7,
                                  double producer_bhp = 1.0e7, double well_radius = 0.1);

/// Solves steady single-phase incompressible Darcy flow for the log(k) field
/// mu and returns the volumetric rate of each well (positive = injection,
/// order matches rc.wells).
///
/// Discretization: two-point flux approximation with harmonic inter-cell
/// transmissibilities, no-flow outer boundaries, and Peaceman well indices
/// WI = 2 pi k dz / (viscosity * ln(re/rw)) with re = 0.14*sqrt(dx^2+dy^2).
/// All wells are BHP-controlled, so the sparse system is symmetric positive
/// definite and is factored with a sparse LDL^T. Rates are
/// S_w = WI_w * (bhp_w - p_cell).
Vector simulate(const ReservoirCase& rc, const Vector& mu);

/// Data mismatch of the simulated rates against rc.observations:
/// C(mu) = sum_w (S_w(mu) - S0_w)^2, in (m^3/s)^2.
double objective(const ReservoirCase& rc, const Vector& mu);

using ObjectiveFn = std::function<double(const Vector&)>;

/// Estimates the objective gradient at eta restricted to the span of the
/// first probe_count basis components, by central finite differences along
/// each component:
///   b_i ~= (C(eta + h_i phi_i) - C(eta - h_i phi_i)) / (2 h_i),
///   h_i = delta * sqrt(sigma_i).
/// The step rides the component's spectral scale so every direction is probed
/// at a comparable relative amplitude. The returned probe has
/// gradient = sum_i b_i phi_i (the gradient's representative inside the
/// probed span), coefficients b_i for i < probe_count and exact zeros beyond,
/// and epsilon = 0 (assign one later, e.g. with set_scaled_epsilon).
GradientProbe fd_gradient(const ObjectiveFn& objective_fn, const SpectralBasis& basis, const Vector& eta,
                          int probe_count, double delta);

/// Convenience overload probing the reservoir objective.
GradientProbe fd_gradient(const ReservoirCase& rc, const SpectralBasis& basis, const Vector& eta, int probe_count,
                          double delta);

/// Builds the synthetic "point at the truth" gradient for a known target:
///   J = -(C(eta) / |mu_star - eta|^2) * (mu_star - eta),
/// the steepest-descent direction scaled so that a full step eta -> mu_star
/// linearly cancels the objective value objective_at_eta. Coefficients are
/// exact zeros for components i < n_known (eta is assumed to match mu_star
/// there) and phi_i^T J beyond.
GradientProbe direction_gradient(const SpectralBasis& basis, const Vector& eta, const Vector& mu_star,
                                 double objective_at_eta, int n_known);

/// Cosine of the angle between two gradient vectors. Zero vectors are
/// rejected (the angle is undefined there).
double gradient_cosine(const Vector& g1, const Vector& g2);

/// Sets probe.epsilon from the scale-free product eps_scaled = eps * |J|^2,
/// the knob the experiments are parameterized by. A zero gradient gets
/// epsilon = 0.
void set_scaled_epsilon(GradientProbe& probe, double eps_scaled);

}  // namespace ospca
