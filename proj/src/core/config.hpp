#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "randfield.hpp"
#include "types.hpp"

namespace ospca {

enum class GradientKind { kCentral, kDirectional };

/// Everything the experiment pipeline needs, settable through flat key=value
/// configuration. See configs/default.cfg for the full key list with the
/// default values; README.md documents the semantics.
struct ExperimentConfig {
  std::uint64_t seed = 23;
  std::string out_dir = "out";

  SurfaceParams train{21, 3.0, 1.0, 1.0, 0};  // train.{n,side,rms,corr_len,seed}
  int train_count = 441;                      // train.count
  SurfaceParams test{21, 6.0, 1.0, 1.0, 0};   // test.{n,side,rms,corr_len,seed}
  int test_count = 1;                         // test.count
  int test_index = 0;                         // test.index
  std::string train_data;                     // data.train: precomputed dataset CSV
  std::string test_data;                      // data.test

  double kmin = 1.0, kmax = 100.0;  // field.kmin, field.kmax (millidarcy)

  double energy_threshold = 0.95;          // pca.threshold
  double eps_scaled = 100.0;               // gs.eps_scaled = eps * |J|^2
  double fd_delta = 1e-2;                  // fd.delta
  std::vector<double> n1_factors{1.0, 1.5};  // n1.factors
  GradientKind gradient_kind = GradientKind::kCentral;  // gradient.kind

  double case_dx = 10.0, case_dy = 10.0, case_dz = 1.0;  // case.{dx,dy,dz}
  double viscosity = 1e-3;                               // case.viscosity
  double injector_bhp = 2e7, producer_bhp = 1e7;         // case.{injector,producer}_bhp
  double well_radius = 0.1;                              // case.well_radius

  int descent_steps = 50;      // descent.steps
  double descent_rate = 0.25;  // descent.rate
  int descent_n = 0;           // descent.n; 0 means "use the selected N"

  std::string sim_field;  // sim.field: dataset CSV to feed the simulator
  int sim_row = 0;        // sim.row

  // Dataset seeds derive from the master seed (train: stream 1, test: stream
  // 2) until train.seed / test.seed are set explicitly; afterwards they stick.
  bool train_seed_explicit = false;
  bool test_seed_explicit = false;
};

/// Defaults with derived dataset seeds filled in.
ExperimentConfig default_config();

/// Applies one key=value assignment. Unknown keys and unparsable values throw
/// ValidationError.
void config_set(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Serializes the current value of one key (inverse of config_set).
std::string config_get(const ExperimentConfig& config, const std::string& key);

/// All recognized keys, in documentation order.
const std::vector<std::string>& config_keys();

/// Reads a flat key=value file: one assignment per line, blank lines and
/// lines starting with '#' ignored, whitespace trimmed around keys/values.
/// Returns assignments in file order (not yet applied).
std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& path);

/// default_config() with a list of assignments applied in order.
ExperimentConfig config_from_entries(const std::vector<std::pair<std::string, std::string>>& entries);

}  // namespace ospca
