#pragma once

#include <string>

#include "decomposition.hpp"
#include "reservoir.hpp"
#include "types.hpp"

namespace ospca {

/// Shortest round-trip decimal form of a double (printf %.17g). Every float
/// written by the library goes through this, so reruns produce byte-identical
/// artifacts.
std::string format_double(double value);

/// Parses a double, requiring the whole token to be consumed.
double parse_double(const std::string& token, const std::string& context);

// --- generic vectors ------------------------------------------------------

/// One value per line after an "OSPCA-VECTOR v1 n <count>" header.
void save_vector(const std::string& path, const Vector& v);
Vector load_vector(const std::string& path);

// --- bases ------------------------------------------------------------

/// Plain-text basis format:
///   OSPCA-BASIS v1 d <dim> m <rank> metric euclidean
///   OSPCA-BASIS v1 d <dim> m <rank> metric gradient eps <eps> J <file>
/// followed by one "sigma" line with m values and m component lines of d
/// values each. For gradient-weighted bases the metric's J vector is written
/// with save_vector to <file>, interpreted relative to the basis file's
/// directory; pass that name as gradient_filename.
void save_basis(const std::string& path, const SpectralBasis& basis, const std::string& gradient_filename = "");
SpectralBasis load_basis(const std::string& path);

/// CSV of the spectrum: index (1-based), sigma, cumulative energy fraction.
void save_spectrum_csv(const std::string& path, const Vector& singular_values);

// --- datasets ---------------------------------------------------------

/// One flattened sample per row, comma separated, after a
/// "# OSPCA-DATASET nx=<nx> ny=<ny> count=<M>" header line.
void save_dataset_csv(const std::string& path, const SampleMatrix& samples);
SampleMatrix load_dataset_csv(const std::string& path);

/// Plain-text (P2) PGM raster of one flattened field, min..max mapped to
/// 0..255. A constant field renders as all zeros.
void save_field_pgm(const std::string& path, const Vector& field, const GridShape& shape);

// --- reservoir cases ----------------------------------------------------

/// Case description as flat key=value text with grid./fluid./well.<i>.
/// prefixes.
void save_case(const std::string& path, const ReservoirCase& rc);
ReservoirCase load_case(const std::string& path);

/// CSV of well rates: well id, role, cell, rate (m^3/s).
void save_rates_csv(const std::string& path, const ReservoirCase& rc, const Vector& rates);

}  // namespace ospca
