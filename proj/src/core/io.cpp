#include "io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace ospca {

namespace {

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IOError("cannot open for writing: " + path);
  return out;
}

void finish_write(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IOError("write failed: " + path);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

/// Parses all whitespace/comma separated doubles in a line.
std::vector<double> parse_numbers(const std::string& line, const std::string& context) {
  std::vector<double> values;
  const char* p = line.c_str();
  while (*p != '\0') {
    while (*p == ' ' || *p == '\t' || *p == ',') ++p;
    if (*p == '\0') break;
    char* end = nullptr;
    const double v = std::strtod(p, &end);
    if (end == p) throw IOError(context + ": malformed number near '" + std::string(p).substr(0, 16) + "'");
    values.push_back(v);
    p = end;
  }
  return values;
}

std::string role_name(WellRole role) { return role == WellRole::kInjector ? "injector" : "producer"; }

}  // namespace

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

double parse_double(const std::string& token, const std::string& context) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') throw IOError(context + ": malformed number '" + token + "'");
  return v;
}

void save_vector(const std::string& path, const Vector& v) {
  std::ofstream out = open_for_write(path);
  out << "OSPCA-VECTOR v1 n " << v.size() << "\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) out << format_double(v[i]) << "\n";
  finish_write(out, path);
}

Vector load_vector(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  long long count = -1;
  if (lines.empty() || std::sscanf(lines[0].c_str(), "OSPCA-VECTOR v1 n %lld", &count) != 1 || count < 0)
    throw IOError(path + ": not an OSPCA-VECTOR v1 file");
  if (static_cast<long long>(lines.size()) < count + 1) throw IOError(path + ": truncated vector file");
  Vector v(count);
  for (long long i = 0; i < count; ++i) v[i] = parse_double(lines[i + 1], path);
  return v;
}

void save_basis(const std::string& path, const SpectralBasis& basis, const std::string& gradient_filename) {
  std::ofstream out = open_for_write(path);
  out << "OSPCA-BASIS v1 d " << basis.dim() << " m " << basis.rank() << " metric ";
  if (basis.metric.kind == MetricKind::kEuclidean) {
    out << "euclidean\n";
  } else {
    if (gradient_filename.empty())
      throw ValidationError("save_basis: gradient-weighted basis needs a gradient filename");
    out << "gradient eps " << format_double(basis.metric.epsilon) << " J " << gradient_filename << "\n";
    const auto dir = std::filesystem::path(path).parent_path();
    save_vector((dir / gradient_filename).string(), basis.metric.gradient);
  }
  out << "sigma";
  for (int i = 0; i < basis.rank(); ++i) out << " " << format_double(basis.singular_values[i]);
  out << "\n";
  for (int i = 0; i < basis.rank(); ++i) {
    for (int r = 0; r < basis.dim(); ++r) out << (r ? " " : "") << format_double(basis.components(r, i));
    out << "\n";
  }
  finish_write(out, path);
}

SpectralBasis load_basis(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw IOError(path + ": empty basis file");

  std::istringstream header(lines[0]);
  std::string magic, version, d_key, m_key, metric_key, metric_kind;
  long long dim = 0, rank = 0;
  header >> magic >> version >> d_key >> dim >> m_key >> rank >> metric_key >> metric_kind;
  if (!header || magic != "OSPCA-BASIS" || version != "v1" || d_key != "d" || m_key != "m" ||
      metric_key != "metric" || dim < 1 || rank < 1)
    throw IOError(path + ": not an OSPCA-BASIS v1 file");

  SpectralBasis basis;
  if (metric_kind == "euclidean") {
    basis.metric = MetricDescriptor::euclidean();
  } else if (metric_kind == "gradient") {
    std::string eps_key, j_key, j_file;
    std::string eps_token;
    header >> eps_key >> eps_token >> j_key >> j_file;
    if (!header || eps_key != "eps" || j_key != "J" || j_file.empty())
      throw IOError(path + ": malformed gradient metric header");
    const double eps = parse_double(eps_token, path);
    const auto dir = std::filesystem::path(path).parent_path();
    Vector gradient = load_vector((dir / j_file).string());
    if (gradient.size() != dim) throw IOError(path + ": gradient length does not match basis dimension");
    basis.metric = MetricDescriptor::gradient_weighted(std::move(gradient), eps);
  } else {
    throw IOError(path + ": unknown metric kind '" + metric_kind + "'");
  }

  if (static_cast<long long>(lines.size()) < 2 + rank) throw IOError(path + ": truncated basis file");
  if (lines[1].rfind("sigma", 0) != 0) throw IOError(path + ": missing sigma line");
  const std::vector<double> sigma = parse_numbers(lines[1].substr(5), path);
  if (static_cast<long long>(sigma.size()) != rank) throw IOError(path + ": sigma count does not match rank");

  basis.singular_values.resize(rank);
  basis.components.resize(dim, rank);
  for (long long i = 0; i < rank; ++i) {
    if (!(sigma[i] >= 0.0) || !std::isfinite(sigma[i])) throw IOError(path + ": sigma must be finite and >= 0");
    basis.singular_values[i] = sigma[i];
    const std::vector<double> row = parse_numbers(lines[2 + i], path);
    if (static_cast<long long>(row.size()) != dim) throw IOError(path + ": component length does not match dimension");
    for (long long r = 0; r < dim; ++r) basis.components(r, i) = row[r];
  }
  if (!basis.components.allFinite()) throw IOError(path + ": components have non-finite entries");
  return basis;
}

void save_spectrum_csv(const std::string& path, const Vector& singular_values) {
  std::ofstream out = open_for_write(path);
  out << "index,sigma,energy_fraction\n";
  const double total = singular_values.sum();
  double partial = 0.0;
  for (Eigen::Index i = 0; i < singular_values.size(); ++i) {
    partial += singular_values[i];
    const double fraction = total > 0.0 ? partial / total : 0.0;
    out << (i + 1) << "," << format_double(singular_values[i]) << "," << format_double(fraction) << "\n";
  }
  finish_write(out, path);
}

void save_dataset_csv(const std::string& path, const SampleMatrix& samples) {
  if (samples.grid.cells() != samples.dim()) throw ValidationError("save_dataset_csv: grid does not match data");
  std::ofstream out = open_for_write(path);
  out << "# OSPCA-DATASET nx=" << samples.grid.nx << " ny=" << samples.grid.ny << " count=" << samples.count()
      << "\n";
  for (int s = 0; s < samples.count(); ++s) {
    for (int r = 0; r < samples.dim(); ++r) out << (r ? "," : "") << format_double(samples.data(r, s));
    out << "\n";
  }
  finish_write(out, path);
}

SampleMatrix load_dataset_csv(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  int nx = 0, ny = 0, count = 0;
  if (lines.empty() || std::sscanf(lines[0].c_str(), "# OSPCA-DATASET nx=%d ny=%d count=%d", &nx, &ny, &count) != 3)
    throw IOError(path + ": not an OSPCA-DATASET file");
  if (nx < 1 || ny < 1 || count < 1) throw IOError(path + ": bad dataset header");
  if (static_cast<int>(lines.size()) < count + 1) throw IOError(path + ": truncated dataset file");

  SampleMatrix samples;
  samples.grid = GridShape{nx, ny};
  samples.data.resize(samples.grid.cells(), count);
  for (int s = 0; s < count; ++s) {
    const std::vector<double> row = parse_numbers(lines[s + 1], path);
    if (static_cast<int>(row.size()) != samples.grid.cells())
      throw IOError(path + ": sample row length does not match grid");
    for (int r = 0; r < samples.grid.cells(); ++r) samples.data(r, s) = row[r];
  }
  return samples;
}

void save_field_pgm(const std::string& path, const Vector& field, const GridShape& shape) {
  if (field.size() != shape.cells()) throw ValidationError("save_field_pgm: field length does not match grid");
  const double lo = field.minCoeff();
  const double hi = field.maxCoeff();
  std::ofstream out = open_for_write(path);
  out << "P2\n" << shape.nx << " " << shape.ny << "\n255\n";
  for (int iy = 0; iy < shape.ny; ++iy) {
    for (int ix = 0; ix < shape.nx; ++ix) {
      const double v = field[static_cast<Eigen::Index>(iy) * shape.nx + ix];
      const long level = hi > lo ? std::lround((v - lo) / (hi - lo) * 255.0) : 0;
      out << (ix ? " " : "") << level;
    }
    out << "\n";
  }
  finish_write(out, path);
}

void save_case(const std::string& path, const ReservoirCase& rc) {
  std::ofstream out = open_for_write(path);
  out << "grid.nx=" << rc.grid.nx << "\n";
  out << "grid.ny=" << rc.grid.ny << "\n";
  out << "grid.dx=" << format_double(rc.dx) << "\n";
  out << "grid.dy=" << format_double(rc.dy) << "\n";
  out << "grid.dz=" << format_double(rc.dz) << "\n";
  out << "fluid.viscosity=" << format_double(rc.viscosity) << "\n";
  out << "well.count=" << rc.wells.size() << "\n";
  for (std::size_t w = 0; w < rc.wells.size(); ++w) {
    const std::string prefix = "well." + std::to_string(w) + ".";
    out << prefix << "cell=" << rc.wells[w].cell << "\n";
    out << prefix << "bhp=" << format_double(rc.wells[w].bhp) << "\n";
    out << prefix << "radius=" << format_double(rc.wells[w].radius) << "\n";
    out << prefix << "role=" << role_name(rc.wells[w].role) << "\n";
  }
  finish_write(out, path);
}

ReservoirCase load_case(const std::string& path) {
  std::map<std::string, std::string> kv;
  for (const std::string& line : read_lines(path)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IOError(path + ": expected key=value, got '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const auto need = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw IOError(path + ": missing key '" + key + "'");
    return it->second;
  };
  const auto need_int = [&](const std::string& key) {
    return static_cast<int>(parse_double(need(key), path + " " + key));
  };

  ReservoirCase rc;
  rc.grid.nx = need_int("grid.nx");
  rc.grid.ny = need_int("grid.ny");
  rc.dx = parse_double(need("grid.dx"), path);
  rc.dy = parse_double(need("grid.dy"), path);
  rc.dz = parse_double(need("grid.dz"), path);
  rc.viscosity = parse_double(need("fluid.viscosity"), path);
  const int count = need_int("well.count");
  if (count < 1) throw IOError(path + ": well.count must be at least 1");
  for (int w = 0; w < count; ++w) {
    const std::string prefix = "well." + std::to_string(w) + ".";
    Well well;
    well.cell = need_int(prefix + "cell");
    well.bhp = parse_double(need(prefix + "bhp"), path);
    well.radius = parse_double(need(prefix + "radius"), path);
    const std::string& role = need(prefix + "role");
    if (role == "injector")
      well.role = WellRole::kInjector;
    else if (role == "producer")
      well.role = WellRole::kProducer;
    else
      throw IOError(path + ": unknown well role '" + role + "'");
    rc.wells.push_back(well);
  }
  return rc;
}

void save_rates_csv(const std::string& path, const ReservoirCase& rc, const Vector& rates) {
  if (rates.size() != static_cast<Eigen::Index>(rc.wells.size()))
    throw ValidationError("save_rates_csv: rate count does not match well count");
  std::ofstream out = open_for_write(path);
  out << "well,role,cell,rate_m3_per_s\n";
  for (std::size_t w = 0; w < rc.wells.size(); ++w)
    out << w << "," << role_name(rc.wells[w].role) << "," << rc.wells[w].cell << ","
        << format_double(rates[static_cast<Eigen::Index>(w)]) << "\n";
  finish_write(out, path);
}

}  // namespace ospca
