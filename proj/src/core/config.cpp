#include "config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "io.hpp"

namespace ospca {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

double parse_f64(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0')
    throw ValidationError("config: key '" + key + "' needs a number, got '" + value + "'");
  return v;
}

int parse_i32(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const long long v = std::strtoll(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0' || v < -2147483648LL || v > 2147483647LL)
    throw ValidationError("config: key '" + key + "' needs an integer, got '" + value + "'");
  return static_cast<int>(v);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  if (value.empty() || value[0] == '-')
    throw ValidationError("config: key '" + key + "' needs an unsigned integer, got '" + value + "'");
  char* end = nullptr;
  const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0')
    throw ValidationError("config: key '" + key + "' needs an unsigned integer, got '" + value + "'");
  return v;
}

std::vector<double> parse_factors(const std::string& value) {
  std::vector<double> factors;
  std::string token;
  std::istringstream stream(value);
  while (std::getline(stream, token, ',')) {
    const double f = parse_f64("n1.factors", trim(token));
    if (!(f >= 1.0)) throw ValidationError("config: n1.factors entries must be >= 1");
    factors.push_back(f);
  }
  if (factors.empty()) throw ValidationError("config: n1.factors must not be empty");
  return factors;
}

std::string join_factors(const std::vector<double>& factors) {
  std::string out;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (i) out += ",";
    out += format_double(factors[i]);
  }
  return out;
}

}  // namespace

ExperimentConfig default_config() {
  ExperimentConfig config;
  config.train.seed = mix_seed(config.seed, 1);
  config.test.seed = mix_seed(config.seed, 2);
  return config;
}

void config_set(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (key == "seed") {
    c.seed = parse_u64(key, value);
    if (!c.train_seed_explicit) c.train.seed = mix_seed(c.seed, 1);
    if (!c.test_seed_explicit) c.test.seed = mix_seed(c.seed, 2);
  } else if (key == "out.dir") {
    c.out_dir = value;
  } else if (key == "train.n") {
    c.train.n = parse_i32(key, value);
  } else if (key == "train.side") {
    c.train.side = parse_f64(key, value);
  } else if (key == "train.rms") {
    c.train.rms = parse_f64(key, value);
  } else if (key == "train.corr_len") {
    c.train.corr_len = parse_f64(key, value);
  } else if (key == "train.count") {
    c.train_count = parse_i32(key, value);
  } else if (key == "train.seed") {
    c.train.seed = parse_u64(key, value);
    c.train_seed_explicit = true;
  } else if (key == "test.n") {
    c.test.n = parse_i32(key, value);
  } else if (key == "test.side") {
    c.test.side = parse_f64(key, value);
  } else if (key == "test.rms") {
    c.test.rms = parse_f64(key, value);
  } else if (key == "test.corr_len") {
    c.test.corr_len = parse_f64(key, value);
  } else if (key == "test.count") {
    c.test_count = parse_i32(key, value);
  } else if (key == "test.index") {
    c.test_index = parse_i32(key, value);
  } else if (key == "test.seed") {
    c.test.seed = parse_u64(key, value);
    c.test_seed_explicit = true;
  } else if (key == "data.train") {
    c.train_data = value;
  } else if (key == "data.test") {
    c.test_data = value;
  } else if (key == "field.kmin") {
    c.kmin = parse_f64(key, value);
  } else if (key == "field.kmax") {
    c.kmax = parse_f64(key, value);
  } else if (key == "pca.threshold") {
    c.energy_threshold = parse_f64(key, value);
  } else if (key == "gs.eps_scaled") {
    c.eps_scaled = parse_f64(key, value);
  } else if (key == "fd.delta") {
    c.fd_delta = parse_f64(key, value);
  } else if (key == "n1.factors") {
    c.n1_factors = parse_factors(value);
  } else if (key == "gradient.kind") {
    if (value == "central")
      c.gradient_kind = GradientKind::kCentral;
    else if (value == "directional")
      c.gradient_kind = GradientKind::kDirectional;
    else
      throw ValidationError("config: gradient.kind must be 'central' or 'directional', got '" + value + "'");
  } else if (key == "case.dx") {
    c.case_dx = parse_f64(key, value);
  } else if (key == "case.dy") {
    c.case_dy = parse_f64(key, value);
  } else if (key == "case.dz") {
    c.case_dz = parse_f64(key, value);
  } else if (key == "case.viscosity") {
    c.viscosity = parse_f64(key, value);
  } else if (key == "case.injector_bhp") {
    c.injector_bhp = parse_f64(key, value);
  } else if (key == "case.producer_bhp") {
    c.producer_bhp = parse_f64(key, value);
  } else if (key == "case.well_radius") {
    c.well_radius = parse_f64(key, value);
  } else if (key == "descent.steps") {
    c.descent_steps = parse_i32(key, value);
  } else if (key == "descent.rate") {
    c.descent_rate = parse_f64(key, value);
  } else if (key == "descent.n") {
    c.descent_n = parse_i32(key, value);
  } else if (key == "sim.field") {
    c.sim_field = value;
  } else if (key == "sim.row") {
    c.sim_row = parse_i32(key, value);
  } else {
    throw ValidationError("config: unknown key '" + key + "'");
  }
}

std::string config_get(const ExperimentConfig& c, const std::string& key) {
  if (key == "seed") return std::to_string(c.seed);
  if (key == "out.dir") return c.out_dir;
  if (key == "train.n") return std::to_string(c.train.n);
  if (key == "train.side") return format_double(c.train.side);
  if (key == "train.rms") return format_double(c.train.rms);
  if (key == "train.corr_len") return format_double(c.train.corr_len);
  if (key == "train.count") return std::to_string(c.train_count);
  if (key == "train.seed") return std::to_string(c.train.seed);
  if (key == "test.n") return std::to_string(c.test.n);
  if (key == "test.side") return format_double(c.test.side);
  if (key == "test.rms") return format_double(c.test.rms);
  if (key == "test.corr_len") return format_double(c.test.corr_len);
  if (key == "test.count") return std::to_string(c.test_count);
  if (key == "test.index") return std::to_string(c.test_index);
  if (key == "test.seed") return std::to_string(c.test.seed);
  if (key == "data.train") return c.train_data;
  if (key == "data.test") return c.test_data;
  if (key == "field.kmin") return format_double(c.kmin);
  if (key == "field.kmax") return format_double(c.kmax);
  if (key == "pca.threshold") return format_double(c.energy_threshold);
  if (key == "gs.eps_scaled") return format_double(c.eps_scaled);
  if (key == "fd.delta") return format_double(c.fd_delta);
  if (key == "n1.factors") return join_factors(c.n1_factors);
  if (key == "gradient.kind") return c.gradient_kind == GradientKind::kCentral ? "central" : "directional";
  if (key == "case.dx") return format_double(c.case_dx);
  if (key == "case.dy") return format_double(c.case_dy);
  if (key == "case.dz") return format_double(c.case_dz);
  if (key == "case.viscosity") return format_double(c.viscosity);
  if (key == "case.injector_bhp") return format_double(c.injector_bhp);
  if (key == "case.producer_bhp") return format_double(c.producer_bhp);
  if (key == "case.well_radius") return format_double(c.well_radius);
  if (key == "descent.steps") return std::to_string(c.descent_steps);
  if (key == "descent.rate") return format_double(c.descent_rate);
  if (key == "descent.n") return std::to_string(c.descent_n);
  if (key == "sim.field") return c.sim_field;
  if (key == "sim.row") return std::to_string(c.sim_row);
  throw ValidationError("config: unknown key '" + key + "'");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "seed",          "out.dir",        "train.n",       "train.side",        "train.rms",
      "train.corr_len", "train.count",   "train.seed",    "test.n",            "test.side",
      "test.rms",      "test.corr_len",  "test.count",    "test.index",        "test.seed",
      "data.train",    "data.test",      "field.kmin",    "field.kmax",        "pca.threshold",
      "gs.eps_scaled", "fd.delta",       "n1.factors",    "gradient.kind",     "case.dx",
      "case.dy",       "case.dz",        "case.viscosity", "case.injector_bhp", "case.producer_bhp",
      "case.well_radius", "descent.steps", "descent.rate", "descent.n",         "sim.field",
      "sim.row"};
  return keys;
}

std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open config: " + path);
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw IOError(path + ":" + std::to_string(line_no) + ": expected key=value, got '" + stripped + "'");
    entries.emplace_back(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
  return entries;
}

ExperimentConfig config_from_entries(const std::vector<std::pair<std::string, std::string>>& entries) {
  ExperimentConfig config = default_config();
  for (const auto& [key, value] : entries) config_set(config, key, value);
  return config;
}

}  // namespace ospca
