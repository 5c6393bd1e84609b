#include "qecdm/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace qecdm {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  }
}

long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long x = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

template <class F>
auto parse_enum(const std::string& key, const std::string& v, F f) {
  try {
    return f(v);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("'" + key + "': " + e.what());
  }
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "code") code = value;
  else if (key == "experiment") experiment = parse_enum(key, value, experiment_from_string);
  else if (key == "protocol") protocol = parse_enum(key, value, protocol_from_string);
  else if (key == "level") level = parse_enum(key, value, parallelism_from_string);
  else if (key == "bath") bath = parse_enum(key, value, bath_from_string);
  else if (key == "noise") noise = parse_enum(key, value, noise_axis_from_string);
  else if (key == "gamma0") gamma0 = to_double(key, value);
  else if (key == "gamma1") gamma1 = to_double(key, value);
  else if (key == "sweep_start") sweep_start = to_double(key, value);
  else if (key == "sweep_stop") sweep_stop = to_double(key, value);
  else if (key == "sweep_points") sweep_points = static_cast<int>(to_int(key, value));
  else if (key == "povm_eta") povm_eta = to_double(key, value);
  else if (key == "n_steps") n_steps = static_cast<int>(to_int(key, value));
  else if (key == "stop_at") stop_at = to_double(key, value);
  else if (key == "dt") dt = to_double(key, value);
  else if (key == "split_dt") split_dt = to_double(key, value);
  else if (key == "integrator") integrator = parse_enum(key, value, integrator_from_string);
  else if (key == "refine") refine = to_bool(key, value);
  else if (key == "allow_gamma0_bitflip") allow_gamma0_bitflip = to_bool(key, value);
  else if (key == "workers") {
    const long w = to_int(key, value);
    if (w < 1 || w > 256) throw ConfigError("'workers' must lie in [1, 256]");
    workers = static_cast<unsigned>(w);
  } else if (key == "output_dir") output_dir = value;
  else throw ConfigError("unknown key '" + key + "'");
}

std::vector<double> RunConfig::grid() const {
  if (!has_sweep()) return {};
  return log_grid(sweep_start, sweep_stop, sweep_points);
}

NoiseModel RunConfig::point_noise() const {
  NoiseModel m;
  m.gamma0 = gamma0;
  m.gamma1 = gamma1;
  m.bath = bath;
  return m;
}

ExperimentDescriptor RunConfig::descriptor() const {
  ExperimentDescriptor d;
  d.code = code;
  d.kind = experiment;
  d.protocol = protocol;
  d.level = level;
  d.bath = bath;
  d.axis = noise;
  d.povm_eta = povm_eta;
  d.options.n_steps = n_steps;
  d.options.stop_at = stop_at;
  d.integrator.dt = dt;
  d.integrator.split_dt = split_dt;
  d.integrator.method = integrator;
  d.workers = workers;
  return d;
}

void RunConfig::validate() const {
  if (code != "bit-flip-3" && code != "five-qubit") throw ConfigError("unknown code '" + code + "'");
  if (!(gamma0 >= 0.0) || !(gamma1 >= 0.0)) throw ConfigError("noise rates must be non-negative");
  if (has_sweep()) {
    if (!(sweep_start > 0.0 && sweep_stop > sweep_start)) throw ConfigError("sweep needs 0 < sweep_start < sweep_stop");
    if (sweep_points < 2) throw ConfigError("sweep_points must be at least 2");
  } else if (sweep_points < 0) {
    throw ConfigError("sweep_points must be non-negative");
  }
  if (!(povm_eta >= 0.0 && povm_eta <= 0.5)) throw ConfigError("povm_eta must lie in [0, 0.5]");
  if (n_steps < 3) throw ConfigError("n_steps must be at least 3");
  if (!(stop_at > 0.0 && stop_at < 0.5)) throw ConfigError("stop_at must lie in (0, 0.5)");
  if (!(dt > 0.0) || !(split_dt > 0.0)) throw ConfigError("integrator steps must be positive");
  if (integrator == Integrator::Exact && bath == Bath::Collective)
    throw ConfigError("the exact integrator needs a distinct bath");
  if (code == "bit-flip-3" && !allow_gamma0_bitflip) {
    const bool z_sweep = has_sweep() && noise != NoiseAxis::X;
    if (gamma0 > 0.0 || z_sweep)
      throw ConfigError("the bit-flip code does not protect against Z noise; set allow_gamma0_bitflip = true");
  }
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["code"] = code;
  j["experiment"] = to_string(experiment);
  j["protocol"] = to_string(protocol);
  j["level"] = to_string(level);
  j["bath"] = to_string(bath);
  j["noise"] = to_string(noise);
  j["gamma0"] = gamma0;
  j["gamma1"] = gamma1;
  j["sweep_start"] = sweep_start;
  j["sweep_stop"] = sweep_stop;
  j["sweep_points"] = sweep_points;
  j["povm_eta"] = povm_eta;
  j["n_steps"] = n_steps;
  j["stop_at"] = stop_at;
  j["dt"] = dt;
  j["split_dt"] = split_dt;
  j["integrator"] = to_string(integrator);
  j["refine"] = refine;
  j["allow_gamma0_bitflip"] = allow_gamma0_bitflip;
  j["workers"] = workers;
  j["output_dir"] = output_dir;
  return j;
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::set<std::string> seen;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    cfg.set(key, value);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_config(buf.str());
}

}  // namespace qecdm
