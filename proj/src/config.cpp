#include "pmsmsim/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "pmsmsim/errors.hpp"

namespace pmsm {

namespace {

struct Entry {
  std::string value;
  int line = 0;
  mutable bool used = false;
};

using Section = std::map<std::string, Entry>;

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::map<std::string, Section> parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::map<std::string, Section> sections;
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ParseError("line " + std::to_string(lineno) +
                         ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        throw ParseError("line " + std::to_string(lineno) + ": empty section");
      }
      sections[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("line " + std::to_string(lineno) +
                       ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ParseError("line " + std::to_string(lineno) + ": empty key");
    }
    if (section.empty()) {
      throw ParseError("line " + std::to_string(lineno) +
                       ": key outside of any [section]");
    }
    sections[section][key] = Entry{value, lineno};
  }
  return sections;
}

class Reader {
 public:
  explicit Reader(std::map<std::string, Section> sections)
      : sections_(std::move(sections)) {}

  const Entry* find(const std::string& sec, const std::string& key) const {
    const auto s = sections_.find(sec);
    if (s == sections_.end()) return nullptr;
    const auto e = s->second.find(key);
    if (e == s->second.end()) return nullptr;
    e->second.used = true;
    return &e->second;
  }

  double number(const std::string& sec, const std::string& key) const {
    const Entry* e = find(sec, key);
    if (!e) {
      throw ValidationError("missing required field " + sec + "." + key);
    }
    return to_number(*e, sec, key);
  }

  double number_or(const std::string& sec, const std::string& key,
                   double fallback) const {
    const Entry* e = find(sec, key);
    return e ? to_number(*e, sec, key) : fallback;
  }

  std::string text_or(const std::string& sec, const std::string& key,
                      const std::string& fallback) const {
    const Entry* e = find(sec, key);
    return e ? e->value : fallback;
  }

  bool flag_or(const std::string& sec, const std::string& key,
               bool fallback) const {
    const Entry* e = find(sec, key);
    if (!e) return fallback;
    if (e->value == "true" || e->value == "1") return true;
    if (e->value == "false" || e->value == "0") return false;
    throw ParseError("line " + std::to_string(e->line) + ": field " + sec +
                     "." + key + " must be true or false");
  }

  /// Breakpoint list "t0:v0, t1:v1, ...".
  PiecewiseLinear profile_or(const std::string& sec, const std::string& key,
                             double fallback) const {
    const Entry* e = find(sec, key);
    if (!e) return PiecewiseLinear::constant(fallback);
    std::vector<double> times, values;
    std::stringstream ss(e->value);
    std::string pair;
    while (std::getline(ss, pair, ',')) {
      pair = trim(pair);
      if (pair.empty()) continue;
      const std::size_t colon = pair.find(':');
      if (colon == std::string::npos) {
        throw ParseError("line " + std::to_string(e->line) + ": field " + sec +
                         "." + key + " expects t:value pairs");
      }
      times.push_back(parse_double(trim(pair.substr(0, colon)), e->line));
      values.push_back(parse_double(trim(pair.substr(colon + 1)), e->line));
    }
    if (times.empty()) {
      throw ParseError("line " + std::to_string(e->line) + ": field " + sec +
                       "." + key + " is empty");
    }
    try {
      return PiecewiseLinear(times, values);
    } catch (const ValidationError& err) {
      throw ValidationError(std::string(err.what()) + " in " + sec + "." + key);
    }
  }

 private:
  static double parse_double(const std::string& s, int line) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') {
      throw ParseError("line " + std::to_string(line) + ": not a number: '" +
                       s + "'");
    }
    return v;
  }

  double to_number(const Entry& e, const std::string& sec,
                   const std::string& key) const {
    try {
      return parse_double(e.value, e.line);
    } catch (const ParseError&) {
      throw ParseError("line " + std::to_string(e.line) + ": field " + sec +
                       "." + key + " is not a number");
    }
  }

  std::map<std::string, Section> sections_;
};

Waveform parse_waveform(const std::string& s) {
  if (s == "square") return Waveform::SquareWave;
  if (s == "sinusoid" || s == "sine") return Waveform::Sinusoid;
  throw ValidationError("injection.waveform must be 'square' or 'sinusoid'");
}

}  // namespace

LoadedConfig load_config(const std::string& path) {
  const Reader cfg(parse_file(path));
  LoadedConfig out;

  MagModel mag;
  mag.Ld = cfg.number("motor", "L_d");
  mag.Lq = cfg.number("motor", "L_q");
  mag.lambda_m = cfg.number("motor", "lambda");
  out.rated_current = cfg.number("motor", "I_n");
  if (!(out.rated_current > 0.0)) {
    throw ValidationError("motor.I_n must be > 0");
  }

  // Saturation entries come normalized the way datasheets print them;
  // divide out the inductance/current products.
  const double in = out.rated_current;
  const double in2 = in * in;
  mag.alpha30 =
      cfg.number_or("saturation", "alpha30_Ld2_In", 0.0) / (mag.Ld * mag.Ld * in);
  mag.alpha12 =
      cfg.number_or("saturation", "alpha12_LdLq_In", 0.0) / (mag.Ld * mag.Lq * in);
  mag.alpha40 = cfg.number_or("saturation", "alpha40_Ld3_In2", 0.0) /
                (mag.Ld * mag.Ld * mag.Ld * in2);
  mag.alpha22 = cfg.number_or("saturation", "alpha22_LdLq2_In2", 0.0) /
                (mag.Ld * mag.Lq * mag.Lq * in2);
  mag.alpha04 = cfg.number_or("saturation", "alpha04_Lq3_In2", 0.0) /
                (mag.Lq * mag.Lq * mag.Lq * in2);

  MotorParams params;
  params.mag = mag;
  params.R = cfg.number("motor", "R");
  params.n = static_cast<int>(std::lround(cfg.number("motor", "n")));
  params.J = cfg.number_or("motor", "J", 1e-3);

  InjectionSpec inj;
  inj.u_tilde = Vec2(cfg.number_or("injection", "amplitude_gamma", 0.0),
                     cfg.number_or("injection", "amplitude_delta", 0.0));
  inj.omega_inj = 2.0 * M_PI * cfg.number_or("injection", "frequency_hz", 0.0);
  inj.waveform = parse_waveform(cfg.text_or("injection", "waveform", "square"));

  DriveProfiles profiles;
  profiles.omega_c = cfg.profile_or("profiles", "omega_c", 0.0);
  profiles.u_rd_gamma = cfg.profile_or("profiles", "u_rd_gamma", 0.0);
  profiles.u_rd_delta = cfg.profile_or("profiles", "u_rd_delta", 0.0);
  profiles.tau_load = cfg.profile_or("profiles", "tau_load", 0.0);

  ScenarioConfig scenario;
  scenario.params = params;
  scenario.profiles = std::move(profiles);
  scenario.inj = inj;
  scenario.t_end = cfg.number("run", "t_end");
  const double default_dt =
      inj.omega_inj > 0.0 ? inj.period() / 64.0 : scenario.t_end / 4096.0;
  scenario.dt = cfg.number_or("run", "dt", default_dt);
  scenario.current_noise_std = cfg.number_or("run", "noise_std", 0.0);
  scenario.seed =
      static_cast<std::uint64_t>(cfg.number_or("run", "seed", 0.0));
  scenario.validate();

  const std::string initial = cfg.text_or("run", "initial", "equilibrium");
  if (initial == "equilibrium") {
    out.equilibrium_start = true;
  } else if (initial == "zero") {
    out.equilibrium_start = false;
  } else {
    throw ValidationError("run.initial must be 'equilibrium' or 'zero'");
  }

  EstimatorConfig est;
  est.mag = cfg.flag_or("estimator", "use_saturation", true)
                ? mag
                : mag.unsaturated();
  est.grid_size = static_cast<int>(
      std::lround(cfg.number_or("estimator", "grid_size", 720.0)));
  est.refine_tol = cfg.number_or("estimator", "refine_tol", 1e-5);
  est.continuity_window =
      cfg.number_or("estimator", "continuity_window", M_PI / 2.0);
  est.validate();

  out.scenario = std::move(scenario);
  out.estimator = est;
  return out;
}

}  // namespace pmsm
