#include "pmsmsim/csv_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "pmsmsim/errors.hpp"

namespace pmsm {

namespace {

const char* kHeader =
    "t,phi_gamma,phi_delta,omega,theta,theta_c,i_gamma,i_delta,"
    "u_gamma,u_delta,i_bar_gamma,i_bar_delta,i_tilde_gamma,i_tilde_delta,"
    "theta_hat,err_deg";

std::vector<const std::vector<double>*> columns_of(const Trajectory& t) {
  return {&t.t,           &t.phi_gamma,    &t.phi_delta,
          &t.omega,       &t.theta,        &t.theta_c,
          &t.i_gamma,     &t.i_delta,      &t.u_gamma,
          &t.u_delta,     &t.i_bar_gamma,  &t.i_bar_delta,
          &t.i_tilde_gamma, &t.i_tilde_delta, &t.theta_hat,
          &t.err_deg};
}

std::vector<std::vector<double>*> columns_of(Trajectory& t) {
  return {&t.t,           &t.phi_gamma,    &t.phi_delta,
          &t.omega,       &t.theta,        &t.theta_c,
          &t.i_gamma,     &t.i_delta,      &t.u_gamma,
          &t.u_delta,     &t.i_bar_gamma,  &t.i_bar_delta,
          &t.i_tilde_gamma, &t.i_tilde_delta, &t.theta_hat,
          &t.err_deg};
}

}  // namespace

void emit_csv(const Trajectory& traj, const std::string& path) {
  std::FILE* out = std::fopen(path.c_str(), "wb");
  if (!out) throw IoError("cannot open for writing: " + path);
  const auto cols = columns_of(traj);
  std::fputs(kHeader, out);
  std::fputc('\n', out);
  char buf[32];
  for (std::size_t k = 0; k < traj.size(); ++k) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (c) std::fputc(',', out);
      std::snprintf(buf, sizeof(buf), "%.9g", (*cols[c])[k]);
      std::fputs(buf, out);
    }
    std::fputc('\n', out);
  }
  if (std::fclose(out) != 0) throw IoError("write failed: " + path);
}

Trajectory parse_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty file: " + path);

  Trajectory traj;
  auto cols = columns_of(traj);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c >= cols.size()) break;
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) {
        throw ParseError("line " + std::to_string(lineno) +
                         ": bad number in CSV");
      }
      cols[c]->push_back(v);
      ++c;
    }
    if (c != cols.size()) {
      throw ParseError("line " + std::to_string(lineno) +
                       ": wrong column count");
    }
  }
  traj.est_valid.resize(traj.t.size(), 0);
  for (std::size_t k = 0; k < traj.t.size(); ++k) {
    traj.est_valid[k] = std::isfinite(traj.theta_hat[k]) ? 1 : 0;
  }
  if (traj.t.size() >= 2) traj.dt = traj.t[1] - traj.t[0];
  return traj;
}

}  // namespace pmsm
