#pragma once

#include <string>

#include "pmsmsim/estimator.hpp"
#include "pmsmsim/simulate.hpp"

namespace pmsm {

/// A parsed scenario file: the closed-loop scenario plus the estimator
/// setup resolved against it (the estimator's magnetic model is the
/// plant's, with saturation zeroed when [estimator] use_saturation is
/// false).
struct LoadedConfig {
  ScenarioConfig scenario;
  EstimatorConfig estimator;
  double rated_current = 0.0;  // I_n, used to de-normalize Table entries
  bool equilibrium_start = true;
};

/// Reads a sectioned key-value scenario file (see configs/ for the
/// schema). Saturation coefficients are given as the normalized products
/// printed in motor datasheets (alpha30 * Ld^2 * In etc.) and are
/// de-normalized here against the configured inductances and rated
/// current.
///
/// Throws ParseError with the offending line, ValidationError naming the
/// violated field, IoError if the file cannot be read.
LoadedConfig load_config(const std::string& path);

}  // namespace pmsm
