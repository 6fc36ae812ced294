#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pmsmsim/errors.hpp"
#include "pmsmsim/presets.hpp"

namespace {

void print_report(const pmsm::RunReport& r) {
  std::printf("scenario: %s\n", r.scenario.c_str());
  if (r.max_err_deg_sat) {
    std::printf("  saturated estimator:   max |err| = %8.4f deg   mean = %8.4f deg\n",
                *r.max_err_deg_sat, *r.mean_err_deg_sat);
  }
  if (r.max_err_deg_unsat) {
    std::printf("  unsaturated estimator: max |err| = %8.4f deg   mean = %8.4f deg\n",
                *r.max_err_deg_unsat, *r.mean_err_deg_unsat);
  }
  if (!r.averaging.empty()) {
    std::printf("  %12s %14s %14s %14s\n", "omega_inj", "e_mech", "e_flux",
                "e_flux_raw");
    for (const auto& row : r.averaging) {
      std::printf("  %12.4g %14.6g %14.6g %14.6g\n", row.omega_inj, row.e_mech,
                  row.e_flux, row.e_flux_raw);
    }
  }
  if (!r.ranks.empty()) {
    std::printf("  %12s %10s %6s %18s\n", "omega_bar", "torque", "rank",
                "kernel_off_plane");
    for (const auto& pt : r.ranks) {
      std::printf("  %12.4g %9.0f%% %6d %18.3g\n", pt.omega_bar,
                  100.0 * pt.torque_fraction, pt.rank, pt.kernel_off_plane);
    }
  }
  std::printf("  runtime: %.2f s\n", r.runtime_s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sensorless PMSM signal-injection simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand(
      "run", "Run a preset experiment or a scenario config file");
  std::string target;
  run->add_option("target", target,
                  "Preset name (long_test, speed_reversal, averaging_sweep, "
                  "observability_sweep) or path to a config file")
      ->required();
  pmsm::PresetOptions opts;
  run->add_option("--out", opts.out_dir, "Output directory")
      ->default_val(".");
  run->add_option("--seed", opts.seed, "Noise seed");
  double omega_inj_hz = 0.0;
  auto* freq = run->add_option("--omega-inj", omega_inj_hz,
                               "Injection frequency override (Hz)");
  run->add_flag("--no-saturation-estimator", opts.no_saturation_estimator,
                "Zero the estimator's saturation coefficients");

  CLI11_PARSE(app, argc, argv);

  try {
    if (freq->count() > 0) opts.omega_inj_hz = omega_inj_hz;
    const pmsm::RunReport report =
        pmsm::is_preset(target) ? pmsm::run_preset(target, opts)
                                : pmsm::run_config_file(target, opts);
    print_report(report);
    return 0;
  } catch (const pmsm::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const pmsm::Error& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  }
}
