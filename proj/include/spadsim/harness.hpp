#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spadsim/design.hpp"
#include "spadsim/estimator.hpp"
#include "spadsim/io.hpp"

namespace spadsim {

/// One simulate-and-estimate pass for a single pixel / trial. The schedule is
/// built from cfg for gated modes; flux is attenuated by cfg.attenuation.
DepthEstimate run_pixel(const AcquisitionConfig& cfg, const PixelFlux& flux,
                        std::uint64_t seed);

/// Cartesian sweep over acquisition parameters; every axis defaults to the
/// base config's single value.
struct SweepSpec {
  AcquisitionConfig base;
  std::vector<AcquisitionMode> modes;
  std::vector<double> phi_sig;
  std::vector<double> phi_bkg;
  std::vector<double> attenuation;
  std::vector<int> active_bins;
  std::vector<double> total_time;
  int trials = 100;
  std::uint64_t master_seed = 1;
  std::optional<int> fixed_tau;  ///< true bin per trial; random when absent
};

struct SweepRow {
  AcquisitionMode mode;
  double phi_sig = 0.0;
  double phi_bkg = 0.0;
  double attenuation = 1.0;
  int active_bins = 0;
  double total_time = 0.0;
  RmseReport rmse;
  double mean_runtime_s = 0.0;  ///< wall time; kept out of file output by default
};

std::vector<SweepRow> run_sweep(const SweepSpec& spec);

/// CSV for sweep results. Wall-clock timings are excluded unless requested so
/// that equal seeds give byte-equal files.
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows,
                     bool include_timings = false);

struct SceneSpec {
  AcquisitionConfig cfg;
  Eigen::MatrixXd depth;         ///< meters
  Eigen::MatrixXd reflectivity;  ///< per-pixel scale on phi_sig, in (0, 1]
  double phi_sig = 0.0;          ///< unit-reflectivity signal flux
  double phi_bkg = 0.0;
  std::uint64_t master_seed = 1;
};

struct SceneResult {
  Eigen::MatrixXd depth_est;  ///< meters
  Eigen::MatrixXd err_bins;   ///< signed circular bin error per pixel
  RmseReport report;
};

SceneResult run_scene(const SceneSpec& spec);

/// Re-estimation from a recorded stream: rebuilds the schedule from cfg,
/// checks the records against it, and runs the estimator.
DepthEstimate analyze_stream(std::istream& is, const AcquisitionConfig& cfg);

/// Empirical attenuation search: runs the full pipeline per grid value and
/// returns the grid, the RMSE curve, and the minimizing attenuation.
struct AttenuationSweepResult {
  std::vector<double> grid;
  std::vector<double> rmse_bins;
  double best = 1.0;
};

AttenuationSweepResult grid_search_attenuation(AcquisitionMode mode,
                                               AcquisitionConfig cfg,
                                               PixelFlux flux,
                                               const std::vector<double>& grid,
                                               int trials, std::uint64_t seed);

}  // namespace spadsim
