#include "spadsim/harness.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include "spadsim/model.hpp"
#include "spadsim/rng.hpp"

namespace spadsim {

namespace {

DepthEstimate estimate_once(const AcquisitionConfig& cfg,
                            const ShiftSchedule* sched, const PixelFlux& flux,
                            std::uint64_t sim_seed) {
  if (flux.true_bin < 1 || flux.true_bin > cfg.num_bins)
    throw std::invalid_argument("true bin outside [1, B]");
  const PixelFlux scaled = apply_attenuation(flux, cfg.attenuation);
  const FluxWaveform waveform = make_impulse_waveform(scaled, cfg.num_bins);
  TimestampStream stream =
      cfg.mode == AcquisitionMode::photon_driven
          ? simulate_photon_driven(cfg, waveform, sim_seed)
          : simulate_gated(cfg, waveform, *sched, sim_seed);
  const HistogramData hist = histogram_with_denominators(stream, cfg, sched);
  return coates_estimate(hist, cfg.bin_width);
}

}  // namespace

DepthEstimate run_pixel(const AcquisitionConfig& cfg, const PixelFlux& flux,
                        std::uint64_t seed) {
  cfg.validate();
  if (cfg.mode == AcquisitionMode::photon_driven)
    return estimate_once(cfg, nullptr, flux, seed);
  const ShiftSchedule sched = make_schedule(cfg);
  return estimate_once(cfg, &sched, flux, seed);
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  if (spec.trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (spec.phi_sig.empty() || spec.phi_bkg.empty())
    throw std::invalid_argument("sweep needs phi_sig and phi_bkg values");
  const int B = spec.base.num_bins;
  if (spec.fixed_tau && (*spec.fixed_tau < 1 || *spec.fixed_tau > B))
    throw std::invalid_argument("fixed tau outside [1, B]");

  const std::vector<AcquisitionMode> modes =
      spec.modes.empty() ? std::vector<AcquisitionMode>{spec.base.mode}
                         : spec.modes;
  const std::vector<double> attens =
      spec.attenuation.empty() ? std::vector<double>{spec.base.attenuation}
                               : spec.attenuation;
  const std::vector<int> actives =
      spec.active_bins.empty() ? std::vector<int>{spec.base.active_bins}
                               : spec.active_bins;
  const std::vector<double> totals =
      spec.total_time.empty() ? std::vector<double>{spec.base.total_time}
                              : spec.total_time;

  std::vector<SweepRow> rows;
  std::uint64_t point = 0;
  for (const AcquisitionMode mode : modes)
    for (const double phi_sig : spec.phi_sig)
      for (const double phi_bkg : spec.phi_bkg)
        for (const double atten : attens)
          for (const int active : actives)
            for (const double total : totals) {
              AcquisitionConfig cfg = spec.base;
              cfg.mode = mode;
              cfg.attenuation = atten;
              cfg.active_bins = active;
              cfg.total_time = total;
              cfg.validate();
              ShiftSchedule sched;
              if (mode != AcquisitionMode::photon_driven)
                sched = make_schedule(cfg);

              std::vector<int> tau_true(static_cast<std::size_t>(spec.trials));
              std::vector<int> tau_hat(static_cast<std::size_t>(spec.trials));
              const auto t0 = std::chrono::steady_clock::now();
              for (int t = 0; t < spec.trials; ++t) {
                int tau;
                if (spec.fixed_tau) {
                  tau = *spec.fixed_tau;
                } else {
                  auto eng = rng::make_engine(
                      rng::derive_seed(spec.master_seed, point,
                                       static_cast<std::uint64_t>(t), 0));
                  tau = static_cast<int>(rng::uniform_int(eng, 1, B));
                }
                tau_true[static_cast<std::size_t>(t)] = tau;
                const PixelFlux flux{phi_sig, phi_bkg, tau};
                const DepthEstimate est = estimate_once(
                    cfg,
                    mode == AcquisitionMode::photon_driven ? nullptr : &sched,
                    flux,
                    rng::derive_seed(spec.master_seed, point,
                                     static_cast<std::uint64_t>(t), 1));
                tau_hat[static_cast<std::size_t>(t)] = est.tau_hat;
              }
              const auto t1 = std::chrono::steady_clock::now();

              SweepRow row;
              row.mode = mode;
              row.phi_sig = phi_sig;
              row.phi_bkg = phi_bkg;
              row.attenuation = atten;
              row.active_bins = active;
              row.total_time = total;
              row.rmse = modulo_rmse(tau_hat, tau_true, B, cfg.bin_width);
              row.mean_runtime_s =
                  std::chrono::duration<double>(t1 - t0).count() / spec.trials;
              rows.push_back(row);
              ++point;
            }
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows,
                     bool include_timings) {
  std::vector<std::string> header = {
      "mode",        "phi_sig",   "phi_bkg",       "attenuation",
      "active_bins", "total_time", "trials",       "rmse_bins",
      "rmse_relative", "rmse_meters"};
  if (include_timings) header.push_back("mean_runtime_s");
  write_csv_row(os, header);
  for (const SweepRow& row : rows) {
    std::vector<std::string> fields = {
        to_string(row.mode),
        format_double(row.phi_sig),
        format_double(row.phi_bkg),
        format_double(row.attenuation),
        std::to_string(row.active_bins),
        format_double(row.total_time),
        std::to_string(row.rmse.trials),
        format_double(row.rmse.rmse_bins),
        format_double(row.rmse.rmse_relative),
        format_double(row.rmse.rmse_meters)};
    if (include_timings) fields.push_back(format_double_sig(row.mean_runtime_s, 3));
    write_csv_row(os, fields);
  }
}

SceneResult run_scene(const SceneSpec& spec) {
  spec.cfg.validate();
  const Eigen::Index rows = spec.depth.rows(), cols = spec.depth.cols();
  if (rows == 0 || cols == 0) throw std::invalid_argument("scene is empty");
  if (spec.reflectivity.rows() != rows || spec.reflectivity.cols() != cols)
    throw std::invalid_argument("depth and reflectivity shapes differ");
  if (spec.phi_sig < 0 || spec.phi_bkg < 0)
    throw std::invalid_argument("fluxes must be nonnegative");

  const int B = spec.cfg.num_bins;
  ShiftSchedule sched;
  const bool gated = spec.cfg.mode != AcquisitionMode::photon_driven;
  if (gated) sched = make_schedule(spec.cfg);

  SceneResult result;
  result.depth_est.resize(rows, cols);
  result.err_bins.resize(rows, cols);
  std::vector<int> tau_true, tau_hat;
  tau_true.reserve(static_cast<std::size_t>(rows * cols));
  tau_hat.reserve(static_cast<std::size_t>(rows * cols));

  std::uint64_t pixel = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c, ++pixel) {
      const double refl = spec.reflectivity(r, c);
      if (!(refl > 0) || refl > 1.0)
        throw std::invalid_argument("reflectivity must lie in (0, 1]");
      const int tau =
          depth_bin_from_range(spec.depth(r, c), spec.cfg.bin_width, B);
      const PixelFlux flux{spec.phi_sig * refl, spec.phi_bkg, tau};
      const DepthEstimate est =
          estimate_once(spec.cfg, gated ? &sched : nullptr, flux,
                        rng::derive_seed(spec.master_seed, pixel, 0, 0));
      result.depth_est(r, c) = est.depth_m;
      const int d = ((est.tau_hat - tau) % B + B) % B;
      result.err_bins(r, c) = d > B / 2 ? d - B : d;
      tau_true.push_back(tau);
      tau_hat.push_back(est.tau_hat);
    }
  result.report = modulo_rmse(tau_hat, tau_true, B, spec.cfg.bin_width);
  return result;
}

DepthEstimate analyze_stream(std::istream& is, const AcquisitionConfig& cfg) {
  cfg.validate();
  TimestampStream stream = read_stream_csv(is, cfg);
  if (stream.records.empty())
    throw EstimationError("stream holds no detections");

  if (cfg.mode == AcquisitionMode::photon_driven) {
    // The exact-denominator pass validates records against the free-running
    // timeline; it expects them in time order.
    std::sort(stream.records.begin(), stream.records.end(),
              [](const DetectionRecord& a, const DetectionRecord& b) {
                return a.bin_abs < b.bin_abs;
              });
    stream.num_cycles = static_cast<std::int64_t>(stream.records.size());
    const HistogramData hist = histogram_with_denominators(stream, cfg);
    return coates_estimate(hist, cfg.bin_width);
  }

  const ShiftSchedule sched = make_schedule(cfg);
  const std::int64_t L = sched.num_cycles();
  if (static_cast<std::int64_t>(stream.records.size()) > L)
    throw std::invalid_argument("more detections than scheduled cycles");
  stream.num_cycles = L;
  stream.empty_cycles = L - static_cast<std::int64_t>(stream.records.size());
  const HistogramData hist = histogram_with_denominators(stream, cfg, &sched);
  return coates_estimate(hist, cfg.bin_width);
}

AttenuationSweepResult grid_search_attenuation(AcquisitionMode mode,
                                               AcquisitionConfig cfg,
                                               PixelFlux flux,
                                               const std::vector<double>& grid,
                                               int trials, std::uint64_t seed) {
  if (grid.empty()) throw std::invalid_argument("attenuation grid is empty");
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  cfg.mode = mode;
  cfg.attenuation = 1.0;
  cfg.validate();
  const int B = cfg.num_bins;
  ShiftSchedule sched;
  const bool gated = mode != AcquisitionMode::photon_driven;
  if (gated) sched = make_schedule(cfg);

  AttenuationSweepResult result;
  result.grid = grid;
  result.rmse_bins.reserve(grid.size());
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    cfg.attenuation = grid[gi];
    if (!(cfg.attenuation > 0) || cfg.attenuation > 1.0)
      throw std::invalid_argument("attenuation grid values must lie in (0, 1]");
    std::vector<int> tau_true(static_cast<std::size_t>(trials));
    std::vector<int> tau_hat(static_cast<std::size_t>(trials));
    for (int t = 0; t < trials; ++t) {
      auto eng = rng::make_engine(rng::derive_seed(
          seed, static_cast<std::uint64_t>(gi), static_cast<std::uint64_t>(t), 0));
      const int tau = static_cast<int>(rng::uniform_int(eng, 1, B));
      tau_true[static_cast<std::size_t>(t)] = tau;
      PixelFlux f = flux;
      f.true_bin = tau;
      const DepthEstimate est = estimate_once(
          cfg, gated ? &sched : nullptr, f,
          rng::derive_seed(seed, static_cast<std::uint64_t>(gi),
                           static_cast<std::uint64_t>(t), 1));
      tau_hat[static_cast<std::size_t>(t)] = est.tau_hat;
    }
    result.rmse_bins.push_back(
        modulo_rmse(tau_hat, tau_true, B, cfg.bin_width).rmse_bins);
  }
  std::size_t best = 0;
  for (std::size_t gi = 1; gi < grid.size(); ++gi)
    if (result.rmse_bins[gi] < result.rmse_bins[best]) best = gi;
  result.best = grid[best];
  return result;
}

}  // namespace spadsim
