// Batch front end: parameter sweeps, scene renders, design-point tables,
// exact small-instance oracles, and re-estimation from recorded streams.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spadsim/design.hpp"
#include "spadsim/harness.hpp"
#include "spadsim/io.hpp"
#include "spadsim/model.hpp"
#include "spadsim/schedule.hpp"

namespace {

using namespace spadsim;

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open output file: " + path);
  return os;
}

void finish_out(std::ofstream& os, const std::string& path) {
  os.flush();
  if (!os) throw IoError("failed writing output file: " + path);
}

std::vector<AcquisitionMode> parse_mode_list(const std::string& raw) {
  std::vector<AcquisitionMode> modes;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = raw.find(',', start);
    std::string piece = raw.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    const std::size_t a = piece.find_first_not_of(" \t");
    const std::size_t b = piece.find_last_not_of(" \t");
    if (a == std::string::npos) throw ParseError("empty mode name");
    modes.push_back(mode_from_string(piece.substr(a, b - a + 1)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return modes;
}

struct CommonArgs {
  std::string config_path;
  std::string mode_override;
  std::optional<std::int64_t> seed;
};

Config load_config(const CommonArgs& args) {
  Config cfg = Config::from_file(args.config_path);
  if (!args.mode_override.empty()) cfg.set("mode", args.mode_override);
  return cfg;
}

int cmd_sweep(const CommonArgs& common, std::optional<int> trials_override,
              std::optional<int> fixed_tau, bool timings,
              const std::string& out_path) {
  const Config cfg = load_config(common);

  SweepSpec spec;
  spec.phi_sig = cfg.get_double_list("phi_sig");
  spec.phi_bkg = cfg.get_double_list("phi_bkg");
  spec.modes = parse_mode_list(cfg.get_string("mode", "sync"));
  if (cfg.has("attenuation")) spec.attenuation = cfg.get_double_list("attenuation");
  if (cfg.has("total_time")) spec.total_time = cfg.get_double_list("total_time");
  if (cfg.has("active_bins")) {
    if (cfg.get_string("active_bins") == "auto")
      throw std::invalid_argument("active_bins=auto is not supported in sweeps");
    for (double v : cfg.get_double_list("active_bins"))
      spec.active_bins.push_back(static_cast<int>(v));
  }
  spec.trials = trials_override
                    ? *trials_override
                    : static_cast<int>(cfg.get_int("trials", 100));
  spec.master_seed = common.seed ? static_cast<std::uint64_t>(*common.seed)
                                 : static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  if (fixed_tau) spec.fixed_tau = *fixed_tau;

  // The base carries the scalar defaults; the first value of each axis stands
  // in so that validation happens against a real point.
  Config base = cfg;
  base.set("mode", to_string(spec.modes.front()));
  base.set("phi_sig", format_double(spec.phi_sig.front()));
  base.set("phi_bkg", format_double(spec.phi_bkg.front()));
  if (!spec.attenuation.empty())
    base.set("attenuation", format_double(spec.attenuation.front()));
  if (!spec.total_time.empty())
    base.set("total_time", format_double(spec.total_time.front()));
  if (!spec.active_bins.empty())
    base.set("active_bins", std::to_string(spec.active_bins.front()));
  spec.base = acquisition_from_config(base);

  const std::vector<SweepRow> rows = run_sweep(spec);
  std::ofstream os = open_out(out_path);
  write_sweep_csv(os, rows, timings);
  finish_out(os, out_path);
  for (const SweepRow& row : rows)
    std::cerr << to_string(row.mode) << " phi_sig=" << row.phi_sig
              << " phi_bkg=" << row.phi_bkg << " att=" << row.attenuation
              << " m=" << row.active_bins << " T=" << row.total_time
              << ": rmse_bins=" << row.rmse.rmse_bins << " ("
              << format_double_sig(row.mean_runtime_s, 3) << " s/trial)\n";
  std::cerr << "wrote " << rows.size() << " rows to " << out_path << "\n";
  return 0;
}

int cmd_scene(const CommonArgs& common, const std::string& depth_path,
              const std::string& refl_path, const std::string& out_path,
              const std::string& report_path) {
  const Config cfg = load_config(common);

  SceneSpec spec;
  spec.cfg = acquisition_from_config(cfg);
  spec.phi_sig = cfg.get_double("phi_sig");
  spec.phi_bkg = cfg.get_double("phi_bkg");
  spec.master_seed = common.seed ? static_cast<std::uint64_t>(*common.seed)
                                 : static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  {
    std::ifstream din(depth_path);
    if (!din) throw IoError("cannot open depth file: " + depth_path);
    spec.depth = read_matrix_csv(din);
  }
  {
    std::ifstream rin(refl_path);
    if (!rin) throw IoError("cannot open reflectivity file: " + refl_path);
    spec.reflectivity = read_matrix_csv(rin);
  }

  const SceneResult result = run_scene(spec);
  {
    std::ofstream os = open_out(out_path);
    write_depth_csv(os, result.depth_est);
    finish_out(os, out_path);
  }
  {
    std::ofstream os = open_out(report_path);
    os << scene_report_to_json(result.report, result.err_bins);
    finish_out(os, report_path);
  }
  std::cerr << "scene " << result.depth_est.rows() << "x"
            << result.depth_est.cols()
            << ": rmse_bins=" << result.report.rmse_bins << ", wrote "
            << out_path << " and " << report_path << "\n";
  return 0;
}

int cmd_optimize(const std::vector<double>& phi_bkg,
                 const std::vector<double>& td_bins,
                 const std::vector<double>& phi_sig, int num_bins,
                 const std::string& out_path) {
  std::ofstream os = open_out(out_path);
  std::vector<std::string> header = {"phi_bkg", "t_d_bins", "m_opt",
                                     "xi_per_bin", "upsilon_opt"};
  if (!phi_sig.empty()) header.push_back("phi_sig");
  write_csv_row(os, header);

  // Dead times arrive in bin units, so the design runs on a unit bin width.
  const std::vector<double> sig_axis =
      phi_sig.empty() ? std::vector<double>{0.0} : phi_sig;
  for (const double pb : phi_bkg)
    for (const double td : td_bins)
      for (const double ps : sig_axis) {
        const DesignPoint point = make_design_point(ps, pb, td, 1.0, num_bins);
        std::vector<std::string> fields = {
            format_double(pb), format_double(td), std::to_string(point.m_opt),
            format_double(point.xi_per_bin),
            ps > 0 ? format_double(point.upsilon_opt) : std::string{}};
        if (!phi_sig.empty()) fields.push_back(format_double(ps));
        write_csv_row(os, fields);
      }
  finish_out(os, out_path);
  std::cerr << "wrote design table to " << out_path << "\n";
  return 0;
}

int cmd_oracle(const CommonArgs& common, std::optional<int> bins_override,
               std::int64_t cycles, const std::string& out_path) {
  Config cfg = load_config(common);
  if (bins_override) cfg.set("bins", std::to_string(*bins_override));
  const AcquisitionConfig acq = acquisition_from_config(cfg);
  const PixelFlux flux = flux_from_config(cfg);
  if (flux.true_bin > acq.num_bins)
    throw std::invalid_argument("tau outside [1, B]");
  if (cycles < 1) throw std::invalid_argument("cycles must be >= 1");

  ShiftSchedule sched;
  if (acq.mode == AcquisitionMode::synchronous) {
    sched.num_bins = acq.num_bins;
    sched.active_bins = acq.active_bins;
    sched.shifts.assign(static_cast<std::size_t>(cycles), 0);
    sched.pad_delays.assign(static_cast<std::size_t>(cycles), 0);
  } else if (acq.mode == AcquisitionMode::uniform_shift) {
    sched = uniform_shift_schedule(acq.num_bins, cycles, acq.active_bins,
                                   acq.dead_bins());
  } else {
    throw std::invalid_argument("exact enumeration covers gated modes only");
  }

  const PixelFlux scaled = apply_attenuation(flux, acq.attenuation);
  const FluxWaveform waveform = make_impulse_waveform(scaled, acq.num_bins);
  const auto histograms = exact_histogram_distribution(acq, waveform, sched);
  const ArrayXd expected = exact_expected_counts(waveform, sched);

  nlohmann::ordered_json j;
  j["num_bins"] = acq.num_bins;
  j["num_cycles"] = cycles;
  j["shifts"] = sched.shifts;
  j["expected_counts"] =
      std::vector<double>(expected.data(), expected.data() + expected.size());
  auto arr = nlohmann::ordered_json::array();
  for (const WeightedHistogram& wh : histograms) {
    nlohmann::ordered_json entry;
    entry["counts"] =
        std::vector<int>(wh.counts.data(), wh.counts.data() + wh.counts.size());
    entry["prob"] = wh.prob;
    arr.push_back(std::move(entry));
  }
  j["histograms"] = std::move(arr);

  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream os = open_out(out_path);
    os << j.dump(2) << "\n";
    finish_out(os, out_path);
  }
  return 0;
}

int cmd_analyze(const CommonArgs& common, const std::string& stream_path,
                const std::string& out_path) {
  const Config cfg = load_config(common);
  const AcquisitionConfig acq = acquisition_from_config(cfg);
  std::ifstream in(stream_path);
  if (!in) throw IoError("cannot open stream file: " + stream_path);
  const DepthEstimate est = analyze_stream(in, acq);
  const std::string json = estimate_to_json(est);
  if (out_path.empty()) {
    std::cout << json;
  } else {
    std::ofstream os = open_out(out_path);
    os << json;
    finish_out(os, out_path);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-photon depth acquisition: simulation, estimation, and "
               "acquisition-parameter design"};
  app.require_subcommand(1);

  CommonArgs common;
  std::optional<int> trials_override;
  std::optional<int> fixed_tau;
  bool timings = false;
  std::string sweep_out = "results.csv";
  std::string scene_out = "depth_est.csv";
  std::string optimize_out = "design.csv";
  std::string oracle_out;
  std::string analyze_out;
  std::string report_path = "report.json";
  std::string depth_path, refl_path, stream_path;
  std::vector<double> opt_phi_bkg, opt_td_bins, opt_phi_sig;
  int opt_bins = 1000;
  std::optional<int> oracle_bins;
  std::int64_t oracle_cycles = 3;

  auto* sweep = app.add_subcommand(
      "sweep", "RMSE over a grid of fluxes and acquisition settings");
  sweep->add_option("--config", common.config_path, "config file")->required();
  sweep->add_option("--mode", common.mode_override,
                    "acquisition mode(s), comma separated; overrides config");
  sweep->add_option("--trials", trials_override, "trials per grid point");
  sweep->add_option("--seed", common.seed, "master seed");
  sweep->add_option("--fixed-tau", fixed_tau, "pin the true bin (debugging)");
  sweep->add_flag("--timings", timings,
                  "append wall-clock column (breaks byte determinism)");
  sweep->add_option("--out", sweep_out, "output CSV");

  auto* scene = app.add_subcommand(
      "scene", "per-pixel depth estimation over a depth/reflectivity grid");
  scene->add_option("--config", common.config_path, "config file")->required();
  scene->add_option("--mode", common.mode_override, "override acquisition mode");
  scene->add_option("--seed", common.seed, "master seed");
  scene->add_option("--depth", depth_path, "true depth CSV (meters)")->required();
  scene->add_option("--reflectivity", refl_path, "reflectivity CSV in (0,1]")
      ->required();
  scene->add_option("--out", scene_out, "estimated depth CSV");
  scene->add_option("--report", report_path, "error report JSON");

  auto* optimize = app.add_subcommand(
      "optimize", "recommended gate length and attenuation per operating point");
  optimize->add_option("--phi-bkg", opt_phi_bkg, "ambient flux per bin")
      ->required()
      ->delimiter(',');
  optimize->add_option("--td-bins", opt_td_bins, "dead time in bins")
      ->required()
      ->delimiter(',');
  optimize->add_option("--phi-sig", opt_phi_sig,
                       "signal flux; enables the attenuation column")
      ->delimiter(',');
  optimize->add_option("--bins", opt_bins, "histogram bins (caps the gate)");
  optimize->add_option("--out", optimize_out, "output CSV");

  auto* oracle = app.add_subcommand(
      "oracle", "exact histogram distribution for a small gated instance");
  oracle->add_option("--config", common.config_path, "config file")->required();
  oracle->add_option("--mode", common.mode_override, "override acquisition mode");
  oracle->add_option("--bins", oracle_bins, "override histogram bins");
  oracle->add_option("--cycles", oracle_cycles, "number of cycles");
  oracle->add_option("--out", oracle_out, "output JSON (default stdout)");

  auto* analyze = app.add_subcommand(
      "analyze", "depth estimate from a recorded timestamp stream");
  analyze->add_option("--config", common.config_path, "config file")->required();
  analyze->add_option("--mode", common.mode_override, "override acquisition mode");
  analyze->add_option("--stream", stream_path, "timestamp CSV")->required();
  analyze->add_option("--out", analyze_out, "output JSON (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sweep->parsed())
      return cmd_sweep(common, trials_override, fixed_tau, timings, sweep_out);
    if (scene->parsed())
      return cmd_scene(common, depth_path, refl_path, scene_out, report_path);
    if (optimize->parsed())
      return cmd_optimize(opt_phi_bkg, opt_td_bins, opt_phi_sig, opt_bins,
                          optimize_out);
    if (oracle->parsed())
      return cmd_oracle(common, oracle_bins, oracle_cycles, oracle_out);
    if (analyze->parsed()) return cmd_analyze(common, stream_path, analyze_out);
  } catch (const spadsim::EstimationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const spadsim::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
