#include <doctest.h>

#include <cmath>
#include <sstream>

#include "spadsim/harness.hpp"
#include "spadsim/model.hpp"
#include "spadsim/schedule.hpp"

using namespace spadsim;

TEST_CASE("config files parse keys, comments, and lists") {
  std::istringstream in(
      "# acquisition\n"
      "bins = 100\n"
      "bin_width = 1e-10   \n"
      "\n"
      "mode=uniform\n"
      "phi_sig = 0.5, 1.0, 2.0\n"
      "label = near wall\n");
  const Config cfg = Config::from_stream(in, "test.ini");
  CHECK(cfg.get_int("bins") == 100);
  CHECK(cfg.get_double("bin_width") == 1e-10);
  CHECK(cfg.get_string("mode") == "uniform");
  CHECK(cfg.get_string("label") == "near wall");
  CHECK(cfg.get_double_list("phi_sig") == std::vector<double>{0.5, 1.0, 2.0});
  CHECK(cfg.get_int("missing", 7) == 7);
  CHECK(cfg.get_double("missing", 2.5) == 2.5);
  CHECK(cfg.has("bins"));
  CHECK_FALSE(cfg.has("missing"));

  CHECK_THROWS_AS(cfg.get_double("missing"), ParseError);
  CHECK_THROWS_AS(cfg.get_int("label"), ParseError);
  CHECK_THROWS_AS(cfg.get_double("label"), ParseError);

  std::istringstream bad("bins 100\n");
  CHECK_THROWS_AS(Config::from_stream(bad, "bad.ini"), ParseError);
  std::istringstream bad2("= 5\n");
  CHECK_THROWS_AS(Config::from_stream(bad2, "bad.ini"), ParseError);
  CHECK_THROWS_AS(Config::from_file("/nonexistent/path.ini"), IoError);
}

TEST_CASE("acquisition settings come from config keys with defaults") {
  std::istringstream in("bins = 200\ntotal_time = 1e-5\nmode = photon\n");
  const AcquisitionConfig acq =
      acquisition_from_config(Config::from_stream(in, "a.ini"));
  CHECK(acq.num_bins == 200);
  CHECK(acq.bin_width == 100e-12);  // default
  CHECK(acq.dead_time == 10e-9);    // default
  CHECK(acq.active_bins == 200);    // defaults to bins
  CHECK(acq.total_time == 1e-5);
  CHECK(acq.mode == AcquisitionMode::photon_driven);
  CHECK(acq.attenuation == 1.0);

  SUBCASE("auto gate length uses the attenuated ambient flux") {
    std::istringstream in2(
        "bins = 1000\nbin_width = 1\ndead_time = 100\ntotal_time = 1e6\n"
        "mode = uniform\nactive_bins = auto\nphi_bkg = 0.02\n");
    CHECK(acquisition_from_config(Config::from_stream(in2, "b.ini")).active_bins ==
          75);
    std::istringstream in3(
        "bins = 1000\nbin_width = 1\ndead_time = 100\ntotal_time = 1e6\n"
        "mode = uniform\nactive_bins = auto\n");
    CHECK_THROWS_AS(acquisition_from_config(Config::from_stream(in3, "c.ini")),
                    ParseError);  // auto needs phi_bkg
  }
  SUBCASE("invalid settings are rejected at load time") {
    std::istringstream in2("mode = laser\n");
    CHECK_THROWS_AS(acquisition_from_config(Config::from_stream(in2, "d.ini")),
                    std::invalid_argument);
    std::istringstream in3("bins = 1000\ntotal_time = 1e-9\n");
    CHECK_THROWS_AS(acquisition_from_config(Config::from_stream(in3, "e.ini")),
                    BudgetError);
  }
}

TEST_CASE("flux settings require both levels") {
  std::istringstream in("phi_sig = 1.5\nphi_bkg = 0.01\ntau = 42\n");
  const PixelFlux f = flux_from_config(Config::from_stream(in, "f.ini"));
  CHECK(f.phi_sig == 1.5);
  CHECK(f.phi_bkg == 0.01);
  CHECK(f.true_bin == 42);

  std::istringstream in2("phi_sig = 1.5\n");
  CHECK_THROWS_AS(flux_from_config(Config::from_stream(in2, "g.ini")), ParseError);
  std::istringstream in3("phi_sig = -1\nphi_bkg = 0\n");
  CHECK_THROWS_AS(flux_from_config(Config::from_stream(in3, "h.ini")),
                  std::invalid_argument);
}

TEST_CASE("csv writing and reading round-trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-3.0) == "-3");
  CHECK(format_double_sig(1.0 / 3.0, 6) == "0.333333");
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");

  std::ostringstream out;
  write_csv_row(out, {"x", "1,2", "line\nbreak"});
  std::istringstream back(out.str());
  const auto rows = read_csv(back);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0] == std::vector<std::string>{"x", "1,2", "line\nbreak"});

  std::istringstream crlf("a,b\r\nc,d\r\n");
  const auto rows2 = read_csv(crlf);
  REQUIRE(rows2.size() == 2);
  CHECK(rows2[1] == std::vector<std::string>{"c", "d"});

  std::istringstream unbalanced("a,\"b\nc\n");
  CHECK_THROWS_AS(read_csv(unbalanced), ParseError);

  std::istringstream mat("0.5,1.5\n2.5,3.5\n");
  const Eigen::MatrixXd m = read_matrix_csv(mat);
  CHECK(m.rows() == 2);
  CHECK(m(1, 0) == 2.5);
  std::istringstream ragged("1,2\n3\n");
  CHECK_THROWS_AS(read_matrix_csv(ragged), ParseError);
}

TEST_CASE("single-pixel pipeline recovers a strong return") {
  AcquisitionConfig cfg;  // defaults: B = 1000, sync, 22 cycles
  const PixelFlux flux{5.0, 1e-6, 123};
  const DepthEstimate est = run_pixel(cfg, flux, 99);
  CHECK(est.tau_hat == 123);
  CHECK(est.depth_m == bin_to_depth(123, cfg.bin_width));
  CHECK(est.r_hat[122] > 1.0);

  cfg.mode = AcquisitionMode::uniform_shift;
  CHECK(run_pixel(cfg, flux, 99).tau_hat == 123);
  cfg.mode = AcquisitionMode::photon_driven;
  CHECK(run_pixel(cfg, flux, 99).tau_hat == 123);

  CHECK_THROWS_AS(run_pixel(cfg, {1.0, 0.1, 2000}, 1), std::invalid_argument);
}

TEST_CASE("sweeps are deterministic and resolve strong signals") {
  SweepSpec spec;
  spec.base.mode = AcquisitionMode::synchronous;
  spec.modes = {AcquisitionMode::synchronous, AcquisitionMode::photon_driven};
  spec.phi_sig = {1.0};
  spec.phi_bkg = {1e-4};
  spec.trials = 50;
  spec.master_seed = 7;

  const auto rows = run_sweep(spec);
  REQUIRE(rows.size() == 2);
  for (const auto& row : rows) {
    CHECK(row.rmse.trials == 50);
    CHECK(row.rmse.rmse_relative < 0.01);
  }

  SUBCASE("equal seeds give byte-equal files") {
    const auto rows2 = run_sweep(spec);
    std::ostringstream a, b;
    write_sweep_csv(a, rows);
    write_sweep_csv(b, rows2);
    CHECK(a.str() == b.str());
    CHECK(a.str().substr(0, a.str().find('\n')) ==
          "mode,phi_sig,phi_bkg,attenuation,active_bins,total_time,trials,"
          "rmse_bins,rmse_relative,rmse_meters");

    std::ostringstream c;
    write_sweep_csv(c, rows, true);
    CHECK(c.str().find("mean_runtime_s") != std::string::npos);
  }
  SUBCASE("weaker signals estimate worse") {
    SweepSpec weak;
    weak.base.num_bins = 100;
    weak.base.active_bins = 100;
    weak.base.bin_width = 1.0;
    weak.base.dead_time = 10.0;
    weak.base.total_time = 20000.0;  // 181 cycles
    weak.modes = {AcquisitionMode::synchronous};
    weak.phi_sig = {0.005, 1.0};
    weak.phi_bkg = {0.01};
    weak.trials = 40;
    weak.master_seed = 7;
    const auto r = run_sweep(weak);
    REQUIRE(r.size() == 2);
    CHECK(r[0].rmse.rmse_bins > 10.0 * r[1].rmse.rmse_bins + 1.0);
  }
  SUBCASE("sweep validation") {
    SweepSpec bad = spec;
    bad.trials = 0;
    CHECK_THROWS_AS(run_sweep(bad), std::invalid_argument);
    bad = spec;
    bad.phi_sig.clear();
    CHECK_THROWS_AS(run_sweep(bad), std::invalid_argument);
    bad = spec;
    bad.fixed_tau = 2000;
    CHECK_THROWS_AS(run_sweep(bad), std::invalid_argument);
  }
}

TEST_CASE("scene estimation recovers per-pixel depths") {
  SceneSpec spec;
  spec.cfg = AcquisitionConfig{};
  spec.phi_sig = 5.0;
  spec.phi_bkg = 1e-6;
  spec.master_seed = 3;
  spec.depth.resize(2, 2);
  spec.depth << bin_to_depth(10, spec.cfg.bin_width),
      bin_to_depth(200, spec.cfg.bin_width),
      bin_to_depth(555, spec.cfg.bin_width),
      bin_to_depth(999, spec.cfg.bin_width);
  spec.reflectivity = Eigen::MatrixXd::Constant(2, 2, 1.0);

  const SceneResult res = run_scene(spec);
  CHECK(res.report.rmse_bins == 0.0);
  CHECK(res.err_bins.cwiseAbs().maxCoeff() == 0.0);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      CHECK(res.depth_est(r, c) == doctest::Approx(spec.depth(r, c))
                                       .epsilon(1e-12));

  SUBCASE("scene validation") {
    SceneSpec bad = spec;
    bad.reflectivity.resize(1, 2);
    CHECK_THROWS_AS(run_scene(bad), std::invalid_argument);
    bad = spec;
    bad.reflectivity(0, 0) = 0.0;
    CHECK_THROWS_AS(run_scene(bad), std::invalid_argument);
    bad = spec;
    bad.reflectivity(0, 0) = 1.5;
    CHECK_THROWS_AS(run_scene(bad), std::invalid_argument);
    bad = spec;
    bad.depth(0, 0) = 1e9;  // beyond the unambiguous range
    CHECK_THROWS_AS(run_scene(bad), std::out_of_range);
    bad = spec;
    bad.phi_sig = -1;
    CHECK_THROWS_AS(run_scene(bad), std::invalid_argument);
  }
}

TEST_CASE("recorded streams re-estimate identically") {
  AcquisitionConfig cfg;
  cfg.num_bins = 50;
  cfg.bin_width = 1.0;
  cfg.dead_time = 5.0;
  cfg.total_time = 3000.0;
  cfg.active_bins = 50;
  const PixelFlux flux{3.0, 0.02, 17};
  const FluxWaveform w = make_impulse_waveform(flux, 50);

  SUBCASE("gated") {
    cfg.mode = AcquisitionMode::uniform_shift;
    const ShiftSchedule sched = make_schedule(cfg);
    const TimestampStream st = simulate_gated(cfg, w, sched, 31);
    const HistogramData direct = histogram_with_denominators(st, cfg, &sched);
    const DepthEstimate want = coates_estimate(direct, cfg.bin_width);

    std::ostringstream out;
    write_stream_csv(out, st);
    std::istringstream in(out.str());
    const DepthEstimate got = analyze_stream(in, cfg);
    CHECK(got.tau_hat == want.tau_hat);
    for (int i = 0; i < 50; ++i)
      CHECK(got.q_hat[i] == doctest::Approx(want.q_hat[i]).epsilon(1e-14));
  }
  SUBCASE("free running") {
    cfg.mode = AcquisitionMode::photon_driven;
    const TimestampStream st = simulate_photon_driven(cfg, w, 32);
    const HistogramData direct = histogram_with_denominators(st, cfg, nullptr);
    const DepthEstimate want = coates_estimate(direct, cfg.bin_width);

    std::ostringstream out;
    write_stream_csv(out, st);
    std::istringstream in(out.str());
    const DepthEstimate got = analyze_stream(in, cfg);
    CHECK(got.tau_hat == want.tau_hat);
    for (int i = 0; i < 50; ++i)
      CHECK(got.q_hat[i] == doctest::Approx(want.q_hat[i]).epsilon(1e-14));
  }
  SUBCASE("stream file errors carry line numbers") {
    cfg.mode = AcquisitionMode::photon_driven;
    std::istringstream empty("");
    CHECK_THROWS_AS(analyze_stream(empty, cfg), EstimationError);
    std::istringstream header_only("cycle,bin_abs,bin_mod\n");
    CHECK_THROWS_AS(analyze_stream(header_only, cfg), EstimationError);
    std::istringstream bad_header("cycle,bin\n1,2\n");
    CHECK_THROWS_WITH_AS(analyze_stream(bad_header, cfg),
                         "line 1: expected header cycle,bin_abs,bin_mod",
                         ParseError);
    std::istringstream bad_row("cycle,bin_abs,bin_mod\n1,4,x\n");
    try {
      analyze_stream(bad_row, cfg);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  SUBCASE("gated streams cannot exceed the schedule") {
    cfg.mode = AcquisitionMode::synchronous;
    std::ostringstream out;
    out << "cycle,bin_abs,bin_mod\n";
    const std::int64_t L = make_schedule(cfg).num_cycles();
    for (std::int64_t c = 1; c <= L + 1; ++c)
      out << c << ',' << (c - 1) * 55 << ',' << 1 << '\n';
    std::istringstream in(out.str());
    CHECK_THROWS_AS(analyze_stream(in, cfg), std::invalid_argument);
  }
}

TEST_CASE("attenuation grid search returns the empirical curve") {
  AcquisitionConfig cfg;
  cfg.num_bins = 100;
  cfg.bin_width = 1.0;
  cfg.dead_time = 10.0;
  cfg.total_time = 20000.0;
  cfg.active_bins = 100;
  cfg.mode = AcquisitionMode::photon_driven;
  const PixelFlux flux{2.0, 0.05, 40};

  const std::vector<double> grid{0.05, 0.3, 1.0};
  const AttenuationSweepResult res = grid_search_attenuation(
      AcquisitionMode::photon_driven, cfg, flux, grid, 20, 5);
  CHECK(res.grid == grid);
  REQUIRE(res.rmse_bins.size() == 3);
  bool best_on_grid = false;
  for (size_t i = 0; i < grid.size(); ++i) {
    CHECK(res.rmse_bins[i] >= 0.0);
    if (grid[i] == res.best) best_on_grid = true;
  }
  CHECK(best_on_grid);

  CHECK_THROWS_AS(grid_search_attenuation(AcquisitionMode::photon_driven, cfg,
                                          flux, {}, 20, 5),
                  std::invalid_argument);
  CHECK_THROWS_AS(grid_search_attenuation(AcquisitionMode::photon_driven, cfg,
                                          flux, {0.5, 2.0}, 20, 5),
                  std::invalid_argument);
}

TEST_CASE("estimate and report serialize to readable json") {
  HistogramData h;
  h.counts = ArrayXi::Zero(4);
  h.counts << 0, 3, 1, 0;  // B = 3
  h.denominators = ArrayXd::Zero(3);
  h.denominators << 5, 5, 4;
  const DepthEstimate est = coates_estimate(h, 2.0);
  const std::string js = estimate_to_json(est);
  CHECK(js.find("\"tau_hat\": 2") != std::string::npos);
  CHECK(js.find("\"depth_m\"") != std::string::npos);
  CHECK(js.find("\"usable_fraction\": 1.0") != std::string::npos);
  CHECK(js.back() == '\n');

  const RmseReport rep = modulo_rmse({4, 6}, {4, 5}, 10, 1.0);
  Eigen::MatrixXd errs(1, 2);
  errs << 0.0, 1.0;
  const std::string rs = scene_report_to_json(rep, errs);
  CHECK(rs.find("\"rmse_bins\"") != std::string::npos);
  CHECK(rs.find("\"trials\": 2") != std::string::npos);
  CHECK(rs.find("\"per_pixel_error_bins\"") != std::string::npos);
}
