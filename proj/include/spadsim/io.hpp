#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "spadsim/acquisition.hpp"
#include "spadsim/estimator.hpp"
#include "spadsim/types.hpp"

namespace spadsim {

/// Filesystem-level failures (missing file, unwritable path), as opposed to
/// malformed content, which raises ParseError.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// number formatting (deterministic: shortest round-trip via to_chars)

std::string format_double(double x);
std::string format_double_sig(double x, int significant);

// ---------------------------------------------------------------------------
// CSV

std::string csv_escape(const std::string& field);
void write_csv_row(std::ostream& os, const std::vector<std::string>& fields);

/// Whole-file CSV reader; rows of raw fields, RFC-4180 quoting honored.
/// Throws ParseError with a line number on malformed quoting.
std::vector<std::vector<std::string>> read_csv(std::istream& is);

// ---------------------------------------------------------------------------
// flat `key = value` config files, '#' comments, CLI overrides applied on top

class Config {
 public:
  Config() = default;
  static Config from_file(const std::string& path);
  static Config from_stream(std::istream& is, const std::string& origin);

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::vector<double> get_double_list(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Acquisition settings from config keys (bins, bin_width, dead_time,
/// active_bins, total_time, mode, attenuation), validated.
AcquisitionConfig acquisition_from_config(const Config& cfg);

/// Pixel flux from config keys (phi_sig, phi_bkg, tau).
PixelFlux flux_from_config(const Config& cfg);

// ---------------------------------------------------------------------------
// timestamp streams: CSV with header cycle,bin_abs,bin_mod

void write_stream_csv(std::ostream& os, const TimestampStream& stream);

/// Parses a stream CSV; validates bins against cfg and reports malformed rows
/// with their line numbers via ParseError.
TimestampStream read_stream_csv(std::istream& is, const AcquisitionConfig& cfg);

// ---------------------------------------------------------------------------
// depth maps: header-less CSV grids of meters, 6 significant digits

void write_depth_csv(std::ostream& os, const Eigen::MatrixXd& depth);
Eigen::MatrixXd read_matrix_csv(std::istream& is);

// ---------------------------------------------------------------------------
// JSON (stable key order)

std::string estimate_to_json(const DepthEstimate& est);
std::string scene_report_to_json(const RmseReport& report,
                                 const Eigen::MatrixXd& err_bins);

}  // namespace spadsim
