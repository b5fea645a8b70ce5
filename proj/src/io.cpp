#include "spadsim/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spadsim/design.hpp"

namespace spadsim {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string format_double_sig(double x, int significant) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x,
                                 std::chars_format::general, significant);
  return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_csv_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << csv_escape(fields[i]);
  }
  os << '\n';
}

std::vector<std::vector<std::string>> read_csv(std::istream& is) {
  std::string text((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;  // row has content even if all fields empty
  int line = 1;
  int row_line = 1;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
    field_started = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty())
          throw ParseError("line " + std::to_string(line) +
                           ": quote inside unquoted field");
        quoted = true;
        field_started = true;
        break;
      case ',':
        end_field();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        if (field_started || !field.empty() || !row.empty()) end_row();
        ++line;
        row_line = line;
        break;
      default:
        field += c;
        field_started = true;
        break;
    }
  }
  if (quoted)
    throw ParseError("line " + std::to_string(row_line) +
                     ": unterminated quoted field");
  if (field_started || !field.empty() || !row.empty()) end_row();
  return rows;
}

// ---------------------------------------------------------------------------
// config

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_double_field(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  if (t.empty()) throw ParseError(what + " is empty");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE)
    throw ParseError(what + " is not a number: '" + t + "'");
  return v;
}

std::int64_t parse_int_field(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  if (t.empty()) throw ParseError(what + " is empty");
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size() || errno == ERANGE)
    throw ParseError(what + " is not an integer: '" + t + "'");
  return static_cast<std::int64_t>(v);
}

}  // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  return from_stream(in, path);
}

Config Config::from_stream(std::istream& is, const std::string& origin) {
  Config cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ParseError(origin + ":" + std::to_string(lineno) +
                       ": expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw ParseError(origin + ":" + std::to_string(lineno) + ": empty key");
    cfg.values_[key] = value;
  }
  return cfg;
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

void Config::set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

std::string Config::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ParseError("missing config key '" + key + "'");
  return it->second;
}

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key) const {
  return parse_double_field(get_string(key), "config key '" + key + "'");
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::int64_t Config::get_int(const std::string& key) const {
  return parse_int_field(get_string(key), "config key '" + key + "'");
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::vector<double> Config::get_double_list(const std::string& key) const {
  const std::string raw = get_string(key);
  std::vector<double> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = raw.find(',', start);
    const std::string piece = raw.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    out.push_back(parse_double_field(piece, "config key '" + key + "'"));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

AcquisitionConfig acquisition_from_config(const Config& cfg) {
  AcquisitionConfig acq;
  acq.num_bins = static_cast<int>(cfg.get_int("bins", acq.num_bins));
  acq.bin_width = cfg.get_double("bin_width", acq.bin_width);
  acq.dead_time = cfg.get_double("dead_time", acq.dead_time);
  acq.total_time = cfg.get_double("total_time", acq.total_time);
  acq.mode = mode_from_string(cfg.get_string("mode", "sync"));
  acq.attenuation = cfg.get_double("attenuation", acq.attenuation);

  const std::string active = cfg.get_string("active_bins", "");
  if (active.empty()) {
    acq.active_bins = acq.num_bins;
  } else if (trim(active) == "auto") {
    // Gate length tuned to the ambient flux; needs phi_bkg from the same file.
    const double phi_bkg = cfg.get_double("phi_bkg");
    acq.active_bins =
        optimal_active_time(phi_bkg * acq.attenuation, acq.dead_time,
                            acq.bin_width, acq.num_bins)
            .m_opt;
  } else {
    acq.active_bins = static_cast<int>(
        parse_int_field(active, "config key 'active_bins'"));
  }
  acq.validate();
  return acq;
}

PixelFlux flux_from_config(const Config& cfg) {
  PixelFlux flux;
  flux.phi_sig = cfg.get_double("phi_sig");
  flux.phi_bkg = cfg.get_double("phi_bkg");
  flux.true_bin = static_cast<int>(cfg.get_int("tau", 1));
  if (flux.phi_sig < 0 || flux.phi_bkg < 0)
    throw std::invalid_argument("fluxes must be nonnegative");
  if (flux.true_bin < 1) throw std::invalid_argument("tau must be >= 1");
  return flux;
}

// ---------------------------------------------------------------------------
// timestamp streams

void write_stream_csv(std::ostream& os, const TimestampStream& stream) {
  os << "cycle,bin_abs,bin_mod\n";
  for (const auto& rec : stream.records)
    os << rec.cycle << ',' << rec.bin_abs << ',' << rec.bin_mod << '\n';
}

TimestampStream read_stream_csv(std::istream& is, const AcquisitionConfig& cfg) {
  const auto rows = read_csv(is);
  if (rows.empty()) throw EstimationError("stream file is empty");
  if (rows[0] != std::vector<std::string>{"cycle", "bin_abs", "bin_mod"})
    throw ParseError("line 1: expected header cycle,bin_abs,bin_mod");

  TimestampStream stream;
  stream.mode = cfg.mode;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const std::string at = "line " + std::to_string(r + 1);
    if (rows[r].size() != 3)
      throw ParseError(at + ": expected 3 fields, got " +
                       std::to_string(rows[r].size()));
    DetectionRecord rec;
    rec.cycle = parse_int_field(rows[r][0], at + ": cycle");
    rec.bin_abs = parse_int_field(rows[r][1], at + ": bin_abs");
    rec.bin_mod = static_cast<int>(parse_int_field(rows[r][2], at + ": bin_mod"));
    if (rec.cycle < 1) throw ParseError(at + ": cycle must be >= 1");
    if (rec.bin_abs < 0) throw ParseError(at + ": bin_abs must be >= 0");
    if (rec.bin_mod < 1 || rec.bin_mod > cfg.num_bins)
      throw ParseError(at + ": bin_mod outside [1, " +
                       std::to_string(cfg.num_bins) + "]");
    stream.records.push_back(rec);
  }
  // Cycle totals depend on the schedule; the caller fixes them up for gated
  // modes. Free-running streams have one cycle per detection.
  stream.num_cycles = static_cast<std::int64_t>(stream.records.size());
  return stream;
}

// ---------------------------------------------------------------------------
// depth maps

void write_depth_csv(std::ostream& os, const Eigen::MatrixXd& depth) {
  for (Eigen::Index r = 0; r < depth.rows(); ++r) {
    for (Eigen::Index c = 0; c < depth.cols(); ++c) {
      if (c) os << ',';
      os << format_double_sig(depth(r, c), 6);
    }
    os << '\n';
  }
}

Eigen::MatrixXd read_matrix_csv(std::istream& is) {
  const auto rows = read_csv(is);
  if (rows.empty()) throw ParseError("matrix file is empty");
  const std::size_t cols = rows[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string at = "line " + std::to_string(r + 1);
    if (rows[r].size() != cols)
      throw ParseError(at + ": expected " + std::to_string(cols) +
                       " fields, got " + std::to_string(rows[r].size()));
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          parse_double_field(rows[r][c], at + ": field " + std::to_string(c + 1));
  }
  return m;
}

// ---------------------------------------------------------------------------
// JSON

std::string estimate_to_json(const DepthEstimate& est) {
  nlohmann::ordered_json j;
  j["tau_hat"] = est.tau_hat;
  j["depth_m"] = est.depth_m;
  j["r_hat"] = std::vector<double>(est.r_hat.data(),
                                   est.r_hat.data() + est.r_hat.size());
  j["usable_fraction"] = est.usable_fraction();
  return j.dump(2) + "\n";
}

std::string scene_report_to_json(const RmseReport& report,
                                 const Eigen::MatrixXd& err_bins) {
  nlohmann::ordered_json j;
  j["rmse_bins"] = report.rmse_bins;
  j["rmse_relative"] = report.rmse_relative;
  j["rmse_meters"] = report.rmse_meters;
  j["trials"] = report.trials;
  auto rows = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < err_bins.rows(); ++r) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index c = 0; c < err_bins.cols(); ++c) row.push_back(err_bins(r, c));
    rows.push_back(std::move(row));
  }
  j["per_pixel_error_bins"] = std::move(rows);
  return j.dump(2) + "\n";
}

}  // namespace spadsim
