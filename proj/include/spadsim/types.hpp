#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace spadsim {

using Eigen::ArrayXd;
using Eigen::ArrayXi;

/// Mean photon counts per histogram bin over one laser period, length B.
using FluxWaveform = Eigen::ArrayXd;

/// Per-bin probability that at least one photon arrives, length B.
using IncidenceProbs = Eigen::ArrayXd;

/// Per-cycle first-photon detection probabilities, length B+1.
/// Entry i-1 is the probability of detecting in bin i; the last entry is the
/// probability that the cycle records nothing.
using DetectionProbs = Eigen::ArrayXd;

constexpr double kSpeedOfLight = 299792458.0;  // m/s

enum class AcquisitionMode { synchronous, uniform_shift, photon_driven };

AcquisitionMode mode_from_string(const std::string& s);
std::string to_string(AcquisitionMode m);

/// Requested cycles do not fit the acquisition time budget.
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Every histogram bin has a zero denominator; no depth can be estimated.
struct EstimationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Exact enumeration would exceed the configured instance limit.
struct SizeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input file (CSV/config); message carries the line number.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Acquisition settings shared by the simulators and estimators.
///
/// Times are seconds; bin-granular quantities are derived by flooring with a
/// small relative guard so that exact ratios (10ns / 100ps) survive floating
/// point.
struct AcquisitionConfig {
  int num_bins = 1000;        ///< histogram bins per laser period (B)
  double bin_width = 100e-12; ///< bin duration (seconds)
  double dead_time = 10e-9;   ///< detector dead time after a detection (seconds)
  int active_bins = 1000;     ///< gate length m in bins (gated modes only)
  double total_time = 2.5e-6; ///< acquisition time budget (seconds)
  AcquisitionMode mode = AcquisitionMode::synchronous;
  double attenuation = 1.0;   ///< flux scale factor in (0, 1]

  int dead_bins() const;
  std::int64_t total_bins() const;

  /// Throws std::invalid_argument (or BudgetError for an unusable budget).
  void validate() const;
};

/// Scene response of a single pixel: impulse at true_bin plus flat ambient.
struct PixelFlux {
  double phi_sig = 0.0;  ///< mean signal photons in the true bin, per cycle
  double phi_bkg = 0.0;  ///< mean ambient photons per bin, per cycle
  int true_bin = 1;      ///< 1-based bin holding the return pulse

  double sbr(int num_bins) const {
    return phi_sig / (static_cast<double>(num_bins) * phi_bkg);
  }
};

// Circular bin arithmetic. Bins are 1-based and live in [1, B]; shifts are
// 0-based offsets in [0, B-1].

inline int mod_add(int bin, std::int64_t k, int B) {
  std::int64_t r = (static_cast<std::int64_t>(bin) - 1 + k) % B;
  if (r < 0) r += B;
  return static_cast<int>(r) + 1;
}

inline int mod_sub(int bin, std::int64_t k, int B) { return mod_add(bin, -k, B); }

inline int shift_add(int shift, std::int64_t k, int B) {
  std::int64_t r = (static_cast<std::int64_t>(shift) + k) % B;
  if (r < 0) r += B;
  return static_cast<int>(r);
}

/// Floor of a nonnegative ratio with a relative epsilon guard, so that ratios
/// that are integers in exact arithmetic do not floor one short.
inline std::int64_t floor_ratio(double num, double den) {
  return static_cast<std::int64_t>(std::floor(num / den * (1.0 + 1e-12) + 1e-12));
}

}  // namespace spadsim
