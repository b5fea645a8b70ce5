#pragma once

#include <cstdint>
#include <vector>

#include "spadsim/schedule.hpp"
#include "spadsim/types.hpp"

namespace spadsim {

/// Uniform flux attenuation: scales signal and ambient alike.
/// Requires upsilon in (0, 1].
PixelFlux apply_attenuation(const PixelFlux& flux, double upsilon);

struct DetectionRecord {
  std::int64_t cycle = 0;    ///< 1-based acquisition cycle of the detection
  std::int64_t bin_abs = 0;  ///< absolute bin index since acquisition start (0-based)
  int bin_mod = 0;           ///< laser-period bin in [1, B]
};

/// Raw simulator output: one record per detected photon.
struct TimestampStream {
  std::vector<DetectionRecord> records;
  std::int64_t empty_cycles = 0;  ///< gated cycles with no detection
  std::int64_t num_cycles = 0;    ///< gated: schedule length; free-running: detections
  AcquisitionMode mode = AcquisitionMode::synchronous;
};

/// Gated acquisition: per cycle, at most one detection, drawn from the exact
/// first-photon distribution of the cycle's window via inverse-CDF (one
/// uniform per cycle). Waveform may be arbitrary; piecewise-constant spans
/// are exploited but do not change the sampled law.
TimestampStream simulate_gated(const AcquisitionConfig& cfg,
                               const Eigen::Ref<const ArrayXd>& waveform,
                               const ShiftSchedule& sched, std::uint64_t seed);

/// Free-running acquisition: the detector rearms dead_bins after each
/// detection and is otherwise always live; the absolute timeline is walked
/// with exact geometric jumps across constant-flux spans. Stops at the time
/// budget.
TimestampStream simulate_photon_driven(const AcquisitionConfig& cfg,
                                       const Eigen::Ref<const ArrayXd>& waveform,
                                       std::uint64_t seed);

/// Detection counts folded to the laser period. counts has length B+1: entry
/// i-1 counts detections in bin i, the last entry counts empty gated cycles.
struct HistogramData {
  ArrayXi counts;
  ArrayXd denominators;  ///< per-bin trial counts; filled by the estimator
  std::int64_t num_cycles = 0;
  AcquisitionMode mode = AcquisitionMode::synchronous;
};

HistogramData build_histogram(const TimestampStream& stream,
                              const AcquisitionConfig& cfg);

struct WeightedHistogram {
  ArrayXi counts;  ///< length B+1, last entry = empty cycles
  double prob = 0.0;
};

/// Exact distribution over histograms for a gated schedule, by enumerating
/// all (B+1)^L per-cycle outcomes. Throws SizeError when (B+1)^L > 10^6.
/// Histograms are keyed deterministically (lexicographic counts).
std::vector<WeightedHistogram> exact_histogram_distribution(
    const AcquisitionConfig& cfg, const Eigen::Ref<const ArrayXd>& waveform,
    const ShiftSchedule& sched);

/// Expected per-bin counts sum_l p_{l,i} for a gated schedule, length B+1.
ArrayXd exact_expected_counts(const Eigen::Ref<const ArrayXd>& waveform,
                              const ShiftSchedule& sched);

}  // namespace spadsim
