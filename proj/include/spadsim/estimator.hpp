#pragma once

#include <vector>

#include "spadsim/acquisition.hpp"
#include "spadsim/schedule.hpp"
#include "spadsim/types.hpp"

namespace spadsim {

/// Per-bin denominators for a gated stream: D_i counts cycles in which bin i
/// was active with no earlier detection in that cycle's window (the detection
/// bin itself still counts).
ArrayXd denominator_gated(const TimestampStream& stream,
                          const ShiftSchedule& sched);

/// Closed-form free-running denominators from the folded histogram alone:
/// slots of bin i within the budget minus the dead slots induced by
/// detections in the dead_bins preceding bins, clamped at zero. Detections
/// whose dead window crosses the end of the budget are overcounted here; use
/// the stream overload for exact counts.
ArrayXd denominator_photon_driven(const HistogramData& hist,
                                  const AcquisitionConfig& cfg);

/// Exact free-running denominators: the closed form plus the end-of-budget
/// correction recoverable from the final detection's absolute time. Equals a
/// per-bin count of live slots for every simulator-generated stream.
ArrayXd denominator_photon_driven(const HistogramData& hist,
                                  const TimestampStream& stream,
                                  const AcquisitionConfig& cfg);

/// Histogram plus mode-appropriate denominators in one call; `sched` is
/// required for gated streams and ignored otherwise.
HistogramData histogram_with_denominators(const TimestampStream& stream,
                                          const AcquisitionConfig& cfg,
                                          const ShiftSchedule* sched = nullptr);

struct DepthEstimate {
  ArrayXd q_hat;   ///< per-bin detection-probability estimates, length B
  ArrayXd r_hat;   ///< per-bin flux estimates ln(1/(1-q_hat)), length B
  Eigen::Array<bool, Eigen::Dynamic, 1> usable;  ///< denominator > 0
  int tau_hat = 0;
  double depth_m = 0.0;

  double usable_fraction() const {
    return usable.size() == 0
               ? 0.0
               : static_cast<double>(usable.count()) / usable.size();
  }
};

/// Generalized histogram-correction estimate: q_hat = N/D per usable bin,
/// r_hat = ln(1/(1-q_hat)), depth bin = argmax r_hat (lowest index on ties).
/// Saturated bins (N = D) are clipped to (D - 1/2)/D; bins with D = 0 are
/// flagged unusable and excluded from the argmax. Throws EstimationError when
/// nothing is usable.
DepthEstimate coates_estimate(const HistogramData& hist, double bin_width);

struct RmseReport {
  double rmse_bins = 0.0;
  double rmse_relative = 0.0;  ///< rmse_bins / B
  double rmse_meters = 0.0;    ///< rmse_bins * c * bin_width / 2
  std::int64_t trials = 0;
};

/// Root-mean-square circular bin error between estimates and truths, with
/// distances folded to [-B/2, B/2]. bin_width (seconds) is only used for the
/// meters field; pass 0 to skip it.
RmseReport modulo_rmse(const std::vector<int>& tau_hat,
                       const std::vector<int>& tau_true, int num_bins,
                       double bin_width = 0.0);

}  // namespace spadsim
