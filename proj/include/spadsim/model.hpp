#pragma once

#include <vector>

#include "spadsim/types.hpp"

namespace spadsim {

/// Impulse-plus-ambient waveform: phi_sig concentrated in flux.true_bin on a
/// flat phi_bkg floor. Throws std::invalid_argument on a bin outside [1, B]
/// or negative flux.
FluxWaveform make_impulse_waveform(const PixelFlux& flux, int num_bins);

/// Round-trip-time quantization of a range: bin index floor(2z / (c * delta)),
/// returned 1-based. Throws std::out_of_range unless 0 <= z < c*B*delta/2.
int depth_bin_from_range(double z_meters, double bin_width, int num_bins);

/// Center-of-bin range for a 1-based bin index.
double bin_to_depth(int bin, double bin_width);

/// Per-bin probability of at least one photon under Poisson arrivals:
/// q = 1 - exp(-r), elementwise.
IncidenceProbs incidence_probs(const Eigen::Ref<const ArrayXd>& waveform);

/// Bins that precede bin `bin` inside a cycle gated at `shift`, in window
/// order (shift+1, ..., bin-1 modulo B). Empty when bin is the first active
/// bin. Throws std::invalid_argument on out-of-range arguments.
std::vector<int> preceding_index_set(int shift, int bin, int num_bins);

/// First-photon detection distribution for one gated cycle: the window opens
/// at bin shift+1 and spans `active_bins` consecutive bins (modulo B); a bin
/// detects only if every earlier window bin was photon-free. Length B+1; the
/// last entry is the no-detection probability; inactive bins are zero.
/// Requires 1 <= active_bins <= B.
DetectionProbs detection_probs(const Eigen::Ref<const ArrayXd>& q, int shift,
                               int active_bins);

}  // namespace spadsim
