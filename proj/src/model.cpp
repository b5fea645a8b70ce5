#include "spadsim/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace spadsim {

AcquisitionMode mode_from_string(const std::string& s) {
  if (s == "sync" || s == "synchronous") return AcquisitionMode::synchronous;
  if (s == "uniform" || s == "uniform_shift") return AcquisitionMode::uniform_shift;
  if (s == "photon" || s == "photon_driven") return AcquisitionMode::photon_driven;
  throw std::invalid_argument("unknown acquisition mode: '" + s +
                              "' (expected sync, uniform, or photon)");
}

std::string to_string(AcquisitionMode m) {
  switch (m) {
    case AcquisitionMode::synchronous: return "sync";
    case AcquisitionMode::uniform_shift: return "uniform";
    case AcquisitionMode::photon_driven: return "photon";
  }
  return "?";
}

int AcquisitionConfig::dead_bins() const {
  return static_cast<int>(floor_ratio(dead_time, bin_width));
}

std::int64_t AcquisitionConfig::total_bins() const {
  return floor_ratio(total_time, bin_width);
}

void AcquisitionConfig::validate() const {
  if (num_bins < 2) throw std::invalid_argument("num_bins must be at least 2");
  if (!(bin_width > 0)) throw std::invalid_argument("bin_width must be positive");
  if (dead_time < 0) throw std::invalid_argument("dead_time must be nonnegative");
  if (!(total_time > 0)) throw std::invalid_argument("total_time must be positive");
  if (!(attenuation > 0) || attenuation > 1.0)
    throw std::invalid_argument("attenuation must lie in (0, 1]");
  if (mode != AcquisitionMode::photon_driven) {
    if (active_bins < 1) throw std::invalid_argument("active_bins must be at least 1");
    if (active_bins > num_bins)
      throw std::invalid_argument("active_bins may not exceed num_bins for gated modes");
    if (total_time + 1e-15 < active_bins * bin_width + dead_time)
      throw BudgetError("total_time too small for a single gated cycle");
  }
}

FluxWaveform make_impulse_waveform(const PixelFlux& flux, int num_bins) {
  if (num_bins < 2) throw std::invalid_argument("num_bins must be at least 2");
  if (flux.true_bin < 1 || flux.true_bin > num_bins)
    throw std::invalid_argument("true_bin " + std::to_string(flux.true_bin) +
                                " outside [1, " + std::to_string(num_bins) + "]");
  if (flux.phi_sig < 0 || flux.phi_bkg < 0)
    throw std::invalid_argument("flux levels must be nonnegative");
  FluxWaveform w = FluxWaveform::Constant(num_bins, flux.phi_bkg);
  w[flux.true_bin - 1] += flux.phi_sig;
  return w;
}

int depth_bin_from_range(double z_meters, double bin_width, int num_bins) {
  const double z_max = kSpeedOfLight * num_bins * bin_width / 2.0;
  if (!(z_meters >= 0) || z_meters >= z_max)
    throw std::out_of_range("range " + std::to_string(z_meters) +
                            " m outside [0, " + std::to_string(z_max) + ") m");
  const int bin0 = static_cast<int>(std::floor(2.0 * z_meters / (kSpeedOfLight * bin_width)));
  return bin0 + 1;
}

double bin_to_depth(int bin, double bin_width) {
  return (bin - 0.5) * kSpeedOfLight * bin_width / 2.0;
}

IncidenceProbs incidence_probs(const Eigen::Ref<const ArrayXd>& waveform) {
  if ((waveform < 0).any())
    throw std::invalid_argument("waveform must be nonnegative");
  return 1.0 - (-waveform).exp();
}

std::vector<int> preceding_index_set(int shift, int bin, int num_bins) {
  if (num_bins < 2) throw std::invalid_argument("num_bins must be at least 2");
  if (shift < 0 || shift >= num_bins)
    throw std::invalid_argument("shift outside [0, B-1]");
  if (bin < 1 || bin > num_bins) throw std::invalid_argument("bin outside [1, B]");
  // Window order runs shift+1, shift+2, ... modulo B; everything strictly
  // between the window start and `bin` precedes it.
  const int count = static_cast<int>(
      ((static_cast<std::int64_t>(bin) - shift - 1) % num_bins + num_bins) % num_bins);
  std::vector<int> out;
  out.reserve(count);
  for (int k = 1; k <= count; ++k) out.push_back(mod_add(shift + 1, k - 1, num_bins));
  return out;
}

DetectionProbs detection_probs(const Eigen::Ref<const ArrayXd>& q, int shift,
                               int active_bins) {
  const int B = static_cast<int>(q.size());
  if (B < 2) throw std::invalid_argument("q must have at least 2 entries");
  if (shift < 0 || shift >= B) throw std::invalid_argument("shift outside [0, B-1]");
  if (active_bins < 1 || active_bins > B)
    throw std::invalid_argument("active window must span 1..B bins");
  if ((q < 0).any() || (q > 1).any())
    throw std::invalid_argument("q entries must lie in [0, 1]");

  DetectionProbs p = DetectionProbs::Zero(B + 1);
  double survival = 1.0;  // probability that no earlier window bin fired
  for (int k = 1; k <= active_bins; ++k) {
    const int bin = mod_add(shift + 1, k - 1, B);
    p[bin - 1] = survival * q[bin - 1];
    survival *= 1.0 - q[bin - 1];
  }
  p[B] = survival;
  return p;
}

}  // namespace spadsim
