#include "spadsim/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spadsim/acquisition.hpp"
#include "spadsim/model.hpp"

namespace spadsim {

namespace {

// Adds one to D over `len` consecutive laser bins starting at 0-based
// `start`, wrapping modulo B, via a difference array folded afterwards.
void add_circular_range(std::vector<std::int64_t>& diff, int start, int len,
                        int num_bins) {
  const int end = start + len;
  diff[static_cast<std::size_t>(start)] += 1;
  diff[static_cast<std::size_t>(std::min(end, num_bins))] -= 1;
  if (end > num_bins) {
    diff[0] += 1;
    diff[static_cast<std::size_t>(end - num_bins)] -= 1;
  }
}

ArrayXd fold_difference(const std::vector<std::int64_t>& diff, int num_bins) {
  ArrayXd denom(num_bins);
  std::int64_t running = 0;
  for (int i = 0; i < num_bins; ++i) {
    running += diff[static_cast<std::size_t>(i)];
    denom[i] = static_cast<double>(running);
  }
  return denom;
}

// Per laser bin, how many detections fell in the nd bins preceding it
// (circularly). Those detections blank the bin for one repetition each.
ArrayXd dead_shadow(const ArrayXi& counts, int num_bins, int dead_bins) {
  const int B = num_bins;
  ArrayXd prefix(B + 1);
  prefix[0] = 0.0;
  for (int i = 0; i < B; ++i) prefix[i + 1] = prefix[i] + counts[i];
  const double total = prefix[B];

  const std::int64_t wraps = dead_bins / B;
  const int rest = dead_bins % B;
  ArrayXd shadow = ArrayXd::Constant(B, static_cast<double>(wraps) * total);
  if (rest == 0) return shadow;
  for (int i = 0; i < B; ++i) {
    // Sum counts over bins i-rest .. i-1 (0-based, circular).
    const int a = ((i - rest) % B + B) % B;
    if (a + rest <= B)
      shadow[i] += prefix[a + rest] - prefix[a];
    else
      shadow[i] += (total - prefix[a]) + prefix[a + rest - B];
  }
  return shadow;
}

}  // namespace

ArrayXd denominator_gated(const TimestampStream& stream,
                          const ShiftSchedule& sched) {
  if (stream.mode == AcquisitionMode::photon_driven)
    throw std::invalid_argument("gated denominators need a gated stream");
  sched.validate();
  const int B = sched.num_bins;
  const std::int64_t L = sched.num_cycles();
  if (stream.num_cycles != L)
    throw std::invalid_argument("stream cycle count does not match schedule");

  // Cycles without a detection stay live for the whole window; a detection
  // truncates the live span at its window position (the detection bin itself
  // still counts as live).
  std::vector<int> live_len(static_cast<std::size_t>(L), sched.active_bins);
  std::vector<char> seen(static_cast<std::size_t>(L), 0);
  for (const auto& rec : stream.records) {
    if (rec.cycle < 1 || rec.cycle > L)
      throw std::invalid_argument("detection cycle outside the schedule");
    if (rec.bin_mod < 1 || rec.bin_mod > B)
      throw std::invalid_argument("detection bin outside [1, B]");
    auto& flag = seen[static_cast<std::size_t>(rec.cycle - 1)];
    if (flag)
      throw std::invalid_argument("multiple detections in one gated cycle");
    flag = 1;
    const int s = sched.shifts[static_cast<std::size_t>(rec.cycle - 1)];
    const int pos = ((rec.bin_mod - 1 - s) % B + B) % B + 1;
    if (pos > sched.active_bins)
      throw std::invalid_argument(
          "detection falls outside its cycle's active window");
    live_len[static_cast<std::size_t>(rec.cycle - 1)] = pos;
  }

  std::vector<std::int64_t> diff(static_cast<std::size_t>(B) + 1, 0);
  for (std::int64_t l = 0; l < L; ++l)
    add_circular_range(diff, sched.shifts[static_cast<std::size_t>(l)],
                       live_len[static_cast<std::size_t>(l)], B);
  return fold_difference(diff, B);
}

ArrayXd denominator_photon_driven(const HistogramData& hist,
                                  const AcquisitionConfig& cfg) {
  const int B = cfg.num_bins;
  if (static_cast<int>(hist.counts.size()) != B + 1)
    throw std::invalid_argument("histogram length does not match num_bins");
  const std::int64_t budget = cfg.total_bins();
  const std::int64_t base = budget / B;
  const std::int64_t rem = budget % B;

  const ArrayXd shadow = dead_shadow(hist.counts, B, cfg.dead_bins());
  ArrayXd denom(B);
  for (int i = 0; i < B; ++i) {
    const double slots = static_cast<double>(base + (i < rem ? 1 : 0));
    denom[i] = std::max(0.0, slots - shadow[i]);
  }
  return denom;
}

ArrayXd denominator_photon_driven(const HistogramData& hist,
                                  const TimestampStream& stream,
                                  const AcquisitionConfig& cfg) {
  if (stream.mode != AcquisitionMode::photon_driven)
    throw std::invalid_argument("timeline denominators need a photon-driven stream");
  const int B = cfg.num_bins;
  if (static_cast<int>(hist.counts.size()) != B + 1)
    throw std::invalid_argument("histogram length does not match num_bins");
  const int nd = cfg.dead_bins();
  const std::int64_t budget = cfg.total_bins();

  std::int64_t prev_abs = -1;
  for (const auto& rec : stream.records) {
    if (rec.bin_abs < 0 || rec.bin_abs >= budget)
      throw std::invalid_argument("detection timestamp outside the acquisition");
    if (rec.bin_mod != static_cast<int>(rec.bin_abs % B) + 1)
      throw std::invalid_argument("timestamp and bin disagree; stream does not "
                                  "fit a free-running timeline");
    if (prev_abs >= 0 && rec.bin_abs - prev_abs <= nd)
      throw std::invalid_argument("detections closer than the dead time");
    prev_abs = rec.bin_abs;
  }

  const std::int64_t base = budget / B;
  const std::int64_t rem = budget % B;
  const ArrayXd shadow = dead_shadow(hist.counts, B, nd);
  ArrayXd denom(B);
  for (int i = 0; i < B; ++i)
    denom[i] = static_cast<double>(base + (i < rem ? 1 : 0)) - shadow[i];

  // The circular shadow charges every detection a full nd of blanked slots;
  // slots past the end of the acquisition never existed, so credit them back.
  // Detections are spaced more than nd apart, hence at most one can overhang.
  for (const auto& rec : stream.records) {
    if (rec.bin_abs + nd < budget) continue;
    for (std::int64_t j = budget - rec.bin_abs; j <= nd; ++j)
      denom[static_cast<int>((rec.bin_abs + j) % B)] += 1.0;
  }
  return denom;
}

HistogramData histogram_with_denominators(const TimestampStream& stream,
                                          const AcquisitionConfig& cfg,
                                          const ShiftSchedule* sched) {
  HistogramData hist = build_histogram(stream, cfg);
  if (stream.mode == AcquisitionMode::photon_driven) {
    hist.denominators = denominator_photon_driven(hist, stream, cfg);
  } else {
    if (sched == nullptr)
      throw std::invalid_argument("gated histograms need the shift schedule");
    hist.denominators = denominator_gated(stream, *sched);
  }
  return hist;
}

DepthEstimate coates_estimate(const HistogramData& hist, double bin_width) {
  const int B = static_cast<int>(hist.counts.size()) - 1;
  if (B < 1) throw std::invalid_argument("histogram is empty");
  if (static_cast<int>(hist.denominators.size()) != B)
    throw std::invalid_argument("histogram carries no denominators");

  DepthEstimate est;
  est.q_hat = ArrayXd::Zero(B);
  est.r_hat = ArrayXd::Zero(B);
  est.usable = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(B, false);

  for (int i = 0; i < B; ++i) {
    const double d = hist.denominators[i];
    const double n = static_cast<double>(hist.counts[i]);
    if (d <= 0.0) {
      if (n > 0.0)
        throw std::invalid_argument("bin has detections but no live cycles");
      continue;
    }
    if (n > d)
      throw std::invalid_argument("bin has more detections than live cycles");
    // N = D would send the rate estimate to infinity; pull it half a cycle
    // back so the bin stays comparable instead of auto-winning.
    const double q = (n == d) ? (d - 0.5) / d : n / d;
    est.q_hat[i] = q;
    est.r_hat[i] = -std::log1p(-q);
    est.usable[i] = true;
  }

  int best = -1;
  for (int i = 0; i < B; ++i) {
    if (!est.usable[i]) continue;
    if (best < 0 || est.r_hat[i] > est.r_hat[best]) best = i;
  }
  if (best < 0)
    throw EstimationError("no bin was ever live; depth is unidentifiable");
  est.tau_hat = best + 1;
  est.depth_m = bin_to_depth(est.tau_hat, bin_width);
  return est;
}

RmseReport modulo_rmse(const std::vector<int>& tau_hat,
                       const std::vector<int>& tau_true, int num_bins,
                       double bin_width) {
  if (tau_hat.empty() || tau_hat.size() != tau_true.size())
    throw std::invalid_argument("estimate and truth lists must match and be nonempty");
  if (num_bins < 1) throw std::invalid_argument("num_bins must be positive");

  double sum_sq = 0.0;
  for (std::size_t t = 0; t < tau_hat.size(); ++t) {
    const int d = ((tau_hat[t] - tau_true[t]) % num_bins + num_bins) % num_bins;
    const int err = std::min(d, num_bins - d);
    sum_sq += static_cast<double>(err) * err;
  }
  RmseReport report;
  report.trials = static_cast<std::int64_t>(tau_hat.size());
  report.rmse_bins = std::sqrt(sum_sq / static_cast<double>(report.trials));
  report.rmse_relative = report.rmse_bins / static_cast<double>(num_bins);
  report.rmse_meters = report.rmse_bins * kSpeedOfLight * bin_width / 2.0;
  return report;
}

}  // namespace spadsim
