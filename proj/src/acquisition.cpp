#include "spadsim/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "spadsim/model.hpp"
#include "spadsim/rng.hpp"

namespace spadsim {

PixelFlux apply_attenuation(const PixelFlux& flux, double upsilon) {
  if (!(upsilon > 0) || upsilon > 1.0)
    throw std::invalid_argument("attenuation must lie in (0, 1]");
  PixelFlux out = flux;
  out.phi_sig *= upsilon;
  out.phi_bkg *= upsilon;
  return out;
}

namespace {

// Constant-probability spans of the incidence vector. Both simulators walk
// spans instead of bins, so an impulse-on-flat waveform costs O(1) per cycle
// while arbitrary waveforms degrade gracefully to per-bin spans.
struct IncidenceRuns {
  int num_bins = 0;
  std::vector<int> start;      // 0-based first bin of each run
  std::vector<int> len;
  std::vector<double> q;
  std::vector<double> log_surv;  // log(1 - q); -inf for q = 1
  std::vector<int> run_of;       // 0-based bin -> run index
};

IncidenceRuns build_runs(const Eigen::Ref<const ArrayXd>& waveform) {
  const IncidenceProbs qv = incidence_probs(waveform);
  IncidenceRuns runs;
  runs.num_bins = static_cast<int>(qv.size());
  runs.run_of.resize(static_cast<std::size_t>(runs.num_bins));
  int i = 0;
  while (i < runs.num_bins) {
    int j = i;
    while (j < runs.num_bins && qv[j] == qv[i]) ++j;
    const int idx = static_cast<int>(runs.start.size());
    runs.start.push_back(i);
    runs.len.push_back(j - i);
    runs.q.push_back(qv[i]);
    runs.log_surv.push_back(qv[i] >= 1.0
                                ? -std::numeric_limits<double>::infinity()
                                : std::log1p(-qv[i]));
    for (int b = i; b < j; ++b) runs.run_of[static_cast<std::size_t>(b)] = idx;
    i = j;
  }
  return runs;
}

// First-photon position within a gated window, by inverting the cumulative
// detection probability at a single uniform draw: the detection lands on the
// first slot whose survival product drops below 1-u. Returns the 1-based
// window position, or 0 when the whole window stays dark.
int sample_gated_position(const IncidenceRuns& runs, int shift, int window,
                          double u) {
  const double log_v = std::log1p(-u);  // threshold on log-survival
  double log_s = 0.0;
  int pos = shift;  // 0-based bin of the next unprocessed slot
  int done = 0;
  while (done < window) {
    const int run = runs.run_of[static_cast<std::size_t>(pos)];
    const int span =
        std::min(runs.start[run] + runs.len[run] - pos, window - done);
    const double q = runs.q[run];
    if (q >= 1.0) return done + 1;
    if (q > 0.0) {
      const double need = (log_v - log_s) / runs.log_surv[run];
      if (need < static_cast<double>(span))
        return done + static_cast<int>(need) + 1;
      log_s += span * runs.log_surv[run];
    }
    done += span;
    pos += span;
    if (pos >= runs.num_bins) pos -= runs.num_bins;
  }
  return 0;
}

}  // namespace

TimestampStream simulate_gated(const AcquisitionConfig& cfg,
                               const Eigen::Ref<const ArrayXd>& waveform,
                               const ShiftSchedule& sched, std::uint64_t seed) {
  if (cfg.mode == AcquisitionMode::photon_driven)
    throw std::invalid_argument("gated simulation requires a gated mode");
  if (static_cast<int>(waveform.size()) != cfg.num_bins)
    throw std::invalid_argument("waveform length does not match num_bins");
  sched.validate();
  if (sched.num_bins != cfg.num_bins)
    throw std::invalid_argument("schedule and config disagree on num_bins");

  const IncidenceRuns runs = build_runs(waveform);
  auto eng = rng::make_engine(seed);

  TimestampStream stream;
  stream.mode = cfg.mode;
  stream.num_cycles = sched.num_cycles();
  const std::int64_t stride =
      static_cast<std::int64_t>(sched.active_bins) + cfg.dead_bins();
  std::int64_t cycle_start = sched.shifts.empty() ? 0 : sched.shifts.front();
  for (std::int64_t l = 0; l < sched.num_cycles(); ++l) {
    const int s = sched.shifts[static_cast<std::size_t>(l)];
    const double u = rng::uniform_double(eng);
    const int k = sample_gated_position(runs, s, sched.active_bins, u);
    if (k > 0) {
      stream.records.push_back({l + 1, cycle_start + k - 1,
                                mod_add(s + 1, k - 1, cfg.num_bins)});
    } else {
      ++stream.empty_cycles;
    }
    cycle_start += stride + sched.pad_delays[static_cast<std::size_t>(l)];
  }
  return stream;
}

TimestampStream simulate_photon_driven(const AcquisitionConfig& cfg,
                                       const Eigen::Ref<const ArrayXd>& waveform,
                                       std::uint64_t seed) {
  if (static_cast<int>(waveform.size()) != cfg.num_bins)
    throw std::invalid_argument("waveform length does not match num_bins");
  const int B = cfg.num_bins;
  const int nd = cfg.dead_bins();
  const std::int64_t budget = cfg.total_bins();

  const IncidenceRuns runs = build_runs(waveform);
  auto eng = rng::make_engine(seed);

  TimestampStream stream;
  stream.mode = AcquisitionMode::photon_driven;
  std::int64_t t = 0;
  while (t < budget) {
    const int lam = static_cast<int>(t % B);
    const int run = runs.run_of[static_cast<std::size_t>(lam)];
    const std::int64_t span =
        std::min<std::int64_t>(runs.start[run] + runs.len[run] - lam, budget - t);
    const double q = runs.q[run];
    std::int64_t detect_at = -1;
    if (q >= 1.0) {
      detect_at = t;
    } else if (q > 0.0) {
      const double u = rng::uniform_double(eng);
      const double g = std::floor(std::log1p(-u) / runs.log_surv[run]);
      if (g < static_cast<double>(span)) detect_at = t + static_cast<std::int64_t>(g);
    }
    if (detect_at < 0) {
      t += span;
      continue;
    }
    stream.records.push_back({static_cast<std::int64_t>(stream.records.size()) + 1,
                              detect_at, static_cast<int>(detect_at % B) + 1});
    t = detect_at + 1 + nd;
  }
  stream.num_cycles = static_cast<std::int64_t>(stream.records.size());
  return stream;
}

HistogramData build_histogram(const TimestampStream& stream,
                              const AcquisitionConfig& cfg) {
  HistogramData hist;
  hist.mode = stream.mode;
  hist.num_cycles = stream.num_cycles;
  hist.counts = ArrayXi::Zero(cfg.num_bins + 1);
  for (const auto& rec : stream.records) {
    if (rec.bin_mod < 1 || rec.bin_mod > cfg.num_bins)
      throw std::invalid_argument("detection bin outside [1, B]");
    ++hist.counts[rec.bin_mod - 1];
  }
  hist.counts[cfg.num_bins] = static_cast<int>(stream.empty_cycles);
  return hist;
}

ArrayXd exact_expected_counts(const Eigen::Ref<const ArrayXd>& waveform,
                              const ShiftSchedule& sched) {
  const IncidenceProbs q = incidence_probs(waveform);
  ArrayXd expected = ArrayXd::Zero(q.size() + 1);
  for (std::int64_t l = 0; l < sched.num_cycles(); ++l)
    expected += detection_probs(q, sched.shifts[static_cast<std::size_t>(l)],
                                sched.active_bins);
  return expected;
}

std::vector<WeightedHistogram> exact_histogram_distribution(
    const AcquisitionConfig& cfg, const Eigen::Ref<const ArrayXd>& waveform,
    const ShiftSchedule& sched) {
  const int B = cfg.num_bins;
  const std::int64_t L = sched.num_cycles();
  double outcomes = 1.0;
  for (std::int64_t l = 0; l < L; ++l) {
    outcomes *= static_cast<double>(B) + 1.0;
    if (outcomes > 1e6)
      throw SizeError("exact enumeration needs (B+1)^L <= 1e6; got B=" +
                      std::to_string(B) + ", L=" + std::to_string(L));
  }

  const IncidenceProbs q = incidence_probs(waveform);
  std::vector<DetectionProbs> per_cycle;
  per_cycle.reserve(static_cast<std::size_t>(L));
  for (std::int64_t l = 0; l < L; ++l)
    per_cycle.push_back(detection_probs(
        q, sched.shifts[static_cast<std::size_t>(l)], sched.active_bins));

  std::map<std::vector<int>, double> pmf;
  std::vector<int> counts(static_cast<std::size_t>(B) + 1, 0);
  // Depth-first over per-cycle outcomes; zero-probability branches pruned.
  auto descend = [&](auto&& self, std::int64_t l, double prob) -> void {
    if (l == L) {
      pmf[counts] += prob;
      return;
    }
    const DetectionProbs& p = per_cycle[static_cast<std::size_t>(l)];
    for (int o = 0; o <= B; ++o) {
      if (p[o] == 0.0) continue;
      ++counts[static_cast<std::size_t>(o)];
      self(self, l + 1, prob * p[o]);
      --counts[static_cast<std::size_t>(o)];
    }
  };
  descend(descend, 0, 1.0);

  std::vector<WeightedHistogram> out;
  out.reserve(pmf.size());
  for (const auto& [key, prob] : pmf) {
    WeightedHistogram wh;
    wh.counts = Eigen::Map<const ArrayXi>(key.data(), static_cast<int>(key.size()));
    wh.prob = prob;
    out.push_back(std::move(wh));
  }
  return out;
}

}  // namespace spadsim
