#include "spadsim/schedule.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "spadsim/rng.hpp"

namespace spadsim {

void ShiftSchedule::validate() const {
  if (num_bins < 2) throw std::invalid_argument("schedule num_bins must be >= 2");
  if (active_bins < 1 || active_bins > num_bins)
    throw std::invalid_argument("schedule active_bins outside [1, B]");
  if (shifts.size() != pad_delays.size())
    throw std::invalid_argument("schedule shifts/pads length mismatch");
  for (int s : shifts)
    if (s < 0 || s >= num_bins)
      throw std::invalid_argument("schedule shift outside [0, B-1]");
  for (std::int64_t p : pad_delays)
    if (p < 0) throw std::invalid_argument("schedule pad must be nonnegative");
}

ShiftSchedule synchronous_schedule(const AcquisitionConfig& cfg) {
  const int B = cfg.num_bins;
  const int nd = cfg.dead_bins();
  const std::int64_t budget = cfg.total_bins();
  const std::int64_t cycle = static_cast<std::int64_t>(B) + nd;
  const std::int64_t L = budget / cycle;
  if (L < 1)
    throw BudgetError("time budget of " + std::to_string(budget) +
                      " bins holds no full cycle of " + std::to_string(cycle));
  ShiftSchedule sched;
  sched.num_bins = B;
  sched.active_bins = B;
  sched.shifts.assign(static_cast<std::size_t>(L), 0);
  sched.pad_delays.assign(static_cast<std::size_t>(L), 0);
  return sched;
}

ShiftSchedule uniform_shift_schedule(int num_bins, std::int64_t num_cycles,
                                     int active_bins, int dead_bins,
                                     std::optional<std::uint64_t> shuffle_seed) {
  if (num_bins < 2) throw std::invalid_argument("num_bins must be >= 2");
  if (num_cycles < 1) throw std::invalid_argument("num_cycles must be >= 1");
  if (active_bins < 1 || active_bins > num_bins)
    throw std::invalid_argument("active_bins outside [1, B]");
  if (dead_bins < 0) throw std::invalid_argument("dead_bins must be >= 0");

  ShiftSchedule sched;
  sched.num_bins = num_bins;
  sched.active_bins = active_bins;
  sched.shifts.resize(static_cast<std::size_t>(num_cycles));
  for (std::int64_t k = 0; k < num_cycles; ++k)
    sched.shifts[static_cast<std::size_t>(k)] =
        static_cast<int>(k * num_bins / num_cycles);
  if (shuffle_seed) {
    auto eng = rng::make_engine(rng::derive_seed(*shuffle_seed));
    for (std::size_t i = sched.shifts.size(); i > 1; --i)
      std::swap(sched.shifts[i - 1],
                sched.shifts[static_cast<std::size_t>(
                    rng::uniform_int(eng, 0, static_cast<std::int64_t>(i) - 1))]);
  }

  sched.pad_delays.assign(sched.shifts.size(), 0);
  const std::int64_t stride = static_cast<std::int64_t>(active_bins) + dead_bins;
  for (std::size_t l = 0; l + 1 < sched.shifts.size(); ++l) {
    // idle long enough that the next window opens at its prescribed shift
    std::int64_t gap = (sched.shifts[l + 1] - sched.shifts[l] - stride) % num_bins;
    if (gap < 0) gap += num_bins;
    sched.pad_delays[l] = gap;
  }
  return sched;
}

namespace {

// Gate-opening offsets in units of B/L bins when B is a multiple of L: the
// natural drift of the cycle length is rounded up to a whole number of
// intervals by a small pad, and group offsets cover the residues the drift
// alone would miss.
struct IntervalPlan {
  std::int64_t stride_intervals = 0;  // per-cycle advance, interval units
  std::int64_t pad_bins = 0;          // per-cycle pad realizing the round-up
  std::int64_t group_len = 0;         // cycles per group (L / gcd)
  std::int64_t interval_bins = 0;     // B / L
};

}  // namespace

ShiftSchedule coprime_mismatch_schedule(int num_bins, int active_bins,
                                        int dead_bins, std::int64_t total_bins) {
  if (num_bins < 2) throw std::invalid_argument("num_bins must be >= 2");
  if (active_bins < 1 || active_bins > num_bins)
    throw std::invalid_argument("active_bins outside [1, B]");
  if (dead_bins < 0) throw std::invalid_argument("dead_bins must be >= 0");

  const std::int64_t stride = static_cast<std::int64_t>(active_bins) + dead_bins;
  const std::int64_t L = total_bins / stride;
  if (L < 1)
    throw BudgetError("time budget of " + std::to_string(total_bins) +
                      " bins holds no full cycle of " + std::to_string(stride));

  if (L > num_bins || num_bins % L != 0) {
    // No whole-interval decomposition of the period; fall back to plain
    // equally spaced shifts with zero idle time.
    ShiftSchedule sched = uniform_shift_schedule(num_bins, L, active_bins, dead_bins);
    std::fill(sched.pad_delays.begin(), sched.pad_delays.end(), 0);
    return sched;
  }

  IntervalPlan plan;
  plan.interval_bins = num_bins / L;
  plan.stride_intervals = (stride * L + num_bins - 1) / num_bins;  // ceil
  plan.pad_bins = plan.stride_intervals * plan.interval_bins - stride;
  const std::int64_t s_mod = plan.stride_intervals % L;
  const std::int64_t g = std::gcd(s_mod == 0 ? L : s_mod, L);
  plan.group_len = L / g;

  ShiftSchedule sched;
  sched.num_bins = num_bins;
  sched.active_bins = active_bins;
  sched.shifts.reserve(static_cast<std::size_t>(L));
  sched.pad_delays.reserve(static_cast<std::size_t>(L));
  for (std::int64_t l = 0; l < L; ++l) {
    const std::int64_t group = l / plan.group_len;
    const std::int64_t interval = ((l * plan.stride_intervals) % L + group) % L;
    sched.shifts.push_back(static_cast<int>(interval * plan.interval_bins));
    std::int64_t pad = plan.pad_bins;
    if (l + 1 < L && (l + 1) % plan.group_len == 0)
      pad += plan.interval_bins;  // step into the next group's offset
    sched.pad_delays.push_back(pad);
  }
  if (!sched.pad_delays.empty()) sched.pad_delays.back() = 0;

  // Drop trailing cycles until the prefix fits; the final kept cycle needs no
  // pad, so cost it without one.
  while (sched.num_cycles() > 0 &&
         schedule_cost(sched, dead_bins) - sched.pad_delays.back() > total_bins) {
    sched.shifts.pop_back();
    sched.pad_delays.pop_back();
  }
  if (sched.num_cycles() == 0)
    throw BudgetError("pads exhausted the time budget before the first cycle");
  sched.pad_delays.back() = 0;
  return sched;
}

std::int64_t schedule_cost(const ShiftSchedule& sched, int dead_bins) {
  const std::int64_t per_cycle =
      static_cast<std::int64_t>(sched.active_bins) + dead_bins;
  std::int64_t cost = per_cycle * sched.num_cycles();
  for (std::int64_t p : sched.pad_delays) cost += p;
  return cost;
}

ShiftSchedule make_schedule(const AcquisitionConfig& cfg) {
  switch (cfg.mode) {
    case AcquisitionMode::synchronous:
      return synchronous_schedule(cfg);
    case AcquisitionMode::uniform_shift:
      return coprime_mismatch_schedule(cfg.num_bins, cfg.active_bins,
                                       cfg.dead_bins(), cfg.total_bins());
    case AcquisitionMode::photon_driven:
      throw std::invalid_argument("photon-driven acquisition has no gate schedule");
  }
  throw std::invalid_argument("unknown acquisition mode");
}

void write_schedule_csv(std::ostream& os, const ShiftSchedule& sched) {
  os << "cycle,shift,pad_bins\n";
  for (std::int64_t l = 0; l < sched.num_cycles(); ++l)
    os << (l + 1) << ',' << sched.shifts[static_cast<std::size_t>(l)] << ','
       << sched.pad_delays[static_cast<std::size_t>(l)] << '\n';
}

}  // namespace spadsim
