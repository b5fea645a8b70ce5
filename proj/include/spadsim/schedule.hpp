#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "spadsim/types.hpp"

namespace spadsim {

/// Gate shift sequence for a gated acquisition. Cycle l (0-based here) opens
/// its window at bin shifts[l]+1 and keeps the detector active for
/// active_bins bins; pad_delays[l] is extra idle time (bins) appended after
/// the dead time so that the next cycle opens at its prescribed shift.
struct ShiftSchedule {
  int num_bins = 0;
  int active_bins = 0;
  std::vector<int> shifts;
  std::vector<std::int64_t> pad_delays;

  std::int64_t num_cycles() const {
    return static_cast<std::int64_t>(shifts.size());
  }
  void validate() const;
};

/// All-zero shifts; as many cycles as fit the budget:
/// L = floor(total_bins / (B + dead_bins)). Throws BudgetError when not even
/// one cycle fits.
ShiftSchedule synchronous_schedule(const AcquisitionConfig& cfg);

/// Equally spaced shifts floor(k*B/L), k = 0..L-1, ascending by default or
/// permuted by a seeded shuffle. Pads are chosen so that consecutive cycles
/// land on consecutive prescribed shifts (last cycle unpadded).
ShiftSchedule uniform_shift_schedule(int num_bins, std::int64_t num_cycles,
                                     int active_bins, int dead_bins,
                                     std::optional<std::uint64_t> shuffle_seed =
                                         std::nullopt);

/// Equally spaced shifts realized with near-zero idle time by exploiting the
/// residue of the cycle length modulo B. With L = floor(total_bins/(m+n_d))
/// and B a multiple of L, the per-cycle stride in units of B/L bins is
/// s = ceil((m+n_d)L/B); when gcd(s, L) = 1 the natural drift visits every
/// residue, otherwise cycles are split into gcd groups offset by one interval
/// each. Falls back to the plain equally-spaced sequence with zero pads when
/// B is not a multiple of L. Trailing cycles are dropped if pads overflow the
/// budget. Throws BudgetError when no cycle fits.
ShiftSchedule coprime_mismatch_schedule(int num_bins, int active_bins,
                                        int dead_bins, std::int64_t total_bins);

/// Total bins consumed: sum over cycles of (active + dead + pad).
std::int64_t schedule_cost(const ShiftSchedule& sched, int dead_bins);

/// Canonical schedule for a config's mode (synchronous or uniform_shift).
ShiftSchedule make_schedule(const AcquisitionConfig& cfg);

/// CSV with header cycle,shift,pad_bins (cycle is 1-based).
void write_schedule_csv(std::ostream& os, const ShiftSchedule& sched);

}  // namespace spadsim
