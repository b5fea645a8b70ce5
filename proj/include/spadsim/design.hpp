#pragma once

#include <cstdint>
#include <vector>

#include "spadsim/types.hpp"

namespace spadsim {

/// Lower real branch of the Lambert W function on [-1/e, 0): the w <= -1
/// solution of w*exp(w) = x. Halley iteration from the asymptotic guess
/// ln(-x) - ln(-ln(-x)), residual tolerance 1e-12, bisection fallback.
/// Throws std::domain_error outside the branch domain.
double lambert_w_branch_neg1(double x);

/// Expected total denominator over all bins for a gated schedule with L
/// cycles of m active bins under flat ambient flux:
/// L * (1 - exp(-m*phi)) / (1 - exp(-phi)); the phi -> 0 limit L*m is taken
/// exactly at phi = 0. Independent of the shift sequence.
double expected_total_denominator(double num_cycles, double active_bins,
                                  double phi_bkg);

struct ActiveTimeResult {
  int m_opt = 1;
  bool unbounded = false;  ///< phi_bkg = 0: objective grows without bound
};

/// Gate length maximizing expected denominators per unit time,
/// (1 - exp(-m*phi)) / ((m + t_d/delta) * (1 - exp(-phi))): closed form via
/// the lower Lambert W branch, then the better of floor/ceil on the integer
/// lattice (never below 1). With phi_bkg = 0 returns m_max and sets the flag.
ActiveTimeResult optimal_active_time(double phi_bkg, double dead_time,
                                     double bin_width, int m_max = 1000000);

/// Expected per-bin denominator for uniformly spread gated cycles; all times
/// in bins.
double expected_denominator_uniform(double total_bins, int num_bins, double m,
                                    double dead_bins, double phi_bkg);

/// Expected per-bin denominator for free-running acquisition; all times in
/// bins.
double expected_denominator_photon_driven(double total_bins, int num_bins,
                                          double dead_bins, double phi_bkg);

/// Free-running objective whose minimizer is the optimal attenuation:
/// expected inverse information per unit time, up to constants:
/// (1 + t_d*(1 - exp(-u*phi_bkg))) / (exp(-u*phi_bkg) * (1 - exp(-u*phi_sig))).
/// dead time in bins.
double attenuation_objective_photon_driven(double upsilon, double phi_sig,
                                           double phi_bkg, double dead_bins);

/// Minimizer of the objective above over (0, 1]: 200-point logarithmic coarse
/// grid refined by golden-section search to 1e-6, clamped at 1. Throws
/// std::domain_error when phi_sig <= 0.
double optimal_attenuation_photon_driven(double phi_sig, double phi_bkg,
                                         double dead_bins);

/// Fisher information carried by bin i about its flux r_i at attenuation
/// upsilon: D_i * upsilon^2 / (exp(upsilon * r_i) - 1). Returns +inf when
/// r_i = 0 with D_i > 0, and 0 when D_i = 0.
double fisher_information(double denominator, double r, double upsilon);

/// Chernoff-style union bound on the probability of ranking some bin i above
/// the true bin tau: sum over i of
/// (1/2) exp(-(q_i - q_tau)^2 / (2 * (v_i + v_tau))), v_j = q_j(1-q_j)/E[D_j].
/// The tau-averaged overload includes the i = tau diagonal terms (each 1/2),
/// matching the symmetric double-sum approximation. Throws std::domain_error
/// on nonpositive expected denominators.
double error_probability_bound(const Eigen::Ref<const ArrayXd>& q,
                               const Eigen::Ref<const ArrayXd>& expected_d,
                               int tau);
double error_probability_bound(const Eigen::Ref<const ArrayXd>& q,
                               const Eigen::Ref<const ArrayXd>& expected_d);

/// One-step transition probability of the free-running shift sequence under
/// flat ambient flux: the gap (s_to - s_from) mod B determines how many live
/// bins elapsed before the next detection (at least one), giving a wrapped
/// discrete-exponential row that sums to one and leaves the uniform
/// distribution invariant. dead_bins may be any nonnegative value.
double markov_transition_density(int s_from, int s_to, double phi_bkg,
                                 int dead_bins, int num_bins);

/// Summary of the acquisition-parameter recommendations for one operating
/// point.
struct DesignPoint {
  double phi_sig = 0.0;
  double phi_bkg = 0.0;
  double dead_time = 0.0;
  double bin_width = 0.0;
  int num_bins = 0;
  int m_opt = 1;
  double xi_per_bin = 0.0;     ///< expected total denominator per budget bin at m_opt
  double upsilon_opt = 1.0;
};

DesignPoint make_design_point(double phi_sig, double phi_bkg, double dead_time,
                              double bin_width, int num_bins);

}  // namespace spadsim
