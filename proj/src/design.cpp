#include "spadsim/design.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace spadsim {

namespace {

double w_times_exp(double w) { return w * std::exp(w); }

// Bisection on the lower branch: w e^w is monotone decreasing for w <= -1,
// so a bracket [lo, -1] with lo e^lo > x pins the root.
double lambert_bisect(double x) {
  double lo = -2.0;
  while (w_times_exp(lo) <= x) lo *= 2.0;
  double hi = -1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (w_times_exp(mid) > x)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-15 * std::abs(lo)) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double lambert_w_branch_neg1(double x) {
  const double branch = -std::exp(-1.0);
  if (!(x >= branch) || !(x < 0.0))
    throw std::domain_error("lower Lambert branch needs x in [-1/e, 0)");
  if (x == branch) return -1.0;

  const double log_neg_x = std::log(-x);
  double w = log_neg_x - std::log(-log_neg_x);
  bool converged = false;
  for (int it = 0; it < 50; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * (w + 1.0));
    const double step = f / denom;
    w -= step;
    if (std::abs(f) <= 1e-12 * std::max(1.0, std::abs(x)) &&
        std::abs(step) <= 1e-12 * std::max(1.0, std::abs(w))) {
      converged = true;
      break;
    }
  }
  if (!converged || !(w <= -1.0 + 1e-8) ||
      std::abs(w_times_exp(w) - x) > 1e-9 * std::abs(x))
    w = lambert_bisect(x);
  return std::min(w, -1.0);
}

double expected_total_denominator(double num_cycles, double active_bins,
                                  double phi) {
  if (num_cycles < 0) throw std::invalid_argument("num_cycles must be >= 0");
  if (!(active_bins >= 1)) throw std::invalid_argument("active_bins must be >= 1");
  if (phi < 0) throw std::invalid_argument("flux must be nonnegative");
  if (phi == 0.0) return num_cycles * active_bins;
  return num_cycles * std::expm1(-active_bins * phi) / std::expm1(-phi);
}

namespace {

// Expected live cycles per unit of budget for a window of m bins followed by
// nd dead bins. The quantity both exposure optimizations maximize.
double denominator_rate(double m, double nd, double phi) {
  if (phi == 0.0) return m / (m + nd);
  return std::expm1(-m * phi) / std::expm1(-phi) / (m + nd);
}

}  // namespace

ActiveTimeResult optimal_active_time(double phi, double dead_time,
                                     double bin_width, int m_max) {
  if (phi < 0) throw std::invalid_argument("flux must be nonnegative");
  if (dead_time < 0) throw std::invalid_argument("dead time must be nonnegative");
  if (!(bin_width > 0)) throw std::invalid_argument("bin width must be positive");
  if (m_max < 1) throw std::invalid_argument("m_max must be >= 1");

  if (phi == 0.0) return {m_max, true};
  const double nd = dead_time / bin_width;
  if (nd == 0.0) return {1, false};

  // Stationary point of the continuous relaxation.
  const double arg_log = -nd * phi - 1.0;  // log(-x) without underflow
  double m_star;
  if (arg_log < -700.0) {
    // x underflows; leading asymptotics of the lower branch suffice because
    // the integer refinement below walks to the exact argmax anyway.
    const double w = arg_log - std::log(-arg_log);
    m_star = -w / phi - nd - 1.0 / phi;
  } else {
    const double w = lambert_w_branch_neg1(-std::exp(arg_log));
    m_star = -w / phi - nd - 1.0 / phi;
  }

  auto value = [&](int m) { return denominator_rate(m, nd, phi); };
  int m = static_cast<int>(std::floor(m_star));
  m = std::clamp(m, 1, m_max);
  while (m + 1 <= m_max && value(m + 1) > value(m)) ++m;
  while (m - 1 >= 1 && value(m - 1) > value(m)) --m;
  return {m, false};
}

double expected_denominator_uniform(double total_bins, int num_bins, double m,
                                    double dead_bins, double phi) {
  if (total_bins < 0) throw std::invalid_argument("total_bins must be >= 0");
  if (num_bins < 1) throw std::invalid_argument("num_bins must be >= 1");
  if (!(m >= 1) || m > num_bins)
    throw std::invalid_argument("active_bins outside [1, B]");
  if (dead_bins < 0) throw std::invalid_argument("dead_bins must be >= 0");
  if (phi < 0) throw std::invalid_argument("flux must be nonnegative");
  return total_bins / num_bins * denominator_rate(m, dead_bins, phi);
}

double expected_denominator_photon_driven(double total_bins, int num_bins,
                                          double dead_bins, double phi) {
  if (total_bins < 0) throw std::invalid_argument("total_bins must be >= 0");
  if (num_bins < 1) throw std::invalid_argument("num_bins must be >= 1");
  if (dead_bins < 0) throw std::invalid_argument("dead_bins must be >= 0");
  if (phi < 0) throw std::invalid_argument("flux must be nonnegative");
  return total_bins / (num_bins * (1.0 + (-std::expm1(-phi)) * dead_bins));
}

double attenuation_objective_photon_driven(double upsilon, double phi_sig,
                                           double phi_bkg, double dead_bins) {
  if (!(upsilon > 0) || upsilon > 1.0)
    throw std::domain_error("attenuation must lie in (0, 1]");
  if (!(phi_sig > 0)) throw std::domain_error("signal flux must be positive");
  if (phi_bkg < 0) throw std::domain_error("ambient flux must be nonnegative");
  if (dead_bins < 0) throw std::domain_error("dead_bins must be nonnegative");
  const double live = 1.0 + dead_bins * (-std::expm1(-upsilon * phi_bkg));
  const double gain = std::exp(-upsilon * phi_bkg) * (-std::expm1(-upsilon * phi_sig));
  return live / gain;
}

double optimal_attenuation_photon_driven(double phi_sig, double phi_bkg,
                                         double dead_bins) {
  if (!(phi_sig > 0)) throw std::domain_error("signal flux must be positive");
  if (phi_bkg < 0) throw std::domain_error("ambient flux must be nonnegative");
  if (dead_bins < 0) throw std::domain_error("dead_bins must be nonnegative");
  // With no ambient flux the objective falls monotonically in upsilon.
  if (phi_bkg == 0.0) return 1.0;

  auto objective = [&](double u) {
    return attenuation_objective_photon_driven(u, phi_sig, phi_bkg, dead_bins);
  };

  constexpr int kGrid = 200;
  const double lo_log = std::log(1e-6), hi_log = 0.0;
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  std::array<double, kGrid> grid{};
  for (int i = 0; i < kGrid; ++i) {
    grid[static_cast<std::size_t>(i)] =
        std::exp(lo_log + (hi_log - lo_log) * i / (kGrid - 1));
    const double v = objective(grid[static_cast<std::size_t>(i)]);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }

  double a = grid[static_cast<std::size_t>(std::max(0, best - 1))];
  double b = grid[static_cast<std::size_t>(std::min(kGrid - 1, best + 1))];
  const double inv_phi = 2.0 / (std::sqrt(5.0) + 1.0);  // golden ratio step
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = objective(x1), f2 = objective(x2);
  while (b - a > 1e-6) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = objective(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = objective(x2);
    }
  }
  return std::min(1.0, 0.5 * (a + b));
}

double fisher_information(double denom, double rate, double upsilon) {
  if (denom < 0) throw std::domain_error("denominator must be nonnegative");
  if (rate < 0) throw std::domain_error("rate must be nonnegative");
  if (!(upsilon > 0)) throw std::domain_error("attenuation must be positive");
  if (denom == 0.0) return 0.0;
  if (rate == 0.0) return std::numeric_limits<double>::infinity();
  return denom * upsilon * upsilon / std::expm1(upsilon * rate);
}

namespace {

double pairwise_confusion(double qi, double qt, double vi, double vt) {
  const double num = (qi - qt) * (qi - qt);
  if (num == 0.0) return 0.5;
  const double denom = vi + vt;
  if (denom == 0.0) return 0.0;
  return 0.5 * std::exp(-0.5 * num / denom);
}

void check_bound_inputs(const Eigen::Ref<const ArrayXd>& q,
                        const Eigen::Ref<const ArrayXd>& expected_denom) {
  if (q.size() < 2) throw std::invalid_argument("need at least two bins");
  if (q.size() != expected_denom.size())
    throw std::invalid_argument("probability and denominator lengths differ");
  if ((q < 0).any() || (q > 1).any())
    throw std::domain_error("incidence probabilities outside [0, 1]");
  if ((expected_denom <= 0).any())
    throw std::domain_error("expected denominators must be positive");
}

}  // namespace

double error_probability_bound(const Eigen::Ref<const ArrayXd>& q,
                               const Eigen::Ref<const ArrayXd>& expected_denom,
                               int tau) {
  check_bound_inputs(q, expected_denom);
  const int B = static_cast<int>(q.size());
  if (tau < 1 || tau > B) throw std::invalid_argument("tau outside [1, B]");
  const ArrayXd v = q * (1.0 - q) / expected_denom;
  double sum = 0.0;
  for (int i = 0; i < B; ++i) {
    if (i == tau - 1) continue;
    sum += pairwise_confusion(q[i], q[tau - 1], v[i], v[tau - 1]);
  }
  return sum;
}

double error_probability_bound(const Eigen::Ref<const ArrayXd>& q,
                               const Eigen::Ref<const ArrayXd>& expected_denom) {
  check_bound_inputs(q, expected_denom);
  const int B = static_cast<int>(q.size());
  const ArrayXd v = q * (1.0 - q) / expected_denom;
  double sum = 0.0;
  for (int t = 0; t < B; ++t)
    for (int i = 0; i < B; ++i)
      sum += pairwise_confusion(q[i], q[t], v[i], v[t]);
  return sum / B;
}

double markov_transition_density(int shift_from, int shift_to, double phi,
                                 int dead_bins, int num_bins) {
  if (num_bins < 1) throw std::invalid_argument("num_bins must be >= 1");
  if (shift_from < 0 || shift_from >= num_bins || shift_to < 0 ||
      shift_to >= num_bins)
    throw std::invalid_argument("shifts outside [0, B-1]");
  if (!(phi > 0)) throw std::domain_error("flux must be positive");
  if (dead_bins < 0) throw std::invalid_argument("dead_bins must be >= 0");

  const int B = num_bins;
  const std::int64_t gap =
      ((static_cast<std::int64_t>(shift_to) - shift_from) % B + B) % B;
  // The gate advances by the detection's live-bin count plus the dead span;
  // k live bins beyond the first shrink the probability by e^{-phi} each.
  const std::int64_t k = ((gap - dead_bins - 1) % B + B) % B;
  const double norm = std::expm1(-phi) / std::expm1(-B * phi);
  return norm * std::exp(-static_cast<double>(k) * phi);
}

DesignPoint make_design_point(double phi_sig, double phi_bkg, double dead_time,
                              double bin_width, int num_bins) {
  if (phi_bkg < 0) throw std::invalid_argument("ambient flux must be nonnegative");
  if (!(bin_width > 0)) throw std::invalid_argument("bin width must be positive");
  if (num_bins < 2) throw std::invalid_argument("num_bins must be >= 2");

  DesignPoint point;
  point.phi_sig = phi_sig;
  point.phi_bkg = phi_bkg;
  point.dead_time = dead_time;
  point.bin_width = bin_width;
  point.num_bins = num_bins;

  const ActiveTimeResult at =
      optimal_active_time(phi_bkg, dead_time, bin_width, num_bins);
  point.m_opt = at.m_opt;
  point.xi_per_bin =
      denominator_rate(point.m_opt, dead_time / bin_width, phi_bkg);
  point.upsilon_opt =
      phi_sig > 0 ? optimal_attenuation_photon_driven(phi_sig, phi_bkg,
                                                      dead_time / bin_width)
                  : 1.0;
  return point;
}

}  // namespace spadsim
