#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "resmix/spectral.hpp"

namespace resmix {

/// The two-sided distance estimates at one time t, all driven by ||z(t)||^2
/// (total variation and Hilbert norm) and ||z(t/2)||^2 (separation and
/// supremum norm).
struct BoundReport {
  double t = 0.0;
  double tv_lower = 0.0;   // ||z(t)||^2 / (4 + ||z(t)||^2), from x_star
  double l2_upper = 0.0;   // sqrt(exp(||z(t)||^2 / rho_star) - 1), any start
  double sep_lower = 0.0;  // ||z(t/2)||^2 / (1 + ||z(t/2)||^2), from x_star
  double sup_upper = 0.0;  // exp(||z(t/2)||^2 / rho_star) - 1, any pair
  double znorm2_t = 0.0;
  double znorm2_half_t = 0.0;
};

BoundReport distance_bounds(const Spectrum& spec, double rho, double t);

/// A mixing-time bound in two flavors: the closed form that keeps only the
/// Perron behaviour, and the root of the full spectral sum found by bisection.
struct MixTimeBound {
  double closed_form = 0.0;
  double bisection = 0.0;
};

/// Upper bound on t_mix(eps) in total variation: bisection gives the smallest
/// t with l2_upper(t)/2 <= eps; the closed form is (log n + c)/(2 lambda) with
/// c = -log(rho_star log(1 + 4 eps^2)), clamped at 0.
/// Throws Error(NoConvergence) if no bracket exists below 1e3 (log n + 20)/lambda.
MixTimeBound tv_mix_upper(const Spectrum& spec, double rho, double eps);

/// Lower bound on t_mix(eps): bisection gives the crossing time of
/// tv_lower(t) = eps (0 if tv_lower(0) <= eps); the closed form is
/// (log <psi,1>^2 - log(4/(1-eps)))/(2 lambda), clamped at 0.
MixTimeBound tv_mix_lower(const Spectrum& spec, double eps);

struct MixWindow {
  double eps = 0.0;
  double t_upper = 0.0;  // bisection upper bound on t_mix(eps)
  double t_lower = 0.0;  // bisection lower bound on t_mix(1 - eps)
  double width = 0.0;    // t_upper - t_lower
  double width_bound = 0.0;  // 3 / (eps rho_star lambda)
  bool within_bound = false;
};

/// eps in (0, 1/2).
MixWindow mixing_window(const Spectrum& spec, double rho, double eps);

struct CutoffCheck {
  std::vector<double> lambdas;
  std::vector<double> t_upper;
  std::vector<double> product_values;  // lambda_n * t_upper_n(eps)
  bool strictly_increasing = false;
  /// Advisory reading of a finite sequence; never a proof of cutoff.
  std::string verdict;
};

CutoffCheck cutoff_check(std::span<const Spectrum> seq, double rho, double eps = 0.25);

struct Delocalization {
  double overlap = 0.0;          // <psi, 1>^2, between 1 and n
  std::optional<double> ratio;   // log <psi,1>^2 / log n, only for n >= 2
};

Delocalization delocalization_profile(const Spectrum& spec);

namespace detail {

/// Time t >= 0 at which the strictly decreasing ||z(t)||^2 equals `target`,
/// or 0 when ||z(0)||^2 <= target. Bisection to full double resolution
/// (at most 200 iterations, never coarser than 1e-9 relative).
double survival_crossing(const Spectrum& spec, double target);

}  // namespace detail

}  // namespace resmix
