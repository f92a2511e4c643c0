#include "resmix/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "resmix/errors.hpp"

namespace resmix {

namespace {

double rho_star_of(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw Error(Errc::BadDensity, "rho must lie in (0,1)");
  return std::min(rho, 1.0 - rho);
}

void check_eps(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw Error(Errc::InvalidArgument, "eps must lie in (0,1)");
}

}  // namespace

BoundReport distance_bounds(const Spectrum& spec, double rho, double t) {
  if (!(t >= 0.0)) throw Error(Errc::InvalidArgument, "time must be >= 0");
  const double rs = rho_star_of(rho);
  BoundReport r;
  r.t = t;
  r.znorm2_t = survival_norm2(spec, t);
  r.znorm2_half_t = survival_norm2(spec, 0.5 * t);
  r.tv_lower = r.znorm2_t / (4.0 + r.znorm2_t);
  r.l2_upper = std::sqrt(std::expm1(r.znorm2_t / rs));
  r.sep_lower = r.znorm2_half_t / (1.0 + r.znorm2_half_t);
  r.sup_upper = std::expm1(r.znorm2_half_t / rs);
  return r;
}

namespace detail {

double survival_crossing(const Spectrum& spec, double target) {
  const auto n = static_cast<double>(spec.size());
  if (survival_norm2(spec, 0.0) <= target) return 0.0;

  const double lambda = spec.lambda();
  const double limit = 1e3 * (std::log(n) + 20.0) / lambda;
  // ||z(t)||^2 <= n exp(-2 lambda t) gives a guaranteed bracket when target > 0.
  double hi = target > 0.0 ? std::max(0.0, std::log(n / target) / (2.0 * lambda)) : limit;
  hi = std::max(hi, 1e-300);
  while (survival_norm2(spec, hi) > target) {
    hi *= 2.0;
    if (hi > limit) throw Error(Errc::NoConvergence, "no bisection bracket below t = " + std::to_string(limit));
  }
  double lo = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (survival_norm2(spec, mid) > target) lo = mid;
    else hi = mid;
  }
  if (hi - lo > 1e-9 * hi) throw Error(Errc::NoConvergence, "bisection did not reach 1e-9 relative width");
  return hi;
}

}  // namespace detail

MixTimeBound tv_mix_upper(const Spectrum& spec, double rho, double eps) {
  check_eps(eps);
  const double rs = rho_star_of(rho);
  // l2_upper(t) = 2 eps  <=>  ||z(t)||^2 = rho_star log(1 + 4 eps^2)
  const double target = rs * std::log1p(4.0 * eps * eps);
  const double c = -std::log(target);
  const double n = static_cast<double>(spec.size());
  MixTimeBound b;
  b.closed_form = std::max(0.0, (std::log(n) + c) / (2.0 * spec.lambda()));
  b.bisection = detail::survival_crossing(spec, target);
  return b;
}

MixTimeBound tv_mix_lower(const Spectrum& spec, double eps) {
  check_eps(eps);
  // tv_lower(t) > eps  <=>  ||z(t)||^2 > 4 eps / (1 - eps)
  const double target = 4.0 * eps / (1.0 - eps);
  const double c = std::log(4.0 / (1.0 - eps));
  MixTimeBound b;
  b.closed_form = std::max(0.0, (std::log(spec.perron_overlap()) - c) / (2.0 * spec.lambda()));
  b.bisection = detail::survival_crossing(spec, target);
  return b;
}

MixWindow mixing_window(const Spectrum& spec, double rho, double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw Error(Errc::InvalidArgument, "window eps must lie in (0,1/2)");
  MixWindow w;
  w.eps = eps;
  w.t_upper = tv_mix_upper(spec, rho, eps).bisection;
  w.t_lower = tv_mix_lower(spec, 1.0 - eps).bisection;
  w.width = w.t_upper - w.t_lower;
  w.width_bound = 3.0 / (eps * rho_star_of(rho) * spec.lambda());
  w.within_bound = w.width <= w.width_bound;
  return w;
}

CutoffCheck cutoff_check(std::span<const Spectrum> seq, double rho, double eps) {
  if (seq.empty()) throw Error(Errc::InvalidArgument, "cutoff_check needs a nonempty sequence");
  CutoffCheck out;
  for (const auto& s : seq) {
    const double t = tv_mix_upper(s, rho, eps).bisection;
    out.lambdas.push_back(s.lambda());
    out.t_upper.push_back(t);
    out.product_values.push_back(s.lambda() * t);
  }
  out.strictly_increasing = out.product_values.size() >= 2;
  for (std::size_t k = 1; k < out.product_values.size(); ++k)
    if (!(out.product_values[k] > out.product_values[k - 1])) out.strictly_increasing = false;
  out.verdict = out.strictly_increasing ? "advisory: product values increasing, consistent with divergence"
                                        : "advisory: no divergent trend in product values";
  return out;
}

Delocalization delocalization_profile(const Spectrum& spec) {
  Delocalization d;
  d.overlap = spec.perron_overlap();
  if (spec.size() >= 2) {
    const double r = std::log(d.overlap) / std::log(static_cast<double>(spec.size()));
    d.ratio = std::clamp(r, 0.0, 1.0);
  }
  return d;
}

}  // namespace resmix
