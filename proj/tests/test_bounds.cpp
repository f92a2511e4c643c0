#include <cmath>

#include "doctest.h"
#include "resmix/bounds.hpp"
#include "resmix/network.hpp"
#include "support.hpp"

using namespace resmix;
using doctest::Approx;

namespace {

Spectrum spec_of(const Network& net) { return spectrum(build_laplace(net)); }

}  // namespace

TEST_CASE("bounds at the single site") {
  const auto s = spec_of(testing::single_site(1.0, 0.5));
  const auto b = distance_bounds(s, 0.5, 0.0);
  CHECK(b.tv_lower == Approx(0.2));
  CHECK(b.l2_upper == Approx(std::sqrt(std::exp(2.0) - 1.0)));
  CHECK(b.sep_lower == Approx(0.5));
  CHECK(b.sup_upper == Approx(std::exp(2.0) - 1.0));

  // From x = 1 the single site is Bernoulli(rho + (1 - rho) e^{-t}).
  const double rho = 0.3, t = 1.0;
  const auto b3 = distance_bounds(spec_of(testing::single_site(1.0, rho)), rho, t);
  const double mu1 = rho + (1 - rho) * std::exp(-t);
  const double l2sq = (mu1 - rho) * (mu1 - rho) / rho + (mu1 - rho) * (mu1 - rho) / (1 - rho);
  CHECK(l2sq == Approx((1 - rho) * std::exp(-2 * t) / rho));
  CHECK(l2sq <= b3.l2_upper * b3.l2_upper);
  CHECK(b3.l2_upper * b3.l2_upper == Approx(std::exp(std::exp(-2.0) / 0.3) - 1.0));
}

TEST_CASE("bounds are monotone and vanish") {
  for (const auto& net : testing::gen_battery(41, 40, 10)) {
    const auto s = spec_of(net);
    BoundReport prev = distance_bounds(s, net.rho, 0.0);
    for (int k = 1; k <= 80; ++k) {
      const auto b = distance_bounds(s, net.rho, 0.1 * k / s.lambda());
      REQUIRE(b.tv_lower <= prev.tv_lower);
      REQUIRE(b.l2_upper <= prev.l2_upper);
      REQUIRE(b.sep_lower <= prev.sep_lower);
      REQUIRE(b.sup_upper <= prev.sup_upper);
      REQUIRE(b.tv_lower >= 0.0);
      REQUIRE(b.tv_lower < 1.0);
      REQUIRE(b.sep_lower < 1.0);
      prev = b;
    }
    const auto late = distance_bounds(s, net.rho, 60.0 / s.lambda());
    REQUIRE(late.l2_upper < 1e-10);
    REQUIRE(late.sup_upper < 1e-10);
  }
}

TEST_CASE("upper mixing bound on the two-site path") {
  const auto s = spec_of(testing::path(2, 0.5));
  const auto u = tv_mix_upper(s, 0.5, 0.25);
  CHECK(distance_bounds(s, 0.5, u.bisection).l2_upper == Approx(0.5).epsilon(1e-9));
  // Independent inversion: 2 e^{-2t} = 0.5 log(1 + 4/16).
  CHECK(u.bisection == Approx(std::log(2.0 / (0.5 * std::log(1.25))) / 2.0).epsilon(1e-12));
  CHECK(u.closed_form >= u.bisection);
}

TEST_CASE("single site upper bound with vanishing constant") {
  // c = 0 when rho_star log(1 + 4 eps^2) = 1, i.e. eps^2 = (e^2 - 1)/4 for rho = 1/2: out of range,
  // so take eps just inside (0,1) and check the log n = 0 closed form.
  const auto s = spec_of(testing::single_site(1.0, 0.5));
  const auto u = tv_mix_upper(s, 0.5, 0.9);
  CHECK(u.closed_form == Approx(-std::log(0.5 * std::log1p(4 * 0.81)) / 2.0));
  CHECK(u.bisection == Approx(u.closed_form).epsilon(1e-9));
}

TEST_CASE("lower mixing bound") {
  const auto one = spec_of(testing::single_site(1.0, 0.5));
  CHECK(tv_mix_lower(one, 0.2).bisection == 0.0);
  CHECK(tv_mix_lower(one, 0.5).bisection == 0.0);
  CHECK(tv_mix_lower(one, 0.75).closed_form == 0.0);

  // Two-site path: ||z(t)||^2 = 2 e^{-2t} = 4 eps / (1 - eps).
  const auto s = spec_of(testing::path(2, 0.5));
  const auto l = tv_mix_lower(s, 0.1);
  CHECK(l.bisection == Approx(std::log(2.0 / (0.4 / 0.9)) / 2.0).epsilon(1e-12));
  CHECK(l.closed_form <= l.bisection);
}

TEST_CASE("closed forms bracket the bisections and bisections solve their equations") {
  for (const auto& net : testing::gen_battery(43, 80, 12)) {
    const auto s = spec_of(net);
    for (double eps : {0.05, 0.25, 0.5, 0.8}) {
      const auto u = tv_mix_upper(s, net.rho, eps);
      const auto l = tv_mix_lower(s, eps);
      REQUIRE(u.closed_form >= u.bisection * (1 - 1e-12));
      REQUIRE(l.closed_form <= l.bisection * (1 + 1e-12) + 1e-300);
      REQUIRE(distance_bounds(s, net.rho, u.bisection).tv_lower <= eps);
      const double target = net.rho_star() * std::log1p(4 * eps * eps);
      if (u.bisection > 0) REQUIRE(survival_norm2(s, u.bisection) == Approx(target).epsilon(1e-9));
      if (l.bisection > 0) REQUIRE(survival_norm2(s, l.bisection) == Approx(4 * eps / (1 - eps)).epsilon(1e-9));
    }
  }
}

TEST_CASE("mixing window") {
  const auto unit = spec_of(testing::single_site(1.0, 0.5));
  CHECK(mixing_window(unit, 0.5, 0.25).width_bound == Approx(24.0));
  const auto fast = spec_of(testing::single_site(2.0, 0.1));
  CHECK(mixing_window(fast, 0.1, 0.25).width_bound == Approx(60.0));

  const auto s = spec_of(testing::path(4, 0.5));
  const auto w = mixing_window(s, 0.5, 0.2);
  CHECK(w.t_upper >= w.t_lower);
  CHECK(w.width <= 30.0 / s.lambda());
  CHECK(w.within_bound);

  CHECK(testing::error_of([&] { mixing_window(s, 0.5, 0.5); }) == Errc::InvalidArgument);
}

TEST_CASE("product condition") {
  std::vector<Spectrum> line, flat, plane;
  for (std::size_t n : {2, 4, 8, 16}) line.push_back(spec_of(testing::path(n, 0.5)));
  for (int k = 0; k < 4; ++k) flat.push_back(spec_of(testing::single_site(1.0, 0.5)));
  for (std::size_t n = 2; n <= 8; ++n) {
    const std::size_t dims[] = {n, n};
    const Boundary open[] = {Boundary::Open};
    plane.push_back(spec_of(build_box(dims, open, 0.5)));
  }
  const auto a = cutoff_check(line, 0.5);
  CHECK(a.strictly_increasing);
  CHECK(a.verdict.rfind("advisory", 0) == 0);
  const auto b = cutoff_check(flat, 0.5);
  CHECK(!b.strictly_increasing);
  for (double v : b.product_values) CHECK(v == Approx(b.product_values.front()));
  CHECK(cutoff_check(plane, 0.5).strictly_increasing);
}

TEST_CASE("delocalization") {
  const auto two = delocalization_profile(spec_of(testing::path(2, 0.5)));
  CHECK(two.overlap == Approx(2.0));
  REQUIRE(two.ratio.has_value());
  CHECK(*two.ratio == Approx(1.0));

  const auto one = delocalization_profile(spec_of(testing::single_site(1.0, 0.5)));
  CHECK(one.overlap == Approx(1.0));
  CHECK(!one.ratio.has_value());

  // Star with a strong reservoir at the hub: the Perron vector piles up on the leaves.
  const std::size_t n = 9;
  std::vector<double> c(n * n, 0.0);
  for (std::size_t v = 1; v < n; ++v) c[v] = c[v * n] = 1e-3;
  std::vector<double> kappa(n, 0.0);
  kappa[0] = 1e3;
  const auto star = delocalization_profile(spec_of(make_network(n, c, kappa, 0.5)));
  CHECK(*star.ratio > 0.0);
  // Leaves are nearly equal and only weakly killed, so the overlap approaches n - 1.
  CHECK(star.overlap > 7.5);

  // Strong reservoirs on every leaf instead: psi localizes on the hub.
  std::vector<double> hk(n, 1e3);
  hk[0] = 0.0;
  std::vector<double> hub(n * n, 0.0);
  for (std::size_t v = 1; v < n; ++v) hub[v] = hub[v * n] = 1.0;
  const auto loc = delocalization_profile(spec_of(make_network(n, hub, hk, 0.5)));
  CHECK(loc.overlap < 1.1);
  CHECK(*loc.ratio < 0.5);
}

TEST_CASE("bounds reject bad parameters") {
  const auto s = spec_of(testing::path(2, 0.5));
  CHECK(testing::error_of([&] { distance_bounds(s, 0.0, 1.0); }) == Errc::BadDensity);
  CHECK(testing::error_of([&] { distance_bounds(s, 0.5, -1.0); }) == Errc::InvalidArgument);
  CHECK(testing::error_of([&] { tv_mix_upper(s, 0.5, 1.0); }) == Errc::InvalidArgument);
  CHECK(testing::error_of([&] { tv_mix_lower(s, 0.0); }) == Errc::InvalidArgument);
  CHECK(testing::error_of([&] { cutoff_check({}, 0.5); }) == Errc::InvalidArgument);
}
