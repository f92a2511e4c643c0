#include <cmath>
#include <cstdlib>

#include "doctest.h"
#include "resmix/exact.hpp"
#include "resmix/mcsim.hpp"
#include "resmix/network.hpp"
#include "resmix/spectral.hpp"
#include "support.hpp"

using namespace resmix;
using doctest::Approx;

namespace {

constexpr std::size_t kTrials = 100000;

double sigma(double p, std::size_t trials) { return std::sqrt(p * (1 - p) / static_cast<double>(trials)); }

void within_4se(double estimate, double exact, double se) {
  INFO("estimate " << estimate << " exact " << exact << " se " << se);
  CHECK(std::abs(estimate - exact) <= 4 * se);
}

}  // namespace

TEST_CASE("event stream selects proportionally to rates") {
  const auto net = testing::path(3, 0.5);
  const EventStream s(net);
  CHECK(s.total_rate() == 4.0);
  CHECK(s.categories() == 4);
  // Uniform variates on a fine lattice hit each event in proportion to its rate.
  std::size_t exchanges = 0, at0 = 0;
  const int m = 40000;
  for (int k = 0; k < m; ++k) {
    const auto& e = s.pick((k + 0.5) / m);
    if (e.exchange) ++exchanges;
    else if (e.i == 0) ++at0;
  }
  CHECK(exchanges == m / 2);
  CHECK(at0 == m / 4);
}

TEST_CASE("initial condition of the coupling") {
  const auto net = testing::path(4, 0.37);
  const Bits x0 = {1, 0, 1, 1};
  const double t0[] = {0.0};
  const auto s = run_coupled(net, x0, t0, 3).front();
  CHECK(s.x == x0);
  CHECK(s.y == x0);
  CHECK(s.z == Bits(4, 1));
  CHECK(s.coupling_holds());
}

TEST_CASE("coupling identity after every event and extreme starts") {
  SimOptions strict;
  strict.check_every_event = true;
  std::vector<double> times;
  for (int k = 0; k <= 20; ++k) times.push_back(0.25 * k);
  std::size_t trial = 0;
  for (const auto& net : testing::gen_battery(81, 40, 8)) {
    for (const Bits& x0 : {Bits(net.n, 1), Bits(net.n, 0)}) {
      const auto path = run_coupled(net, x0, times, 99, trial++, strict);
      std::size_t prev = net.n;
      for (const auto& s : path) {
        REQUIRE(s.coupling_holds());
        if (x0.front() == 1) REQUIRE(s.y == s.z);
        else REQUIRE(s.y == Bits(net.n, 0));
        REQUIRE(s.z_count() <= prev);
        prev = s.z_count();
      }
    }
  }
}

TEST_CASE("seeded runs are reproducible bit for bit") {
  std::mt19937_64 rng(2);
  const auto net = testing::gen_network(rng, 5, 0.3);
  const double times[] = {0.5, 1.5};
  const Bits x0(5, 1);
  const auto a = run_coupled(net, x0, times, 17, 4);
  const auto b = run_coupled(net, x0, times, 17, 4);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(a[k].x == b[k].x);
    CHECK(a[k].xstar == b[k].xstar);
    CHECK(a[k].z == b[k].z);
  }
  SimOptions one, many;
  one.threads = 1;
  many.threads = 7;
  CHECK(sample_sst(net, 5000, 8, one).values == sample_sst(net, 5000, 8, many).values);
  CHECK(killed_walk_survival(net, 2, 0.7, 5000, 8, one).value == killed_walk_survival(net, 2, 0.7, 5000, 8, many).value);
  const std::pair<std::size_t, std::size_t> pairs[] = {{0, 1}, {2, 4}};
  const auto c1 = nd_check_mc(net, 0.6, pairs, 5000, 8, one);
  const auto c2 = nd_check_mc(net, 0.6, pairs, 5000, 8, many);
  CHECK(c1[1].cov == c2[1].cov);
  CHECK(sample_sst(net, 200, 8, one).values != sample_sst(net, 200, 9, one).values);
}

TEST_CASE("single-site laws") {
  const auto net = testing::single_site(1.0, 0.5);
  const double times[] = {0.7};
  const auto stats = coupled_statistics(net, Bits{1}, times, kTrials, 5);
  const double p = std::exp(-0.7);
  within_4se(stats.z[0][0].value, p, sigma(p, kTrials));

  const auto sst = sample_sst(net, kTrials, 6);
  within_4se(sst.mean().value, 1.0, 1.0 / std::sqrt(static_cast<double>(kTrials)));
  for (double v : sst.values) REQUIRE(v >= 0.0);

  CHECK(killed_walk_survival(net, 0, 0.0, 1000, 1).value == 1.0);
  const auto k2 = testing::single_site(2.0, 0.5);
  const double e2 = std::exp(-2.0);
  within_4se(killed_walk_survival(k2, 0, 1.0, kTrials, 7).value, e2, sigma(e2, kTrials));
}

TEST_CASE("killed walk against the spectral survival vector") {
  const auto path = testing::path(3, 0.5);
  const double z = survival_vector(spectrum(build_laplace(path)), 1.0)[1];
  within_4se(killed_walk_survival(path, 1, 1.0, kTrials, 8).value, z, sigma(z, kTrials));
}

TEST_CASE("strong stationary time against exact separation") {
  const auto path = testing::path(2, 0.5);
  const FullGenerator gen(path);
  const auto sst = sample_sst(path, kTrials, 9);
  for (double t : {0.5, 1.0, 2.0}) {
    const double sep = distances(gen.evolve(point_mass(2, all_ones(2)), t), gen.stationary()).sep;
    within_4se(sst.survival(t).value, sep, sigma(sep, kTrials));
  }
  // Away from the extreme starts the tail only dominates the separation.
  const double sep_mid = distances(gen.evolve(point_mass(2, 1), 1.0), gen.stationary()).sep;
  CHECK(sst.survival(1.0).value + 4 * sst.survival(1.0).std_error >= sep_mid);
}

TEST_CASE("Z marginals, E|Z| and X* marginals") {
  std::mt19937_64 rng(12);
  const auto net = testing::gen_network(rng, 5, 0.37);
  const auto spec = spectrum(build_laplace(net));
  const double times[] = {0.2, 0.8};
  const auto stats = coupled_statistics(net, Bits(net.n, 0), times, kTrials, 10);
  CHECK(stats.coupling_always_held);
  CHECK(stats.y_matches_expected);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto z = survival_vector(spec, times[k]);
    for (std::size_t i = 0; i < net.n; ++i) {
      const double zi = z[static_cast<Eigen::Index>(i)];
      within_4se(stats.z[k][i].value, zi, sigma(zi, kTrials));
      within_4se(stats.xstar[k][i].value, net.rho, sigma(net.rho, kTrials));
    }
    within_4se(stats.z_count[k].value, survival_norm2(spec, times[k] / 2), stats.z_count[k].std_error);
  }
}

TEST_CASE("covariance checks") {
  const auto path = testing::path(3, 0.5);
  const std::pair<std::size_t, std::size_t> pairs[] = {{0, 1}, {0, 2}, {1, 2}};
  for (const auto& e : nd_check_mc(path, 0.0, pairs, 1000, 3)) {
    CHECK(e.cov == 0.0);
    CHECK(e.radius == 0.0);
    CHECK(!e.flag);
  }
  CHECK(nd_check_mc(testing::single_site(1.0, 0.5), 0.5, {}, 100, 1).empty());

  const auto est = nd_check_mc(path, 0.7, pairs, kTrials, 4);
  const auto exact = nd_moments_exact(path, 0.7, {{0, 1}, {0, 2}, {1, 2}});
  for (std::size_t p = 0; p < 3; ++p) {
    const double cov = exact[p].joint - exact[p].product;
    CHECK(!est[p].flag);
    within_4se(est[p].cov, cov, est[p].radius / 4);
  }
  CHECK(testing::error_of([&] {
          const std::pair<std::size_t, std::size_t> bad[] = {{1, 1}};
          nd_check_mc(path, 0.7, bad, 10, 1);
        }) == Errc::InvalidArgument);
}

TEST_CASE("safety cap and thread resolution") {
  SimOptions tiny;
  tiny.max_events = 10;
  CHECK(testing::error_of([&] { sample_sst(testing::path(6, 0.5), 10, 1, tiny); }) == Errc::RuntimeCap);

  SimOptions fixed;
  fixed.threads = 3;
  CHECK(resolve_threads(fixed) == 3);
  setenv("RESMIX_THREADS", "5", 1);
  CHECK(resolve_threads(SimOptions{}) == 5);
  unsetenv("RESMIX_THREADS");
  CHECK(resolve_threads(SimOptions{}) >= 1);
}
