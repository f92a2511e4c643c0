#include <cmath>
#include <numbers>

#include "doctest.h"
#include "resmix/network.hpp"
#include "resmix/spectral.hpp"
#include "support.hpp"

using namespace resmix;
using doctest::Approx;

TEST_CASE("Laplace matrix matches the definition") {
  CHECK(build_laplace(testing::single_site(1.0, 0.5)).values(0, 0) == -1.0);
  Eigen::Matrix2d two;
  two << -2, 1, 1, -2;
  CHECK(build_laplace(testing::path(2, 0.5)).values == Eigen::MatrixXd(two));

  for (const auto& net : testing::gen_battery(3, 100, 10)) {
    const auto lap = build_laplace(net);
    REQUIRE(lap.values == testing::laplace_oracle(net));
    for (Eigen::Index i = 0; i < lap.size(); ++i)
      REQUIRE(lap.values.row(i).sum() == Approx(-net.kappa[static_cast<std::size_t>(i)]).epsilon(1e-12));
  }
}

TEST_CASE("spectrum of small cases") {
  const auto one = spectrum(build_laplace(testing::single_site(1.0, 0.5)));
  CHECK(one.lambda() == Approx(1.0));
  CHECK(one.perron()[0] == Approx(1.0));

  const auto two = spectrum(build_laplace(testing::path(2, 0.5)));
  CHECK(two.eigenvalues[0] == Approx(1.0));
  CHECK(two.eigenvalues[1] == Approx(3.0));
  CHECK(two.lambda() == Approx(2 * (1 - std::cos(std::numbers::pi / 3))));
  CHECK(two.perron_overlap() == Approx(2.0));
  CHECK(two.overlaps[1] == Approx(0.0).epsilon(1e-12));
}

TEST_CASE("spectrum properties on random networks") {
  for (const auto& net : testing::gen_battery(17, 150, 12)) {
    const auto lap = build_laplace(net);
    const auto s = spectrum(lap);
    const auto n = s.size();
    const double norm = lap.values.cwiseAbs().rowwise().sum().maxCoeff();
    REQUIRE(s.lambda() > 0);
    for (Eigen::Index k = 1; k < n; ++k) REQUIRE(s.eigenvalues[k] >= s.eigenvalues[k - 1]);
    REQUIRE((s.eigenvectors.transpose() * s.eigenvectors - Eigen::MatrixXd::Identity(n, n)).norm() < 1e-10);
    for (Eigen::Index k = 0; k < n; ++k)
      REQUIRE(((-lap.values) * s.eigenvectors.col(k) - s.eigenvalues[k] * s.eigenvectors.col(k)).norm() <=
              1e-9 * norm);
    REQUIRE(s.overlaps.sum() == Approx(static_cast<double>(n)).epsilon(1e-10));
    REQUIRE(s.perron().minCoeff() > 0.0);
    REQUIRE(s.perron().norm() == Approx(1.0));
    REQUIRE(s.perron_overlap() >= 1.0 - 1e-12);
    REQUIRE(s.perron_overlap() <= static_cast<double>(n) + 1e-12);
    REQUIRE(s.quasi_stationary().sum() == Approx(1.0));
  }
}

TEST_CASE("survival: closed forms, ODE oracle and matrix exponential agree") {
  const auto one = spectrum(build_laplace(testing::single_site(1.0, 0.5)));
  CHECK(survival_vector(one, 0.7)[0] == Approx(std::exp(-0.7)));
  CHECK(survival_norm2(one, 0.7) == Approx(std::exp(-1.4)));

  const auto kappa2 = build_laplace(testing::single_site(2.0, 0.5));
  CHECK(survival_ode_oracle(kappa2, 1.0)[0] == Approx(std::exp(-2.0)).epsilon(1e-10));
  CHECK(survival_ode_oracle(kappa2, 0.0)[0] == 1.0);

  // Path of two open sites: psi_1 = (1,1)/sqrt2 has overlap 2, psi_2 = (1,-1)/sqrt2 overlap 0.
  const auto lap2 = build_laplace(testing::path(2, 0.5));
  const auto s2 = spectrum(lap2);
  CHECK(survival_norm2(s2, 1.0) == Approx(2.0 * std::exp(-2.0)).epsilon(1e-12));
  CHECK(survival_ode_oracle(lap2, 1.0).squaredNorm() == Approx(2.0 * std::exp(-2.0)).epsilon(1e-10));

  const auto lap3 = build_laplace(testing::path(3, 0.5));
  CHECK((survival_ode_oracle(lap3, 0.5) - survival_vector(spectrum(lap3), 0.5)).lpNorm<Eigen::Infinity>() < 1e-8);

  for (const auto& net : testing::gen_battery(23, 60, 9)) {
    const auto lap = build_laplace(net);
    const auto s = spectrum(lap);
    for (double t : {0.0, 0.05, 0.4, 1.3}) {
      const Eigen::VectorXd expm = (t * lap.values).exp() * Eigen::VectorXd::Ones(lap.size());
      REQUIRE((survival_vector(s, t) - expm).lpNorm<Eigen::Infinity>() < 1e-10);
      REQUIRE((survival_ode_oracle(lap, t) - expm).lpNorm<Eigen::Infinity>() < 1e-8);
      REQUIRE(survival_norm2(s, t) == Approx(expm.squaredNorm()).epsilon(1e-10));
    }
  }
}

TEST_CASE("survival curve invariants") {
  std::vector<double> grid;
  for (int k = 0; k <= 60; ++k) grid.push_back(0.05 * k);
  for (const auto& net : testing::gen_battery(29, 60, 10)) {
    const auto curve = survival(spectrum(build_laplace(net)), grid);
    REQUIRE(curve.znorm2.front() == Approx(static_cast<double>(net.n)).epsilon(1e-12));
    REQUIRE((curve.z.front().array() - 1.0).abs().maxCoeff() < 1e-12);
    for (std::size_t k = 1; k < grid.size(); ++k) {
      REQUIRE(curve.znorm2[k] < curve.znorm2[k - 1]);
      REQUIRE((curve.z[k].array() <= curve.z[k - 1].array() + 1e-14).all());
      REQUIRE((curve.z[k].array() >= 0.0).all());
      REQUIRE((curve.z[k].array() <= 1.0).all());
    }
  }
}

TEST_CASE("box closed forms") {
  const std::size_t one[] = {1};
  const std::size_t two[] = {2};
  const Boundary semi[] = {Boundary::SemiOpen};
  const Boundary open[] = {Boundary::Open};
  CHECK(box_eigenpair(one, semi).lambda == Approx(1.0));
  CHECK(box_eigenpair(one, open).lambda == Approx(2.0));
  const auto p = box_eigenpair(two, open);
  CHECK(p.psi[0] == Approx(1 / std::sqrt(2.0)));
  CHECK(p.psi[1] == Approx(1 / std::sqrt(2.0)));
  CHECK(std::pow(p.psi.sum(), 2) == Approx(2.0));

  // Every mix on a few shapes, against the dense eigensolver.
  const std::vector<std::vector<std::size_t>> shapes = {{7}, {4, 3}, {2, 3, 2}, {5, 1, 2}, {2, 2, 2, 2}};
  for (const auto& dims : shapes) {
    for (std::size_t mix = 0; mix < (std::size_t{1} << dims.size()); ++mix) {
      std::vector<Boundary> bd(dims.size());
      for (std::size_t k = 0; k < dims.size(); ++k) bd[k] = (mix >> k) & 1 ? Boundary::SemiOpen : Boundary::Open;
      const auto lap = build_laplace(build_box(dims, bd, 0.5));
      const auto s = spectrum(lap);
      const auto c = box_eigenpair(dims, bd);
      REQUIRE(c.lambda == Approx(s.lambda()).epsilon(1e-12));
      REQUIRE(c.psi.norm() == Approx(1.0));
      REQUIRE((c.psi - s.perron()).lpNorm<Eigen::Infinity>() < 1e-9);
    }
  }
}

TEST_CASE("Kronecker sum") {
  CHECK(kron_sum(Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1))(0, 0) == 0.0);
  CHECK(kron_sum(Eigen::MatrixXd::Constant(1, 1, -1), Eigen::MatrixXd::Constant(1, 1, -2))(0, 0) == -3.0);

  const auto d2 = build_laplace(testing::path(2, 0.5)).values;
  const auto d3 = build_laplace(testing::path(3, 0.5)).values;
  const std::size_t dims[] = {2, 3};
  const Boundary open[] = {Boundary::Open};
  CHECK(kron_sum(d2, d3) == build_laplace(build_box(dims, open, 0.5)).values);

  const std::size_t sq[] = {2, 2};
  CHECK(kron_sum(d2, d2) == build_laplace(build_box(sq, open, 0.5)).values);
}

TEST_CASE("spectral errors") {
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 2);
  CHECK(testing::error_of([&] { spectrum(LaplaceMatrix{zero}); }) == Errc::NotPositiveDefinite);
  SpectralOptions small;
  small.max_size = 2;
  CHECK(testing::error_of([&] { spectrum(build_laplace(testing::path(3, 0.5)), small); }) == Errc::CapExceeded);
}
