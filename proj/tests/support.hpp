#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>
#include <vector>

#include "resmix/network.hpp"

namespace testing {

using resmix::Network;

inline const double kRhos[] = {0.2, 0.37, 0.5, 0.8};

/// Shapes the generator cycles through.
enum class Shape { Path, Cycle, Star, Complete, Tree };

/// Hand-rolled network generator, independent of the library's random_network.
inline Network gen_network(std::mt19937_64& rng, std::size_t n, double rho) {
  std::uniform_real_distribution<double> w(0.25, 3.0);
  const auto shape = static_cast<Shape>(std::uniform_int_distribution<int>(0, 4)(rng));
  std::vector<double> c(n * n, 0.0);
  auto link = [&](std::size_t i, std::size_t j) {
    if (i == j) return;
    c[i * n + j] = c[j * n + i] = w(rng);
  };
  for (std::size_t v = 1; v < n; ++v) {
    switch (shape) {
      case Shape::Path: link(v - 1, v); break;
      case Shape::Cycle: link(v - 1, v); if (v == n - 1 && n > 2) link(v, 0); break;
      case Shape::Star: link(0, v); break;
      case Shape::Complete: for (std::size_t u = 0; u < v; ++u) link(u, v); break;
      case Shape::Tree: link(std::uniform_int_distribution<std::size_t>(0, v - 1)(rng), v); break;
    }
  }
  std::vector<double> kappa(n, 0.0);
  std::bernoulli_distribution coin(0.4);
  for (auto& k : kappa)
    if (coin(rng)) k = w(rng);
  kappa[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)] = w(rng);
  return resmix::make_network(n, std::move(c), std::move(kappa), rho);
}

inline std::vector<Network> gen_battery(std::uint64_t seed, std::size_t count, std::size_t max_n) {
  std::mt19937_64 rng(seed);
  std::vector<Network> out;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, max_n)(rng);
    out.push_back(gen_network(rng, n, kRhos[k % 4]));
  }
  return out;
}

/// Laplace matrix straight from the definition.
inline Eigen::MatrixXd laplace_oracle(const Network& net) {
  const auto n = static_cast<Eigen::Index>(net.n);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double out = net.kappa[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double c = net.cond[static_cast<std::size_t>(i * n + j)];
      d(i, j) = c;
      out += c;
    }
    d(i, i) = -out;
  }
  return d;
}

/// Generator of the exclusion process, enumerated pair by pair over states.
inline Eigen::MatrixXd generator_oracle(const Network& net, double rho) {
  const std::size_t n = net.n;
  const std::size_t states = std::size_t{1} << n;
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(states), static_cast<Eigen::Index>(states));
  auto bit = [](std::size_t x, std::size_t i) { return (x >> i) & 1U; };
  for (std::size_t x = 0; x < states; ++x) {
    for (std::size_t y = 0; y < states; ++y) {
      if (x == y) continue;
      const std::size_t diff = x ^ y;
      double rate = 0.0;
      if (__builtin_popcountll(diff) == 1) {
        std::size_t i = 0;
        while (!bit(diff, i)) ++i;
        rate = net.kappa[i] * (bit(y, i) ? rho : 1.0 - rho);
      } else if (__builtin_popcountll(diff) == 2) {
        std::size_t i = 0;
        while (!bit(diff, i)) ++i;
        std::size_t j = i + 1;
        while (!bit(diff, j)) ++j;
        if (bit(x, i) != bit(x, j)) rate = net.cond[i * n + j];
      }
      l(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = rate;
    }
  }
  for (Eigen::Index x = 0; x < l.rows(); ++x) l(x, x) = -l.row(x).sum();
  return l;
}

/// Law at time t from a point mass, by dense matrix exponential.
inline Eigen::VectorXd law_oracle(const Network& net, double rho, std::size_t x0, double t) {
  const Eigen::MatrixXd p = (t * generator_oracle(net, rho)).exp();
  return p.row(static_cast<Eigen::Index>(x0)).transpose();
}

inline std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline Network single_site(double kappa, double rho) { return resmix::make_network(1, {0.0}, {kappa}, rho); }

inline Network path(std::size_t n, double rho, bool open = true) {
  const std::size_t dims[] = {n};
  const resmix::Boundary b[] = {open ? resmix::Boundary::Open : resmix::Boundary::SemiOpen};
  return resmix::build_box(dims, b, rho);
}

}  // namespace testing

#include <optional>

#include "resmix/errors.hpp"

namespace testing {

template <class F>
std::optional<resmix::Errc> error_of(F&& f) {
  try {
    f();
  } catch (const resmix::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace testing
