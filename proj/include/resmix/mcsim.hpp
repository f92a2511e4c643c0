#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "resmix/network.hpp"

namespace resmix {

using Bits = std::vector<std::uint8_t>;

/// The four processes of the graphical construction at one instant: the
/// stationary copy X*, the process X from x0, and the density-0 processes
/// Y (from x0) and Z (from all ones).
struct CoupledState {
  double time = 0.0;
  Bits xstar, x, y, z;

  /// x_i = (1 - z_i) xstar_i + z_i y_i for every site.
  bool coupling_holds() const;
  std::size_t z_count() const;
};

struct SimOptions {
  /// Check the coupling identity after every single event.
  bool check_every_event = false;
  std::uint64_t max_events = 1'000'000'000;
  /// Worker threads; 0 reads RESMIX_THREADS, then falls back to the hardware.
  unsigned threads = 0;
};

/// Poisson clocks of the graphical construction merged into one race: the
/// next event arrives after Exp(R), R = sum_{i<j} c(i,j) + sum_i kappa(i), and
/// is an exchange on {i,j} or a resampling at i with probability proportional
/// to its rate.
class EventStream {
 public:
  struct Event {
    bool exchange = false;
    std::size_t i = 0;
    std::size_t j = 0;
  };

  explicit EventStream(const Network& net);

  double total_rate() const { return total_; }
  std::size_t categories() const { return events_.size(); }
  /// Event selected by a uniform variate u in [0, 1).
  const Event& pick(double u) const;

 private:
  std::vector<Event> events_;
  std::vector<double> cumulative_;
  double total_ = 0.0;
};

/// Independent generator for trial `trial` under master seed `seed`.
std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial);

unsigned resolve_threads(const SimOptions& opts);

/// One realization of the coupling, sampled at the (ascending) `times`.
std::vector<CoupledState> run_coupled(const Network& net, std::span<const std::uint8_t> x0,
                                      std::span<const double> times, std::uint64_t seed,
                                      std::uint64_t trial = 0, const SimOptions& opts = {});

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Per-time empirical means over many coupled trajectories.
struct CoupledStatistics {
  std::size_t trials = 0;
  std::vector<double> times;
  std::vector<std::vector<Estimate>> xstar;  // [time][site]
  std::vector<std::vector<Estimate>> x;
  std::vector<std::vector<Estimate>> z;
  std::vector<Estimate> z_count;             // E|Z(t)|
  bool coupling_always_held = true;
  bool y_matches_expected = true;  // y = z from all ones, y = 0 from all zeros
};

CoupledStatistics coupled_statistics(const Network& net, std::span<const std::uint8_t> x0,
                                     std::span<const double> times, std::size_t trials, std::uint64_t seed,
                                     const SimOptions& opts = {});

/// Samples of the strong stationary time T = inf{t : Z(t) = 0}.
struct SstSample {
  std::size_t trials = 0;
  std::vector<double> values;

  /// Empirical P(T > t) with its binomial standard error.
  Estimate survival(double t) const;
  Estimate mean() const;
};

SstSample sample_sst(const Network& net, std::size_t trials, std::uint64_t seed, const SimOptions& opts = {});

/// Monte Carlo estimate of z_i(t) = P_i(tau > t) for the killed random walk.
Estimate killed_walk_survival(const Network& net, std::size_t start, double t, std::size_t trials,
                              std::uint64_t seed, const SimOptions& opts = {});

struct CovarianceEstimate {
  std::size_t i = 0;
  std::size_t j = 0;
  double cov = 0.0;
  double radius = 0.0;  // 4 standard errors
  bool flag = false;    // cov - radius > 0
};

/// Empirical Cov(Z_i(t), Z_j(t)) for the density-0 process from all ones.
std::vector<CovarianceEstimate> nd_check_mc(const Network& net, double t,
                                            std::span<const std::pair<std::size_t, std::size_t>> pairs,
                                            std::size_t trials, std::uint64_t seed, const SimOptions& opts = {});

}  // namespace resmix
