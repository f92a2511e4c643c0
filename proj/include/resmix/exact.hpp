#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "resmix/network.hpp"

namespace resmix {

/// Configuration x in {0,1}^n encoded as a bitmask: bit i is site i.
using State = std::uint32_t;

struct ExactOptions {
  std::size_t max_sites = 12;
  std::size_t max_sites_worst_case = 8;
};

/// Probability vector over the 2^n configurations, indexed by bitmask.
struct ExactDistribution {
  std::size_t n = 0;
  std::vector<double> p;
  double t = 0.0;
};

inline State all_ones(std::size_t n) { return n >= 32 ? ~State{0} : (State{1} << n) - 1; }

/// Product Bernoulli(rho) measure.
ExactDistribution stationary(std::size_t n, double rho, const ExactOptions& opts = {});
ExactDistribution point_mass(std::size_t n, State x, const ExactOptions& opts = {});

/// E[X_i] for every site.
std::vector<double> site_means(const ExactDistribution& mu);

/// Transition rates of the exclusion generator, stored row-wise (from-state).
/// Density may be any value in [0,1]; rho = 0 gives the absorbing Z-process.
class RateTable {
 public:
  RateTable(const Network& net, double rho, const ExactOptions& opts = {});

  std::size_t sites() const { return sites_; }
  std::size_t states() const { return offsets_.size() - 1; }
  double rho() const { return rho_; }

  std::span<const State> targets(State x) const {
    return {targets_.data() + offsets_[x], offsets_[x + 1] - offsets_[x]};
  }
  std::span<const double> rates(State x) const {
    return {rates_.data() + offsets_[x], offsets_[x + 1] - offsets_[x]};
  }
  double exit_rate(State x) const { return exit_[x]; }
  double max_exit_rate() const;

  /// Dense L(x,y) including the balancing diagonal.
  Eigen::MatrixXd dense() const;

 private:
  std::size_t sites_ = 0;
  double rho_ = 0.0;
  std::vector<std::size_t> offsets_;
  std::vector<State> targets_;
  std::vector<double> rates_;
  std::vector<double> exit_;
};

/// mu0 e^{tL} by uniformization. All terms are nonnegative, so this is the
/// route used for the non-reversible rho = 0 chain.
ExactDistribution evolve_uniformized(const RateTable& rates, const ExactDistribution& mu0, double t);

/// Generator of the exclusion process with density rho in (0,1), together
/// with the eigen-decomposition of its symmetrized form
/// D_pi^{1/2} L D_pi^{-1/2}. Immutable after construction.
class FullGenerator {
 public:
  explicit FullGenerator(const Network& net, const ExactOptions& opts = {});

  const Network& network() const { return net_; }
  const RateTable& rates() const { return rates_; }
  const ExactOptions& options() const { return opts_; }
  std::size_t sites() const { return net_.n; }
  std::size_t states() const { return rates_.states(); }
  const ExactDistribution& stationary() const { return pi_; }
  const Eigen::MatrixXd& symmetrized() const { return sym_; }
  /// Ascending eigenvalues of -symmetrized(); the first is 0.
  const Eigen::VectorXd& relaxation_rates() const { return rates_of_decay_; }

  /// Throws Error(NumericalBreakdown) if the mass defect exceeds 1e-9.
  ExactDistribution evolve(const ExactDistribution& mu0, double t) const;

  /// Row x holds P_t(x, .).
  Eigen::MatrixXd transition_matrix(double t) const;

 private:
  Network net_;
  ExactOptions opts_;
  RateTable rates_;
  ExactDistribution pi_;
  Eigen::VectorXd sqrt_pi_;
  Eigen::MatrixXd sym_;
  Eigen::VectorXd rates_of_decay_;
  Eigen::MatrixXd modes_;
};

inline FullGenerator full_generator(const Network& net, const ExactOptions& opts = {}) {
  return FullGenerator(net, opts);
}
inline ExactDistribution evolve(const FullGenerator& gen, const ExactDistribution& mu0, double t) {
  return gen.evolve(mu0, t);
}

/// Second-smallest eigenvalue of the negated generator.
double full_gap(const FullGenerator& gen);

struct DistanceReport {
  double tv = 0.0;
  double sep = 0.0;
  double kl = 0.0;
  double l2 = 0.0;
  double sup = 0.0;
};

DistanceReport distances(std::span<const double> mu, std::span<const double> pi);
inline DistanceReport distances(const ExactDistribution& mu, const ExactDistribution& pi) {
  return distances(mu.p, pi.p);
}

enum class Metric { TV, Sep, KL, L2, Sup };
enum class StartRule { XStar, WorstCase };

double metric_value(const DistanceReport& d, Metric m);
Metric parse_metric(std::string_view token);

struct ExactMixingTime {
  double time = 0.0;
  double eps = 0.0;
  Metric metric = Metric::TV;
  StartRule start = StartRule::XStar;
  double grid_min = 0.0;
  double grid_max = 0.0;
  std::size_t grid_points = 0;
  std::size_t bisection_steps = 0;
};

/// Last eps-crossing of the distance curve: a 64-point log scan up to a time
/// where the distance is below eps, then bisection inside the final crossing
/// interval. Worst-case starts are limited to max_sites_worst_case.
ExactMixingTime exact_mixing_time(const FullGenerator& gen, double eps, Metric metric, StartRule start);

/// Distance to pi at time t from x_star, or, for WorstCase, the maximum of
/// each field separately over all starts.
DistanceReport exact_distance(const FullGenerator& gen, double t, StartRule start);

/// Law of the density-0 process started from all ones (the perturbed region Z).
ExactDistribution zero_density_law(const Network& net, double t, const ExactOptions& opts = {});

/// P(T > t) for the strong stationary time T = inf{t : Z(t) = 0}.
double sst_tail_exact(const Network& net, double t, const ExactOptions& opts = {});

struct NdMoment {
  std::vector<std::size_t> subset;
  double joint = 0.0;    // E[prod_{i in S} Z_i]
  double product = 0.0;  // prod_{i in S} E[Z_i]
};

/// Exact moments of Z(t) under the density-0 dynamics from all ones.
std::vector<NdMoment> nd_moments_exact(const Network& net, double t,
                                       const std::vector<std::vector<std::size_t>>& subsets,
                                       const ExactOptions& opts = {});

/// All nonempty subsets of {0..n-1} with at most max_size elements.
std::vector<std::vector<std::size_t>> subsets_up_to(std::size_t n, std::size_t max_size);

}  // namespace resmix
