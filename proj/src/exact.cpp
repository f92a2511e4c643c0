#include "resmix/exact.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "resmix/errors.hpp"

namespace resmix {

namespace {

void check_cap(std::size_t n, std::size_t cap) {
  if (n > cap || n > 30)
    throw Error(Errc::CapExceeded, std::to_string(n) + " sites exceed the exact-engine cap of " +
                                       std::to_string(std::min<std::size_t>(cap, 30)));
}

bool bit(State x, std::size_t i) { return (x >> i) & 1U; }

}  // namespace

ExactDistribution stationary(std::size_t n, double rho, const ExactOptions& opts) {
  check_cap(n, opts.max_sites);
  if (!(rho > 0.0 && rho < 1.0)) throw Error(Errc::BadDensity, "rho must lie in (0,1)");
  ExactDistribution pi{n, std::vector<double>(std::size_t{1} << n), 0.0};
  for (State x = 0; x < pi.p.size(); ++x) {
    const auto k = static_cast<double>(std::popcount(x));
    pi.p[x] = std::pow(rho, k) * std::pow(1.0 - rho, static_cast<double>(n) - k);
  }
  return pi;
}

ExactDistribution point_mass(std::size_t n, State x, const ExactOptions& opts) {
  check_cap(n, opts.max_sites);
  ExactDistribution mu{n, std::vector<double>(std::size_t{1} << n, 0.0), 0.0};
  if (x >= mu.p.size()) throw Error(Errc::InvalidArgument, "state outside {0,1}^n");
  mu.p[x] = 1.0;
  return mu;
}

std::vector<double> site_means(const ExactDistribution& mu) {
  std::vector<double> m(mu.n, 0.0);
  for (State x = 0; x < mu.p.size(); ++x) {
    if (mu.p[x] == 0.0) continue;
    for (std::size_t i = 0; i < mu.n; ++i)
      if (bit(x, i)) m[i] += mu.p[x];
  }
  return m;
}

// ---------------------------------------------------------------------------

RateTable::RateTable(const Network& net, double rho, const ExactOptions& opts) : sites_(net.n), rho_(rho) {
  check_cap(net.n, opts.max_sites);
  if (!(rho >= 0.0 && rho <= 1.0)) throw Error(Errc::BadDensity, "rate table density must lie in [0,1]");

  struct Edge {
    State mask;
    double c;
  };
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < net.n; ++i)
    for (std::size_t j = i + 1; j < net.n; ++j)
      if (net.c(i, j) > 0.0) edges.push_back({State{1} << i | State{1} << j, net.c(i, j)});

  const std::size_t count = std::size_t{1} << net.n;
  offsets_.reserve(count + 1);
  exit_.reserve(count);
  offsets_.push_back(0);
  for (State x = 0; x < count; ++x) {
    double out = 0.0;
    for (const auto& e : edges) {
      const State both = x & e.mask;
      if (both != 0 && both != e.mask) {
        targets_.push_back(x ^ e.mask);
        rates_.push_back(e.c);
        out += e.c;
      }
    }
    for (std::size_t i = 0; i < net.n; ++i) {
      const double k = net.kappa[i];
      if (k <= 0.0) continue;
      const double r = bit(x, i) ? k * (1.0 - rho) : k * rho;
      if (r <= 0.0) continue;
      targets_.push_back(x ^ (State{1} << i));
      rates_.push_back(r);
      out += r;
    }
    offsets_.push_back(targets_.size());
    exit_.push_back(out);
  }
}

double RateTable::max_exit_rate() const { return *std::max_element(exit_.begin(), exit_.end()); }

Eigen::MatrixXd RateTable::dense() const {
  const auto count = static_cast<Eigen::Index>(states());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(count, count);
  for (State x = 0; x < states(); ++x) {
    const auto ts = targets(x);
    const auto rs = rates(x);
    for (std::size_t k = 0; k < ts.size(); ++k) l(x, ts[k]) += rs[k];
    l(x, x) -= exit_[x];
  }
  return l;
}

ExactDistribution evolve_uniformized(const RateTable& table, const ExactDistribution& mu0, double t) {
  if (!(t >= 0.0)) throw Error(Errc::InvalidArgument, "time must be >= 0");
  if (mu0.p.size() != table.states()) throw Error(Errc::InvalidArgument, "distribution size mismatch");
  ExactDistribution out{mu0.n, mu0.p, mu0.t + t};
  const double big = table.max_exit_rate();
  if (t == 0.0 || big == 0.0) return out;

  const std::size_t count = table.states();
  std::vector<double> term(count), next(count), acc(count);
  double remaining = t;
  while (remaining > 0.0) {
    // Chunks keep exp(-a) comfortably above underflow.
    const double dt = std::min(remaining, 200.0 / big);
    const double a = big * dt;
    term = out.p;
    double w = std::exp(-a);
    for (std::size_t y = 0; y < count; ++y) acc[y] = w * term[y];
    const double k_max = a + 12.0 * std::sqrt(a) + 60.0;
    for (double k = 1.0; k <= k_max; k += 1.0) {
      for (std::size_t y = 0; y < count; ++y) next[y] = term[y] * (1.0 - table.exit_rate(static_cast<State>(y)) / big);
      for (State x = 0; x < count; ++x) {
        if (term[x] == 0.0) continue;
        const auto ts = table.targets(x);
        const auto rs = table.rates(x);
        for (std::size_t e = 0; e < ts.size(); ++e) next[ts[e]] += term[x] * rs[e] / big;
      }
      term.swap(next);
      w *= a / k;
      for (std::size_t y = 0; y < count; ++y) acc[y] += w * term[y];
      // Poisson tail past k is at most w * r / (1 - r) with r = a / (k + 1).
      const double r = a / (k + 1.0);
      if (r < 1.0 && w * r / (1.0 - r) < 1e-17) break;
    }
    out.p = acc;
    remaining -= dt;
  }
  return out;
}

// ---------------------------------------------------------------------------

FullGenerator::FullGenerator(const Network& net, const ExactOptions& opts)
    : net_(net), opts_(opts), rates_(net, net.rho, opts), pi_(resmix::stationary(net.n, net.rho, opts)) {
  validate(net_);
  const auto count = static_cast<Eigen::Index>(rates_.states());
  sqrt_pi_ = Eigen::Map<const Eigen::VectorXd>(pi_.p.data(), count).cwiseSqrt();

  sym_ = Eigen::MatrixXd::Zero(count, count);
  for (State x = 0; x < rates_.states(); ++x) {
    const auto ts = rates_.targets(x);
    const auto rs = rates_.rates(x);
    for (std::size_t k = 0; k < ts.size(); ++k) sym_(x, ts[k]) = sqrt_pi_[x] * rs[k] / sqrt_pi_[ts[k]];
    sym_(x, x) = -rates_.exit_rate(x);
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(-sym_);
  if (solver.info() != Eigen::Success) throw Error(Errc::NumericalBreakdown, "generator eigensolver failed");
  rates_of_decay_ = solver.eigenvalues();
  modes_ = solver.eigenvectors();
}

ExactDistribution FullGenerator::evolve(const ExactDistribution& mu0, double t) const {
  if (!(t >= 0.0)) throw Error(Errc::InvalidArgument, "time must be >= 0");
  if (mu0.p.size() != rates_.states()) throw Error(Errc::InvalidArgument, "distribution size mismatch");
  if (t == 0.0) return mu0;

  const auto count = static_cast<Eigen::Index>(rates_.states());
  const Eigen::Map<const Eigen::VectorXd> mu(mu0.p.data(), count);
  Eigen::VectorXd coeff = modes_.transpose() * mu.cwiseQuotient(sqrt_pi_);
  coeff.array() *= (-rates_of_decay_.array() * t).exp();
  const Eigen::VectorXd evolved = sqrt_pi_.cwiseProduct(modes_ * coeff);

  double negative = 0.0;
  double mass = 0.0;
  ExactDistribution out{mu0.n, std::vector<double>(static_cast<std::size_t>(count)), mu0.t + t};
  for (Eigen::Index x = 0; x < count; ++x) {
    const double v = evolved[x];
    if (v < 0.0) negative -= v;
    out.p[static_cast<std::size_t>(x)] = std::max(v, 0.0);
    mass += out.p[static_cast<std::size_t>(x)];
  }
  const double defect = std::abs(mass - 1.0) + negative;
  if (defect > 1e-9) throw Error(Errc::NumericalBreakdown, "mass defect " + std::to_string(defect));
  for (auto& v : out.p) v /= mass;
  return out;
}

Eigen::MatrixXd FullGenerator::transition_matrix(double t) const {
  if (!(t >= 0.0)) throw Error(Errc::InvalidArgument, "time must be >= 0");
  const Eigen::VectorXd decay = (-rates_of_decay_.array() * t).exp();
  Eigen::MatrixXd p = modes_ * decay.asDiagonal() * modes_.transpose();
  p = sqrt_pi_.cwiseInverse().asDiagonal() * p * sqrt_pi_.asDiagonal();
  p = p.cwiseMax(0.0);
  const Eigen::VectorXd rows = p.rowwise().sum();
  if ((rows.array() - 1.0).abs().maxCoeff() > 1e-9)
    throw Error(Errc::NumericalBreakdown, "transition matrix rows do not sum to one");
  return rows.cwiseInverse().asDiagonal() * p;
}

double full_gap(const FullGenerator& gen) {
  const auto& r = gen.relaxation_rates();
  if (r.size() < 2) throw Error(Errc::InvalidArgument, "chain has a single state");
  return r[1];
}

// ---------------------------------------------------------------------------

DistanceReport distances(std::span<const double> mu, std::span<const double> pi) {
  if (mu.size() != pi.size()) throw Error(Errc::InvalidArgument, "distribution size mismatch");
  DistanceReport d;
  d.sep = -std::numeric_limits<double>::infinity();
  double l2sq = 0.0;
  for (std::size_t x = 0; x < mu.size(); ++x) {
    if (!(pi[x] > 0.0)) throw Error(Errc::InvalidArgument, "reference measure must be strictly positive");
    const double ratio = mu[x] / pi[x];
    d.tv += std::abs(mu[x] - pi[x]);
    d.sep = std::max(d.sep, 1.0 - ratio);
    if (mu[x] > 0.0) d.kl += mu[x] * std::log(ratio);
    l2sq += (mu[x] - pi[x]) * (mu[x] - pi[x]) / pi[x];
    d.sup = std::max(d.sup, std::abs(ratio - 1.0));
  }
  d.tv *= 0.5;
  d.tv = std::min(d.tv, 1.0);
  d.sep = std::clamp(d.sep, 0.0, 1.0);
  d.kl = std::max(d.kl, 0.0);
  d.l2 = std::sqrt(l2sq);
  return d;
}

double metric_value(const DistanceReport& d, Metric m) {
  switch (m) {
    case Metric::TV: return d.tv;
    case Metric::Sep: return d.sep;
    case Metric::KL: return d.kl;
    case Metric::L2: return d.l2;
    case Metric::Sup: return d.sup;
  }
  return d.tv;
}

Metric parse_metric(std::string_view token) {
  if (token == "tv") return Metric::TV;
  if (token == "sep") return Metric::Sep;
  if (token == "kl") return Metric::KL;
  if (token == "l2") return Metric::L2;
  if (token == "sup") return Metric::Sup;
  throw Error(Errc::InvalidArgument, "unknown metric '" + std::string(token) + "'");
}

DistanceReport exact_distance(const FullGenerator& gen, double t, StartRule start) {
  const auto& pi = gen.stationary();
  if (start == StartRule::XStar) {
    const State xs = gen.network().x_star_is_ones() ? all_ones(gen.sites()) : State{0};
    return distances(gen.evolve(point_mass(gen.sites(), xs, gen.options()), t), pi);
  }
  check_cap(gen.sites(), gen.options().max_sites_worst_case);
  const Eigen::MatrixXd p = gen.transition_matrix(t);
  DistanceReport worst;
  std::vector<double> row(static_cast<std::size_t>(p.cols()));
  for (Eigen::Index x = 0; x < p.rows(); ++x) {
    for (Eigen::Index y = 0; y < p.cols(); ++y) row[static_cast<std::size_t>(y)] = p(x, y);
    const auto d = distances(row, pi.p);
    worst.tv = std::max(worst.tv, d.tv);
    worst.sep = std::max(worst.sep, d.sep);
    worst.kl = std::max(worst.kl, d.kl);
    worst.l2 = std::max(worst.l2, d.l2);
    worst.sup = std::max(worst.sup, d.sup);
  }
  return worst;
}

ExactMixingTime exact_mixing_time(const FullGenerator& gen, double eps, Metric metric, StartRule start) {
  if (!(eps > 0.0)) throw Error(Errc::InvalidArgument, "eps must be positive");
  if (start == StartRule::WorstCase) check_cap(gen.sites(), gen.options().max_sites_worst_case);

  auto dist = [&](double t) { return metric_value(exact_distance(gen, t, start), metric); };

  ExactMixingTime out;
  out.eps = eps;
  out.metric = metric;
  out.start = start;
  if (dist(0.0) <= eps) return out;

  const double gap = full_gap(gen);
  double t_hi = 1.0 / gap;
  for (int k = 0; dist(t_hi) > eps; ++k) {
    if (k >= 200) throw Error(Errc::NoConvergence, "distance did not fall below eps");
    t_hi *= 2.0;
  }

  constexpr std::size_t points = 64;
  const double t_lo = t_hi * 1e-4;
  out.grid_min = t_lo;
  out.grid_max = t_hi;
  out.grid_points = points;
  std::vector<double> grid(points);
  for (std::size_t j = 0; j < points; ++j)
    grid[j] = t_lo * std::pow(t_hi / t_lo, static_cast<double>(j) / static_cast<double>(points - 1));
  grid.back() = t_hi;

  double lo = 0.0;
  double hi = grid.front();
  for (std::size_t j = points - 1; j-- > 0;) {
    if (dist(grid[j]) > eps) {
      lo = grid[j];
      hi = grid[j + 1];
      break;
    }
  }
  // If no scanned point exceeds eps, the crossing lies in [0, grid.front()].
  while (hi - lo > 1e-12 * hi && out.bisection_steps < 200) {
    const double mid = 0.5 * (lo + hi);
    if (dist(mid) > eps) lo = mid;
    else hi = mid;
    ++out.bisection_steps;
  }
  out.time = hi;
  return out;
}

// ---------------------------------------------------------------------------

ExactDistribution zero_density_law(const Network& net, double t, const ExactOptions& opts) {
  const RateTable table(net, 0.0, opts);
  return evolve_uniformized(table, point_mass(net.n, all_ones(net.n), opts), t);
}

double sst_tail_exact(const Network& net, double t, const ExactOptions& opts) {
  return std::clamp(1.0 - zero_density_law(net, t, opts).p[0], 0.0, 1.0);
}

std::vector<NdMoment> nd_moments_exact(const Network& net, double t,
                                       const std::vector<std::vector<std::size_t>>& subsets,
                                       const ExactOptions& opts) {
  const auto law = zero_density_law(net, t, opts);
  const auto means = site_means(law);
  std::vector<NdMoment> out;
  out.reserve(subsets.size());
  for (const auto& s : subsets) {
    State mask = 0;
    double product = 1.0;
    for (std::size_t i : s) {
      if (i >= net.n) throw Error(Errc::InvalidArgument, "subset vertex out of range");
      mask |= State{1} << i;
    }
    for (std::size_t i = 0; i < net.n; ++i)
      if (bit(mask, i)) product *= means[i];
    double joint = 0.0;
    for (State x = 0; x < law.p.size(); ++x)
      if ((x & mask) == mask) joint += law.p[x];
    out.push_back({s, joint, product});
  }
  return out;
}

std::vector<std::vector<std::size_t>> subsets_up_to(std::size_t n, std::size_t max_size) {
  std::vector<std::vector<std::size_t>> out;
  for (State mask = 1; mask < (State{1} << n); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) > max_size) continue;
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < n; ++i)
      if (bit(mask, i)) s.push_back(i);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace resmix
