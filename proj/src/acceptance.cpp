#include "resmix/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include "resmix/bounds.hpp"
#include "resmix/errors.hpp"
#include "resmix/exact.hpp"
#include "resmix/mcsim.hpp"
#include "resmix/network.hpp"
#include "resmix/report.hpp"
#include "resmix/spectral.hpp"

namespace resmix {

namespace {

constexpr double kRhos[] = {0.2, 0.37, 0.5};

std::vector<Network> battery(std::uint64_t seed, std::size_t count, std::size_t max_n) {
  std::mt19937_64 rng(seed);
  std::vector<Network> out;
  for (std::size_t k = 0; k < count; ++k)
    out.push_back(random_network(rng, 1 + k % max_n, kRhos[k % 3]));
  return out;
}

std::size_t battery_size(const BatteryOptions& o) { return o.quick ? 12 : 50; }

std::vector<double> log_grid(double lo, double hi, std::size_t m) {
  std::vector<double> g(m);
  for (std::size_t k = 0; k < m; ++k)
    g[k] = lo * std::pow(hi / lo, static_cast<double>(k) / static_cast<double>(m - 1));
  return g;
}

Spectrum spectrum_of(const Network& net) { return spectrum(build_laplace(net)); }

/// Tracks the worst observed margin of a family of inequalities.
struct Margin {
  double worst = std::numeric_limits<double>::infinity();
  std::string where;

  void see(double margin, const std::string& ctx) {
    if (margin < worst) {
      worst = margin;
      where = ctx;
    }
  }
};

std::string ctx(std::size_t k, const Network& net, double t) {
  std::ostringstream os;
  os << "net#" << k << " n=" << net.n << " rho=" << net.rho << " t=" << format_double(t);
  return os.str();
}

std::string sci(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

using Check = std::function<void(CriterionResult&, const BatteryOptions&)>;

void gap_identity(CriterionResult& r, const BatteryOptions& o) {
  const auto nets = battery(o.seed, battery_size(o), 5);
  double worst = 0.0;
  std::string where;
  for (std::size_t k = 0; k < nets.size(); ++k) {
    const double gap = full_gap(FullGenerator(nets[k]));
    const double lambda = spectrum_of(nets[k]).lambda();
    const double err = std::abs(gap - lambda);
    if (err > worst || where.empty()) {
      worst = err;
      where = ctx(k, nets[k], 0.0);
    }
  }
  r.passed = worst <= 1e-9;
  r.detail = std::to_string(nets.size()) + " networks, max |gap - lambda| = " + sci(worst) + " (" + where + ")";
}

void distance_sandwich(CriterionResult& r, const BatteryOptions& o) {
  const auto nets = battery(o.seed + 1, battery_size(o), 8);
  Margin tv, l2;
  for (std::size_t k = 0; k < nets.size(); ++k) {
    const FullGenerator gen(nets[k]);
    const auto spec = spectrum_of(nets[k]);
    const double lam = spec.lambda();
    for (double t : log_grid(1e-3 / lam, 10.0 * (1.0 + std::log(static_cast<double>(nets[k].n))) / lam, 40)) {
      const auto b = distance_bounds(spec, nets[k].rho, t);
      tv.see(exact_distance(gen, t, StartRule::XStar).tv - b.tv_lower, ctx(k, nets[k], t));
      l2.see(b.l2_upper - exact_distance(gen, t, StartRule::WorstCase).l2, ctx(k, nets[k], t));
    }
  }
  r.passed = tv.worst >= -1e-9 && l2.worst >= -1e-9;
  r.detail = "min(tv - tv_lower) = " + sci(tv.worst) + " at " + tv.where + "; min(l2_upper - l2) = " +
             sci(l2.worst) + " at " + l2.where;
}

void separation_sandwich(CriterionResult& r, const BatteryOptions& o) {
  const auto nets = battery(o.seed + 1, battery_size(o), 8);
  Margin sep, sup;
  double sst_err = 0.0;
  std::string sst_where = "-";
  for (std::size_t k = 0; k < nets.size(); ++k) {
    const auto& net = nets[k];
    const FullGenerator gen(net);
    const auto spec = spectrum_of(net);
    const auto ones = point_mass(net.n, all_ones(net.n));
    const auto zeros = point_mass(net.n, 0);
    const double lam = spec.lambda();
    for (double t : log_grid(1e-3 / lam, 10.0 * (1.0 + std::log(static_cast<double>(net.n))) / lam, 40)) {
      const auto b = distance_bounds(spec, net.rho, t);
      sep.see(exact_distance(gen, t, StartRule::XStar).sep - b.sep_lower, ctx(k, net, t));
      sup.see(b.sup_upper - exact_distance(gen, t, StartRule::WorstCase).sup, ctx(k, net, t));
      const double tail = sst_tail_exact(net, t);
      for (const auto* mu0 : {&ones, &zeros}) {
        const double err = std::abs(distances(gen.evolve(*mu0, t), gen.stationary()).sep - tail);
        if (err > sst_err) {
          sst_err = err;
          sst_where = ctx(k, net, t);
        }
      }
    }
  }
  r.passed = sep.worst >= -1e-9 && sup.worst >= -1e-9 && sst_err <= 1e-9;
  r.detail = "min(sep - sep_lower) = " + sci(sep.worst) + "; min(sup_upper - sup) = " + sci(sup.worst) +
             "; max |sep(1 or 0) - P(T>t)| = " + sci(sst_err) + " at " + sst_where;
}

std::vector<std::vector<std::size_t>> box_family(bool quick) {
  std::vector<std::vector<std::size_t>> dims;
  std::vector<std::size_t> line;
  for (std::size_t n = 1; n <= (quick ? 16U : 40U); ++n) line.push_back(n);
  for (std::size_t n : {48, 64, 100, 128, 200, 255, 256, 300, 400, 511, 512})
    if (!quick || n <= 128) line.push_back(n);
  for (std::size_t n : line) dims.push_back({n});

  const std::vector<std::size_t> plane = quick ? std::vector<std::size_t>{1, 2, 3, 5, 8}
                                               : std::vector<std::size_t>{1, 2, 3, 4, 5, 6, 7, 8, 11, 16, 32};
  for (std::size_t a : plane)
    for (std::size_t b : plane)
      if (a * b <= 512) dims.push_back({a, b});

  const std::vector<std::size_t> solid = quick ? std::vector<std::size_t>{1, 2, 3} : std::vector<std::size_t>{1, 2, 3, 5, 8};
  for (std::size_t a : solid)
    for (std::size_t b : solid)
      for (std::size_t c : solid)
        if (a * b * c <= 512) dims.push_back({a, b, c});

  if (!quick)
    for (std::size_t a : {1, 2, 3})
      for (std::size_t b : {1, 2, 3})
        for (std::size_t c : {2, 4})
          for (std::size_t d : {2, 4}) dims.push_back({a, b, c, d});
  return dims;
}

void box_closed_forms(CriterionResult& r, const BatteryOptions& o) {
  double lam_err = 0.0, vec_err = 0.0;
  std::string lam_where = "-", vec_where = "-";
  std::size_t boxes = 0, tensor_failures = 0, window_failures = 0;
  for (const auto& dims : box_family(o.quick)) {
    const std::size_t d = dims.size();
    for (std::size_t mix = 0; mix < (std::size_t{1} << d); ++mix) {
      std::vector<Boundary> bd(d);
      std::ostringstream label;
      for (std::size_t k = 0; k < d; ++k) {
        bd[k] = (mix >> k) & 1 ? Boundary::SemiOpen : Boundary::Open;
        label << (k ? "x" : "") << dims[k];
      }
      label << " mix=" << mix;
      ++boxes;

      const auto net = build_box(dims, bd, 0.5);
      const auto lap = build_laplace(net);
      const auto spec = spectrum(lap);
      const auto closed = box_eigenpair(dims, bd);
      const double le = std::abs(closed.lambda - spec.lambda());
      if (le > lam_err) {
        lam_err = le;
        lam_where = label.str();
      }
      // Residual of the closed-form pair, and distance to the numeric Perron vector.
      const double res = ((-lap.values) * closed.psi - closed.lambda * closed.psi).lpNorm<Eigen::Infinity>();
      const double diff = (closed.psi - spec.perron()).lpNorm<Eigen::Infinity>();
      const double ve = std::max(res, spec.perron_degenerate ? 0.0 : diff);
      if (ve > vec_err) {
        vec_err = ve;
        vec_where = label.str();
      }

      if (d >= 2) {
        const std::vector<std::size_t> head(dims.begin(), dims.begin() + 1), tail(dims.begin() + 1, dims.end());
        const std::vector<Boundary> bh(bd.begin(), bd.begin() + 1), bt(bd.begin() + 1, bd.end());
        const auto a = build_laplace(build_box(head, bh, 0.5)).values;
        const auto b = build_laplace(build_box(tail, bt, 0.5)).values;
        if (kron_sum(a, b) != lap.values) ++tensor_failures;
      }
      const auto win = ambient_window(dims, bd);
      if (!same_structure(induced_network(win.adjacency, win.box_vertices, 0.5), net)) ++window_failures;
    }
  }
  r.passed = lam_err <= 1e-9 && vec_err <= 1e-8 && tensor_failures == 0 && window_failures == 0;
  r.detail = std::to_string(boxes) + " boxes; max lambda err " + sci(lam_err) + " (" + lam_where +
             "); max vector err " + sci(vec_err) + " (" + vec_where + "); tensorization mismatches " +
             std::to_string(tensor_failures) + "; lattice-window mismatches " + std::to_string(window_failures);
}

void marginal_ode(CriterionResult& r, const BatteryOptions& o) {
  const auto nets = battery(o.seed + 1, battery_size(o), 8);
  constexpr double h = 1e-4;
  std::mt19937_64 rng(o.seed + 5);
  double worst = 0.0;
  std::string where = "-";
  for (std::size_t k = 0; k < nets.size(); ++k) {
    const auto& net = nets[k];
    const FullGenerator gen(net);
    const Eigen::MatrixXd delta = build_laplace(net).values;
    const State xstar = net.x_star_is_ones() ? all_ones(net.n) : 0;
    const State other = static_cast<State>(std::uniform_int_distribution<std::uint64_t>(0, all_ones(net.n))(rng));
    for (State x0 : {xstar, other}) {
      const auto mu0 = point_mass(net.n, x0);
      auto mean_at = [&](double t) {
        const auto m = site_means(gen.evolve(mu0, t));
        return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size())));
      };
      for (double t : {0.1, 0.7, 2.0}) {
        const Eigen::VectorXd fd =
            (-mean_at(t + 2 * h) + 8.0 * mean_at(t + h) - 8.0 * mean_at(t - h) + mean_at(t - 2 * h)) / (12.0 * h);
        const Eigen::VectorXd rhs = delta * (mean_at(t).array() - net.rho).matrix();
        const double err = (fd - rhs).lpNorm<Eigen::Infinity>();
        if (err > worst) {
          worst = err;
          where = ctx(k, net, t);
        }
      }
    }
  }
  r.passed = worst <= 1e-6;
  r.detail = "max |d/dt m - Delta(m - rho)| = " + sci(worst) + " at " + where;
}

void negative_dependence(CriterionResult& r, const BatteryOptions& o) {
  const auto nets = battery(o.seed + 1, battery_size(o), 8);
  double worst = -std::numeric_limits<double>::infinity();
  double worst_pair = -std::numeric_limits<double>::infinity();
  std::string where = "-";
  std::size_t checks = 0;
  for (std::size_t k = 0; k < nets.size(); ++k) {
    const auto subsets = subsets_up_to(nets[k].n, 3);
    for (double t : {0.1, 0.7, 2.0})
      for (const auto& m : nd_moments_exact(nets[k], t, subsets)) {
        ++checks;
        worst = std::max(worst, m.joint - m.product);
        if (m.subset.size() >= 2 && m.joint - m.product > worst_pair) {
          worst_pair = m.joint - m.product;
          where = ctx(k, nets[k], t);
        }
      }
  }
  r.passed = worst <= 1e-10;
  r.detail = std::to_string(checks) + " subset moments; max(joint - product) = " + sci(worst) +
             ", over |S| >= 2: " + sci(worst_pair) + " at " + where;
}

/// |estimate - exact| within 4 standard errors.
struct SigmaLog {
  bool ok = true;
  double worst = 0.0;
  std::string where = "-";
  std::size_t checks = 0;

  void see(double estimate, double exact, double se, const std::string& what) {
    ++checks;
    const double z = se > 0.0 ? std::abs(estimate - exact) / se : (estimate == exact ? 0.0 : 1e300);
    if (z > worst) {
      worst = z;
      where = what;
    }
    if (z > 4.0) ok = false;
  }
};

double binomial_se(double p, std::size_t trials) { return std::sqrt(p * (1.0 - p) / static_cast<double>(trials)); }

void monte_carlo(CriterionResult& r, const BatteryOptions& o) {
  const std::size_t trials = o.quick ? 20000 : 100000;
  const std::uint64_t seed = o.seed + 7;
  SigmaLog log;
  bool structural = true;
  bool identical = true;

  // Killed walk against the spectral survival vector.
  const std::size_t three[] = {3};
  const Boundary open[] = {Boundary::Open};
  const auto path3 = build_box(three, open, 0.5);
  {
    const double exact = survival_vector(spectrum_of(path3), 1.0)[1];
    const auto est = killed_walk_survival(path3, 1, 1.0, trials, seed);
    log.see(est.value, exact, binomial_se(exact, trials), "killed walk path3 centre t=1");
  }
  const auto mixed = battery(o.seed + 11, 4, 4).back();
  {
    const auto z = survival_vector(spectrum_of(mixed), 0.8);
    for (std::size_t i = 0; i < mixed.n; ++i) {
      const auto est = killed_walk_survival(mixed, i, 0.8, trials, seed + i);
      log.see(est.value, z[static_cast<Eigen::Index>(i)], binomial_se(z[static_cast<Eigen::Index>(i)], trials),
              "killed walk random n=4 start " + std::to_string(i));
    }
  }

  // Coupled processes: Z marginals, E|Z(t)|, X* marginals, coupling identity.
  const double times[] = {0.3, 1.0};
  for (const auto& net : {path3, mixed}) {
    const auto spec = spectrum_of(net);
    const Bits ones(net.n, 1), zeros(net.n, 0);
    for (const auto& x0 : {ones, zeros}) {
      const auto stats = coupled_statistics(net, x0, times, trials, seed + 100);
      structural = structural && stats.coupling_always_held && stats.y_matches_expected;
      for (std::size_t k = 0; k < 2; ++k) {
        const auto z = survival_vector(spec, times[k]);
        for (std::size_t i = 0; i < net.n; ++i) {
          const double zi = z[static_cast<Eigen::Index>(i)];
          log.see(stats.z[k][i].value, zi, binomial_se(zi, trials), "Z marginal n=" + std::to_string(net.n));
          log.see(stats.xstar[k][i].value, net.rho, binomial_se(net.rho, trials), "X* marginal");
        }
        log.see(stats.z_count[k].value, survival_norm2(spec, 0.5 * times[k]), stats.z_count[k].std_error,
                "E|Z(t)| n=" + std::to_string(net.n) + " t=" + format_double(times[k]));
      }
    }
  }

  // Strong stationary time tail against the exact rho = 0 law.
  const std::size_t two[] = {2};
  const auto path2 = build_box(two, open, 0.5);
  for (const auto& net : {path2, mixed}) {
    const auto sample = sample_sst(net, trials, seed + 200);
    for (double t : {0.5, 1.0, 2.0}) {
      const double exact = sst_tail_exact(net, t);
      log.see(sample.survival(t).value, exact, binomial_se(exact, trials),
              "SST n=" + std::to_string(net.n) + " t=" + format_double(t));
    }
  }

  // Seeded reruns, including a different worker count.
  {
    SimOptions one, four;
    one.threads = 1;
    four.threads = 4;
    const std::size_t n = std::min<std::size_t>(trials, 20000);
    identical = sample_sst(mixed, n, seed, one).values == sample_sst(mixed, n, seed, four).values;
    const auto a = coupled_statistics(mixed, Bits(mixed.n, 1), times, n, seed, one);
    const auto b = coupled_statistics(mixed, Bits(mixed.n, 1), times, n, seed, four);
    for (std::size_t k = 0; k < 2; ++k) {
      identical = identical && a.z_count[k].value == b.z_count[k].value;
      for (std::size_t i = 0; i < mixed.n; ++i)
        identical = identical && a.x[k][i].value == b.x[k][i].value && a.z[k][i].value == b.z[k][i].value;
    }
  }

  r.passed = log.ok && structural && identical;
  r.detail = std::to_string(log.checks) + " checks at " + std::to_string(trials) + " trials, worst " +
             format_double(std::round(log.worst * 100) / 100) + " sigma (" + log.where + "); coupling " +
             (structural ? "held" : "VIOLATED") + "; reruns " + (identical ? "bit-identical" : "DIFFER");
}

void window_bound(CriterionResult& r, const BatteryOptions& o) {
  const auto nets = battery(o.seed + 1, battery_size(o), 8);
  double worst = std::numeric_limits<double>::infinity();
  std::string where = "-";
  for (std::size_t k = 0; k < nets.size(); ++k) {
    const auto spec = spectrum_of(nets[k]);
    for (double eps : {0.1, 0.25}) {
      const auto w = mixing_window(spec, nets[k].rho, eps);
      const double slack = (w.width_bound - w.width) / w.width_bound;
      if (slack < worst) {
        worst = slack;
        where = ctx(k, nets[k], 0.0) + " eps=" + format_double(eps);
      }
    }
  }
  r.passed = worst >= 0.0;
  r.detail = "min relative slack (bound - width)/bound = " + format_double(worst) + " at " + where;
}

void trend(CriterionResult& r, const BatteryOptions&) {
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  bool ok = true;
  std::ostringstream os;
  os.precision(4);
  for (Boundary b : {Boundary::SemiOpen, Boundary::Open}) {
    os << to_string(b) << ":";
    double prev_gap = std::numeric_limits<double>::infinity();
    for (std::size_t n : {8, 16, 32, 64, 128}) {
      const std::size_t dims[] = {n};
      const Boundary bd[] = {b};
      const double t = tv_mix_upper(spectrum_of(build_box(dims, bd, 0.5)), 0.5, 0.25).bisection;
      const double nn = static_cast<double>(n);
      const double ref = b == Boundary::SemiOpen ? 2.0 * nn * nn * std::log(nn) / pi2 : nn * nn * std::log(nn) / (2.0 * pi2);
      const double ratio = t / ref;
      const double gap = std::abs(ratio - 1.0);
      ok = ok && ratio >= 0.5 && ratio <= 2.0 && gap < prev_gap;
      prev_gap = gap;
      os << " " << n << "->" << ratio;
    }
    os << "; ";
  }
  r.passed = ok;
  r.detail = os.str() + "eps=1/4, rho=1/2; required: ratios in [0.5, 2] approaching 1 monotonically";
}

void product_condition(CriterionResult& r, const BatteryOptions&) {
  std::vector<Spectrum> seq;
  for (std::size_t n : {2, 4, 8, 16, 32}) {
    const std::size_t dims[] = {n};
    const Boundary bd[] = {Boundary::Open};
    seq.push_back(spectrum_of(build_box(dims, bd, 0.5)));
  }
  const auto c = cutoff_check(seq, 0.5, 0.25);
  std::ostringstream os;
  os.precision(5);
  os << "lambda*t_upper(1/4):";
  for (double v : c.product_values) os << " " << v;
  r.passed = c.strictly_increasing;
  r.detail = os.str();
}

struct Entry {
  const char* name;
  Check run;
  double limit_seconds;  // 0 = no limit
};

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      {"gap identity", gap_identity, 10},
      {"distance sandwich (tv, l2)", distance_sandwich, 120},
      {"separation sandwich and strong stationary time", separation_sandwich, 0},
      {"box closed forms and tensorization", box_closed_forms, 30},
      {"single-site marginal ODE", marginal_ode, 0},
      {"negative dependence of exact moments", negative_dependence, 0},
      {"Monte Carlo consistency", monte_carlo, 120},
      {"mixing-window width bound", window_bound, 0},
      {"1D mixing-time trend", trend, 30},
      {"product-condition growth", product_condition, 0},
  };
  return table;
}

}  // namespace

int criterion_count() { return static_cast<int>(entries().size()); }

std::string criterion_name(int id) {
  if (id < 1 || id > criterion_count()) throw Error(Errc::InvalidArgument, "no criterion " + std::to_string(id));
  return entries()[static_cast<std::size_t>(id - 1)].name;
}

CriterionResult run_criterion(int id, const BatteryOptions& opts) {
  const auto& e = entries().at(static_cast<std::size_t>(id - 1));
  CriterionResult r;
  r.id = id;
  r.name = e.name;
  const auto start = std::chrono::steady_clock::now();
  try {
    e.run(r, opts);
  } catch (const std::exception& ex) {
    r.passed = false;
    r.detail = std::string("exception: ") + ex.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!opts.quick && e.limit_seconds > 0 && r.seconds > e.limit_seconds) {
    r.passed = false;
    r.detail += "; runtime " + format_double(r.seconds) + " s over the " + format_double(e.limit_seconds) + " s limit";
  }
  return r;
}

std::vector<CriterionResult> run_battery(const BatteryOptions& opts) {
  std::vector<CriterionResult> out;
  for (int id = 1; id <= criterion_count(); ++id)
    if (opts.only.empty() || std::find(opts.only.begin(), opts.only.end(), id) != opts.only.end())
      out.push_back(run_criterion(id, opts));
  return out;
}

}  // namespace resmix
