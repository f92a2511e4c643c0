#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "resmix/acceptance.hpp"
#include "resmix/bounds.hpp"
#include "resmix/errors.hpp"
#include "resmix/exact.hpp"
#include "resmix/mcsim.hpp"
#include "resmix/network.hpp"
#include "resmix/report.hpp"
#include "resmix/spectral.hpp"

using namespace resmix;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kCap = 2;
constexpr int kVerifyFailed = 3;

struct Config {
  std::string net_path;
  std::string box;
  std::string boundary = "open";
  std::optional<double> rho;
  double eps = 0.25;
  std::optional<double> t_min, t_max;
  std::size_t points = 0;
  std::string spacing = "linear";
  std::vector<double> times;
  std::size_t trials = 10000;
  std::uint64_t seed = 1;
  std::string out;
  std::string format = "csv";
  // command-specific
  std::string sizes;
  std::string start = "xstar";
  std::string x0 = "ones";
  std::size_t vertex = 0;
  bool quick = false;
  std::vector<int> only;
  std::string metric = "tv";
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

std::size_t parse_size(const std::string& s, const char* what) {
  std::size_t pos = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty() || v == 0)
    throw Error(Errc::ParseError, std::string("bad ") + what + " '" + s + "'");
  return v;
}

struct BoxSpec {
  std::vector<std::size_t> dims;
  std::vector<Boundary> boundary;
};

BoxSpec parse_box(const std::string& box, const std::string& boundary) {
  BoxSpec spec;
  for (const auto& tok : split(box, 'x')) spec.dims.push_back(parse_size(tok, "box side"));
  if (spec.dims.empty()) throw Error(Errc::ParseError, "empty box spec");
  for (const auto& tok : split(boundary, ',')) spec.boundary.push_back(parse_boundary(tok));
  if (spec.boundary.size() != 1 && spec.boundary.size() != spec.dims.size())
    throw Error(Errc::InvalidArgument, "boundary needs one tag or one per axis");
  if (spec.boundary.size() == 1) spec.boundary.assign(spec.dims.size(), spec.boundary.front());
  return spec;
}

struct Source {
  Network net;
  std::optional<BoxSpec> box;
};

Source load_source(const Config& c) {
  if (c.net_path.empty() == c.box.empty()) throw Error(Errc::InvalidArgument, "give exactly one of --net or --box");
  if (c.rho && !(*c.rho > 0.0 && *c.rho < 1.0)) throw Error(Errc::BadDensity, "rho must lie in (0,1)");
  Source s;
  if (!c.box.empty()) {
    s.box = parse_box(c.box, c.boundary);
    s.net = build_box(s.box->dims, s.box->boundary, c.rho.value_or(0.5));
  } else {
    s.net = load_network_file(c.net_path);
    if (c.rho) {
      s.net.rho = *c.rho;
      validate(s.net);
    }
  }
  return s;
}

/// Explicit --t list, else the min/max/points grid, else the fallback.
std::vector<double> time_grid(const Config& c, double fallback_max) {
  if (!c.times.empty()) {
    for (double t : c.times)
      if (!(t >= 0.0)) throw Error(Errc::InvalidArgument, "times must be >= 0");
    return c.times;
  }
  const double lo = c.t_min.value_or(c.spacing == "log" ? fallback_max * 1e-3 : 0.0);
  const double hi = c.t_max.value_or(fallback_max);
  const std::size_t m = c.points ? c.points : 41;
  if (!(lo >= 0.0)) throw Error(Errc::InvalidArgument, "grid minimum must be >= 0");
  if (!(hi >= lo)) throw Error(Errc::InvalidArgument, "grid maximum must be >= minimum");
  if (m < 2) throw Error(Errc::InvalidArgument, "grid needs at least 2 points");
  std::vector<double> g(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double f = static_cast<double>(k) / static_cast<double>(m - 1);
    if (c.spacing == "log") {
      if (!(lo > 0.0)) throw Error(Errc::InvalidArgument, "log grid needs a positive minimum");
      g[k] = lo * std::pow(hi / lo, f);
    } else if (c.spacing == "linear") {
      g[k] = lo + (hi - lo) * f;
    } else {
      throw Error(Errc::InvalidArgument, "spacing must be log or linear");
    }
  }
  return g;
}

/// Rewrites CSV text as a JSON array of row objects.
json csv_to_json(const std::string& csv) {
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  const auto header = split(line, ',');
  json rows = json::array();
  while (std::getline(is, line)) {
    json row;
    const auto cells = split(line, ',');
    for (std::size_t k = 0; k < header.size() && k < cells.size(); ++k) {
      if (cells[k] == "true" || cells[k] == "false") row[header[k]] = cells[k] == "true";
      else row[header[k]] = std::stod(cells[k]);
    }
    rows.push_back(row);
  }
  return rows;
}

void emit(const Config& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(c.out);
  if (!f) throw Error(Errc::InvalidArgument, "cannot write " + c.out);
  f << text;
}

void emit_table(const Config& c, const std::string& csv) {
  if (c.format == "csv") emit(c, csv);
  else if (c.format == "json") emit(c, csv_to_json(csv).dump(2) + "\n");
  else throw Error(Errc::InvalidArgument, "format must be csv or json");
}

void emit_json(const Config& c, const json& j) {
  if (c.format != "json" && c.format != "csv") throw Error(Errc::InvalidArgument, "format must be csv or json");
  emit(c, j.dump(2) + "\n");
}

int cmd_gap(const Config& c) {
  const auto src = load_source(c);
  const auto spec = spectrum(build_laplace(src.net));
  json j{{"n", src.net.n},
         {"lambda", spec.lambda()},
         {"psi", to_json(spec.perron())},
         {"overlap", spec.perron_overlap()},
         {"quasi_stationary", to_json(spec.quasi_stationary())},
         {"perron_degenerate", spec.perron_degenerate}};
  if (src.box) {
    const auto closed = box_eigenpair(src.box->dims, src.box->boundary);
    j["closed_form"] = {{"lambda", closed.lambda},
                        {"psi", to_json(closed.psi)},
                        {"overlap", std::pow(closed.psi.sum(), 2)}};
  }
  emit_json(c, j);
  return kOk;
}

int cmd_bounds(const Config& c) {
  const auto src = load_source(c);
  const auto spec = spectrum(build_laplace(src.net));
  const auto times = time_grid(c, 2.0 * tv_mix_upper(spec, src.net.rho, 0.25).bisection + 1.0 / spec.lambda());
  std::vector<BoundReport> rows;
  for (double t : times) rows.push_back(distance_bounds(spec, src.net.rho, t));
  emit_table(c, bounds_csv(rows));
  return kOk;
}

int cmd_survival(const Config& c) {
  const auto src = load_source(c);
  const auto spec = spectrum(build_laplace(src.net));
  const auto times = time_grid(c, 3.0 / spec.lambda());
  emit_table(c, survival_csv(survival(spec, times)));
  return kOk;
}

StartRule parse_start(const std::string& s) {
  if (s == "xstar") return StartRule::XStar;
  if (s == "worst") return StartRule::WorstCase;
  throw Error(Errc::InvalidArgument, "start must be xstar or worst");
}

int cmd_exact(const Config& c) {
  const auto src = load_source(c);
  const FullGenerator gen(src.net);
  const auto start = parse_start(c.start);
  const auto times = time_grid(c, 3.0 / full_gap(gen));
  std::vector<ExactCurveRow> rows;
  for (double t : times) rows.push_back({t, exact_distance(gen, t, start)});
  emit_table(c, exact_csv(rows));
  return kOk;
}

int cmd_mix(const Config& c) {
  if (!(c.eps > 0.0 && c.eps < 1.0)) throw Error(Errc::InvalidArgument, "eps must lie in (0,1)");
  const auto src = load_source(c);
  const auto& net = src.net;
  const auto spec = spectrum(build_laplace(net));
  const auto up = tv_mix_upper(spec, net.rho, c.eps);
  const auto lo = tv_mix_lower(spec, c.eps);
  json j{{"n", net.n},
         {"rho", net.rho},
         {"eps", c.eps},
         {"lambda", spec.lambda()},
         {"overlap", spec.perron_overlap()},
         {"upper_closed", up.closed_form},
         {"upper_bisect", up.bisection},
         {"lower_closed", lo.closed_form},
         {"lower_bisect", lo.bisection},
         {"window_bound", 3.0 / (c.eps * net.rho_star() * spec.lambda())}};
  if (c.eps < 0.5) j["window"] = to_json(mixing_window(spec, net.rho, c.eps));
  if (src.box) {
    const auto closed = box_eigenpair(src.box->dims, src.box->boundary);
    const double ov = std::pow(closed.psi.sum(), 2);
    const double n = static_cast<double>(net.n);
    j["closed_form"] = {{"lambda", closed.lambda},
                        {"overlap", ov},
                        {"upper", std::max(0.0, (std::log(n) - std::log(net.rho_star() * std::log1p(4 * c.eps * c.eps))) /
                                                    (2.0 * closed.lambda))},
                        {"lower", std::max(0.0, (std::log(ov) - std::log(4.0 / (1.0 - c.eps))) / (2.0 * closed.lambda))}};
  }
  try {
    const FullGenerator gen(net);
    json exact{{"x_star", to_json(exact_mixing_time(gen, c.eps, parse_metric(c.metric), StartRule::XStar))}};
    if (net.n <= gen.options().max_sites_worst_case)
      exact["worst_case"] = to_json(exact_mixing_time(gen, c.eps, parse_metric(c.metric), StartRule::WorstCase));
    j["exact"] = exact;
  } catch (const Error& e) {
    if (e.code() != Errc::CapExceeded) throw;
    std::cerr << "warning: exact engine skipped: " << e.what() << "\n";
  }
  emit_json(c, j);
  return kOk;
}

int cmd_profile(const Config& c) {
  if (c.sizes.empty()) throw Error(Errc::InvalidArgument, "profile needs --sizes");
  if (!c.net_path.empty()) throw Error(Errc::InvalidArgument, "profile sweeps boxes; use --box for the dimension count");
  const auto bounds = split(c.boundary, ',');
  const std::size_t d = c.box.empty() ? bounds.size() : parse_box(c.box, c.boundary).dims.size();
  std::vector<ProfileRow> rows;
  std::vector<Spectrum> seq;
  for (const auto& tok : split(c.sizes, ',')) {
    const std::size_t n = parse_size(tok, "size");
    std::string box = std::to_string(n);
    for (std::size_t k = 1; k < d; ++k) box += "x" + std::to_string(n);
    const auto spec_box = parse_box(box, c.boundary);
    const auto net = build_box(spec_box.dims, spec_box.boundary, c.rho.value_or(0.5));
    seq.push_back(spectrum(build_laplace(net)));
    const auto& s = seq.back();
    const double tu = tv_mix_upper(s, net.rho, c.eps).bisection;
    rows.push_back({n, s.lambda(), s.perron_overlap(), tu, tv_mix_lower(s, c.eps).bisection, s.lambda() * tu});
  }
  std::cerr << cutoff_check(seq, c.rho.value_or(0.5), c.eps).verdict << "\n";
  emit_table(c, profile_csv(rows));
  return kOk;
}

Bits parse_x0(const std::string& s, const Network& net) {
  if (s == "ones") return Bits(net.n, 1);
  if (s == "zeros") return Bits(net.n, 0);
  if (s == "xstar") return Bits(net.n, net.x_star_is_ones() ? 1 : 0);
  if (s.size() != net.n || s.find_first_not_of("01") != std::string::npos)
    throw Error(Errc::InvalidArgument, "x0 must be ones, zeros, xstar or a 0/1 string of length n");
  Bits b(net.n);
  for (std::size_t i = 0; i < net.n; ++i) b[i] = s[i] == '1';
  return b;
}

int cmd_simulate(const std::string& what, const Config& c) {
  const auto src = load_source(c);
  const auto& net = src.net;
  if (c.trials == 0) throw Error(Errc::InvalidArgument, "trials must be >= 1");
  if (what == "sst") {
    const auto sample = sample_sst(net, c.trials, c.seed);
    const double tmax = *std::max_element(sample.values.begin(), sample.values.end());
    emit_table(c, sst_csv(sample, time_grid(c, tmax)));
  } else if (what == "nd") {
    if (c.times.size() != 1) throw Error(Errc::InvalidArgument, "nd needs exactly one --t");
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < net.n; ++i)
      for (std::size_t j = i + 1; j < net.n; ++j) pairs.emplace_back(i, j);
    emit_table(c, nd_csv(nd_check_mc(net, c.times.front(), pairs, c.trials, c.seed)));
  } else if (what == "walk") {
    if (c.vertex >= net.n) throw Error(Errc::InvalidArgument, "vertex out of range");
    const auto spec = spectrum(build_laplace(net));
    std::ostringstream os;
    os << "t,p_hat,stderr\n";
    for (double t : time_grid(c, 3.0 / spec.lambda())) {
      const auto e = killed_walk_survival(net, c.vertex, t, c.trials, c.seed);
      os << format_double(t) << ',' << format_double(e.value) << ',' << format_double(e.std_error) << '\n';
    }
    emit_table(c, os.str());
  } else if (what == "coupled") {
    const auto spec = spectrum(build_laplace(net));
    const auto times = time_grid(c, 3.0 / spec.lambda());
    const auto stats = coupled_statistics(net, parse_x0(c.x0, net), times, c.trials, c.seed);
    std::ostringstream os;
    os << "t,i,xstar_mean,x_mean,z_mean,z_stderr\n";
    for (std::size_t k = 0; k < times.size(); ++k)
      for (std::size_t i = 0; i < net.n; ++i)
        os << format_double(times[k]) << ',' << i << ',' << format_double(stats.xstar[k][i].value) << ','
           << format_double(stats.x[k][i].value) << ',' << format_double(stats.z[k][i].value) << ','
           << format_double(stats.z[k][i].std_error) << '\n';
    if (!stats.coupling_always_held) std::cerr << "warning: coupling identity failed at a sampled time\n";
    emit_table(c, os.str());
  } else {
    throw Error(Errc::InvalidArgument, "unknown simulation '" + what + "'");
  }
  return kOk;
}

int cmd_verify(const Config& c) {
  BatteryOptions opts;
  opts.quick = c.quick;
  opts.only = c.only;
  json all = json::array(), failures = json::array();
  for (const auto& r : run_battery(opts)) {
    std::cerr << (r.passed ? "[PASS] " : "[FAIL] ") << "criterion " << r.id << " " << r.name << " (" << r.seconds
              << " s): " << r.detail << "\n";
    json jr{{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail}, {"seconds", r.seconds}};
    all.push_back(jr);
    if (!r.passed) failures.push_back(jr);
  }
  emit(c, json{{"quick", c.quick}, {"passed", failures.empty()}, {"criteria", all}, {"failures", failures}}.dump(2) +
              "\n");
  return failures.empty() ? kOk : kVerifyFailed;
}

int exit_code(Errc e) {
  switch (e) {
    case Errc::CapExceeded:
    case Errc::RuntimeCap: return kCap;
    default: return kInvalid;
  }
}

void add_source(CLI::App* app, Config& c) {
  app->add_option("--net", c.net_path, "network JSON file");
  app->add_option("--box", c.box, "box sides, e.g. 4x4x2");
  app->add_option("--boundary", c.boundary, "open|semiopen, one per axis or broadcast");
  app->add_option("--rho", c.rho, "reservoir density (default: file value, else 0.5)");
}

void add_grid(CLI::App* app, Config& c) {
  app->add_option("--t", c.times, "explicit times")->delimiter(',');
  app->add_option("--t-min", c.t_min, "grid minimum");
  app->add_option("--t-max", c.t_max, "grid maximum");
  app->add_option("--points", c.points, "grid points");
  app->add_option("--spacing", c.spacing, "linear|log");
}

void add_output(CLI::App* app, Config& c) {
  app->add_option("--out", c.out, "output path (default stdout)");
  app->add_option("--format", c.format, "csv|json");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral bounds, exact solutions and simulation for the exclusion process with reservoirs"};
  app.require_subcommand(1);
  Config c;

  auto* gap = app.add_subcommand("gap", "Perron pair of -Delta");
  add_source(gap, c);
  add_output(gap, c);

  auto* bounds = app.add_subcommand("bounds", "distance bounds over a time grid");
  add_source(bounds, c);
  add_grid(bounds, c);
  add_output(bounds, c);

  auto* surv = app.add_subcommand("survival", "survival vector over a time grid");
  add_source(surv, c);
  add_grid(surv, c);
  add_output(surv, c);

  auto* exact = app.add_subcommand("exact", "exact distances to equilibrium over a time grid");
  add_source(exact, c);
  add_grid(exact, c);
  add_output(exact, c);
  exact->add_option("--start", c.start, "xstar|worst");

  auto* mix = app.add_subcommand("mix", "mixing-time bounds and exact mixing time");
  add_source(mix, c);
  add_output(mix, c);
  mix->add_option("--eps", c.eps, "threshold in (0,1)");
  mix->add_option("--metric", c.metric, "tv|sep|kl|l2|sup for the exact mixing time");

  auto* profile = app.add_subcommand("profile", "bounds over a sweep of box sizes");
  profile->add_option("--box", c.box, "template fixing the dimension, e.g. 1x1");
  profile->add_option("--boundary", c.boundary, "open|semiopen, one per axis or broadcast");
  profile->add_option("--rho", c.rho, "reservoir density");
  profile->add_option("--sizes", c.sizes, "comma-separated side lengths")->required();
  profile->add_option("--eps", c.eps, "threshold in (0,1)");
  add_output(profile, c);

  auto* sim = app.add_subcommand("simulate", "Monte Carlo of the graphical construction");
  std::string what;
  sim->add_option("what", what, "sst|nd|walk|coupled")->required();
  add_source(sim, c);
  add_grid(sim, c);
  add_output(sim, c);
  sim->add_option("--trials", c.trials, "number of trials");
  sim->add_option("--seed", c.seed, "master seed");
  sim->add_option("--vertex", c.vertex, "start vertex for walk");
  sim->add_option("--x0", c.x0, "ones|zeros|xstar|0/1 string for coupled");

  auto* verify = app.add_subcommand("verify", "acceptance battery");
  verify->add_flag("--quick", c.quick, "reduced sizes");
  verify->add_option("--only", c.only, "criteria to run")->delimiter(',');
  verify->add_option("--out", c.out, "JSON report path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*gap) return cmd_gap(c);
    if (*bounds) return cmd_bounds(c);
    if (*surv) return cmd_survival(c);
    if (*exact) return cmd_exact(c);
    if (*mix) return cmd_mix(c);
    if (*profile) return cmd_profile(c);
    if (*sim) return cmd_simulate(what, c);
    if (*verify) return cmd_verify(c);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  }
  return kInvalid;
}
