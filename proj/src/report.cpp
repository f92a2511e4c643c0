#include "resmix/report.hpp"

#include <charconv>
#include <sstream>

namespace resmix {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

void row(std::ostringstream& os, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) os << ',';
    os << format_double(v);
    first = false;
  }
  os << '\n';
}

}  // namespace

std::string survival_csv(const SurvivalCurve& curve) {
  std::ostringstream os;
  os << "t,znorm2";
  const auto n = curve.z.empty() ? 0 : curve.z.front().size();
  for (Eigen::Index i = 0; i < n; ++i) os << ",z_" << i;
  os << '\n';
  for (std::size_t k = 0; k < curve.times.size(); ++k) {
    os << format_double(curve.times[k]) << ',' << format_double(curve.znorm2[k]);
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_double(curve.z[k][i]);
    os << '\n';
  }
  return os.str();
}

std::string bounds_csv(std::span<const BoundReport> rows) {
  std::ostringstream os;
  os << "t,tv_lower,l2_upper,sep_lower,sup_upper\n";
  for (const auto& r : rows) row(os, {r.t, r.tv_lower, r.l2_upper, r.sep_lower, r.sup_upper});
  return os.str();
}

std::string exact_csv(std::span<const ExactCurveRow> rows) {
  std::ostringstream os;
  os << "t,tv,sep,kl,l2,sup\n";
  for (const auto& r : rows) row(os, {r.t, r.d.tv, r.d.sep, r.d.kl, r.d.l2, r.d.sup});
  return os.str();
}

std::string sst_csv(const SstSample& sample, std::span<const double> times) {
  std::ostringstream os;
  os << "t,p_hat,stderr\n";
  for (double t : times) {
    const auto e = sample.survival(t);
    row(os, {t, e.value, e.std_error});
  }
  return os.str();
}

std::string nd_csv(std::span<const CovarianceEstimate> rows) {
  std::ostringstream os;
  os << "i,j,cov_hat,radius,flag\n";
  for (const auto& r : rows)
    os << r.i << ',' << r.j << ',' << format_double(r.cov) << ',' << format_double(r.radius) << ','
       << (r.flag ? "true" : "false") << '\n';
  return os.str();
}

std::string profile_csv(std::span<const ProfileRow> rows) {
  std::ostringstream os;
  os << "n,lambda,overlap,t_upper,t_lower,product_value\n";
  for (const auto& r : rows) {
    os << r.n << ',';
    row(os, {r.lambda, r.overlap, r.t_upper, r.t_lower, r.product_value});
  }
  return os.str();
}

nlohmann::json to_json(const MixTimeBound& b) { return {{"closed_form", b.closed_form}, {"bisection", b.bisection}}; }

nlohmann::json to_json(const MixWindow& w) {
  return {{"eps", w.eps},     {"t_upper", w.t_upper},         {"t_lower", w.t_lower},
          {"width", w.width}, {"width_bound", w.width_bound}, {"within_bound", w.within_bound}};
}

nlohmann::json to_json(const CutoffCheck& c) {
  return {{"lambdas", c.lambdas},
          {"t_upper", c.t_upper},
          {"product_values", c.product_values},
          {"strictly_increasing", c.strictly_increasing},
          {"verdict", c.verdict}};
}

nlohmann::json to_json(const ExactMixingTime& m) {
  return {{"time", m.time},
          {"eps", m.eps},
          {"metric", to_string(m.metric)},
          {"start", to_string(m.start)},
          {"grid", {{"min", m.grid_min}, {"max", m.grid_max}, {"points", m.grid_points}, {"spacing", "log"}}},
          {"bisection_steps", m.bisection_steps}};
}

nlohmann::json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::TV: return "tv";
    case Metric::Sep: return "sep";
    case Metric::KL: return "kl";
    case Metric::L2: return "l2";
    case Metric::Sup: return "sup";
  }
  return "?";
}

std::string_view to_string(StartRule s) { return s == StartRule::XStar ? "x_star" : "worst_case"; }

}  // namespace resmix
