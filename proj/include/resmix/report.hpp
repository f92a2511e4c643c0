#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "resmix/bounds.hpp"
#include "resmix/exact.hpp"
#include "resmix/mcsim.hpp"
#include "resmix/spectral.hpp"

namespace resmix {

std::string survival_csv(const SurvivalCurve& curve);
std::string bounds_csv(std::span<const BoundReport> rows);

struct ExactCurveRow {
  double t = 0.0;
  DistanceReport d;
};
std::string exact_csv(std::span<const ExactCurveRow> rows);

std::string sst_csv(const SstSample& sample, std::span<const double> times);
std::string nd_csv(std::span<const CovarianceEstimate> rows);

struct ProfileRow {
  std::size_t n = 0;
  double lambda = 0.0;
  double overlap = 0.0;
  double t_upper = 0.0;
  double t_lower = 0.0;
  double product_value = 0.0;
};
std::string profile_csv(std::span<const ProfileRow> rows);

nlohmann::json to_json(const MixTimeBound& b);
nlohmann::json to_json(const MixWindow& w);
nlohmann::json to_json(const CutoffCheck& c);
nlohmann::json to_json(const ExactMixingTime& m);
nlohmann::json to_json(const Eigen::VectorXd& v);

std::string_view to_string(Metric m);
std::string_view to_string(StartRule s);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace resmix
