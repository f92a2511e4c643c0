#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace resmix {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct BatteryOptions {
  /// Smaller battery, fewer trials and a thinner box sweep; no runtime limits.
  bool quick = false;
  std::uint64_t seed = 20240611;
  /// Criteria to run, 1..10; empty means all.
  std::vector<int> only;
};

int criterion_count();
std::string criterion_name(int id);

CriterionResult run_criterion(int id, const BatteryOptions& opts);
std::vector<CriterionResult> run_battery(const BatteryOptions& opts);

}  // namespace resmix
