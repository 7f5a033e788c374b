#pragma once

#include "holostab/flow.hpp"

#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace oracle {

// First violation of per-segment F monotonicity or of the unit norm after an
// accepted constrained step; empty when the trajectory is clean.
inline std::string trajectory_violation(const std::vector<holostab::TrajectoryRow>& rows, double norm_tol = 1e-10) {
  std::map<int, double> last;
  for (const auto& r : rows) {
    if (!r.accepted || r.phase == holostab::Phase::Free) continue;
    if (std::abs(r.normE - 1.0) > norm_tol)
      return "step " + std::to_string(r.step) + ": |E| = " + std::to_string(r.normE);
    auto it = last.find(r.segment);
    if (it != last.end() && r.F > it->second)
      return "step " + std::to_string(r.step) + ": F increased in segment " + std::to_string(r.segment);
    last[r.segment] = r.F;
  }
  return {};
}

}  // namespace oracle
