#pragma once

#include <string>
#include <vector>

#include "maskbridge/schedule.hpp"

namespace maskbridge {

struct CheckResult {
  std::string name;
  double measured;   // worst observed error, in the tolerance's units
  double tolerance;
  bool pass;
  double seconds;
};

// The closed-form invariant battery: schedule identities, the Monte-Carlo
// marginal comparison, score/velocity equivalence, recovery round trip,
// solver chain consistency and oracle convergence, the full finite-difference
// gradient check, and DDIM oracle inversion. `only` filters by substring.
std::vector<CheckResult> run_verification(const NoiseSchedule& s,
                                          const std::vector<std::string>& only = {});

std::string format_check_line(const CheckResult& r);

}  // namespace maskbridge
