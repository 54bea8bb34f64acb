#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mrc/autodiff.hpp"

namespace mrc {

struct GradCheckOptions {
  double eps = 1e-5;
  // Above this many coordinates a seeded random subsample of this size is
  // checked instead of every coordinate.
  std::size_t max_coords = 10000;
  std::uint64_t seed = 0;
  // Lower bound on the relative-error denominator, so coordinates whose
  // true gradient is ~0 compare on absolute error at this scale.
  double denom_floor = 1e-5;
  // A probe pair that lands on different relu/max branches than the base
  // point straddles a kink; the step is divided by 10 up to this many times
  // before the coordinate is skipped.
  std::size_t kink_retries = 3;
};

struct GroupCheck {
  std::string group;
  double max_rel_error = 0.0;
  std::size_t coords = 0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t kink_skipped = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t coords = 0;
  std::size_t reduced_step = 0;  // coordinates checked with a smaller step
  std::size_t kink_skipped = 0;
  std::vector<GroupCheck> groups;  // in first-seen parameter order
};

double relative_error(double analytic, double numeric, double denom_floor);

// Compares backward() of `loss_fn` against central finite differences for
// the coordinates of `params`. Requires Precision::kFloat64. Throws
// NumericError naming the coordinate when a non-finite value appears.
GradCheckReport grad_check(const std::function<Var()>& loss_fn, std::span<Parameter* const> params,
                           const GradCheckOptions& options = {});

}  // namespace mrc
