#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "cosmig/param_store.hpp"

namespace cosmig {

struct GradCheckOptions {
  double eps = 1e-5;
  // Below this magnitude the error is measured absolutely rather than
  // relative to the gradient size.
  double abs_floor = 1e-5;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates = 0;
  // Coordinates checked with a one-sided stencil because the central one
  // crossed a relu kink, and coordinates sitting on a kink (not checked).
  std::size_t one_sided = 0;
  std::size_t on_kink = 0;
};

// Compares backward() gradients of `loss` against central differences, one
// parameter coordinate at a time:
//   err = |analytic - numeric| / max(|analytic|, |numeric|, abs_floor)
// When the two central points fall on different sides of a relu kink, the
// coordinate is checked with a second-order one-sided stencil on the side
// that matches the unperturbed point.
// `loss` must be a deterministic function of the parameter values. Throws
// NumericError when the loss is not finite. Parameter values are restored.
GradCheckResult grad_check(ParamStore& params,
                           const std::function<Tensor()>& loss,
                           const GradCheckOptions& options = {});

}  // namespace cosmig
