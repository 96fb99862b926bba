#include "cosmig/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "cosmig/ops.hpp"

#include "cosmig/error.hpp"

namespace cosmig {

namespace {

struct Sample {
  double value;
  std::uint64_t kinks;
};

Sample evaluate(const std::function<Tensor()>& loss) {
  NoGradGuard guard;
  KinkProbe probe;
  const double v = loss().item();
  if (!std::isfinite(v)) throw NumericError("grad_check: loss is not finite");
  return {v, probe.signature()};
}

}  // namespace

GradCheckResult grad_check(ParamStore& params,
                           const std::function<Tensor()>& loss,
                           const GradCheckOptions& options) {
  if (!(options.eps > 0.0)) throw Error("grad_check: eps must be positive");
  params.zero_grad();
  Tensor value = loss();
  if (!std::isfinite(value.item())) {
    throw NumericError("grad_check: loss is not finite");
  }
  value.backward();

  const Sample base = evaluate(loss);
  const double h = options.eps;

  GradCheckResult result;
  for (auto& [name, param] : params) {
    const std::vector<double> analytic(param.grad().begin(), param.grad().end());
    auto values = param.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      auto at = [&](double offset) {
        values[i] = saved + offset;
        const Sample s = evaluate(loss);
        values[i] = saved;
        return s;
      };
      const Sample plus = at(h);
      const Sample minus = at(-h);

      double numeric = (plus.value - minus.value) / (2.0 * h);
      if (plus.kinks != minus.kinks) {
        // Same-side points at half steps: f'(x) ~ (-3 f0 + 4 f(x+s/2) - f(x+s)) / s.
        const double side = plus.kinks == base.kinks ? 1.0 : minus.kinks == base.kinks ? -1.0 : 0.0;
        const Sample half = side != 0.0 ? at(side * h / 2.0) : Sample{0.0, ~base.kinks};
        if (half.kinks != base.kinks) {
          ++result.on_kink;
          continue;
        }
        const double far = side > 0 ? plus.value : minus.value;
        numeric = side * (-3.0 * base.value + 4.0 * half.value - far) / h;
        ++result.one_sided;
      }
      const double a = analytic.empty() ? 0.0 : analytic[i];
      const double denom =
          std::max({std::abs(a), std::abs(numeric), options.abs_floor});
      const double err = std::abs(a - numeric) / denom;
      ++result.coordinates;
      if (err > result.max_rel_error || result.worst_param.empty()) {
        result.max_rel_error = std::max(err, result.max_rel_error);
        result.worst_param = name;
        result.worst_index = i;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
  }
  params.zero_grad();
  return result;
}

}  // namespace cosmig
