#pragma once

// Central finite-difference gradient verification. The analytic side comes
// from the autodiff tape, the numeric side re-evaluates the loss through the
// plain-double path, so the two computations share no backward code.

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace dias {

struct GradCheckReport {
  std::string parameter_name;
  double max_rel_error = 0;
  double tolerance = 0;
  bool passed = false;
  std::string note;  // diagnostic when a probe produced a non-finite loss
};

// A named slot of scalar parameters, mutated in place while probing.
struct ParamRef {
  std::string name;
  std::span<double> values;
};

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

// loss() evaluates the objective at the parameters' current values;
// analytic_grads() returns one gradient vector per slot (same order/shapes).
inline std::vector<GradCheckReport> grad_check(
    const std::function<double()>& loss,
    const std::function<std::vector<std::vector<double>>()>& analytic_grads,
    std::span<const ParamRef> params, double step = 1e-5, double tolerance = 1e-4) {
  const std::vector<std::vector<double>> grads = analytic_grads();
  std::vector<GradCheckReport> reports;
  reports.reserve(params.size());
  for (std::size_t s = 0; s < params.size(); ++s) {
    GradCheckReport rep{params[s].name, 0.0, tolerance, true, ""};
    for (std::size_t k = 0; k < params[s].values.size(); ++k) {
      double& x = params[s].values[k];
      const double saved = x;
      x = saved + step;
      const double up = loss();
      x = saved - step;
      const double down = loss();
      x = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        rep.passed = false;
        rep.note = "non-finite loss at probe of " + params[s].name + "[" +
                   std::to_string(k) + "]";
        break;
      }
      const double fd = (up - down) / (2.0 * step);
      rep.max_rel_error = std::max(rep.max_rel_error, relative_error(grads[s][k], fd));
    }
    if (rep.note.empty()) rep.passed = rep.max_rel_error <= tolerance;
    reports.push_back(std::move(rep));
  }
  return reports;
}

}  // namespace dias
