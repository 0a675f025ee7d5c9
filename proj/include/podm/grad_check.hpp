#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "podm/autodiff.hpp"

namespace podm {

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = true;
};

// Builds the scalar loss on the given tape. Must be deterministic: any noise
// has to be fixed outside the function.
using LossFn = std::function<Var(Tape&)>;

// Relative error |a - n| / max(|a|, |n|, scale_floor). The floor turns the
// check into an absolute one for components whose true gradient is ~0.
inline double gradient_rel_error(double analytic, double numeric, double scale_floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), scale_floor});
  return std::abs(analytic - numeric) / scale;
}

// Compares reverse-mode gradients with central differences for every value
// of every parameter in `params`.
inline GradCheckReport grad_check(const LossFn& f, ParameterSet& params, double h = 1e-5,
                                  double tol = 1e-4, double scale_floor = 1e-4) {
  params.zero_grad();
  {
    Tape tape;
    Var loss = f(tape);
    tape.backward(loss);
  }
  auto evaluate = [&f] {
    Tape tape(false);
    return f(tape).item();
  };

  GradCheckReport report;
  report.tolerance = tol;
  for (auto& [name, p] : params) {
    GradCheckEntry e;
    e.name = name;
    const Tensor analytic = p.grad;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double orig = p.value[i];
      p.value[i] = orig + h;
      const double fp = evaluate();
      p.value[i] = orig - h;
      const double fm = evaluate();
      p.value[i] = orig;
      const double numeric = (fp - fm) / (2.0 * h);
      const double err = gradient_rel_error(analytic[i], numeric, scale_floor);
      if (i == 0 || err > e.max_rel_error) {
        e.max_rel_error = err;
        e.worst_index = i;
        e.analytic = analytic[i];
        e.numeric = numeric;
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, e.max_rel_error);
    report.entries.push_back(std::move(e));
  }
  report.passed = report.max_rel_error < tol;
  params.zero_grad();
  return report;
}

}  // namespace podm
