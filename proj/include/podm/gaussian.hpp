#pragma once

// Diagonal multivariate Gaussians: density, closed-form KL and
// reparameterized sampling, both on plain vectors and on a Tape.

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "podm/autodiff.hpp"

namespace podm {

inline constexpr double kVarFloor = 1e-6;

class DiagGaussian {
 public:
  DiagGaussian(std::vector<double> mean, std::vector<double> var)
      : mean_(std::move(mean)), var_(std::move(var)) {
    if (mean_.empty() || mean_.size() != var_.size())
      throw DimensionError("DiagGaussian: mean/var lengths " + std::to_string(mean_.size()) + "/" +
                           std::to_string(var_.size()));
    for (double v : var_)
      if (!(v >= kVarFloor)) throw DomainError("DiagGaussian: variance below floor: " + std::to_string(v));
  }

  std::size_t dim() const { return mean_.size(); }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& var() const { return var_; }

  friend bool operator==(const DiagGaussian&, const DiagGaussian&) = default;

 private:
  std::vector<double> mean_;
  std::vector<double> var_;
};

inline double log_pdf(const DiagGaussian& g, std::span<const double> x) {
  if (x.size() != g.dim()) throw DomainError("log_pdf: point dimension does not match distribution");
  const double n = static_cast<double>(g.dim());
  double acc = n * std::log(2.0 * std::numbers::pi);
  for (std::size_t j = 0; j < g.dim(); ++j) {
    const double d = x[j] - g.mean()[j];
    acc += std::log(g.var()[j]) + d * d / g.var()[j];
  }
  return -0.5 * acc;
}

// KL(p || q) between diagonal Gaussians.
inline double kl_divergence(const DiagGaussian& p, const DiagGaussian& q) {
  if (p.dim() != q.dim()) throw DomainError("kl_divergence: dimension mismatch");
  double acc = 0.0;
  for (std::size_t j = 0; j < p.dim(); ++j) {
    const double d = p.mean()[j] - q.mean()[j];
    acc += std::log(q.var()[j] / p.var()[j]) + (p.var()[j] + d * d) / q.var()[j] - 1.0;
  }
  return 0.5 * acc;
}

// mean + sqrt(var) * noise
inline std::vector<double> sample(const DiagGaussian& g, std::span<const double> noise) {
  if (noise.size() != g.dim()) throw DomainError("sample: noise dimension does not match distribution");
  std::vector<double> out(g.dim());
  for (std::size_t j = 0; j < g.dim(); ++j) out[j] = g.mean()[j] + std::sqrt(g.var()[j]) * noise[j];
  return out;
}

// Differentiable counterpart living on a Tape; mean and var are vectors [n].
struct GaussianVar {
  Var mean;
  Var var;

  std::size_t dim() const { return mean.size(); }
  DiagGaussian value() const { return DiagGaussian(mean.value().values(), var.value().values()); }
};

inline GaussianVar constant_gaussian(Tape& tape, const DiagGaussian& g) {
  return {tape.constant(Tensor::vector(g.mean())), tape.constant(Tensor::vector(g.var()))};
}

inline Var log_pdf(const GaussianVar& g, Var x) {
  if (x.size() != g.dim()) throw DomainError("log_pdf: point dimension does not match distribution");
  const double n = static_cast<double>(g.dim());
  Var quad = sum(div(square(sub(x, g.mean)), g.var));
  Var logdet = sum(log(g.var));
  return scale(add_scalar(add(logdet, quad), n * std::log(2.0 * std::numbers::pi)), -0.5);
}

inline Var kl_divergence(const GaussianVar& p, const GaussianVar& q) {
  if (p.dim() != q.dim()) throw DomainError("kl_divergence: dimension mismatch");
  Var log_ratio = sub(log(q.var), log(p.var));
  Var spread = div(add(p.var, square(sub(p.mean, q.mean))), q.var);
  return scale(add_scalar(sum(add(log_ratio, spread)), -static_cast<double>(p.dim())), 0.5);
}

inline Var sample(const GaussianVar& g, Var noise) {
  if (noise.size() != g.dim()) throw DomainError("sample: noise dimension does not match distribution");
  return add(g.mean, mul(sqrt(g.var), noise));
}

}  // namespace podm
