#pragma once

#include <cmath>
#include <string>

#include "podm/autodiff.hpp"
#include "podm/gaussian.hpp"
#include "podm/random.hpp"

namespace podm {

// uniform(-1/sqrt(fan_in), +1/sqrt(fan_in))
inline Tensor uniform_init(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = dist(rng);
  return t;
}

// Affine map x W + b. Accepts a vector [in] or a matrix [m x in].
struct Linear {
  Parameter* weight = nullptr;  // [in x out]
  Parameter* bias = nullptr;    // [out]

  static Linear create(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
                       Rng& rng) {
    Linear l;
    l.weight = &params.add(name + ".weight", uniform_init({in, out}, in, rng));
    l.bias = &params.add(name + ".bias", uniform_init({out}, in, rng));
    return l;
  }

  std::size_t in() const { return weight->value.rows(); }
  std::size_t out() const { return weight->value.cols(); }

  Var operator()(Var x) const {
    Tape& t = x.tape();
    if (x.shape().size() == 1) {
      Var y = (*this)(reshape(x, {1, x.size()}));
      return reshape(y, {out()});
    }
    return add_row(matmul(x, t.param(*weight)), t.param(*bias));
  }
};

// Two relu layers followed by separate mean and variance heads;
// var = softplus(raw) + kVarFloor.
struct GaussianMlp {
  Linear hidden1;
  Linear hidden2;
  Linear mean_head;
  Linear var_head;

  static GaussianMlp create(ParameterSet& params, const std::string& name, std::size_t in,
                            std::size_t hidden, std::size_t latent, Rng& rng) {
    GaussianMlp m;
    m.hidden1 = Linear::create(params, name + ".hidden1", in, hidden, rng);
    m.hidden2 = Linear::create(params, name + ".hidden2", hidden, hidden, rng);
    m.mean_head = Linear::create(params, name + ".mean", hidden, latent, rng);
    m.var_head = Linear::create(params, name + ".var", hidden, latent, rng);
    return m;
  }

  std::size_t in() const { return hidden1.in(); }

  GaussianVar operator()(Var x) const {
    if (x.size() != in())
      throw DimensionError("GaussianMlp: input width " + std::to_string(x.size()) + ", expected " +
                           std::to_string(in()));
    Var h = relu(hidden2(relu(hidden1(x))));
    return {mean_head(h), add_scalar(softplus(var_head(h)), kVarFloor)};
  }
};

}  // namespace podm
