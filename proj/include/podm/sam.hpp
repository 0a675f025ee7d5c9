#pragma once

// Self-adaptive model: the variational posterior q(rho | tau, o), the
// mutual-information bound loss L1 = KL[p(rho|o) || q], the utility head and
// the modulation of backbone scores.

#include <algorithm>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "podm/autodiff.hpp"
#include "podm/gaussian.hpp"
#include "podm/nn.hpp"

namespace podm::sam {

struct SamNet {
  GaussianMlp posterior;               // [2 n_lat + d_h] -> n_lat
  Parameter* utility_weight = nullptr;  // W [d_h + 3 n_lat], zero at init

  static SamNet create(ParameterSet& params, std::size_t n_lat, std::size_t d_h, Rng& rng) {
    SamNet s;
    s.posterior = GaussianMlp::create(params, "sam.posterior", 2 * n_lat + d_h, d_h, n_lat, rng);
    s.utility_weight = &params.add("sam.utility_weight", Tensor(Shape{d_h + 3 * n_lat, 1}));
    return s;
  }
};

// The list conditioning o: mean over backbone hidden states.
inline Var list_summary(Var hidden) { return mean(hidden, 0); }

inline GaussianVar posterior(const GaussianVar& tau, Var summary, const GaussianMlp& net) {
  return net(concat({tau.mean, tau.var, summary}));
}

inline Var mi_loss(const GaussianVar& rho, const GaussianVar& q) { return kl_divergence(rho, q); }

// Batch form: arithmetic mean of per-session KLs on one tape.
inline Var mi_loss(std::span<const std::pair<GaussianVar, GaussianVar>> batch) {
  if (batch.empty()) throw DomainError("mi_loss over an empty batch");
  Var total = mi_loss(batch.front().first, batch.front().second);
  for (std::size_t i = 1; i < batch.size(); ++i) total = add(total, mi_loss(batch[i].first, batch[i].second));
  return scale(total, 1.0 / static_cast<double>(batch.size()));
}

// Row i: H_i (+) tau.mean (+) q.mean (+) (tau.mean - q.mean)^2.
inline Var aligned_features(Var hidden, const GaussianVar& tau, const GaussianVar& q) {
  const std::size_t n = hidden.value().rows();
  Var gap = square(sub(tau.mean, q.mean));
  return concat_cols({hidden, repeat_rows(tau.mean, n), repeat_rows(q.mean, n), repeat_rows(gap, n)});
}

// u_i = 2 sigmoid(a_i . W), in (0, 2); exactly 1 when W = 0.
inline Var utility(Var aligned, Var weight) {
  const std::size_t n = aligned.value().rows();
  return scale(sigmoid(reshape(matmul(aligned, weight), {n})), 2.0);
}

inline Var modulate(Var base_scores, Var utilities) {
  for (double s : base_scores.value().data())
    if (!(s > 0)) throw DomainError("modulate: base scores must be positive");
  for (double u : utilities.value().data())
    if (!(u > 0)) throw DomainError("modulate: utilities must be positive");
  return mul(base_scores, utilities);
}

// Descending order of scores; equal scores keep candidate order.
inline std::vector<std::size_t> rank_by_score(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

inline Var total_loss(Var mi, Var order, double chi) {
  if (!(chi >= 0)) throw DomainError("total_loss: chi must be >= 0");
  return add(mi, scale(order, chi));
}

}  // namespace podm::sam
