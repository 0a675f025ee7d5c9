#pragma once

// List-wise scorer in the spirit of PRM: per-item inputs, one single-head
// self-attention layer with a residual, and an MLP producing positive base
// scores s = softplus(logit).

#include <cmath>
#include <span>
#include <vector>

#include "podm/autodiff.hpp"
#include "podm/nn.hpp"
#include "podm/pon.hpp"
#include "podm/types.hpp"

namespace podm::backbone {

struct BackboneNet {
  Linear input;   // [3 d_emb + F_rel] -> d_h
  Linear query;
  Linear key;
  Linear value;
  Linear hidden;
  Linear output;  // d_h -> 1

  static BackboneNet create(ParameterSet& params, std::size_t d_emb, std::size_t f_rel, std::size_t d_h,
                            Rng& rng) {
    BackboneNet n;
    n.input = Linear::create(params, "backbone.input", 3 * d_emb + f_rel, d_h, rng);
    n.query = Linear::create(params, "backbone.attn_query", d_h, d_h, rng);
    n.key = Linear::create(params, "backbone.attn_key", d_h, d_h, rng);
    n.value = Linear::create(params, "backbone.attn_value", d_h, d_h, rng);
    n.hidden = Linear::create(params, "backbone.hidden", d_h, d_h, rng);
    n.output = Linear::create(params, "backbone.output", d_h, 1, rng);
    return n;
  }

  std::size_t d_h() const { return input.out(); }
};

struct ListContext {
  Var hidden;  // post-attention states H [N x d_h]
  Var scores;  // base scores s [N], all > 0
};

// history_summary is the pooled user history [d_emb], broadcast to every item.
inline ListContext score_list(Tape& tape, std::span<const CandidateItem> candidates, Var history_summary,
                              const pon::EmbeddingTables& tables, const BackboneNet& net) {
  const std::size_t n = candidates.size();
  if (n == 0) throw DataError("empty candidate list");
  if (n > tables.n_c_max())
    throw DataError("candidate list of " + std::to_string(n) + " exceeds N_C_max " +
                    std::to_string(tables.n_c_max()));
  std::vector<std::int64_t> pos(n);
  for (std::size_t i = 0; i < n; ++i) pos[i] = static_cast<std::int64_t>(i) + 1;

  Var x = concat_cols({pon::embed_candidates(tape, candidates, tables), pon::candidate_features(tape, candidates),
                       gather_rows(tape.param(*tables.list_position), pos, "list position"),
                       repeat_rows(history_summary, n)});
  if (x.value().cols() != net.input.in())
    throw DataError("item input width " + std::to_string(x.value().cols()) + " does not match model width " +
                    std::to_string(net.input.in()));
  Var z = relu(net.input(x));
  Var logits = scale(matmul(net.query(z), transpose(net.key(z))), 1.0 / std::sqrt(static_cast<double>(net.d_h())));
  Var h = add(z, matmul(softmax_rows(logits), net.value(z)));
  Var item_logit = net.output(relu(net.hidden(h)));
  return {h, softplus(reshape(item_logit, {n}))};
}

struct OrderLoss {
  Var loss;
  bool skipped = false;  // list without positives contributes 0
};

// Listwise cross-entropy: -sum_i z_i log softmax(scores)_i.
inline OrderLoss order_loss(Var final_scores, std::span<const int> labels) {
  Tape& tape = final_scores.tape();
  if (final_scores.value().rank() != 1 || final_scores.size() != labels.size())
    throw DimensionError("order_loss: " + std::to_string(final_scores.size()) + " scores vs " +
                         std::to_string(labels.size()) + " labels");
  std::vector<double> z(labels.begin(), labels.end());
  double positives = 0.0;
  for (double v : z) positives += v;
  if (positives == 0.0) return {tape.scalar(0.0), true};
  Var ll = log_softmax(final_scores);
  return {neg(sum(mul(ll, tape.constant(Tensor::vector(std::move(z)))))), false};
}

}  // namespace podm::backbone
