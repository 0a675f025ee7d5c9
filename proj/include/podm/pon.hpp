#pragma once

// Preference-oriented network: encodes a user's behavior flow into the
// preference distribution tau, and a candidate list into the list-diversity
// distribution rho. Both are diagonal Gaussians of dimension n_lat.

#include <algorithm>
#include <numeric>
#include <span>
#include <tuple>
#include <vector>

#include "podm/autodiff.hpp"
#include "podm/gaussian.hpp"
#include "podm/nn.hpp"
#include "podm/types.hpp"

namespace podm::pon {

// Embedding tables shared by the encoders and the backbone. Row 0 of every
// table is the reserved padding/none row. Position tables are indexed by
// window row + 1.
struct EmbeddingTables {
  Parameter* item = nullptr;
  Parameter* brand = nullptr;
  Parameter* shop = nullptr;
  Parameter* query = nullptr;
  Parameter* kind = nullptr;
  Parameter* history_position = nullptr;
  Parameter* list_position = nullptr;

  static EmbeddingTables create(ParameterSet& params, const VocabSizes& vocab, std::size_t dim,
                                std::size_t l_max, std::size_t n_c_max, Rng& rng) {
    auto table = [&](const std::string& name, std::size_t rows) {
      return &params.add("embed." + name, uniform_init({rows, dim}, dim, rng));
    };
    EmbeddingTables t;
    t.item = table("item", vocab.items);
    t.brand = table("brand", vocab.brands);
    t.shop = table("shop", vocab.shops);
    t.query = table("query", vocab.queries);
    t.kind = table("kind", 4);
    t.history_position = table("history_position", l_max + 1);
    t.list_position = table("list_position", n_c_max + 1);
    return t;
  }

  std::size_t dim() const { return item->value.cols(); }
  std::size_t l_max() const { return history_position->value.rows() - 1; }
  std::size_t n_c_max() const { return list_position->value.rows() - 1; }
};

struct HistoryEmbedding {
  Var rows;                    // [l_max x d_emb], padding rows are zero
  std::vector<bool> mask;      // true for real events
  std::size_t count = 0;       // number of real events
};

// Keeps the most recent l_max events, left-padded. Each event row is the sum
// of its applicable embeddings: item-or-query, brand, shop, kind, position.
inline HistoryEmbedding embed_history(Tape& tape, std::span<const BehaviorEvent> history,
                                      const EmbeddingTables& tables) {
  const std::size_t l_max = tables.l_max();
  const std::size_t count = std::min(history.size(), l_max);
  const std::size_t first = history.size() - count;
  const std::size_t pad = l_max - count;

  std::vector<std::int64_t> item(l_max, 0), query(l_max, 0), brand(l_max, 0), shop(l_max, 0),
      kind(l_max, 0), pos(l_max, 0);
  HistoryEmbedding out;
  out.mask.assign(l_max, false);
  out.count = count;
  for (std::size_t r = pad; r < l_max; ++r) {
    const BehaviorEvent& e = history[first + (r - pad)];
    const auto k = static_cast<std::int64_t>(e.kind);
    if (k < 1 || k > 3) throw DataError("history event with invalid kind " + std::to_string(k));
    if (e.kind == EventKind::kQuery)
      query[r] = e.query_id;
    else
      item[r] = e.item_id;
    brand[r] = e.brand_id;
    shop[r] = e.shop_id;
    kind[r] = k;
    pos[r] = static_cast<std::int64_t>(r) + 1;
    out.mask[r] = true;
  }
  Var rows = gather_rows(tape.param(*tables.item), item, "item");
  rows = add(rows, gather_rows(tape.param(*tables.query), query, "query"));
  rows = add(rows, gather_rows(tape.param(*tables.brand), brand, "brand"));
  rows = add(rows, gather_rows(tape.param(*tables.shop), shop, "shop"));
  rows = add(rows, gather_rows(tape.param(*tables.kind), kind, "kind"));
  rows = add(rows, gather_rows(tape.param(*tables.history_position), pos, "history position"));
  out.rows = rows;
  return out;
}

// Masked mean over real events; the zero vector for an empty history.
inline Var pool_history(const HistoryEmbedding& h) {
  Var total = sum(h.rows, 0);
  if (h.count == 0) return total;
  return scale(total, 1.0 / static_cast<double>(h.count));
}

// item + brand + shop embedding per candidate, [N x d_emb].
inline Var embed_candidates(Tape& tape, std::span<const CandidateItem> candidates,
                            const EmbeddingTables& tables) {
  std::vector<std::int64_t> item, brand, shop;
  for (const auto& c : candidates) {
    item.push_back(c.item_id);
    brand.push_back(c.brand_id);
    shop.push_back(c.shop_id);
  }
  Var rows = gather_rows(tape.param(*tables.item), item, "item");
  rows = add(rows, gather_rows(tape.param(*tables.brand), brand, "brand"));
  return add(rows, gather_rows(tape.param(*tables.shop), shop, "shop"));
}

// Relevance features as a constant [N x F_rel] matrix.
inline Var candidate_features(Tape& tape, std::span<const CandidateItem> candidates) {
  if (candidates.empty()) throw DataError("empty candidate list");
  const std::size_t f = candidates.front().relevance_features.size();
  std::vector<double> data;
  data.reserve(candidates.size() * f);
  for (const auto& c : candidates) {
    if (c.relevance_features.size() != f) throw DataError("relevance_features width differs within list");
    data.insert(data.end(), c.relevance_features.begin(), c.relevance_features.end());
  }
  return tape.constant(Tensor::matrix(candidates.size(), f, std::move(data)));
}

inline GaussianVar encode_user_preference(const HistoryEmbedding& history, const GaussianMlp& net) {
  return net(pool_history(history));
}

inline GaussianVar encode_user_preference(Tape& tape, std::span<const BehaviorEvent> history,
                                          const EmbeddingTables& tables, const GaussianMlp& net) {
  return encode_user_preference(embed_history(tape, history, tables), net);
}

// Order-invariant: candidates are pooled in a canonical order, so any
// permutation of the list gives bit-identical output.
inline GaussianVar encode_candidate_list(Tape& tape, std::span<const CandidateItem> candidates,
                                         const EmbeddingTables& tables, const GaussianMlp& net) {
  if (candidates.empty()) throw DataError("empty candidate list");
  if (candidates.size() > tables.n_c_max())
    throw DataError("candidate list of " + std::to_string(candidates.size()) + " exceeds N_C_max " +
                    std::to_string(tables.n_c_max()));
  std::vector<CandidateItem> canonical(candidates.begin(), candidates.end());
  std::sort(canonical.begin(), canonical.end(), [](const CandidateItem& a, const CandidateItem& b) {
    return std::tie(a.item_id, a.brand_id, a.shop_id, a.relevance_features) <
           std::tie(b.item_id, b.brand_id, b.shop_id, b.relevance_features);
  });
  Var rows = concat_cols({embed_candidates(tape, canonical, tables), candidate_features(tape, canonical)});
  return net(mean(rows, 0));
}

}  // namespace podm::pon
