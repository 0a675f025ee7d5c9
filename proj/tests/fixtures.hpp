#pragma once

#include <random>
#include <string>

#include "podm/model.hpp"
#include "podm/types.hpp"

namespace fixtures {

inline podm::VocabSizes small_vocab() { return {21, 6, 5, 4}; }

inline podm::ModelDims small_dims() {
  podm::ModelDims d;
  d.d_emb = 4;
  d.d_h = 6;
  d.n_lat = 3;
  d.n_c_max = 8;
  d.l_max = 6;
  d.f_rel = 2;
  return d;
}

inline podm::BehaviorEvent click(std::int64_t item, std::int64_t brand, std::int64_t shop,
                                 podm::EventKind kind = podm::EventKind::kClick) {
  return {kind, item, 0, brand, shop, 0};
}

inline podm::BehaviorEvent query(std::int64_t q) { return {podm::EventKind::kQuery, 0, q, 0, 0, 0}; }

// Random well-formed session over small_vocab(); labels hold at least one
// positive when n >= 2.
inline podm::SessionRecord random_session(std::mt19937_64& rng, std::size_t n_candidates, std::size_t history,
                                          std::size_t f_rel = 2, const std::string& id = "s") {
  const auto v = small_vocab();
  auto pick = [&](std::size_t size) {
    return std::uniform_int_distribution<std::int64_t>(1, static_cast<std::int64_t>(size) - 1)(rng);
  };
  std::uniform_real_distribution<double> feat(-1, 1);
  podm::SessionRecord s;
  s.session_id = id;
  s.user_id = "u" + id;
  s.intent_d = std::uniform_real_distribution<double>(0, 1)(rng);
  for (std::size_t t = 0; t < history; ++t) {
    if (t % 3 == 2)
      s.history.push_back(query(pick(v.queries)));
    else
      s.history.push_back(click(pick(v.items), pick(v.brands), pick(v.shops),
                                t % 4 == 0 ? podm::EventKind::kAddCart : podm::EventKind::kClick));
    s.history.back().position = static_cast<std::int64_t>(t);
  }
  for (std::size_t i = 0; i < n_candidates; ++i) {
    podm::CandidateItem c{pick(v.items), pick(v.brands), pick(v.shops), {}};
    for (std::size_t f = 0; f < f_rel; ++f) c.relevance_features.push_back(feat(rng));
    s.candidates.push_back(c);
    s.labels.push_back(i % 3 == 0 ? 1 : 0);
  }
  return s;
}

inline void zero_params(podm::ParameterSet& ps, const std::string& prefix) {
  for (auto& [name, p] : ps)
    if (name.rfind(prefix, 0) == 0) p.value.fill(0.0);
}

}  // namespace fixtures
