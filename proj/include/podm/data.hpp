#pragma once

// Session and catalog records: synthetic generation, JSONL persistence,
// user-level splits and seeded batching.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "podm/errors.hpp"
#include "podm/random.hpp"
#include "podm/types.hpp"

namespace podm::data {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Generator configuration.

struct GenConfig {
  std::size_t n_users = 1000;
  std::size_t n_sessions = 2500;
  std::size_t n_items = 2000;
  std::size_t n_brands = 10;
  std::size_t n_shops = 30;
  std::size_t n_queries = 40;
  std::size_t n_candidates = 30;
  std::size_t history_min = 10;
  std::size_t history_max = 30;
  double intent_alpha = 1.0;   // user intent d ~ Beta(alpha, beta)
  double intent_beta = 2.0;
  std::optional<double> fixed_intent;  // overrides the Beta draw when set
  double label_noise = 0.02;   // eta, per-label flip probability
  double personalized_share = 0.6;  // candidates retrieved via the user's brand preference
  double train_frac = 0.8;
  std::uint64_t seed = 7;

  VocabSizes vocab() const { return {n_items + 1, n_brands + 1, n_shops + 1, n_queries + 1}; }
};

// Every violated constraint, one "field: reason" line each.
inline std::vector<std::string> validate(const GenConfig& c, const std::string& prefix = "") {
  std::vector<std::string> errs;
  auto need = [&](bool ok, const char* field, const char* what) {
    if (!ok) errs.push_back(prefix + field + ": " + what);
  };
  need(c.n_users >= 1, "n_users", "must be >= 1");
  need(c.n_sessions >= 1, "n_sessions", "must be >= 1");
  need(c.n_items >= 1, "n_items", "must be >= 1");
  need(c.n_brands >= 1, "n_brands", "must be >= 1");
  need(c.n_shops >= 1, "n_shops", "must be >= 1");
  need(c.n_queries >= 1, "n_queries", "must be >= 1");
  need(c.n_candidates >= 1, "n_candidates", "must be >= 1");
  need(c.n_candidates <= c.n_items, "n_candidates", "must not exceed n_items");
  need(c.n_brands <= c.n_items, "n_brands", "must not exceed n_items");
  need(c.history_min <= c.history_max, "history_min", "must be <= history_max");
  need(c.intent_alpha > 0, "intent_alpha", "must be > 0");
  need(c.intent_beta > 0, "intent_beta", "must be > 0");
  need(!c.fixed_intent || (*c.fixed_intent >= 0 && *c.fixed_intent <= 1), "fixed_intent", "must lie in [0, 1]");
  need(c.label_noise >= 0 && c.label_noise < 0.5, "label_noise", "must lie in [0, 0.5)");
  need(c.personalized_share >= 0 && c.personalized_share <= 1, "personalized_share", "must lie in [0, 1]");
  need(c.train_frac > 0 && c.train_frac < 1, "train_frac", "must lie in (0, 1)");
  return errs;
}

// ---------------------------------------------------------------------------
// Synthetic world.
//
//  1. user intent d ~ Beta(alpha, beta);
//  2. the user's brand preference pi ~ Dirichlet(kappa(d)) with
//     kappa(d) = 0.2 + 4 d; history item events draw brands from pi, and a
//     broad-query event precedes each item event with probability d;
//  3. candidates: with probability personalized_share an item of a brand
//     drawn from pi, otherwise a popularity-weighted catalog draw (weight
//     1/sqrt(popularity rank)); listed by descending retrieval score;
//  4. purchase propensity g_i = 0.6 quality_i + 0.4 [d novelty_i +
//     (1 - d) affinity_i], affinity_i = share of history item events with
//     the candidate's brand, novelty_i = 1 - affinity_i;
//  5. labels: the top ceil(0.1 N_C) items by g are 1, then each label flips
//     with probability eta.
//
// Relevance features: [retrieval score = quality + N(0, 0.15^2),
// popularity = 1 - ln(rank)/ln(n_items), history brand match = affinity].

inline constexpr std::size_t kRelevanceFeatures = 3;

inline double intent_concentration(double d) { return 0.2 + 4.0 * d; }

struct Dataset {
  std::vector<CatalogItem> catalog;
  std::vector<SessionRecord> sessions;
};

namespace detail {

inline double draw_gamma(double shape, Rng& rng) { return std::gamma_distribution<double>(shape, 1.0)(rng); }

inline double draw_beta(double a, double b, Rng& rng) {
  const double x = draw_gamma(a, rng);
  const double y = draw_gamma(b, rng);
  return x / (x + y);
}

inline std::vector<double> draw_dirichlet(double concentration, std::size_t k, Rng& rng) {
  std::vector<double> p(k);
  double total = 0;
  for (double& v : p) total += (v = draw_gamma(concentration, rng));
  if (total <= 0) {  // every gamma draw underflowed; put all mass on one brand
    std::fill(p.begin(), p.end(), 0.0);
    p[std::uniform_int_distribution<std::size_t>(0, k - 1)(rng)] = 1.0;
    return p;
  }
  for (double& v : p) v /= total;
  return p;
}

inline bool bernoulli(double p, Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }

template <class T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

}  // namespace detail

inline Dataset generate(const GenConfig& cfg) {
  if (auto errs = validate(cfg); !errs.empty()) throw ConfigError(errs.front());

  Dataset ds;
  Rng cat_rng(mix_seed(cfg.seed, 1));
  std::vector<std::vector<std::int64_t>> items_by_brand(cfg.n_brands + 1);
  std::vector<std::size_t> pop_rank(cfg.n_items);
  std::iota(pop_rank.begin(), pop_rank.end(), std::size_t{1});
  std::shuffle(pop_rank.begin(), pop_rank.end(), cat_rng);
  std::vector<double> pop_weight(cfg.n_items);
  for (std::size_t j = 0; j < cfg.n_items; ++j) {
    CatalogItem it;
    it.item_id = static_cast<std::int64_t>(j + 1);
    // the first n_brands items cover every brand once
    it.brand_id = j < cfg.n_brands ? static_cast<std::int64_t>(j + 1)
                                   : std::uniform_int_distribution<std::int64_t>(1, cfg.n_brands)(cat_rng);
    const std::int64_t home_shop = 1 + (it.brand_id - 1) % static_cast<std::int64_t>(cfg.n_shops);
    it.shop_id = detail::bernoulli(0.3, cat_rng)
                     ? std::uniform_int_distribution<std::int64_t>(1, cfg.n_shops)(cat_rng)
                     : home_shop;
    it.quality = std::uniform_real_distribution<double>(0.0, 1.0)(cat_rng);
    items_by_brand[it.brand_id].push_back(it.item_id);
    pop_weight[j] = 1.0 / std::sqrt(static_cast<double>(pop_rank[j]));
    ds.catalog.push_back(it);
  }
  std::discrete_distribution<std::size_t> popular(pop_weight.begin(), pop_weight.end());
  const double log_items = std::log(static_cast<double>(std::max<std::size_t>(cfg.n_items, 2)));

  struct User {
    double d;
    std::vector<double> brand_pref;  // over brand ids 1..n_brands
  };
  std::vector<User> users;
  for (std::size_t u = 0; u < cfg.n_users; ++u) {
    Rng rng(mix_seed(mix_seed(cfg.seed, 2), u));
    User user;
    user.d = cfg.fixed_intent ? *cfg.fixed_intent : detail::draw_beta(cfg.intent_alpha, cfg.intent_beta, rng);
    user.brand_pref = detail::draw_dirichlet(intent_concentration(user.d), cfg.n_brands, rng);
    users.push_back(std::move(user));
  }

  const std::size_t n_pos = static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(cfg.n_candidates)));
  for (std::size_t s = 0; s < cfg.n_sessions; ++s) {
    const std::size_t u = s % cfg.n_users;
    const User& user = users[u];
    Rng rng(mix_seed(mix_seed(cfg.seed, 3), s));
    std::discrete_distribution<std::size_t> brand_draw(user.brand_pref.begin(), user.brand_pref.end());
    auto preferred_item = [&] {
      return detail::pick(items_by_brand[brand_draw(rng) + 1], rng);
    };

    SessionRecord rec;
    rec.session_id = "s" + std::to_string(s);
    rec.user_id = "u" + std::to_string(u);
    rec.intent_d = user.d;

    const std::size_t m = std::uniform_int_distribution<std::size_t>(cfg.history_min, cfg.history_max)(rng);
    std::vector<std::size_t> brand_counts(cfg.n_brands + 1, 0);
    std::size_t item_events = 0;
    for (std::size_t t = 0; t < m; ++t) {
      if (detail::bernoulli(user.d, rng)) {
        BehaviorEvent q;
        q.kind = EventKind::kQuery;
        q.query_id = std::uniform_int_distribution<std::int64_t>(1, cfg.n_queries)(rng);
        q.position = static_cast<std::int64_t>(rec.history.size());
        rec.history.push_back(q);
      }
      const CatalogItem& it = ds.catalog[preferred_item() - 1];
      BehaviorEvent e;
      e.kind = detail::bernoulli(0.2, rng) ? EventKind::kAddCart : EventKind::kClick;
      e.item_id = it.item_id;
      e.brand_id = it.brand_id;
      e.shop_id = it.shop_id;
      e.position = static_cast<std::int64_t>(rec.history.size());
      rec.history.push_back(e);
      ++brand_counts[it.brand_id];
      ++item_events;
    }

    std::set<std::int64_t> chosen;
    std::vector<std::int64_t> picks;
    while (picks.size() < cfg.n_candidates) {
      const std::int64_t id = detail::bernoulli(cfg.personalized_share, rng)
                                  ? preferred_item()
                                  : static_cast<std::int64_t>(popular(rng) + 1);
      if (chosen.insert(id).second) picks.push_back(id);
    }

    struct Cand {
      CandidateItem item;
      double g;
    };
    std::vector<Cand> cands;
    std::normal_distribution<double> noise(0.0, 0.15);
    for (std::int64_t id : picks) {
      const CatalogItem& it = ds.catalog[id - 1];
      const double affinity = item_events ? static_cast<double>(brand_counts[it.brand_id]) / item_events : 0.0;
      const double novelty = 1.0 - affinity;
      Cand c;
      c.item.item_id = it.item_id;
      c.item.brand_id = it.brand_id;
      c.item.shop_id = it.shop_id;
      c.item.relevance_features = {
          it.quality + noise(rng),
          1.0 - std::log(static_cast<double>(pop_rank[id - 1])) / log_items,
          affinity,
      };
      c.g = 0.6 * it.quality + 0.4 * (user.d * novelty + (1.0 - user.d) * affinity);
      cands.push_back(std::move(c));
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      return a.item.relevance_features[0] > b.item.relevance_features[0];
    });

    std::vector<std::size_t> by_g(cands.size());
    std::iota(by_g.begin(), by_g.end(), std::size_t{0});
    std::stable_sort(by_g.begin(), by_g.end(), [&](std::size_t a, std::size_t b) { return cands[a].g > cands[b].g; });
    rec.labels.assign(cands.size(), 0);
    for (std::size_t r = 0; r < n_pos && r < by_g.size(); ++r) rec.labels[by_g[r]] = 1;
    for (int& z : rec.labels)
      if (detail::bernoulli(cfg.label_noise, rng)) z = 1 - z;
    for (auto& c : cands) rec.candidates.push_back(std::move(c.item));
    ds.sessions.push_back(std::move(rec));
  }
  return ds;
}

// Ground-truth propensities are not stored; this recomputes them from a
// record and its catalog (test support for the label construction).
inline std::vector<double> propensities(const SessionRecord& rec, const std::vector<CatalogItem>& catalog) {
  std::size_t item_events = 0;
  std::map<std::int64_t, std::size_t> brand_counts;
  for (const auto& e : rec.history)
    if (e.kind != EventKind::kQuery) {
      ++item_events;
      ++brand_counts[e.brand_id];
    }
  const double d = rec.intent_d.value_or(0.0);
  std::vector<double> g;
  for (const auto& c : rec.candidates) {
    const double a = item_events ? static_cast<double>(brand_counts[c.brand_id]) / item_events : 0.0;
    g.push_back(0.6 * catalog.at(c.item_id - 1).quality + 0.4 * (d * (1 - a) + (1 - d) * a));
  }
  return g;
}

// Brand entropy (natural log) over a history's item events.
inline double history_brand_entropy(const SessionRecord& rec) {
  std::map<std::int64_t, std::size_t> counts;
  std::size_t n = 0;
  for (const auto& e : rec.history)
    if (e.kind != EventKind::kQuery) {
      ++counts[e.brand_id];
      ++n;
    }
  double h = 0;
  for (const auto& [_, c] : counts) {
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

// ---------------------------------------------------------------------------
// JSON schema.

// Thrown with the path of the offending field, e.g. "candidates[3].brand_id".
struct SchemaError : DataError {
  SchemaError(std::string path_, const std::string& what)
      : DataError(path_ + ": " + what), path(std::move(path_)) {}
  std::string path;
};

namespace detail {

inline std::string join_path(const std::string& base, const std::string& field) {
  return base.empty() ? field : base + "." + field;
}

inline const json& field(const json& obj, const std::string& base, const std::string& name) {
  auto it = obj.find(name);
  if (it == obj.end()) throw SchemaError(join_path(base, name), "missing field");
  return *it;
}

inline std::int64_t as_id(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw SchemaError(path, "expected integer");
  const auto x = v.get<std::int64_t>();
  if (x < 0) throw SchemaError(path, "expected integer >= 0");
  return x;
}

inline double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw SchemaError(path, "expected number");
  return v.get<double>();
}

inline std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw SchemaError(path, "expected string");
  return v.get<std::string>();
}

inline const json& as_array(const json& v, const std::string& path) {
  if (!v.is_array()) throw SchemaError(path, "expected array");
  return v;
}

inline void note_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& base,
                         std::vector<std::string>* warnings) {
  if (!warnings) return;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return it.key() == k; }))
      warnings->push_back("unknown field '" + join_path(base, it.key()) + "' ignored");
  }
}

}  // namespace detail

inline json to_json(const SessionRecord& r) {
  json j;
  j["session_id"] = r.session_id;
  j["user_id"] = r.user_id;
  j["intent_d"] = r.intent_d ? json(*r.intent_d) : json(nullptr);
  json hist = json::array();
  for (const auto& e : r.history)
    hist.push_back({{"kind", std::string(to_string(e.kind))},
                    {"item_id", e.item_id},
                    {"query_id", e.query_id},
                    {"brand_id", e.brand_id},
                    {"shop_id", e.shop_id},
                    {"position", e.position}});
  j["history"] = std::move(hist);
  json cands = json::array();
  for (const auto& c : r.candidates)
    cands.push_back({{"item_id", c.item_id},
                     {"brand_id", c.brand_id},
                     {"shop_id", c.shop_id},
                     {"relevance_features", c.relevance_features}});
  j["candidates"] = std::move(cands);
  j["labels"] = r.labels;
  return j;
}

// Parses one session object. Labels may be omitted when require_labels is
// false (re-ranking an unlabeled list).
inline SessionRecord session_from_json(const json& j, std::vector<std::string>* warnings = nullptr,
                                       bool require_labels = true, const std::string& base = "") {
  using namespace detail;
  if (!j.is_object()) throw SchemaError(base.empty() ? "$" : base, "expected object");
  note_unknown(j, {"session_id", "user_id", "intent_d", "history", "candidates", "labels"}, base, warnings);
  SessionRecord r;
  r.session_id = as_string(field(j, base, "session_id"), join_path(base, "session_id"));
  r.user_id = as_string(field(j, base, "user_id"), join_path(base, "user_id"));
  if (auto it = j.find("intent_d"); it != j.end() && !it->is_null()) {
    r.intent_d = as_number(*it, join_path(base, "intent_d"));
    if (*r.intent_d < 0 || *r.intent_d > 1) throw SchemaError(join_path(base, "intent_d"), "must lie in [0, 1]");
  }

  const std::string hpath = join_path(base, "history");
  const json& hist = as_array(field(j, base, "history"), hpath);
  for (std::size_t i = 0; i < hist.size(); ++i) {
    const std::string p = hpath + "[" + std::to_string(i) + "]";
    const json& e = hist[i];
    if (!e.is_object()) throw SchemaError(p, "expected object");
    note_unknown(e, {"kind", "item_id", "query_id", "brand_id", "shop_id", "position"}, p, warnings);
    BehaviorEvent ev;
    const std::string kind = as_string(field(e, p, "kind"), p + ".kind");
    const auto k = parse_event_kind(kind);
    if (!k) throw SchemaError(p + ".kind", "expected one of click, add_cart, query");
    ev.kind = *k;
    ev.item_id = as_id(field(e, p, "item_id"), p + ".item_id");
    ev.query_id = as_id(field(e, p, "query_id"), p + ".query_id");
    ev.brand_id = as_id(field(e, p, "brand_id"), p + ".brand_id");
    ev.shop_id = as_id(field(e, p, "shop_id"), p + ".shop_id");
    ev.position = as_id(field(e, p, "position"), p + ".position");
    if (ev.kind == EventKind::kQuery) {
      if (ev.query_id == 0) throw SchemaError(p + ".query_id", "query event needs a nonzero query_id");
      if (ev.item_id != 0) throw SchemaError(p + ".item_id", "query event must have item_id 0");
    } else {
      if (ev.item_id == 0) throw SchemaError(p + ".item_id", "item event needs a nonzero item_id");
      if (ev.query_id != 0) throw SchemaError(p + ".query_id", "item event must have query_id 0");
    }
    r.history.push_back(ev);
  }

  const std::string cpath = join_path(base, "candidates");
  const json& cands = as_array(field(j, base, "candidates"), cpath);
  if (cands.empty()) throw SchemaError(cpath, "candidate list must not be empty");
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const std::string p = cpath + "[" + std::to_string(i) + "]";
    const json& c = cands[i];
    if (!c.is_object()) throw SchemaError(p, "expected object");
    note_unknown(c, {"item_id", "brand_id", "shop_id", "relevance_features"}, p, warnings);
    CandidateItem ci;
    ci.item_id = as_id(field(c, p, "item_id"), p + ".item_id");
    if (ci.item_id == 0) throw SchemaError(p + ".item_id", "candidate item_id must be >= 1");
    ci.brand_id = as_id(field(c, p, "brand_id"), p + ".brand_id");
    ci.shop_id = as_id(field(c, p, "shop_id"), p + ".shop_id");
    const json& feats = as_array(field(c, p, "relevance_features"), p + ".relevance_features");
    for (std::size_t f = 0; f < feats.size(); ++f)
      ci.relevance_features.push_back(as_number(feats[f], p + ".relevance_features[" + std::to_string(f) + "]"));
    if (i > 0 && ci.relevance_features.size() != r.candidates.front().relevance_features.size())
      throw SchemaError(p + ".relevance_features", "width differs from candidates[0]");
    r.candidates.push_back(std::move(ci));
  }

  const std::string lpath = join_path(base, "labels");
  if (auto it = j.find("labels"); it != j.end()) {
    const json& labels = as_array(*it, lpath);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const std::string p = lpath + "[" + std::to_string(i) + "]";
      const auto z = as_id(labels[i], p);
      if (z > 1) throw SchemaError(p, "expected 0 or 1");
      r.labels.push_back(static_cast<int>(z));
    }
    if (r.labels.size() != r.candidates.size())
      throw SchemaError(lpath, "length " + std::to_string(r.labels.size()) + " differs from candidates (" +
                                   std::to_string(r.candidates.size()) + ")");
  } else if (require_labels) {
    throw SchemaError(lpath, "missing field");
  }
  return r;
}

inline json to_json(const CatalogItem& c) {
  return {{"item_id", c.item_id}, {"brand_id", c.brand_id}, {"shop_id", c.shop_id}, {"quality", c.quality}};
}

inline CatalogItem catalog_item_from_json(const json& j, std::vector<std::string>* warnings = nullptr) {
  using namespace detail;
  if (!j.is_object()) throw SchemaError("$", "expected object");
  note_unknown(j, {"item_id", "brand_id", "shop_id", "quality"}, "", warnings);
  CatalogItem c;
  c.item_id = as_id(field(j, "", "item_id"), "item_id");
  c.brand_id = as_id(field(j, "", "brand_id"), "brand_id");
  c.shop_id = as_id(field(j, "", "shop_id"), "shop_id");
  c.quality = as_number(field(j, "", "quality"), "quality");
  return c;
}

// ---------------------------------------------------------------------------
// JSONL files.

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class T>
void write_jsonl(const std::string& path, const std::vector<T>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto& r : records) out << to_json(r).dump() << '\n';
  if (!out) throw IoError("write failed: " + path);
}

template <class T>
struct Loaded {
  std::vector<T> records;
  std::vector<std::string> warnings;  // "line N: ..." for ignored fields
};

namespace detail {

template <class T, class Parse>
Loaded<T> read_jsonl(const std::string& path, Parse parse) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  Loaded<T> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": malformed JSON: " + e.what());
    }
    std::vector<std::string> w;
    try {
      out.records.push_back(parse(j, &w));
    } catch (const DataError& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    for (auto& msg : w) out.warnings.push_back("line " + std::to_string(lineno) + ": " + msg);
  }
  return out;
}

}  // namespace detail

inline Loaded<SessionRecord> read_sessions(const std::string& path) {
  return detail::read_jsonl<SessionRecord>(
      path, [](const json& j, std::vector<std::string>* w) { return session_from_json(j, w); });
}

inline Loaded<CatalogItem> read_catalog(const std::string& path) {
  return detail::read_jsonl<CatalogItem>(path, [](const json& j, std::vector<std::string>* w) {
    return catalog_item_from_json(j, w);
  });
}

// Throws DataError naming the session and field of the first id outside the
// vocabulary, or a candidate list longer than n_c_max.
inline void check_vocab(const std::vector<SessionRecord>& records, const VocabSizes& v, std::size_t n_c_max) {
  auto check = [](std::int64_t id, std::size_t size, const SessionRecord& r, const char* what) {
    if (id < 0 || static_cast<std::size_t>(id) >= size)
      throw DataError("session " + r.session_id + ": " + what + " " + std::to_string(id) +
                      " outside vocabulary of size " + std::to_string(size));
  };
  for (const auto& r : records) {
    if (r.candidates.size() > n_c_max)
      throw DataError("session " + r.session_id + ": " + std::to_string(r.candidates.size()) +
                      " candidates exceed N_C_max " + std::to_string(n_c_max));
    for (const auto& e : r.history) {
      check(e.item_id, v.items, r, "item_id");
      check(e.query_id, v.queries, r, "query_id");
      check(e.brand_id, v.brands, r, "brand_id");
      check(e.shop_id, v.shops, r, "shop_id");
    }
    for (const auto& c : r.candidates) {
      check(c.item_id, v.items, r, "item_id");
      check(c.brand_id, v.brands, r, "brand_id");
      check(c.shop_id, v.shops, r, "shop_id");
    }
  }
}

// ---------------------------------------------------------------------------
// Splits and batches.

// Deterministic user-level split: a user's sessions all land on one side.
inline std::pair<std::vector<SessionRecord>, std::vector<SessionRecord>> split(
    const std::vector<SessionRecord>& records, double train_frac, std::uint64_t seed) {
  if (!(train_frac > 0 && train_frac < 1)) throw ConfigError("split: train_frac must lie in (0, 1)");
  std::pair<std::vector<SessionRecord>, std::vector<SessionRecord>> out;
  for (const auto& r : records) {
    const double u = static_cast<double>(mix_seed(seed, stable_hash(r.user_id)) >> 11) * 0x1.0p-53;
    (u < train_frac ? out.first : out.second).push_back(r);
  }
  return out;
}

// Seeded shuffle of 0..n-1 per epoch, cut into batches; the last batch may be
// short.
inline std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                                     std::uint64_t epoch) {
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mix_seed(seed, 0x6261746368ULL + epoch));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += batch_size)
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + batch_size)));
  return out;
}

struct Summary {
  std::size_t sessions = 0;
  double label_rate = 0;
  double mean_intent = 0;
};

inline Summary summarize(const std::vector<SessionRecord>& records) {
  Summary s;
  s.sessions = records.size();
  std::size_t labels = 0, positives = 0, with_intent = 0;
  double intent = 0;
  for (const auto& r : records) {
    labels += r.labels.size();
    for (int z : r.labels) positives += static_cast<std::size_t>(z);
    if (r.intent_d) {
      intent += *r.intent_d;
      ++with_intent;
    }
  }
  s.label_rate = labels ? static_cast<double>(positives) / labels : 0.0;
  s.mean_intent = with_intent ? intent / with_intent : 0.0;
  return s;
}

}  // namespace podm::data
