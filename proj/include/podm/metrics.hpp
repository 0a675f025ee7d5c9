#pragma once

// Accuracy and diversity metrics over ranked sessions. Every function is a
// pure function of its inputs; "skip" is std::nullopt.
//
// AUC_ord@k is defined here as the AUC of final scores restricted to the
// top-k positions of the final ranking, skipped when those k items do not
// contain both a positive and a negative, and macro-averaged over sessions.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "podm/errors.hpp"

namespace podm::metrics {

struct EvalRecord {
  std::string session_id;
  std::vector<std::size_t> ranking;  // permutation of candidate indices
  std::vector<double> final_scores;  // indexed by candidate
  std::vector<int> labels;
  std::vector<std::int64_t> brand_ids;
  std::vector<std::int64_t> shop_ids;
  std::optional<double> intent_d;
  std::vector<double> tau_mean;      // user preference mean, for projections
};

enum class Attribute { kBrand, kShop };

// P(random positive outscores random negative), ties count 1/2. Sort-based,
// O(n log n) with average handling of tied groups.
inline std::optional<double> auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DimensionError("auc: scores/labels length mismatch");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos = 0, neg = 0, wins = 0;
  double neg_below = 0;  // negatives strictly below the current tie group
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    double gp = 0, gn = 0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] ? gp : gn) += 1;
      ++j;
    }
    wins += gp * (neg_below + 0.5 * gn);
    neg_below += gn;
    pos += gp;
    neg += gn;
    i = j;
  }
  if (pos == 0 || neg == 0) return std::nullopt;
  return wins / (pos * neg);
}

inline std::optional<double> auc_ord_at_k(const EvalRecord& r, std::size_t k) {
  if (k < 2) return std::nullopt;  // a single item never holds both classes
  const std::size_t top = std::min(k, r.ranking.size());
  std::vector<double> s;
  std::vector<int> z;
  for (std::size_t p = 0; p < top; ++p) {
    s.push_back(r.final_scores[r.ranking[p]]);
    z.push_back(r.labels[r.ranking[p]]);
  }
  return auc(s, z);
}

// Binary-gain NDCG over the full ranking.
inline std::optional<double> ndcg(const EvalRecord& r) {
  double dcg = 0, ideal = 0;
  std::size_t positives = 0;
  for (std::size_t p = 0; p < r.ranking.size(); ++p)
    if (r.labels[r.ranking[p]]) dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  for (int z : r.labels) positives += z ? 1 : 0;
  if (positives == 0) return std::nullopt;
  for (std::size_t p = 0; p < positives; ++p) ideal += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  return dcg / ideal;
}

// Shannon entropy (natural log) of the attribute among the top-k items.
inline double attribute_entropy(std::span<const std::int64_t> values) {
  std::map<std::int64_t, std::size_t> counts;
  for (auto v : values) ++counts[v];
  const double k = static_cast<double>(values.size());
  double h = 0;
  for (const auto& [_, c] : counts) {
    const double p = static_cast<double>(c) / k;
    h -= p * std::log(p);
  }
  return h;
}

inline std::optional<double> entropy_at_k(const EvalRecord& r, Attribute attr, std::size_t k) {
  if (k == 0 || k > r.ranking.size()) return std::nullopt;
  const auto& ids = attr == Attribute::kBrand ? r.brand_ids : r.shop_ids;
  std::vector<std::int64_t> top;
  for (std::size_t p = 0; p < k; ++p) top.push_back(ids[r.ranking[p]]);
  return attribute_entropy(top);
}

// Ranks with ties averaged (1-based).
inline std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && x[idx[j]] == x[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j - 1) + 1.0;
    for (std::size_t t = i; t < j; ++t) ranks[idx[t]] = r;
    i = j;
  }
  return ranks;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("spearman: length mismatch");
  if (x.size() < 2) throw DomainError("spearman needs at least two points");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

// Top-2 principal component projection of row vectors (deterministic signs:
// the largest-magnitude loading of each component is positive).
inline std::vector<std::pair<double, double>> pca_2d(const std::vector<std::vector<double>>& rows) {
  std::vector<std::pair<double, double>> out(rows.size(), {0.0, 0.0});
  if (rows.empty()) return out;
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index d = static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rows[i][j];
  x.rowwise() -= x.colwise().mean();
  const Eigen::MatrixXd cov = (x.transpose() * x) / std::max<double>(1.0, static_cast<double>(n - 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  // eigenvalues ascending
  Eigen::MatrixXd comps(d, 2);
  comps.setZero();
  for (int c = 0; c < 2 && c < d; ++c) {
    Eigen::VectorXd v = es.eigenvectors().col(d - 1 - c);
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    comps.col(c) = v;
  }
  const Eigen::MatrixXd proj = x * comps;
  for (Eigen::Index i = 0; i < n; ++i) out[i] = {proj(i, 0), proj(i, 1)};
  return out;
}

// Eight groups by entropy octile: sorted by (entropy, input order), the
// i-th of n values lands in group floor(8 i / n).
inline std::vector<int> octile_groups(std::span<const double> values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<int> groups(values.size());
  const std::size_t n = values.size();
  for (std::size_t r = 0; r < n; ++r) groups[idx[r]] = static_cast<int>((8 * r) / n);
  return groups;
}

struct CorrelationRow {
  double intent_d = 0;
  double entropy = 0;
  int group = 0;
  double pca_x = 0;
  double pca_y = 0;
};

struct IntentCorrelation {
  double spearman = 0;
  std::vector<CorrelationRow> rows;
};

inline constexpr std::size_t kMinCorrelationRecords = 20;

// Spearman rho between ground-truth intent diversity and Brand@k entropy of
// the result, plus per-record plot rows. Records without intent_d or with
// fewer than k candidates are ignored.
inline IntentCorrelation intent_entropy_correlation(std::span<const EvalRecord> records, std::size_t k = 10) {
  std::vector<double> d, h;
  std::vector<std::vector<double>> taus;
  for (const auto& r : records) {
    if (!r.intent_d) continue;
    const auto e = entropy_at_k(r, Attribute::kBrand, k);
    if (!e) continue;
    d.push_back(*r.intent_d);
    h.push_back(*e);
    taus.push_back(r.tau_mean);
  }
  if (d.size() < kMinCorrelationRecords)
    throw DomainError("intent_entropy_correlation needs at least " + std::to_string(kMinCorrelationRecords) +
                      " records with intent, got " + std::to_string(d.size()));
  IntentCorrelation out;
  out.spearman = spearman(d, h);
  const auto groups = octile_groups(h);
  const bool have_tau = std::all_of(taus.begin(), taus.end(), [&](const auto& t) {
    return !t.empty() && t.size() == taus.front().size();
  });
  const auto proj = have_tau ? pca_2d(taus) : std::vector<std::pair<double, double>>(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out.rows.push_back({d[i], h[i], groups[i], proj[i].first, proj[i].second});
  return out;
}

// ---------------------------------------------------------------------------
// Dataset aggregation.

struct MetricValue {
  std::string name;
  std::optional<double> value;  // nullopt when every session was skipped
  std::size_t n_sessions = 0;   // sessions that contributed
  std::size_t skipped = 0;
};

template <class F>
MetricValue macro_average(std::string name, std::span<const EvalRecord> records, F per_record) {
  MetricValue m{std::move(name), std::nullopt, 0, 0};
  double acc = 0;
  for (const auto& r : records) {
    const std::optional<double> v = per_record(r);
    if (v) {
      acc += *v;
      ++m.n_sessions;
    } else {
      ++m.skipped;
    }
  }
  if (m.n_sessions) m.value = acc / static_cast<double>(m.n_sessions);
  return m;
}

// The evaluation suite: AUC_ord@{1,3,5,10}, NDCG, Brand@{10,20},
// Shop@{10,20} and the intent-entropy Spearman correlation.
inline std::vector<MetricValue> metric_suite(std::span<const EvalRecord> records) {
  std::vector<MetricValue> out;
  for (std::size_t k : {1, 3, 5, 10})
    out.push_back(macro_average("auc_ord@" + std::to_string(k), records,
                                [k](const EvalRecord& r) { return auc_ord_at_k(r, k); }));
  out.push_back(macro_average("ndcg", records, [](const EvalRecord& r) { return ndcg(r); }));
  for (auto [label, attr] : {std::pair{"brand", Attribute::kBrand}, std::pair{"shop", Attribute::kShop}})
    for (std::size_t k : {10, 20})
      out.push_back(macro_average(std::string(label) + "@" + std::to_string(k), records,
                                  [attr, k](const EvalRecord& r) { return entropy_at_k(r, attr, k); }));
  MetricValue corr{"spearman_intent_entropy", std::nullopt, 0, records.size()};
  std::size_t with_intent = 0;
  for (const auto& r : records)
    if (r.intent_d && entropy_at_k(r, Attribute::kBrand, 10)) ++with_intent;
  if (with_intent >= kMinCorrelationRecords) {
    corr.value = intent_entropy_correlation(records).spearman;
    corr.n_sessions = with_intent;
    corr.skipped = records.size() - with_intent;
  }
  out.push_back(std::move(corr));
  return out;
}

}  // namespace podm::metrics
