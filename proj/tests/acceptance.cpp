// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "podm.hpp"
#include "workdir.hpp"

using namespace podm;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void verdict(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s criterion %d (%s): %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// 1 ---------------------------------------------------------------------------

void gradient_correctness() {
  const auto t0 = Clock::now();
  data::GenConfig g;
  g.n_users = 4;
  g.n_sessions = 2;
  g.n_items = 30;
  g.n_brands = 5;
  g.n_shops = 5;
  g.n_queries = 5;
  g.n_candidates = 6;
  g.history_min = 3;
  g.history_max = 5;
  g.seed = 11;
  const auto batch = data::generate(g).sessions;
  ModelDims d;
  d.d_emb = 4;
  d.d_h = 6;
  d.n_lat = 3;
  d.n_c_max = 6;
  d.l_max = 8;
  d.f_rel = data::kRelevanceFeatures;
  Model m(d, g.vocab(), 13);
  // move the utility weight off zero so every path carries gradient
  Parameter& w = m.params().get("sam.utility_weight");
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1, 1);
  for (double& v : w.value.data()) v = u(rng);

  const double chi = 1.0;
  std::size_t counted = 0;
  for (const auto& s : batch)
    for (int z : s.labels)
      if (z) {
        ++counted;
        break;
      }
  auto loss = [&](Tape& t) {
    Var l1 = t.scalar(0.0), l2 = t.scalar(0.0);
    for (const auto& s : batch) {
      const auto f = m.forward(t, s, Mode::kPodm);
      l1 = add(l1, scale(f.mi_loss, 1.0 / static_cast<double>(batch.size())));
      l2 = add(l2, scale(f.order_loss.loss, counted ? 1.0 / static_cast<double>(counted) : 0.0));
    }
    return sam::total_loss(l1, l2, chi);
  };
  const auto report = grad_check(loss, m.params(), 1e-5, 1e-4);
  const double secs = seconds_since(t0);
  std::size_t n = 0;
  for (const auto& [_, p] : m.params()) n += p.value.size();
  std::string worst;
  for (const auto& e : report.entries)
    if (e.max_rel_error == report.max_rel_error) worst = e.name;
  verdict(1, "gradient correctness", report.passed && secs < 30,
          fmt("max rel error %.3g over %.0f values (worst: ", report.max_rel_error, static_cast<double>(n)) + worst +
              fmt("), %.1f s", secs));
}

// 2 ---------------------------------------------------------------------------

void kl_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> mu(-1.5, 1.5), var(0.3, 2.5);
  std::normal_distribution<double> z(0.0, 1.0);
  auto random_gaussian = [&] {
    std::vector<double> m(8), v(8);
    for (auto& x : m) x = mu(rng);
    for (auto& x : v) x = var(rng);
    return DiagGaussian(m, v);
  };
  double worst_rel = 0, worst_self = 0, min_kl = 1e300;
  for (int pair = 0; pair < 50; ++pair) {
    const DiagGaussian p = random_gaussian(), q = random_gaussian();
    const double closed = kl_divergence(p, q);
    // E_p[log p - log q] over reparameterized samples
    double acc = 0;
    std::vector<double> noise(8);
    for (int s = 0; s < 200000; ++s) {
      for (double& e : noise) e = z(rng);
      const auto x = sample(p, noise);
      acc += log_pdf(p, x) - log_pdf(q, x);
    }
    const double mc = acc / 200000.0;
    worst_rel = std::max(worst_rel, std::abs(mc - closed) / closed);
    worst_self = std::max(worst_self, std::abs(kl_divergence(p, p)));
    min_kl = std::min({min_kl, closed, kl_divergence(q, p)});
  }
  const double secs = seconds_since(t0);
  verdict(2, "KL oracle equivalence", worst_rel < 0.02 && worst_self <= 1e-12 && min_kl >= 0 && secs < 60,
          fmt("worst MC rel error %.4f, max KL(p,p) %.2g, min KL %.3f, %.1f s", worst_rel, worst_self, min_kl, secs));
}

// 3 ---------------------------------------------------------------------------

void metric_suite_check() {
  using metrics::EvalRecord;
  bool ok = true;
  std::string notes;
  auto expect = [&](bool c, const char* what) {
    if (!c) {
      ok = false;
      notes += std::string(" ") + what;
    }
  };
  const std::vector<int> z = {1, 1, 0, 0};
  expect(metrics::auc(std::vector<double>{4, 3, 2, 1}, z) == 1.0, "auc-perfect");
  expect(metrics::auc(std::vector<double>{1, 2, 3, 4}, z) == 0.0, "auc-reversed");
  expect(metrics::auc(std::vector<double>{2, 2, 2, 2}, z) == 0.5, "auc-tied");

  auto ranked = [](std::vector<double> s, std::vector<int> l, std::vector<std::int64_t> brands) {
    EvalRecord r;
    r.final_scores = std::move(s);
    r.labels = std::move(l);
    r.ranking = sam::rank_by_score(r.final_scores);
    r.brand_ids = std::move(brands);
    r.shop_ids.assign(r.labels.size(), 1);
    return r;
  };
  const auto nd = metrics::ndcg(ranked({3, 2, 1}, {0, 0, 1}, {1, 1, 1}));
  expect(nd && std::abs(*nd - 0.5) < 1e-12, "ndcg-rank3");
  const auto same = metrics::entropy_at_k(ranked(std::vector<double>(10, 1), std::vector<int>(10, 0),
                                                 std::vector<std::int64_t>(10, 4)),
                                          metrics::Attribute::kBrand, 10);
  expect(same && *same == 0.0, "entropy-same");
  const auto half = metrics::entropy_at_k(
      ranked(std::vector<double>(10, 1), std::vector<int>(10, 0), {1, 1, 1, 1, 1, 2, 2, 2, 2, 2}),
      metrics::Attribute::kBrand, 10);
  expect(half && std::abs(*half - std::log(2.0)) <= 1e-12, "entropy-split");

  // pair-counting oracle
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  std::size_t compared = 0, mismatches = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 5 + static_cast<std::size_t>(t % 26);
    EvalRecord r;
    for (std::size_t i = 0; i < n; ++i) {
      r.final_scores.push_back(std::round(u(rng) * 8) / 8 + 0.01);
      r.labels.push_back(u(rng) < 0.3 ? 1 : 0);
      r.brand_ids.push_back(1);
      r.shop_ids.push_back(1);
    }
    r.ranking = sam::rank_by_score(r.final_scores);
    for (std::size_t k : {1, 3, 5, 10}) {
      double wins = 0, pairs = 0;
      const std::size_t top = std::min(k, n);
      for (std::size_t a = 0; a < top; ++a)
        for (std::size_t b = 0; b < top; ++b) {
          const std::size_t i = r.ranking[a], j = r.ranking[b];
          if (r.labels[i] != 1 || r.labels[j] != 0) continue;
          pairs += 1;
          wins += r.final_scores[i] > r.final_scores[j] ? 1.0 : r.final_scores[i] == r.final_scores[j] ? 0.5 : 0.0;
        }
      const auto got = metrics::auc_ord_at_k(r, k);
      ++compared;
      if (pairs == 0 ? got.has_value() : (!got || std::abs(*got - wins / pairs) > 1e-12)) ++mismatches;
    }
  }
  expect(mismatches == 0, "auc_ord-oracle");
  verdict(3, "metric trivial suite", ok,
          fmt("auc_ord@k vs pair counting: %.0f mismatches in %.0f comparisons", static_cast<double>(mismatches),
              static_cast<double>(compared)) +
              (notes.empty() ? "" : ";" + notes));
}

// 4-6, 8 --------------------------------------------------------------------

struct Arm {
  std::vector<EpochLog> logs;
  std::vector<metrics::MetricValue> metrics;
  double seconds = 0;
};

std::optional<double> metric(const Arm& a, const std::string& name) {
  for (const auto& m : a.metrics)
    if (m.name == name) return m.value;
  return std::nullopt;
}

void end_to_end() {
  const RunConfig cfg;  // default dataset and training setup
  const auto ds = data::generate(cfg.data);
  const auto [train, test] = data::split(ds.sessions, cfg.data.train_frac, cfg.data.seed);
  std::printf("default data: %zu train / %zu test sessions, %zu epochs\n", train.size(), test.size(),
              cfg.train.epochs);
  std::fflush(stdout);

  {
    Model m(cfg.model, cfg.data.vocab(), cfg.train.seed);
    std::size_t mismatches = 0;
    for (const auto& s : test)
      if (m.rerank(s, Mode::kPodm).ranking != m.rerank(s, Mode::kBaseline).ranking) ++mismatches;
    verdict(4, "no-op at initialization", mismatches == 0,
            fmt("%.0f ranking mismatches over %.0f test sessions", static_cast<double>(mismatches),
                static_cast<double>(test.size())));
  }

  auto run = [&](Mode mode) {
    Arm a;
    const auto t0 = Clock::now();
    Model m(cfg.model, cfg.data.vocab(), cfg.train.seed);
    a.logs = podm::train(m, train, cfg.train, mode, [&](const EpochLog& l) {
      std::printf("  %s %s\n", std::string(to_string(mode)).c_str(), cli::epoch_line(l).c_str());
      std::fflush(stdout);
    });
    a.metrics = metrics::metric_suite(evaluate(m, test, mode));
    a.seconds = seconds_since(t0);
    return a;
  };
  const Arm base = run(Mode::kBaseline);
  const Arm podm_arm = run(Mode::kPodm);

  const double b_brand = *metric(base, "brand@10"), p_brand = *metric(podm_arm, "brand@10");
  const double b_auc = *metric(base, "auc_ord@10"), p_auc = *metric(podm_arm, "auc_ord@10");
  const double lift = (p_brand - b_brand) / b_brand;
  const double drop = b_auc - p_auc;
  const double secs = base.seconds + podm_arm.seconds;
  verdict(5, "end-to-end direction", lift >= 0.02 && drop <= 0.005 && secs < 300,
          fmt("brand@10 %.4f -> %.4f (%+.2f%% relative, need >= +2%%); ", b_brand, p_brand, 100 * lift) +
              fmt("auc_ord@10 %.4f -> %.4f (drop %.4f, need <= 0.005); %.0f s", b_auc, p_auc, drop, secs));

  const auto b_rho = metric(base, "spearman_intent_entropy"), p_rho = metric(podm_arm, "spearman_intent_entropy");
  verdict(6, "intent-entropy correlation", p_rho && b_rho && *p_rho >= 0.3 && *p_rho > *b_rho,
          fmt("rho podm %.4f, baseline %.4f (need podm >= 0.3 and > baseline)", p_rho.value_or(NAN),
              b_rho.value_or(NAN)));

  double worst = 0;
  std::size_t epochs = 0;
  for (const Arm* a : {&base, &podm_arm})
    for (const auto& l : a->logs) {
      worst = std::max(worst, std::abs(l.mean_total - (l.mean_l1 + cfg.train.chi * l.mean_l2)));
      ++epochs;
    }
  // a second weighting, on a small run
  const RunConfig small = config_from_json(workdir::small_config_json(3));
  RunConfig half = small;
  half.train.chi = 0.5;
  const auto sds = data::generate(half.data);
  Model sm(half.model, half.data.vocab(), half.train.seed);
  for (const auto& l : podm::train(sm, sds.sessions, half.train, Mode::kPodm)) {
    worst = std::max(worst, std::abs(l.mean_total - (l.mean_l1 + half.train.chi * l.mean_l2)));
    ++epochs;
  }
  verdict(8, "loss composition", worst <= 1e-12,
          fmt("max |L_total - (L1 + chi L2)| = %.3g over %.0f logged epochs (chi 1 and 0.5)", worst,
              static_cast<double>(epochs)));
}

// 7 ---------------------------------------------------------------------------

void determinism() {
  workdir::TempDir dir("acceptance_determinism");
  const std::string config = dir / "config.json";
  workdir::write_text(config, workdir::small_config_json(2).dump());
  std::vector<std::string> diffs;
  std::size_t files = 0;
  bool ran = true;
  std::string outputs[2];
  for (int r = 0; r < 2; ++r) {
    const std::string run = dir / ("run" + std::to_string(r));
    std::ostringstream out, err;
    ran &= cli::gen_data({config, run + "/data"}, out, err) == cli::kExitOk;
    ran &= cli::train({config, run + "/data", run + "/model.json", Mode::kPodm}, out, err) == cli::kExitOk;
    ran &= cli::eval({run + "/model.json", run + "/data/test.jsonl", run + "/eval.csv"}, out, err) == cli::kExitOk;
    if (!err.str().empty()) std::cerr << err.str();
    outputs[r] = out.str();
  }
  for (const char* f : {"data/catalog.jsonl", "data/train.jsonl", "data/test.jsonl", "model.json", "eval.csv",
                        "eval.csv.sessions.jsonl"}) {
    ++files;
    const std::string a = workdir::slurp(dir / (std::string("run0/") + f));
    const std::string b = workdir::slurp(dir / (std::string("run1/") + f));
    if (a.empty() || a != b) diffs.push_back(f);
  }
  // stdout differs only in the output paths it echoes
  std::string o1 = outputs[1];
  for (std::size_t p; (p = o1.find("run1")) != std::string::npos;) o1.replace(p, 4, "run0");
  if (outputs[0] != o1) diffs.push_back("stdout");
  std::string detail = fmt("%.0f output files plus stdout compared byte for byte", static_cast<double>(files));
  for (const auto& d : diffs) detail += "; differs: " + d;
  if (!ran) detail += "; a command failed";
  verdict(7, "determinism", ran && diffs.empty(), detail);
}

}  // namespace

int main() {
  try {
    gradient_correctness();
    kl_oracle();
    metric_suite_check();
    determinism();
    end_to_end();
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance run aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
