#pragma once

// The five CLI subcommands as functions over streams. Each returns the
// process exit code: 0 ok, 1 usage/config/schema, 2 I/O.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "podm/checkpoint.hpp"
#include "podm/config.hpp"
#include "podm/data.hpp"
#include "podm/metrics.hpp"
#include "podm/trainer.hpp"

namespace podm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitIo = 2;

// Shortest decimal that round-trips the double.
inline std::string num(double x) { return nlohmann::json(x).dump(); }

inline int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const data::IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const data::SchemaError& e) {
    err << "error: schema violation at " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw data::IoError("cannot create directory " + dir);
}

inline std::string join(const std::string& dir, const char* file) {
  return (std::filesystem::path(dir) / file).string();
}

// Per-session evaluation records kept next to the metrics CSV for `report`.
inline std::string sessions_sidecar(const std::string& csv_path) { return csv_path + ".sessions.jsonl"; }

// ---------------------------------------------------------------------------

struct GenDataArgs {
  std::string config;
  std::string out_dir;
};

inline int gen_data(const GenDataArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_config(a.config);
    const data::Dataset ds = data::generate(cfg.data);
    auto [train, test] = data::split(ds.sessions, cfg.data.train_frac, cfg.data.seed);
    ensure_dir(a.out_dir);
    data::write_jsonl(join(a.out_dir, "catalog.jsonl"), ds.catalog);
    data::write_jsonl(join(a.out_dir, "train.jsonl"), train);
    data::write_jsonl(join(a.out_dir, "test.jsonl"), test);
    const auto all = data::summarize(ds.sessions);
    out << "sessions      " << all.sessions << " (train " << train.size() << ", test " << test.size() << ")\n";
    out << "catalog items " << ds.catalog.size() << '\n';
    out << std::fixed << std::setprecision(4);
    out << "label rate    " << all.label_rate << '\n';
    out << "mean intent   " << all.mean_intent << '\n';
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string data_dir;
  std::string out;
  Mode mode = Mode::kPodm;
};

inline std::string epoch_line(const EpochLog& l) {
  return "epoch " + std::to_string(l.epoch) + " L1 " + num(l.mean_l1) + " L2 " + num(l.mean_l2) + " L_total " +
         num(l.mean_total) + " train_auc " + num(l.train_auc);
}

inline int train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_config(a.config);
    const auto loaded = data::read_sessions(join(a.data_dir, "train.jsonl"));
    for (const auto& w : loaded.warnings) err << "warning: train.jsonl " << w << '\n';
    const VocabSizes vocab = cfg.data.vocab();
    data::check_vocab(loaded.records, vocab, cfg.model.n_c_max);
    Model model(cfg.model, vocab, cfg.train.seed);
    CheckpointMeta meta;
    const auto logs = podm::train(model, loaded.records, cfg.train, a.mode,
                                  [&](const EpochLog& l) { out << epoch_line(l) << '\n' << std::flush; });
    meta.epochs = logs.size();
    if (!logs.empty()) meta.last = logs.back();
    save_checkpoint(a.out, cfg, a.mode, model, meta);
    out << "wrote " << a.out << '\n';
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string report;
};

inline nlohmann::ordered_json record_json(const metrics::EvalRecord& r) {
  return {{"session_id", r.session_id},
          {"intent_d", r.intent_d ? nlohmann::ordered_json(*r.intent_d) : nlohmann::ordered_json(nullptr)},
          {"ranking", r.ranking},
          {"final_scores", r.final_scores},
          {"labels", r.labels},
          {"brand_ids", r.brand_ids},
          {"shop_ids", r.shop_ids},
          {"tau_mean", r.tau_mean}};
}

inline metrics::EvalRecord record_from_json(const nlohmann::ordered_json& j) {
  metrics::EvalRecord r;
  r.session_id = j.at("session_id").get<std::string>();
  if (!j.at("intent_d").is_null()) r.intent_d = j.at("intent_d").get<double>();
  r.ranking = j.at("ranking").get<std::vector<std::size_t>>();
  r.final_scores = j.at("final_scores").get<std::vector<double>>();
  r.labels = j.at("labels").get<std::vector<int>>();
  r.brand_ids = j.at("brand_ids").get<std::vector<std::int64_t>>();
  r.shop_ids = j.at("shop_ids").get<std::vector<std::int64_t>>();
  r.tau_mean = j.at("tau_mean").get<std::vector<double>>();
  if (r.ranking.size() != r.brand_ids.size() || r.ranking.size() != r.shop_ids.size())
    throw DataError("session " + r.session_id + ": ranking and attribute lengths differ");
  for (std::size_t i : r.ranking)
    if (i >= r.brand_ids.size()) throw DataError("session " + r.session_id + ": ranking index out of range");
  return r;
}

inline void print_metric_table(const std::vector<metrics::MetricValue>& ms, std::ostream& out) {
  out << std::left << std::setw(26) << "metric" << std::right << std::setw(10) << "value" << std::setw(12)
      << "sessions" << std::setw(10) << "skipped" << '\n';
  for (const auto& m : ms) {
    std::ostringstream v;
    if (m.value)
      v << std::fixed << std::setprecision(4) << *m.value;
    else
      v << "skipped";
    out << std::left << std::setw(26) << m.name << std::right << std::setw(10) << v.str() << std::setw(12)
        << m.n_sessions << std::setw(10) << m.skipped << '\n';
  }
}

inline int eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Checkpoint ck = load_checkpoint(a.checkpoint);
    const auto loaded = data::read_sessions(a.data);
    for (const auto& w : loaded.warnings) err << "warning: " << a.data << " " << w << '\n';
    data::check_vocab(loaded.records, ck.model.vocab(), ck.config.model.n_c_max);
    const auto records = evaluate(ck.model, loaded.records, ck.mode);
    const auto ms = metrics::metric_suite(records);

    std::ofstream csv(a.report, std::ios::binary);
    if (!csv) throw data::IoError("cannot open " + a.report + " for writing");
    csv << "name,value,n_sessions,skipped\n";
    for (const auto& m : ms)
      csv << m.name << ',' << (m.value ? num(*m.value) : std::string()) << ',' << m.n_sessions << ',' << m.skipped
          << '\n';
    if (!csv) throw data::IoError("write failed: " + a.report);

    const std::string side = sessions_sidecar(a.report);
    std::ofstream sj(side, std::ios::binary);
    if (!sj) throw data::IoError("cannot open " + side + " for writing");
    for (const auto& r : records) sj << record_json(r).dump() << '\n';
    if (!sj) throw data::IoError("write failed: " + side);

    out << "mode " << to_string(ck.mode) << ", " << records.size() << " sessions\n";
    print_metric_table(ms, out);
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------

struct RerankArgs {
  std::string checkpoint;
  std::string session;
  std::optional<std::size_t> top_k;  // N_F; default all candidates
};

inline int rerank(const RerankArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (a.top_k && *a.top_k == 0) throw UsageError("--top-k must be >= 1");
    const Checkpoint ck = load_checkpoint(a.checkpoint);
    std::ifstream in(a.session, std::ios::binary);
    if (!in) throw data::IoError("cannot open " + a.session);
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::ordered_json::parse_error& e) {
      throw DataError(a.session + ": malformed JSON: " + e.what());
    }
    std::vector<std::string> warnings;
    const SessionRecord s = data::session_from_json(j, &warnings, false);
    for (const auto& w : warnings) err << "warning: " << w << '\n';
    data::check_vocab({s}, ck.model.vocab(), ck.config.model.n_c_max);
    RankedResult r = ck.model.rerank(s, ck.mode);
    if (a.top_k && *a.top_k < r.ranking.size()) r.ranking.resize(*a.top_k);
    nlohmann::ordered_json o;
    o["ranking"] = r.ranking;
    o["base_scores"] = r.base_scores;
    o["utilities"] = r.utilities;
    o["final_scores"] = r.final_scores;
    out << o.dump() << '\n';
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::string eval_csv;
  std::string plot_data;
  std::size_t k = 10;
};

inline int report(const ReportArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    {
      std::ifstream csv(a.eval_csv, std::ios::binary);
      if (!csv) throw data::IoError("cannot open " + a.eval_csv);
      std::string header;
      std::getline(csv, header);
      if (header != "name,value,n_sessions,skipped")
        throw DataError(a.eval_csv + ": not an eval report (header '" + header + "')");
      std::string line;
      while (std::getline(csv, line)) out << "  " << line << '\n';
    }
    const std::string side = sessions_sidecar(a.eval_csv);
    std::ifstream in(side, std::ios::binary);
    if (!in) throw data::IoError("cannot open " + side + " (written by eval next to the CSV)");
    std::vector<metrics::EvalRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        records.push_back(record_from_json(nlohmann::ordered_json::parse(line)));
      } catch (const nlohmann::ordered_json::exception& e) {
        throw DataError(side + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }

    // One row per session whose list is long enough for entropy@k.
    std::vector<const metrics::EvalRecord*> kept;
    std::vector<double> entropy;
    std::vector<std::vector<double>> taus;
    for (const auto& r : records)
      if (auto h = metrics::entropy_at_k(r, metrics::Attribute::kBrand, a.k)) {
        kept.push_back(&r);
        entropy.push_back(*h);
        taus.push_back(r.tau_mean);
      }
    const auto groups = metrics::octile_groups(entropy);
    const bool have_tau = !taus.empty() && std::all_of(taus.begin(), taus.end(), [&](const auto& t) {
      return !t.empty() && t.size() == taus.front().size();
    });
    const auto proj = have_tau ? metrics::pca_2d(taus) : std::vector<std::pair<double, double>>(kept.size());

    std::ofstream tsv(a.plot_data, std::ios::binary);
    if (!tsv) throw data::IoError("cannot open " + a.plot_data + " for writing");
    tsv << "intent_d\tentropy@" << a.k << "\tgroup\tpca_x\tpca_y\n";
    std::size_t with_intent = 0;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      const auto& d = kept[i]->intent_d;
      if (d) ++with_intent;
      tsv << (d ? num(*d) : std::string("NA")) << '\t' << num(entropy[i]) << '\t' << groups[i] << '\t'
          << num(proj[i].first) << '\t' << num(proj[i].second) << '\n';
    }
    if (!tsv) throw data::IoError("write failed: " + a.plot_data);

    out << "wrote " << kept.size() << " rows to " << a.plot_data << '\n';
    if (with_intent < metrics::kMinCorrelationRecords) {
      out << "notice: " << with_intent << " sessions carry intent_d; correlation section omitted\n";
      return kExitOk;
    }
    const auto corr = metrics::intent_entropy_correlation(records, a.k);
    out << std::fixed << std::setprecision(4);
    out << "spearman(intent_d, entropy@" << a.k << ") = " << corr.spearman << " over " << corr.rows.size()
        << " sessions\n";
    out << "group  sessions  mean_entropy  mean_intent\n";
    for (int g = 0; g < 8; ++g) {
      double h = 0, d = 0;
      std::size_t n = 0;
      for (const auto& row : corr.rows)
        if (row.group == g) {
          h += row.entropy;
          d += row.intent_d;
          ++n;
        }
      out << std::setw(5) << g << std::setw(10) << n << std::setw(14) << (n ? h / n : 0.0) << std::setw(13)
          << (n ? d / n : 0.0) << '\n';
    }
    return kExitOk;
  });
}

}  // namespace podm::cli
