#pragma once

// Run configuration: one JSON file with "model", "train" and "data" sections.
// Missing fields keep their defaults; every violated constraint is reported.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "podm/data.hpp"
#include "podm/errors.hpp"
#include "podm/model.hpp"

namespace podm {

struct TrainConfig {
  double chi = 1.0;
  double learning_rate = 3e-3;
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  std::uint64_t seed = 7;
  double adagrad_epsilon = 1e-8;
  double initial_accumulator = 0.0;
};

struct RunConfig {
  ModelDims model;
  TrainConfig train;
  data::GenConfig data;
};

namespace detail {

using ojson = nlohmann::ordered_json;

class ConfigReader {
 public:
  explicit ConfigReader(std::vector<std::string>& errors) : errors_(errors) {}

  template <class T>
  void read(const ojson& section, const std::string& prefix, const char* name, T& out) {
    auto it = section.find(name);
    if (it == section.end()) return;
    const std::string path = prefix + "." + name;
    if constexpr (std::is_same_v<T, double>) {
      if (!it->is_number()) return fail(path, "expected number");
      out = it->template get<double>();
    } else if constexpr (std::is_same_v<T, std::optional<double>>) {
      if (it->is_null()) {
        out.reset();
        return;
      }
      if (!it->is_number()) return fail(path, "expected number or null");
      out = it->template get<double>();
    } else {
      if (!it->is_number_integer() || it->template get<std::int64_t>() < 0)
        return fail(path, "expected non-negative integer");
      out = static_cast<T>(it->template get<std::uint64_t>());
    }
  }

  void fail(const std::string& path, const std::string& what) { errors_.push_back(path + ": " + what); }

 private:
  std::vector<std::string>& errors_;
};

}  // namespace detail

inline std::vector<std::string> validate(const RunConfig& c) {
  std::vector<std::string> errs;
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) errs.push_back(what);
  };
  need(c.model.d_emb >= 1, "model.d_emb: must be >= 1");
  need(c.model.d_h >= 1, "model.d_h: must be >= 1");
  need(c.model.n_lat >= 1, "model.n_lat: must be >= 1");
  need(c.model.n_c_max >= 1, "model.n_c_max: must be >= 1");
  need(c.model.l_max >= 1, "model.l_max: must be >= 1");
  need(c.model.f_rel >= 1, "model.f_rel: must be >= 1");
  need(c.train.chi >= 0, "train.chi: must be >= 0");
  need(c.train.learning_rate > 0, "train.learning_rate: must be > 0");
  need(c.train.epochs >= 1, "train.epochs: must be >= 1");
  need(c.train.batch_size >= 1, "train.batch_size: must be >= 1");
  need(c.train.adagrad_epsilon > 0, "train.adagrad_epsilon: must be > 0");
  need(c.train.initial_accumulator >= 0, "train.initial_accumulator: must be >= 0");
  need(c.data.n_candidates <= c.model.n_c_max, "data.n_candidates: must not exceed model.n_c_max");
  for (auto& e : data::validate(c.data, "data.")) errs.push_back(std::move(e));
  return errs;
}

inline detail::ojson to_json(const RunConfig& c) {
  detail::ojson j;
  j["model"] = {{"d_emb", c.model.d_emb}, {"d_h", c.model.d_h},         {"n_lat", c.model.n_lat},
                {"n_c_max", c.model.n_c_max}, {"l_max", c.model.l_max}, {"f_rel", c.model.f_rel}};
  j["train"] = {{"chi", c.train.chi},
                {"learning_rate", c.train.learning_rate},
                {"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"seed", c.train.seed},
                {"adagrad_epsilon", c.train.adagrad_epsilon},
                {"initial_accumulator", c.train.initial_accumulator}};
  const auto& d = c.data;
  j["data"] = {{"n_users", d.n_users},
               {"n_sessions", d.n_sessions},
               {"n_items", d.n_items},
               {"n_brands", d.n_brands},
               {"n_shops", d.n_shops},
               {"n_queries", d.n_queries},
               {"n_candidates", d.n_candidates},
               {"history_min", d.history_min},
               {"history_max", d.history_max},
               {"intent_alpha", d.intent_alpha},
               {"intent_beta", d.intent_beta},
               {"fixed_intent", d.fixed_intent ? detail::ojson(*d.fixed_intent) : detail::ojson(nullptr)},
               {"label_noise", d.label_noise},
               {"personalized_share", d.personalized_share},
               {"train_frac", d.train_frac},
               {"seed", d.seed}};
  return j;
}

// Parses and validates; throws ConfigError listing every problem.
inline RunConfig config_from_json(const detail::ojson& j) {
  std::vector<std::string> errs;
  RunConfig c;
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  detail::ConfigReader r(errs);
  auto section = [&](const char* name) -> detail::ojson {
    auto it = j.find(name);
    if (it == j.end()) return detail::ojson::object();
    if (!it->is_object()) {
      r.fail(name, "expected object");
      return detail::ojson::object();
    }
    return *it;
  };
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "model" && it.key() != "train" && it.key() != "data") r.fail(it.key(), "unknown section");

  const auto m = section("model");
  r.read(m, "model", "d_emb", c.model.d_emb);
  r.read(m, "model", "d_h", c.model.d_h);
  r.read(m, "model", "n_lat", c.model.n_lat);
  r.read(m, "model", "n_c_max", c.model.n_c_max);
  r.read(m, "model", "l_max", c.model.l_max);
  r.read(m, "model", "f_rel", c.model.f_rel);

  const auto t = section("train");
  r.read(t, "train", "chi", c.train.chi);
  r.read(t, "train", "learning_rate", c.train.learning_rate);
  r.read(t, "train", "epochs", c.train.epochs);
  r.read(t, "train", "batch_size", c.train.batch_size);
  r.read(t, "train", "seed", c.train.seed);
  r.read(t, "train", "adagrad_epsilon", c.train.adagrad_epsilon);
  r.read(t, "train", "initial_accumulator", c.train.initial_accumulator);

  const auto d = section("data");
  r.read(d, "data", "n_users", c.data.n_users);
  r.read(d, "data", "n_sessions", c.data.n_sessions);
  r.read(d, "data", "n_items", c.data.n_items);
  r.read(d, "data", "n_brands", c.data.n_brands);
  r.read(d, "data", "n_shops", c.data.n_shops);
  r.read(d, "data", "n_queries", c.data.n_queries);
  r.read(d, "data", "n_candidates", c.data.n_candidates);
  r.read(d, "data", "history_min", c.data.history_min);
  r.read(d, "data", "history_max", c.data.history_max);
  r.read(d, "data", "intent_alpha", c.data.intent_alpha);
  r.read(d, "data", "intent_beta", c.data.intent_beta);
  r.read(d, "data", "fixed_intent", c.data.fixed_intent);
  r.read(d, "data", "label_noise", c.data.label_noise);
  r.read(d, "data", "personalized_share", c.data.personalized_share);
  r.read(d, "data", "train_frac", c.data.train_frac);
  r.read(d, "data", "seed", c.data.seed);

  for (auto& e : validate(c)) errs.push_back(std::move(e));
  if (!errs.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errs) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data::IoError("cannot open config " + path);
  detail::ojson j;
  try {
    j = detail::ojson::parse(in);
  } catch (const detail::ojson::parse_error& e) {
    throw ConfigError(path + ": malformed JSON: " + e.what());
  }
  return config_from_json(j);
}

}  // namespace podm
