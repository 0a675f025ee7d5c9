#pragma once

// Versioned JSON checkpoint: config echo, mode, vocabulary sizes, every
// parameter as {shape, row-major values}, and training metadata.

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "podm/config.hpp"
#include "podm/model.hpp"
#include "podm/trainer.hpp"

namespace podm {

inline constexpr int kCheckpointVersion = 1;

struct CheckpointMeta {
  std::size_t epochs = 0;
  std::optional<EpochLog> last;  // absent for an untrained model
};

struct Checkpoint {
  RunConfig config;
  Mode mode = Mode::kPodm;
  CheckpointMeta meta;
  Model model;
};

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline nlohmann::ordered_json checkpoint_json(const RunConfig& cfg, Mode mode, const Model& model,
                                              const CheckpointMeta& meta) {
  using ojson = nlohmann::ordered_json;
  ojson j;
  j["format_version"] = kCheckpointVersion;
  j["config"] = to_json(cfg);
  j["mode"] = std::string(to_string(mode));
  const VocabSizes& v = model.vocab();
  j["vocab"] = {{"items", v.items}, {"brands", v.brands}, {"shops", v.shops}, {"queries", v.queries}};
  ojson params = ojson::object();
  for (const auto& [name, p] : model.params())
    params[name] = {{"shape", p.value.shape()}, {"values", p.value.values()}};
  j["parameters"] = std::move(params);
  ojson m = {{"epochs", meta.epochs}};
  if (meta.last) {
    m["final_l1"] = meta.last->mean_l1;
    m["final_l2"] = meta.last->mean_l2;
    m["final_total"] = meta.last->mean_total;
    m["train_auc"] = meta.last->train_auc;
  }
  j["metadata"] = std::move(m);
  return j;
}

inline std::string checkpoint_text(const RunConfig& cfg, Mode mode, const Model& model, const CheckpointMeta& meta) {
  return checkpoint_json(cfg, mode, model, meta).dump(1) + "\n";
}

inline void save_checkpoint(const std::string& path, const RunConfig& cfg, Mode mode, const Model& model,
                            const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data::IoError("cannot open " + path + " for writing");
  out << checkpoint_text(cfg, mode, model, meta);
  if (!out) throw data::IoError("write failed: " + path);
}

// Rebuilds the model from the echoed config and overwrites every parameter.
// Missing, duplicate-free-but-unknown, or mis-shaped parameters are errors.
inline Checkpoint checkpoint_from_json(const nlohmann::ordered_json& j) {
  auto need = [&](const char* key) -> const nlohmann::ordered_json& {
    auto it = j.find(key);
    if (it == j.end()) throw CheckpointError(std::string("checkpoint: missing '") + key + "'");
    return *it;
  };
  if (!j.is_object()) throw CheckpointError("checkpoint: expected a JSON object");
  const auto& ver = need("format_version");
  if (!ver.is_number_integer() || ver.get<int>() != kCheckpointVersion)
    throw CheckpointError("checkpoint: unsupported format_version " + ver.dump());
  RunConfig cfg;
  try {
    cfg = config_from_json(need("config"));
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint config: ") + e.what());
  }
  const auto& mode_j = need("mode");
  const auto mode = mode_j.is_string() ? parse_mode(mode_j.get<std::string>()) : std::nullopt;
  if (!mode) throw CheckpointError("checkpoint: mode must be \"podm\" or \"baseline\"");

  const auto& vj = need("vocab");
  VocabSizes vocab;
  try {
    vocab = {vj.at("items").get<std::size_t>(), vj.at("brands").get<std::size_t>(),
             vj.at("shops").get<std::size_t>(), vj.at("queries").get<std::size_t>()};
  } catch (const nlohmann::ordered_json::exception& e) {
    throw CheckpointError(std::string("checkpoint: bad vocab: ") + e.what());
  }

  Checkpoint ck{cfg, *mode, {}, Model(cfg.model, vocab, cfg.train.seed)};
  const auto& params = need("parameters");
  if (!params.is_object()) throw CheckpointError("checkpoint: parameters must be an object");
  for (auto it = params.begin(); it != params.end(); ++it)
    if (!ck.model.params().contains(it.key()))
      throw CheckpointError("checkpoint: unknown parameter '" + it.key() + "'");
  for (auto& [name, p] : ck.model.params()) {
    auto it = params.find(name);
    if (it == params.end()) throw CheckpointError("checkpoint: missing parameter '" + name + "'");
    Shape shape;
    std::vector<double> values;
    try {
      shape = it->at("shape").get<Shape>();
      values = it->at("values").get<std::vector<double>>();
    } catch (const nlohmann::ordered_json::exception& e) {
      throw CheckpointError("checkpoint: parameter '" + name + "': " + e.what());
    }
    if (shape != p.value.shape())
      throw CheckpointError("checkpoint: parameter '" + name + "' has shape " + shape_str(shape) + ", model expects " +
                            shape_str(p.value.shape()));
    if (values.size() != p.value.size())
      throw CheckpointError("checkpoint: parameter '" + name + "' has " + std::to_string(values.size()) +
                            " values, expected " + std::to_string(p.value.size()));
    p.value = Tensor(shape, std::move(values));
    if (!p.value.all_finite()) throw CheckpointError("checkpoint: parameter '" + name + "' holds non-finite values");
  }

  const auto& m = need("metadata");
  ck.meta.epochs = m.value("epochs", std::size_t{0});
  if (m.contains("final_total")) {
    EpochLog log;
    log.epoch = ck.meta.epochs ? ck.meta.epochs - 1 : 0;
    log.mean_l1 = m.value("final_l1", 0.0);
    log.mean_l2 = m.value("final_l2", 0.0);
    log.mean_total = m.value("final_total", 0.0);
    log.train_auc = m.value("train_auc", 0.0);
    ck.meta.last = log;
  }
  return ck;
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data::IoError("cannot open checkpoint " + path);
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::ordered_json::parse_error& e) {
    throw CheckpointError(path + ": malformed JSON: " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace podm
