#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "podm/config.hpp"
#include "podm/data.hpp"
#include "podm/metrics.hpp"
#include "podm/model.hpp"
#include "podm/sam.hpp"

namespace podm {

// Adagrad: acc += g^2; p -= lr * g / (sqrt(acc) + eps).
class Adagrad {
 public:
  Adagrad(double learning_rate, double epsilon = 1e-8, double initial_accumulator = 0.0)
      : lr_(learning_rate), eps_(epsilon), init_(initial_accumulator) {}

  void step(ParameterSet& params) {
    for (auto& [name, p] : params) {
      auto [it, fresh] = acc_.try_emplace(name, Tensor(p.value.shape(), init_));
      Tensor& acc = it->second;
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad[i];
        if (g == 0.0) continue;
        acc[i] += g * g;
        p.value[i] -= lr_ * g / (std::sqrt(acc[i]) + eps_);
      }
    }
  }

 private:
  double lr_;
  double eps_;
  double init_;
  std::map<std::string, Tensor> acc_;
};

struct EpochLog {
  std::size_t epoch = 0;
  double mean_l1 = 0;     // mean over batches of the batch-mean KL
  double mean_l2 = 0;     // mean over batches of the order loss (non-skipped lists)
  double mean_total = 0;  // mean over batches of the backpropagated loss
  double train_auc = 0;   // mean per-session AUC of final scores
};

struct TrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Ablation switches. detach_mi keeps L1 in the logged loss but blocks its
// gradient; frozen parameters keep their initial values.
struct TrainOptions {
  bool detach_mi = false;
  std::set<std::string> frozen;
};

// Trains in place. Each batch minimizes L1 + chi * L2 where L1 is the mean KL
// over the batch and L2 the mean order loss over lists with a positive
// (baseline mode: L2 alone). One tape per session; gradients accumulate into
// the shared parameters before a single Adagrad step.
inline std::vector<EpochLog> train(Model& model, const std::vector<SessionRecord>& sessions, const TrainConfig& cfg,
                                   Mode mode, const std::function<void(const EpochLog&)>& on_epoch = {},
                                   const TrainOptions& options = {}) {
  if (!(cfg.chi >= 0)) throw ConfigError("train.chi: must be >= 0");
  if (sessions.empty()) throw DataError("no training sessions");
  Adagrad opt(cfg.learning_rate, cfg.adagrad_epsilon, cfg.initial_accumulator);
  const double chi = cfg.chi;
  std::vector<EpochLog> logs;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto plan = data::batches(sessions.size(), cfg.batch_size, cfg.seed, epoch);
    EpochLog log;
    log.epoch = epoch;
    double auc_sum = 0;
    std::size_t auc_n = 0;
    for (std::size_t b = 0; b < plan.size(); ++b) {
      const auto& batch = plan[b];
      std::size_t counted = 0;
      for (std::size_t i : batch) {
        int pos = 0;
        for (int z : sessions[i].labels) pos += z;
        if (pos > 0) ++counted;
      }
      const double l1_weight = mode == Mode::kPodm ? 1.0 / static_cast<double>(batch.size()) : 0.0;
      const double l2_weight = counted ? 1.0 / static_cast<double>(counted) : 0.0;

      model.params().zero_grad();
      double batch_l1 = 0, batch_l2 = 0, batch_total = 0;
      for (std::size_t i : batch) {
        const SessionRecord& s = sessions[i];
        try {
          Tape tape;
          const Model::Forward f = model.forward(tape, s, mode);
          Var l1 = scale(options.detach_mi ? detach(f.mi_loss) : f.mi_loss, l1_weight);
          Var l2 = scale(f.order_loss.loss, l2_weight);
          Var loss = sam::total_loss(l1, l2, chi);
          tape.backward(loss);
          batch_l1 += l1.item();
          batch_l2 += l2.item();
          batch_total += loss.item();
          if (auto a = metrics::auc(f.final_scores.value().data(), s.labels)) {
            auc_sum += *a;
            ++auc_n;
          }
        } catch (const NumericError& e) {
          throw TrainError("non-finite value at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) +
                           ", session " + s.session_id + ": " + e.what());
        }
      }
      if (!std::isfinite(batch_total))
        throw TrainError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) +
                         " (L1 " + std::to_string(batch_l1) + ", L2 " + std::to_string(batch_l2) + ")");
      for (auto& [name, p] : model.params())
        if (!p.grad.all_finite())
          throw TrainError("non-finite gradient for " + name + " at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b));
      for (const auto& name : options.frozen) model.params().get(name).zero_grad();
      opt.step(model.params());
      log.mean_l1 += batch_l1;
      log.mean_l2 += batch_l2;
      log.mean_total += batch_total;
    }
    const double nb = static_cast<double>(plan.size());
    log.mean_l1 /= nb;
    log.mean_l2 /= nb;
    log.mean_total /= nb;
    log.train_auc = auc_n ? auc_sum / static_cast<double>(auc_n) : 0.5;
    logs.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  model.params().zero_grad();
  return logs;
}

// Scores every session and packages the inputs the metrics need.
inline std::vector<metrics::EvalRecord> evaluate(const Model& model, const std::vector<SessionRecord>& sessions,
                                                 Mode mode) {
  std::vector<metrics::EvalRecord> out;
  out.reserve(sessions.size());
  for (const auto& s : sessions) {
    const RankedResult r = model.rerank(s, mode);
    metrics::EvalRecord e;
    e.session_id = s.session_id;
    e.ranking = r.ranking;
    e.final_scores = r.final_scores;
    e.labels = s.labels;
    for (const auto& c : s.candidates) {
      e.brand_ids.push_back(c.brand_id);
      e.shop_ids.push_back(c.shop_id);
    }
    e.intent_d = s.intent_d;
    e.tau_mean = model.user_preference(s).mean();
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace podm
