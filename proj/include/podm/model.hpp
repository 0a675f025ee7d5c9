#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "podm/autodiff.hpp"
#include "podm/backbone.hpp"
#include "podm/gaussian.hpp"
#include "podm/pon.hpp"
#include "podm/random.hpp"
#include "podm/sam.hpp"
#include "podm/types.hpp"

namespace podm {

struct ModelDims {
  std::size_t d_emb = 32;
  std::size_t d_h = 64;
  std::size_t n_lat = 16;
  std::size_t n_c_max = 50;
  std::size_t l_max = 64;
  std::size_t f_rel = 3;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

// kBaseline scores with the backbone alone (u = 1, no L1 term).
enum class Mode { kPodm, kBaseline };

inline std::string_view to_string(Mode m) { return m == Mode::kPodm ? "podm" : "baseline"; }
inline std::optional<Mode> parse_mode(std::string_view s) {
  if (s == "podm") return Mode::kPodm;
  if (s == "baseline") return Mode::kBaseline;
  return std::nullopt;
}

struct RankedResult {
  std::vector<std::size_t> ranking;
  std::vector<double> base_scores;
  std::vector<double> utilities;
  std::vector<double> final_scores;
};

class Model {
 public:
  Model(const ModelDims& dims, const VocabSizes& vocab, std::uint64_t seed) : dims_(dims), vocab_(vocab) {
    Rng rng(mix_seed(seed, 0x6d6f64656cULL));
    tables_ = pon::EmbeddingTables::create(params_, vocab, dims.d_emb, dims.l_max, dims.n_c_max, rng);
    user_net_ = GaussianMlp::create(params_, "pon.user", dims.d_emb, dims.d_h, dims.n_lat, rng);
    list_net_ = GaussianMlp::create(params_, "pon.list", dims.d_emb + dims.f_rel, dims.d_h, dims.n_lat, rng);
    backbone_ = backbone::BackboneNet::create(params_, dims.d_emb, dims.f_rel, dims.d_h, rng);
    sam_ = sam::SamNet::create(params_, dims.n_lat, dims.d_h, rng);
  }

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;

  const ModelDims& dims() const { return dims_; }
  const VocabSizes& vocab() const { return vocab_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  const pon::EmbeddingTables& tables() const { return tables_; }
  const GaussianMlp& user_net() const { return user_net_; }
  const GaussianMlp& list_net() const { return list_net_; }
  const backbone::BackboneNet& backbone_net() const { return backbone_; }
  const sam::SamNet& sam_net() const { return sam_; }

  struct Forward {
    Var history_summary;
    GaussianVar tau;  // unset in baseline mode
    GaussianVar rho;
    GaussianVar q;
    backbone::ListContext context;
    Var utilities;
    Var final_scores;
    Var mi_loss;      // L1 for this session (0 in baseline mode)
    backbone::OrderLoss order_loss;  // skipped when labels are empty or all zero
  };

  Forward forward(Tape& tape, const SessionRecord& session, Mode mode) const {
    check_session(session);
    Forward f;
    const pon::HistoryEmbedding history = pon::embed_history(tape, session.history, tables_);
    f.history_summary = pon::pool_history(history);
    f.context = backbone::score_list(tape, session.candidates, f.history_summary, tables_, backbone_);
    const std::size_t n = session.candidates.size();
    if (mode == Mode::kPodm) {
      f.tau = pon::encode_user_preference(history, user_net_);
      f.rho = pon::encode_candidate_list(tape, session.candidates, tables_, list_net_);
      f.q = sam::posterior(f.tau, sam::list_summary(f.context.hidden), sam_.posterior);
      f.mi_loss = sam::mi_loss(f.rho, f.q);
      Var aligned = sam::aligned_features(f.context.hidden, f.tau, f.q);
      f.utilities = sam::utility(aligned, tape.param(*sam_.utility_weight));
      f.final_scores = sam::modulate(f.context.scores, f.utilities);
    } else {
      f.utilities = tape.constant(Tensor(Shape{n}, 1.0));
      f.final_scores = f.context.scores;
      f.mi_loss = tape.scalar(0.0);
    }
    if (session.labels.empty())
      f.order_loss = {tape.scalar(0.0), true};
    else
      f.order_loss = backbone::order_loss(f.final_scores, session.labels);
    return f;
  }

  RankedResult rerank(const SessionRecord& session, Mode mode) const {
    Tape tape(false);
    const Forward f = forward(tape, session, mode);
    RankedResult r;
    r.base_scores = f.context.scores.value().values();
    r.utilities = f.utilities.value().values();
    r.final_scores = f.final_scores.value().values();
    r.ranking = sam::rank_by_score(r.final_scores);
    return r;
  }

  DiagGaussian user_preference(const SessionRecord& session) const {
    Tape tape(false);
    return pon::encode_user_preference(tape, session.history, tables_, user_net_).value();
  }

 private:
  void check_session(const SessionRecord& s) const {
    if (s.candidates.empty()) throw DataError("session " + s.session_id + ": empty candidate list");
    if (!s.labels.empty() && s.labels.size() != s.candidates.size())
      throw DataError("session " + s.session_id + ": labels length differs from candidates");
    for (const auto& c : s.candidates)
      if (c.relevance_features.size() != dims_.f_rel)
        throw DataError("session " + s.session_id + ": relevance_features width " +
                        std::to_string(c.relevance_features.size()) + ", model expects " +
                        std::to_string(dims_.f_rel));
  }

  ModelDims dims_;
  VocabSizes vocab_;
  ParameterSet params_;
  pon::EmbeddingTables tables_;
  GaussianMlp user_net_;
  GaussianMlp list_net_;
  backbone::BackboneNet backbone_;
  sam::SamNet sam_;
};

}  // namespace podm
