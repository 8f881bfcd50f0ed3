#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kens/align.hpp"
#include "kens/embedding.hpp"
#include "kens/kg.hpp"

namespace kens {

struct ScoredEntity {
  int32_t entity = 0;
  double score = 0.0;
};

// One model's top-K answer list for a query, in target-KG entity IDs.
// Candidates are ordered by model score descending (ties resolved by entity
// index in the scoring KG, preserved through transfer); membership defines
// the nomination indicator N_i(e).
struct Nomination {
  int model = -1;  // index into the model set
  Query query;     // target-KG coordinates
  std::vector<ScoredEntity> candidates;

  bool contains(int32_t e) const;
  // Position of e in the list, or nullopt when not nominated.
  std::optional<size_t> position(int32_t e) const;
};

enum class EnsembleMode { Single, Vote, Mrr, Boost };
const char* ensemble_mode_name(EnsembleMode m);
EnsembleMode parse_ensemble_mode(std::string_view s);

// Everything needed to gather nominations for one target KG: the shared
// space, all KGs, and the alignment map between the target and each other
// KG (maps[target] stays null).
struct ModelSet {
  const EmbeddingSpace* space = nullptr;
  std::span<const KnowledgeGraph> kgs;
  int target = 0;
  std::vector<const AlignmentMap*> maps;
  int k = 10;

  int n_models() const { return static_cast<int>(kgs.size()); }
  const KnowledgeGraph& target_kg() const { return kgs[target]; }
};

// The target model ranks all target entities; a foreign model answers the
// query transferred into its KG and its whole ranking is mapped back,
// keeping the first K candidates that survive the mapping. An
// untransferable query yields an empty nomination.
Nomination nominate(const ModelSet& models, int model, const Query& q);
std::vector<Nomination> nominate_all(const ModelSet& models, const Query& q);

// Majority voting: s(e) = sum_i N_i(e); ties by sum_i u_i * N_i(e), then by
// best nomination position, then by entity index. Truncated to K.
std::vector<ScoredEntity> score_vote(std::span<const Nomination> noms,
                                     std::span<const double> u, int k);

// MRR weighting: s(e) = sum_i u_i * N_i(e); same residual tie rules.
std::vector<ScoredEntity> score_mrr(std::span<const Nomination> noms,
                                    std::span<const double> u, int k);

// Tail queries from the validation triples headed by `e`, one query per
// distinct relation; the answer set collects all tails of that relation.
std::vector<AnswerSet> build_validation_queries(int32_t e, const KnowledgeGraph& kg);

struct CriticalPair {
  int32_t correct = 0;
  int32_t incorrect = 0;
};

// All (answer, non-answer) pairs of the candidate pool. Pairs within the
// answers or within the non-answers are uncritical and excluded.
std::vector<CriticalPair> critical_pairs(std::span<const int32_t> pool,
                                         std::span<const int32_t> answers);

// +1 when the ranking places the correct entity strictly above the
// incorrect one. Unranked entities sit below every ranked one; two
// unranked entities give -1 (the model expressed no correct preference).
int pair_order(const Nomination& ranking, const CriticalPair& pair);

struct BoostRound {
  int model = -1;
  double weight = 0.0;  // w^m as selected (may be negative)
  double z = 0.0;       // weighted ranking loss of the round
};

struct BoostState {
  std::vector<BoostRound> rounds;
  std::vector<double> d;  // final pair-weight distribution
  size_t n_pairs = 0;
};

struct BoostConfig {
  double epsilon = 1e-9;  // smoothing inside the weight formula
};

// Core boosting loop over a pair-order matrix orders[model][pair] in
// {+1,-1}. Each round picks the unselected model with the largest
//   w_i = 1/2 ln((W+_i + eps) / (W-_i + eps)),
// records Z^m = sum_p D(p) exp(-w^m [p]^m) and renormalizes D by that same
// Z^m. Runs one round per model.
BoostState run_rankboost(const std::vector<std::vector<int>>& orders,
                         const BoostConfig& cfg = {});

struct EntityWeights {
  int32_t entity = 0;
  std::vector<double> w;    // per model, clamped to >= 0 for scoring
  std::vector<double> raw;  // unclamped selected w^m, for diagnostics
  bool fallback = false;    // true when no critical pairs existed
};

// Entity-specific model weights learned from the validation queries about
// `e`. The candidate pool of each query is the union of all models'
// nominations plus the ground-truth answers. Falls back to the global MRR
// weights `u` when no critical pairs exist.
EntityWeights boost_weights(const ModelSet& models, int32_t e,
                            std::span<const double> u, BoostState* state = nullptr,
                            const BoostConfig& cfg = {});

// Final ensemble ranking s(e) = sum_i w_i(e) N_i(e) for the mode's weights:
// Vote w=1, Mrr w=u_i, Boost w=boost_w (keyed by the query's anchor entity),
// Single = the target model's nomination unchanged.
std::vector<ScoredEntity> ensemble_rank(const ModelSet& models, const Query& q,
                                        EnsembleMode mode, std::span<const double> u,
                                        const EntityWeights* boost_w = nullptr);

// Weighted re-ranking of precomputed nominations (the core of ensemble_rank).
std::vector<ScoredEntity> combine_nominations(std::span<const Nomination> noms,
                                              std::span<const double> weights,
                                              std::span<const double> u, int k);

}  // namespace kens
