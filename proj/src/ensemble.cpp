#include "kens/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "kens/kernels.hpp"

namespace kens {

bool Nomination::contains(int32_t e) const {
  return position(e).has_value();
}

std::optional<size_t> Nomination::position(int32_t e) const {
  for (size_t i = 0; i < candidates.size(); ++i)
    if (candidates[i].entity == e) return i;
  return std::nullopt;
}

const char* ensemble_mode_name(EnsembleMode m) {
  switch (m) {
    case EnsembleMode::Single: return "single";
    case EnsembleMode::Vote: return "vote";
    case EnsembleMode::Mrr: return "mrr";
    case EnsembleMode::Boost: return "boost";
  }
  return "?";
}

EnsembleMode parse_ensemble_mode(std::string_view s) {
  if (s == "single") return EnsembleMode::Single;
  if (s == "vote") return EnsembleMode::Vote;
  if (s == "mrr") return EnsembleMode::Mrr;
  if (s == "boost") return EnsembleMode::Boost;
  throw ConfigError("unknown ensemble mode: " + std::string(s) +
                    " (expected vote|mrr|boost|single)");
}

Nomination nominate(const ModelSet& models, int model, const Query& q) {
  Nomination nom;
  nom.model = model;
  nom.query = q;
  const EmbeddingSpace& space = *models.space;
  const size_t K = static_cast<size_t>(models.k);

  if (model == models.target) {
    std::vector<double> scores;
    std::vector<int32_t> order =
        kernels::rank_entities(space, space.kg_of(models.target_kg().id), q, &scores);
    const size_t keep = std::min(K, order.size());
    nom.candidates.reserve(keep);
    for (size_t i = 0; i < keep; ++i)
      nom.candidates.push_back({order[i], scores[order[i]]});
    return nom;
  }

  const AlignmentMap* map = models.maps[model];
  if (!map) throw ContractError("nominate: no alignment map for model");
  const KnowledgeGraph& target = models.target_kg();
  const KnowledgeGraph& foreign = models.kgs[model];

  TransferredQuery tq = transfer_query(q, *map, target, foreign);
  if (!tq.query) return nom;  // empty nomination

  std::vector<double> scores;
  std::vector<int32_t> order =
      kernels::rank_entities(space, space.kg_of(foreign.id), *tq.query, &scores);
  // Transfer the whole ranking back and keep the first K that map.
  for (int32_t e : order) {
    auto back = map->translate(e, foreign.id);
    if (!back) continue;
    nom.candidates.push_back({*back, scores[e]});
    if (nom.candidates.size() >= K) break;
  }
  return nom;
}

std::vector<Nomination> nominate_all(const ModelSet& models, const Query& q) {
  std::vector<Nomination> noms;
  noms.reserve(models.n_models());
  for (int i = 0; i < models.n_models(); ++i) noms.push_back(nominate(models, i, q));
  return noms;
}

namespace {

struct CandidateScore {
  double s = 0.0;        // mode-specific weighted nomination score
  double u_score = 0.0;  // MRR-weighted tie-break
  size_t best_pos = SIZE_MAX;
};

std::vector<ScoredEntity> rank_candidates(
    const std::map<int32_t, CandidateScore>& table, int k) {
  std::vector<std::pair<int32_t, CandidateScore>> rows(table.begin(), table.end());
  std::sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) {
    if (x.second.s != y.second.s) return x.second.s > y.second.s;
    if (x.second.u_score != y.second.u_score) return x.second.u_score > y.second.u_score;
    if (x.second.best_pos != y.second.best_pos) return x.second.best_pos < y.second.best_pos;
    return x.first < y.first;
  });
  if (k >= 0 && rows.size() > static_cast<size_t>(k)) rows.resize(k);
  std::vector<ScoredEntity> out;
  out.reserve(rows.size());
  for (const auto& [e, cs] : rows) out.push_back({e, cs.s});
  return out;
}

}  // namespace

std::vector<ScoredEntity> combine_nominations(std::span<const Nomination> noms,
                                              std::span<const double> weights,
                                              std::span<const double> u, int k) {
  if (noms.size() != weights.size() || noms.size() != u.size())
    throw ContractError("combine_nominations: per-model weight counts must match");
  std::map<int32_t, CandidateScore> table;
  for (size_t i = 0; i < noms.size(); ++i) {
    for (size_t pos = 0; pos < noms[i].candidates.size(); ++pos) {
      CandidateScore& cs = table[noms[i].candidates[pos].entity];
      cs.s += weights[i];
      cs.u_score += u[i];
      cs.best_pos = std::min(cs.best_pos, pos);
    }
  }
  return rank_candidates(table, k);
}

std::vector<ScoredEntity> score_vote(std::span<const Nomination> noms,
                                     std::span<const double> u, int k) {
  std::vector<double> ones(noms.size(), 1.0);
  return combine_nominations(noms, ones, u, k);
}

std::vector<ScoredEntity> score_mrr(std::span<const Nomination> noms,
                                    std::span<const double> u, int k) {
  for (double ui : u)
    if (ui < 0.0 || ui > 1.0)
      throw ContractError("score_mrr: weights must lie in [0, 1]");
  return combine_nominations(noms, u, u, k);
}

std::vector<AnswerSet> build_validation_queries(int32_t e, const KnowledgeGraph& kg) {
  std::map<int32_t, std::set<int32_t>> by_relation;
  for (const Triple& t : kg.valid)
    if (t.head == e) by_relation[t.relation].insert(t.tail);
  std::vector<AnswerSet> out;
  out.reserve(by_relation.size());
  for (const auto& [rel, tails] : by_relation) {
    AnswerSet a;
    a.query = Query{e, rel, Direction::PredictTail};
    a.answers.assign(tails.begin(), tails.end());
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<CriticalPair> critical_pairs(std::span<const int32_t> pool,
                                         std::span<const int32_t> answers) {
  std::set<int32_t> answer_set(answers.begin(), answers.end());
  std::vector<int32_t> correct, incorrect;
  for (int32_t e : pool)
    (answer_set.contains(e) ? correct : incorrect).push_back(e);
  std::vector<CriticalPair> pairs;
  pairs.reserve(correct.size() * incorrect.size());
  for (int32_t c : correct)
    for (int32_t w : incorrect) pairs.push_back({c, w});
  return pairs;
}

int pair_order(const Nomination& ranking, const CriticalPair& pair) {
  const auto pos_correct = ranking.position(pair.correct);
  const auto pos_incorrect = ranking.position(pair.incorrect);
  if (pos_correct && pos_incorrect) return *pos_correct < *pos_incorrect ? +1 : -1;
  if (pos_correct) return +1;  // incorrect unranked, so below
  return -1;                   // correct unranked (or both)
}

BoostState run_rankboost(const std::vector<std::vector<int>>& orders,
                         const BoostConfig& cfg) {
  BoostState state;
  const size_t M = orders.size();
  if (M == 0) return state;
  const size_t P = orders[0].size();
  state.n_pairs = P;
  if (P == 0) return state;
  for (const auto& row : orders)
    if (row.size() != P) throw ContractError("run_rankboost: ragged order matrix");

  std::vector<double> d(P, 1.0 / static_cast<double>(P));
  std::vector<char> selected(M, 0);

  for (size_t round = 0; round < M; ++round) {
    int best = -1;
    double best_w = 0.0;
    for (size_t i = 0; i < M; ++i) {
      if (selected[i]) continue;
      double w_plus = 0.0, w_minus = 0.0;
      for (size_t p = 0; p < P; ++p)
        (orders[i][p] > 0 ? w_plus : w_minus) += d[p];
      const double w = 0.5 * std::log((w_plus + cfg.epsilon) / (w_minus + cfg.epsilon));
      if (best < 0 || w > best_w) {
        best = static_cast<int>(i);
        best_w = w;
      }
    }
    selected[best] = 1;

    // Z is the exact normalizer of the D update by construction.
    double z = 0.0;
    for (size_t p = 0; p < P; ++p) {
      d[p] *= std::exp(-best_w * orders[best][p]);
      z += d[p];
    }
    for (size_t p = 0; p < P; ++p) d[p] /= z;
    state.rounds.push_back({best, best_w, z});
  }
  state.d = std::move(d);
  return state;
}

EntityWeights boost_weights(const ModelSet& models, int32_t e,
                            std::span<const double> u, BoostState* state_out,
                            const BoostConfig& cfg) {
  const size_t M = static_cast<size_t>(models.n_models());
  EntityWeights weights;
  weights.entity = e;
  weights.w.assign(M, 0.0);
  weights.raw.assign(M, 0.0);

  const std::vector<AnswerSet> queries = build_validation_queries(e, models.target_kg());

  // Pair orders per model across all validation queries of e.
  std::vector<std::vector<int>> orders(M);
  for (const AnswerSet& answer_set : queries) {
    const std::vector<Nomination> noms = nominate_all(models, answer_set.query);
    std::set<int32_t> pool_set(answer_set.answers.begin(), answer_set.answers.end());
    for (const Nomination& nom : noms)
      for (const ScoredEntity& c : nom.candidates) pool_set.insert(c.entity);
    std::vector<int32_t> pool(pool_set.begin(), pool_set.end());
    const std::vector<CriticalPair> pairs = critical_pairs(pool, answer_set.answers);
    for (size_t i = 0; i < M; ++i)
      for (const CriticalPair& p : pairs) orders[i].push_back(pair_order(noms[i], p));
  }

  if (orders[0].empty()) {
    // No critical pairs: fall back to the global MRR weights.
    weights.fallback = true;
    weights.w.assign(u.begin(), u.end());
    if (state_out) *state_out = BoostState{};
    return weights;
  }

  BoostState state = run_rankboost(orders, cfg);
  for (const BoostRound& r : state.rounds) {
    weights.raw[r.model] = r.weight;
    weights.w[r.model] = std::max(r.weight, 0.0);
  }
  if (state_out) *state_out = std::move(state);
  return weights;
}

std::vector<ScoredEntity> ensemble_rank(const ModelSet& models, const Query& q,
                                        EnsembleMode mode, std::span<const double> u,
                                        const EntityWeights* boost_w) {
  if (mode == EnsembleMode::Single) {
    Nomination nom = nominate(models, models.target, q);
    return nom.candidates;
  }
  const std::vector<Nomination> noms = nominate_all(models, q);
  switch (mode) {
    case EnsembleMode::Vote:
      return score_vote(noms, u, models.k);
    case EnsembleMode::Mrr:
      return score_mrr(noms, u, models.k);
    case EnsembleMode::Boost: {
      if (!boost_w) throw ContractError("ensemble_rank: boost mode needs entity weights");
      return combine_nominations(noms, boost_w->w, u, models.k);
    }
    default:
      throw ContractError("ensemble_rank: unsupported mode");
  }
}

}  // namespace kens
