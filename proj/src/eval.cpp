#include "kens/eval.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "kens/parallel.hpp"
#include "kens/util.hpp"

namespace kens {

std::optional<int> filtered_rank(std::span<const int32_t> ranked, int32_t truth,
                                 const std::unordered_set<int32_t>& filter) {
  int rank = 0;
  for (int32_t e : ranked) {
    if (e != truth && filter.contains(e)) continue;
    ++rank;
    if (e == truth) return rank;
  }
  return std::nullopt;
}

std::optional<int> filtered_rank(std::span<const ScoredEntity> ranked, int32_t truth,
                                 const std::unordered_set<int32_t>& filter) {
  int rank = 0;
  for (const ScoredEntity& c : ranked) {
    if (c.entity != truth && filter.contains(c.entity)) continue;
    ++rank;
    if (c.entity == truth) return rank;
  }
  return std::nullopt;
}

double hits_at_k(std::span<const std::optional<int>> ranks, int k) {
  if (k < 1) throw ContractError("hits_at_k: k must be >= 1");
  if (ranks.empty()) throw ContractError("hits_at_k: undefined on zero queries");
  size_t hits = 0;
  for (const auto& r : ranks)
    if (r && *r <= k) ++hits;
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double mrr(std::span<const std::optional<int>> ranks) {
  if (ranks.empty()) throw ContractError("mrr: undefined on zero queries");
  double sum = 0.0;
  for (const auto& r : ranks)
    if (r) sum += 1.0 / static_cast<double>(*r);
  return sum / static_cast<double>(ranks.size());
}

namespace {

int64_t filter_key(int32_t anchor, int32_t relation) {
  return (static_cast<int64_t>(anchor) << 32) | static_cast<uint32_t>(relation);
}

}  // namespace

TrainFilter build_train_filter(const KnowledgeGraph& kg, Direction direction) {
  TrainFilter filter;
  for (const Triple& t : kg.train) {
    if (direction == Direction::PredictTail)
      filter[filter_key(t.head, t.relation)].insert(t.tail);
    else
      filter[filter_key(t.tail, t.relation)].insert(t.head);
  }
  return filter;
}

const std::unordered_set<int32_t>* filter_for(const TrainFilter& filter, const Query& q) {
  auto it = filter.find(filter_key(q.anchor, q.relation));
  return it == filter.end() ? nullptr : &it->second;
}

std::vector<double> validation_mrr(const ModelSet& models) {
  const KnowledgeGraph& target = models.target_kg();
  const TrainFilter filter = build_train_filter(target, Direction::PredictTail);
  static const std::unordered_set<int32_t> empty_filter;

  std::vector<double> u(models.n_models(), 0.0);
  if (target.valid.empty()) return u;

  for (int i = 0; i < models.n_models(); ++i) {
    const size_t n = target.valid.size();
    std::vector<std::optional<int>> ranks(n);
    for (size_t t = 0; t < n; ++t) {
      const Triple& triple = target.valid[t];
      const Query q{triple.head, triple.relation, Direction::PredictTail};
      const Nomination nom = nominate(models, i, q);
      const auto* f = filter_for(filter, q);
      ranks[t] = filtered_rank(nom.candidates, triple.tail, f ? *f : empty_filter);
    }
    u[i] = mrr(ranks);
  }
  return u;
}

EvalReport evaluate_kg(const ModelSet& models, EnsembleMode mode,
                       std::span<const int> ks, Direction direction) {
  const KnowledgeGraph& target = models.target_kg();
  if (target.test.empty()) throw ContractError("evaluate_kg: empty test split");
  Timer timer;

  EvalReport report;
  report.kg = target.id;
  report.mode = ensemble_mode_name(mode);
  report.direction = direction == Direction::PredictTail ? "tail" : "head";

  const std::vector<double> u = validation_mrr(models);
  for (int i = 0; i < models.n_models(); ++i)
    report.u[models.kgs[i].id] = u[i];

  // Boost weights are keyed by the query's anchor entity; learn them once
  // per distinct test anchor.
  std::unordered_map<int32_t, EntityWeights> boost_cache;
  if (mode == EnsembleMode::Boost) {
    std::vector<int32_t> anchors;
    for (const Triple& t : target.test)
      anchors.push_back(direction == Direction::PredictTail ? t.head : t.tail);
    std::sort(anchors.begin(), anchors.end());
    anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
    std::vector<EntityWeights> learned(anchors.size());
    const int64_t n_anchors = static_cast<int64_t>(anchors.size());
    if (parallel::enabled()) {
#pragma omp parallel for schedule(dynamic)
      for (int64_t i = 0; i < n_anchors; ++i)
        learned[i] = boost_weights(models, anchors[i], u);
    } else {
      for (int64_t i = 0; i < n_anchors; ++i)
        learned[i] = boost_weights(models, anchors[i], u);
    }
    for (size_t i = 0; i < anchors.size(); ++i)
      boost_cache.emplace(anchors[i], std::move(learned[i]));
  }

  const TrainFilter filter = build_train_filter(target, direction);
  static const std::unordered_set<int32_t> empty_filter;
  const size_t n = target.test.size();
  std::vector<std::optional<int>> ranks(n);

  auto eval_one = [&](size_t t) {
    const Triple& triple = target.test[t];
    const int32_t anchor = direction == Direction::PredictTail ? triple.head : triple.tail;
    const int32_t truth = direction == Direction::PredictTail ? triple.tail : triple.head;
    const Query q{anchor, triple.relation, direction};
    const EntityWeights* w =
        mode == EnsembleMode::Boost ? &boost_cache.at(anchor) : nullptr;
    const std::vector<ScoredEntity> ranked = ensemble_rank(models, q, mode, u, w);
    const auto* f = filter_for(filter, q);
    ranks[t] = filtered_rank(ranked, truth, f ? *f : empty_filter);
  };
  if (parallel::enabled()) {
#pragma omp parallel for schedule(dynamic)
    for (size_t t = 0; t < n; ++t) eval_one(t);
  } else {
    for (size_t t = 0; t < n; ++t) eval_one(t);
  }

  report.n_queries = n;
  for (int k : ks) report.hits[k] = hits_at_k(ranks, k);
  report.seconds = timer.seconds();
  return report;
}

void save_report_json(const EvalReport& report, const std::filesystem::path& path) {
  nlohmann::json j;
  j["kg"] = report.kg;
  j["mode"] = report.mode;
  j["direction"] = report.direction;
  j["n_queries"] = report.n_queries;
  nlohmann::json hits;
  for (const auto& [k, v] : report.hits) hits[std::to_string(k)] = v;
  j["hits"] = hits;
  nlohmann::json u;
  for (const auto& [model, v] : report.u) u[model] = v;
  j["u"] = u;
  j["seconds"] = report.seconds;
  atomic_write(path, [&](std::ostream& out) { out << j.dump(2) << "\n"; });
}

void save_report_tsv(const EvalReport& report, const std::filesystem::path& path) {
  atomic_write(path, [&](std::ostream& out) {
    out << "# kg\tmode\tdirection\tn_queries";
    for (const auto& [k, v] : report.hits) out << "\thits@" << k;
    out << "\n" << report.kg << '\t' << report.mode << '\t' << report.direction
        << '\t' << report.n_queries;
    for (const auto& [k, v] : report.hits) out << '\t' << format_fixed6(v);
    out << "\n";
  });
}

}  // namespace kens
