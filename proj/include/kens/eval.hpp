#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "kens/ensemble.hpp"
#include "kens/kg.hpp"

namespace kens {

// 1-based rank of `truth` after removing the other known-true entities from
// the candidate list; nullopt when the truth is not in the (truncated) list.
std::optional<int> filtered_rank(std::span<const int32_t> ranked, int32_t truth,
                                 const std::unordered_set<int32_t>& filter);
std::optional<int> filtered_rank(std::span<const ScoredEntity> ranked, int32_t truth,
                                 const std::unordered_set<int32_t>& filter);

// Fraction of queries whose rank is <= k; absent ranks are misses.
double hits_at_k(std::span<const std::optional<int>> ranks, int k);

// Mean reciprocal rank; absent ranks contribute 0.
double mrr(std::span<const std::optional<int>> ranks);

struct EvalReport {
  std::string kg;
  std::string mode;
  std::string direction = "tail";
  std::map<int, double> hits;  // K -> fraction
  size_t n_queries = 0;
  std::map<std::string, double> u;  // model id -> validation MRR
  double seconds = 0.0;
};

// Candidate filter per (anchor, relation): the entities already known true
// from the training split. Validation/test answers are not filtered.
using TrainFilter = std::unordered_map<int64_t, std::unordered_set<int32_t>>;
TrainFilter build_train_filter(const KnowledgeGraph& kg, Direction direction);
const std::unordered_set<int32_t>* filter_for(const TrainFilter& filter, const Query& q);

// Per-model filtered MRR of the nominations on the target validation split.
std::vector<double> validation_mrr(const ModelSet& models);

// Filtered Hits@K over the target test split for the given mode.
EvalReport evaluate_kg(const ModelSet& models, EnsembleMode mode,
                       std::span<const int> ks,
                       Direction direction = Direction::PredictTail);

void save_report_json(const EvalReport& report, const std::filesystem::path& path);
void save_report_tsv(const EvalReport& report, const std::filesystem::path& path);

}  // namespace kens
