#include "kens/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "kens/parallel.hpp"

namespace kens::kernels {

namespace {

inline double candidate_score(const EmbeddingSpace& space, int kg, const Query& q,
                              int32_t candidate) {
  return q.direction == Direction::PredictTail
             ? triple_score(space, kg, q.anchor, q.relation, candidate)
             : triple_score(space, kg, candidate, q.relation, q.anchor);
}

}  // namespace

void score_all_serial(const EmbeddingSpace& space, int kg, const Query& q,
                      std::span<double> out) {
  const int32_t n = space.kgs[kg].n_entities();
  if (out.size() != static_cast<size_t>(n))
    throw ContractError("score_all: output size mismatch");
  for (int32_t e = 0; e < n; ++e) out[e] = candidate_score(space, kg, q, e);
}

void score_all_parallel(const EmbeddingSpace& space, int kg, const Query& q,
                        std::span<double> out) {
  const int32_t n = space.kgs[kg].n_entities();
  if (out.size() != static_cast<size_t>(n))
    throw ContractError("score_all: output size mismatch");
#pragma omp parallel for schedule(static)
  for (int32_t e = 0; e < n; ++e) out[e] = candidate_score(space, kg, q, e);
}

void score_all(const EmbeddingSpace& space, int kg, const Query& q,
               std::span<double> out) {
  if (parallel::enabled())
    score_all_parallel(space, kg, q, out);
  else
    score_all_serial(space, kg, q, out);
}

std::vector<int32_t> rank_entities(const EmbeddingSpace& space, int kg, const Query& q,
                                   std::vector<double>* scores_out) {
  const int32_t n = space.kgs[kg].n_entities();
  std::vector<double> scores(n);
  score_all(space, kg, q, scores);
  std::vector<int32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int32_t a, int32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  if (scores_out) *scores_out = std::move(scores);
  return order;
}

UnitRows normalize_entity_rows(const EmbeddingSpace& space, int kg) {
  UnitRows u;
  u.n = space.kgs[kg].n_entities();
  u.width = space.entity_width();
  u.data = space.kgs[kg].entity;
  for (int i = 0; i < u.n; ++i) {
    double* row = u.data.data() + static_cast<size_t>(i) * u.width;
    double sq = 0.0;
    for (int j = 0; j < u.width; ++j) sq += row[j] * row[j];
    if (sq <= 0.0)
      throw ContractError("cosine undefined: zero entity vector in KG " +
                          space.kg_ids[kg]);
    const double inv = 1.0 / std::sqrt(sq);
    for (int j = 0; j < u.width; ++j) row[j] *= inv;
  }
  return u;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void cos_row(const UnitRows& a, int i, const UnitRows& b, std::span<double> out) {
  auto ai = a.row(i);
  for (int j = 0; j < b.n; ++j) out[j] = dot(ai, b.row(j));
}

namespace {

// Mean of the k largest cosines from one row of `a` into `b`.
double mean_topk_row(const UnitRows& a, int i, const UnitRows& b, int k,
                     std::vector<double>& scratch) {
  scratch.resize(b.n);
  cos_row(a, i, b, scratch);
  std::nth_element(scratch.begin(), scratch.begin() + (k - 1), scratch.end(),
                   std::greater<double>());
  double sum = std::accumulate(scratch.begin(), scratch.begin() + k, 0.0);
  return sum / k;
}

}  // namespace

void knn_mean_cos_serial(const UnitRows& a, const UnitRows& b, int k,
                         std::span<double> out) {
  if (k < 1 || k > b.n) throw ContractError("knn_mean_cos: bad neighborhood size");
  std::vector<double> scratch;
  for (int i = 0; i < a.n; ++i) out[i] = mean_topk_row(a, i, b, k, scratch);
}

void knn_mean_cos_parallel(const UnitRows& a, const UnitRows& b, int k,
                           std::span<double> out) {
  if (k < 1 || k > b.n) throw ContractError("knn_mean_cos: bad neighborhood size");
#pragma omp parallel
  {
    std::vector<double> scratch;
#pragma omp for schedule(static)
    for (int i = 0; i < a.n; ++i) out[i] = mean_topk_row(a, i, b, k, scratch);
  }
}

void knn_mean_cos(const UnitRows& a, const UnitRows& b, int k, std::span<double> out) {
  if (parallel::enabled())
    knn_mean_cos_parallel(a, b, k, out);
  else
    knn_mean_cos_serial(a, b, k, out);
}

namespace {

double merge_pair_grads(std::vector<std::vector<RowGrad>>& locals,
                        std::span<const double> terms, std::vector<RowGrad>& merged) {
  std::unordered_map<uint64_t, size_t> index;
  index.reserve(merged.size() + locals.size() * 5);
  for (size_t i = 0; i < merged.size(); ++i) index.emplace(merged[i].key, i);
  for (std::vector<RowGrad>& local : locals) {
    for (RowGrad& rg : local) {
      auto [it, inserted] = index.emplace(rg.key, merged.size());
      if (inserted) {
        merged.push_back(std::move(rg));
      } else {
        std::vector<double>& g = merged[it->second].g;
        for (size_t j = 0; j < g.size(); ++j) g[j] += rg.g[j];
      }
    }
  }
  return std::accumulate(terms.begin(), terms.end(), 0.0);
}

}  // namespace

double batch_hinge_grads_serial(const EmbeddingSpace& space, int kg,
                                std::span<const Triple> positives,
                                std::span<const Triple> negatives, double margin,
                                std::vector<RowGrad>& merged) {
  const size_t n = positives.size();
  std::vector<std::vector<RowGrad>> locals(n);
  std::vector<double> terms(n);
  for (size_t i = 0; i < n; ++i)
    terms[i] = hinge_term_grad(space, kg, positives[i], negatives[i], margin, locals[i]);
  return merge_pair_grads(locals, terms, merged);
}

double batch_hinge_grads_parallel(const EmbeddingSpace& space, int kg,
                                  std::span<const Triple> positives,
                                  std::span<const Triple> negatives, double margin,
                                  std::vector<RowGrad>& merged) {
  const size_t n = positives.size();
  std::vector<std::vector<RowGrad>> locals(n);
  std::vector<double> terms(n);
#pragma omp parallel for schedule(static)
  for (size_t i = 0; i < n; ++i)
    terms[i] = hinge_term_grad(space, kg, positives[i], negatives[i], margin, locals[i]);
  return merge_pair_grads(locals, terms, merged);
}

double batch_hinge_grads(const EmbeddingSpace& space, int kg,
                         std::span<const Triple> positives,
                         std::span<const Triple> negatives, double margin,
                         std::vector<RowGrad>& merged) {
  if (positives.size() != negatives.size())
    throw ContractError("batch_hinge_grads: one negative per positive required");
  return parallel::enabled()
             ? batch_hinge_grads_parallel(space, kg, positives, negatives, margin, merged)
             : batch_hinge_grads_serial(space, kg, positives, negatives, margin, merged);
}

}  // namespace kens::kernels
