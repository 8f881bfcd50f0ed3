#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kens/embedding.hpp"
#include "kens/kg.hpp"
#include "kens/scoring.hpp"

// Data-parallel inner loops. Every kernel comes as a serial reference and an
// OpenMP variant; the unsuffixed entry point picks one via kens::parallel.
// Each output slot is computed independently from read-only inputs, so both
// variants produce bit-identical results.
namespace kens::kernels {

// Scores the query against every entity of its KG (out.size() == |E|).
void score_all_serial(const EmbeddingSpace& space, int kg, const Query& q,
                      std::span<double> out);
void score_all_parallel(const EmbeddingSpace& space, int kg, const Query& q,
                        std::span<double> out);
void score_all(const EmbeddingSpace& space, int kg, const Query& q,
               std::span<double> out);

// All entity indices ordered by (score desc, index asc).
std::vector<int32_t> rank_entities(const EmbeddingSpace& space, int kg, const Query& q,
                                   std::vector<double>* scores_out = nullptr);

// Row-normalized entity table (cosine geometry). RotatE rows are treated as
// real vectors of width 2d. Throws ContractError on a zero row.
struct UnitRows {
  int n = 0;
  int width = 0;
  std::vector<double> data;  // n * width

  std::span<const double> row(int i) const {
    return {data.data() + static_cast<size_t>(i) * width, static_cast<size_t>(width)};
  }
};

UnitRows normalize_entity_rows(const EmbeddingSpace& space, int kg);

double dot(std::span<const double> a, std::span<const double> b);

// out[j] = cos(a_row_i, b_row_j) for all rows of b.
void cos_row(const UnitRows& a, int i, const UnitRows& b, std::span<double> out);

// out[i] = mean cosine from row i of `a` to its k nearest rows of `b`.
void knn_mean_cos_serial(const UnitRows& a, const UnitRows& b, int k,
                         std::span<double> out);
void knn_mean_cos_parallel(const UnitRows& a, const UnitRows& b, int k,
                           std::span<double> out);
void knn_mean_cos(const UnitRows& a, const UnitRows& b, int k, std::span<double> out);

// Per-pair hinge gradients for a batch, computed independently per pair and
// merged in pair order (deterministic under any thread count). Returns the
// summed hinge loss; merged row gradients land in `merged` in first-touch
// order.
double batch_hinge_grads_serial(const EmbeddingSpace& space, int kg,
                                std::span<const Triple> positives,
                                std::span<const Triple> negatives, double margin,
                                std::vector<RowGrad>& merged);
double batch_hinge_grads_parallel(const EmbeddingSpace& space, int kg,
                                  std::span<const Triple> positives,
                                  std::span<const Triple> negatives, double margin,
                                  std::vector<RowGrad>& merged);
double batch_hinge_grads(const EmbeddingSpace& space, int kg,
                         std::span<const Triple> positives,
                         std::span<const Triple> negatives, double margin,
                         std::vector<RowGrad>& merged);

}  // namespace kens::kernels
