#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kens/embedding.hpp"
#include "kens/kg.hpp"

namespace kens {

// f = -||h + r - t||_2 over real vectors. Higher is more plausible; <= 0.
double score_transe(std::span<const double> h, std::span<const double> r,
                    std::span<const double> t);

// f = -||h o e^{i*theta} - t||_2 over C^d. h and t are interleaved (re, im)
// pairs of length 2d, theta is the d phase components of the rotation.
double score_rotate(std::span<const double> h, std::span<const double> theta,
                    std::span<const double> t);

// Dispatches on the space's model kind.
double triple_score(const EmbeddingSpace& space, int kg, int32_t h, int32_t r, int32_t t);
double triple_score(const EmbeddingSpace& space, int kg, const Triple& t);

// d(score)/d(h), d(score)/d(r or theta), d(score)/d(t), accumulated (+=)
// into the provided buffers. Returns false (no accumulation) at the norm's
// zero point where the gradient is undefined.
bool score_transe_grad(std::span<const double> h, std::span<const double> r,
                       std::span<const double> t, double scale,
                       std::span<double> gh, std::span<double> gr, std::span<double> gt);
bool score_rotate_grad(std::span<const double> h, std::span<const double> theta,
                       std::span<const double> t, double scale,
                       std::span<double> gh, std::span<double> gtheta, std::span<double> gt);

// One margin-ranking term: max(0, f(neg) - f(pos) + margin).
double hinge(double pos_score, double neg_score, double margin);

// Sum of hinge terms over paired positive/negative triples (one negative per
// positive; positives repeat for multiple negatives).
double knowledge_loss(const EmbeddingSpace& space, int kg,
                      std::span<const Triple> positives,
                      std::span<const Triple> negatives, double margin);

// Sum of L2 distances between aligned entity vectors of two KGs.
double alignment_loss(const EmbeddingSpace& space, int kg_a, int kg_b,
                      std::span<const AlignmentPair> pairs);

// Sparse gradient rows addressed by (kg, table, row) packed into a key.
enum class TableKind : uint8_t { Entity = 0, Relation = 1 };

inline uint64_t row_key(int kg, TableKind kind, int32_t row) {
  return (static_cast<uint64_t>(kg) << 40) |
         (static_cast<uint64_t>(kind) << 32) |
         static_cast<uint32_t>(row);
}
inline int row_key_kg(uint64_t key) { return static_cast<int>(key >> 40); }
inline TableKind row_key_kind(uint64_t key) {
  return static_cast<TableKind>((key >> 32) & 0xff);
}
inline int32_t row_key_row(uint64_t key) {
  return static_cast<int32_t>(key & 0xffffffffu);
}

struct RowGrad {
  uint64_t key = 0;
  std::vector<double> g;
};

// Gradient of one hinge term w.r.t. every touched row. Appends RowGrads
// (one per distinct row) to `out` and returns the term value. Inactive
// terms and exact-kink terms contribute nothing (subgradient 0).
double hinge_term_grad(const EmbeddingSpace& space, int kg, const Triple& pos,
                       const Triple& neg, double margin, std::vector<RowGrad>& out);

// Gradient of scale * ||e_a - e_b|| for one aligned pair; appends the two
// entity rows. Returns the unscaled distance.
double alignment_pair_grad(const EmbeddingSpace& space, int kg_a, int kg_b,
                           const AlignmentPair& pair, double scale,
                           std::vector<RowGrad>& out);

}  // namespace kens
