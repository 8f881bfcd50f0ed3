#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kens/embedding.hpp"
#include "kens/kernels.hpp"
#include "kens/kg.hpp"

namespace kens {

// Precomputed CSLS context between the entity tables of two KGs:
//   csls(a, b) = 2 cos(a, b) - r_k(a) - r_k(b)
// where r_k(x) is the mean cosine from x to its k nearest neighbors in the
// opposite KG's table. The correction penalizes hub entities.
class CslsIndex {
 public:
  CslsIndex(const EmbeddingSpace& space, int kg_a, int kg_b, int k);

  double cos(int32_t a, int32_t b) const {
    return kernels::dot(a_.row(a), b_.row(b));
  }
  double csls(int32_t a, int32_t b) const {
    // the corrections are grouped so csls(a,b) == csls(b,a) bitwise
    return 2.0 * cos(a, b) - (ra_[a] + rb_[b]);
  }
  // All CSLS similarities from entity a of the first KG (out size n_b).
  void csls_row(int32_t a, std::span<double> out) const;
  // All CSLS similarities to entity b of the second KG (out size n_a).
  void csls_col(int32_t b, std::span<double> out) const;

  int kg_a() const { return kg_a_; }
  int kg_b() const { return kg_b_; }
  int k() const { return k_; }
  int32_t n_a() const { return a_.n; }
  int32_t n_b() const { return b_.n; }

 private:
  int kg_a_, kg_b_, k_;
  kernels::UnitRows a_, b_;
  std::vector<double> ra_, rb_;
};

// Pairs (x, y) of currently unaligned entities that are mutual nearest
// neighbors under CSLS. The result is 1-to-1 and disjoint from `existing`.
std::vector<AlignmentPair> propose_mutual_nn(const CslsIndex& index,
                                             const SeedAlignment& existing);

struct MatchRecord {
  int32_t small = 0;
  int32_t large = 0;
  double similarity = 0.0;
  Provenance provenance = Provenance::Predicted;
};

// Inferred 1-to-1 entity match between a smaller and a larger KG.
struct AlignmentMap {
  std::string kg_small, kg_large;
  std::unordered_map<int32_t, int32_t> forward;   // small -> large, injective
  std::unordered_map<int32_t, int32_t> backward;  // exact inverse
  std::vector<MatchRecord> matches;
  std::vector<int32_t> unmatched_large;  // sorted ascending

  std::optional<int32_t> to_large(int32_t small) const;
  std::optional<int32_t> to_small(int32_t large) const;
  // Maps an entity of `from_kg` (one of the two sides) to its counterpart.
  std::optional<int32_t> translate(int32_t e, const std::string& from_kg) const;
};

// Matches every small-KG entity to a large-KG entity by descending CSLS,
// 1-to-1: when two claims collide the higher-similarity one wins and the
// loser moves to its next-best unclaimed candidate. Pairs already in
// `fixed` (seed or self-learned) are kept as matches and their entities are
// excluded from contention. Requires |E_small| <= |E_large|.
AlignmentMap predict_alignment(const EmbeddingSpace& space,
                               const KnowledgeGraph& kg_small,
                               const KnowledgeGraph& kg_large,
                               const SeedAlignment* fixed, int csls_k);

enum class TransferFailure { None, UnmatchedEntity, RelationMissing };

struct TransferredQuery {
  std::optional<Query> query;
  TransferFailure failure = TransferFailure::None;
};

// Maps the query's anchor entity through the alignment; the relation keeps
// its surface ID (unified schema). Absent when the anchor has no
// counterpart or the relation is missing from the destination vocabulary.
TransferredQuery transfer_query(const Query& q, const AlignmentMap& map,
                                const KnowledgeGraph& from, const KnowledgeGraph& to);

// Maps a ranked entity list through the alignment, preserving order and
// dropping entities without a counterpart.
std::vector<int32_t> transfer_answers(std::span<const int32_t> ranked,
                                      const AlignmentMap& map,
                                      const std::string& from_kg);

// TSV export: entity_small \t entity_large \t similarity(6dp) \t provenance.
void save_alignment_tsv(const AlignmentMap& map, const KnowledgeGraph& kg_small,
                        const KnowledgeGraph& kg_large,
                        const std::filesystem::path& path);

}  // namespace kens
