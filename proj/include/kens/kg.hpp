#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kens/errors.hpp"

namespace kens {

struct Triple {
  int32_t head = 0;
  int32_t relation = 0;
  int32_t tail = 0;

  friend bool operator==(const Triple&, const Triple&) = default;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct TripleHash {
  size_t operator()(const Triple& t) const {
    uint64_t x = static_cast<uint32_t>(t.head);
    x = x * 0x9e3779b97f4a7c15ull ^ static_cast<uint32_t>(t.relation);
    x = x * 0x9e3779b97f4a7c15ull ^ static_cast<uint32_t>(t.tail);
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdull;
    x ^= x >> 33;
    return static_cast<size_t>(x);
  }
};

using TripleSet = std::unordered_set<Triple, TripleHash>;

enum class Direction { PredictTail, PredictHead };

// A fact-prediction query. `anchor` is the known entity: the head when
// predicting tails, the tail when predicting heads.
struct Query {
  int32_t anchor = 0;
  int32_t relation = 0;
  Direction direction = Direction::PredictTail;

  friend bool operator==(const Query&, const Query&) = default;
};

struct AnswerSet {
  Query query;
  std::vector<int32_t> answers;  // sorted ascending, deduplicated, non-empty
};

// One language-specific KG: vocabularies in first-appearance order plus
// triple sets per split. Immutable after loading/splitting; safe to share
// across threads read-only.
struct KnowledgeGraph {
  std::string id;
  std::vector<std::string> entities;
  std::vector<std::string> relations;
  std::unordered_map<std::string, int32_t> entity_ids;
  std::unordered_map<std::string, int32_t> relation_ids;
  std::vector<Triple> train, valid, test;
  size_t source_lines = 0;
  size_t duplicates_dropped = 0;

  int32_t n_entities() const { return static_cast<int32_t>(entities.size()); }
  int32_t n_relations() const { return static_cast<int32_t>(relations.size()); }
  size_t n_triples() const { return train.size() + valid.size() + test.size(); }

  std::optional<int32_t> entity_index(std::string_view s) const;
  std::optional<int32_t> relation_index(std::string_view s) const;
  int32_t intern_entity(std::string_view s);
  int32_t intern_relation(std::string_view s);

  std::vector<Triple> all_triples() const;
};

enum class Provenance { Seed, SelfLearned, Predicted };
const char* provenance_name(Provenance p);

struct AlignmentPair {
  int32_t a = 0;
  int32_t b = 0;
  Provenance provenance = Provenance::Seed;
};

// 1-to-1 store of entity correspondences between two KGs. An entity on
// either side may appear in at most one pair; conflicting additions are
// rejected and counted.
struct SeedAlignment {
  std::string kg_a, kg_b;
  std::vector<AlignmentPair> pairs;
  std::unordered_map<int32_t, int32_t> a_to_b, b_to_a;
  size_t conflicts_skipped = 0;
  size_t duplicates_skipped = 0;

  bool contains_a(int32_t a) const { return a_to_b.contains(a); }
  bool contains_b(int32_t b) const { return b_to_a.contains(b); }

  // Returns false if the pair duplicates or conflicts with an existing one.
  bool add(int32_t a, int32_t b, Provenance prov);

  // Fraction of the smaller vocabulary covered by stored pairs.
  double coverage(const KnowledgeGraph& a, const KnowledgeGraph& b) const;
};

// Reads a tab-separated triple file (head\trelation\ttail per line, UTF-8,
// '#' comment lines ignored) into a graph whose triples all land in the
// train split. Duplicate triples are dropped and counted.
KnowledgeGraph load_triples(const std::filesystem::path& path, std::string kg_id);

// Writes every triple of the graph back out in the same format,
// train split first, then valid, then test.
void save_triples(const KnowledgeGraph& kg, const std::filesystem::path& path);

// Reads entityA\tentityB pairs, resolving both against the vocabularies.
SeedAlignment load_alignment(const std::filesystem::path& path,
                             const KnowledgeGraph& kg_a,
                             const KnowledgeGraph& kg_b);

// Repartitions all triples of the graph into train/valid/test under a
// seeded shuffle. Non-train splits are rounded to the nearest count; the
// train split absorbs the remainder.
void split_dataset(KnowledgeGraph& kg, std::array<double, 3> ratios, uint64_t seed);

struct RelationUsage {
  std::string relation;
  std::vector<std::string> kgs;  // kg ids using this relation
};

struct SchemaReport {
  std::vector<RelationUsage> relations;  // sorted by relation id
  std::unordered_map<std::string, size_t> relations_per_kg;
  std::vector<std::string> non_shared;  // relations used by exactly one KG
};

// Report-only check that the KGs' relation vocabularies form one schema.
// Throws ConfigError if a graph has an empty relation vocabulary.
SchemaReport validate_unified_schema(std::span<const KnowledgeGraph> kgs);

TripleSet make_triple_set(std::span<const Triple> triples);

}  // namespace kens
