#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kens/kg.hpp"

namespace kens {

enum class ModelKind { TransE, RotatE };

const char* model_kind_name(ModelKind k);
ModelKind parse_model_kind(std::string_view s);

// Vector tables of one KG, flat row-major.
struct KgEmbedding {
  std::vector<std::string> entity_ids;
  std::vector<std::string> relation_ids;
  std::vector<double> entity;    // n_entities * entity_width
  std::vector<double> relation;  // n_relations * dim

  int32_t n_entities() const { return static_cast<int32_t>(entity_ids.size()); }
  int32_t n_relations() const { return static_cast<int32_t>(relation_ids.size()); }
};

// All KGs embedded in one shared d-dimensional space. TransE rows are real
// vectors of width d. RotatE entity rows are complex vectors stored as
// interleaved (re, im) pairs of width 2d; relation rows are phase vectors of
// width d, so the rotation e^{i*theta} has unit modulus by construction.
struct EmbeddingSpace {
  ModelKind kind = ModelKind::TransE;
  int dim = 0;
  std::vector<std::string> kg_ids;
  std::vector<KgEmbedding> kgs;
  std::unordered_map<std::string, int> kg_index;

  int entity_width() const { return kind == ModelKind::RotatE ? 2 * dim : dim; }
  int n_kgs() const { return static_cast<int>(kgs.size()); }

  int kg_of(std::string_view id) const;  // throws ContractError if unknown

  std::span<const double> entity_vec(int kg, int32_t e) const {
    return {kgs[kg].entity.data() + static_cast<size_t>(e) * entity_width(),
            static_cast<size_t>(entity_width())};
  }
  std::span<double> entity_vec(int kg, int32_t e) {
    return {kgs[kg].entity.data() + static_cast<size_t>(e) * entity_width(),
            static_cast<size_t>(entity_width())};
  }
  std::span<const double> relation_vec(int kg, int32_t r) const {
    return {kgs[kg].relation.data() + static_cast<size_t>(r) * dim,
            static_cast<size_t>(dim)};
  }
  std::span<double> relation_vec(int kg, int32_t r) {
    return {kgs[kg].relation.data() + static_cast<size_t>(r) * dim,
            static_cast<size_t>(dim)};
  }

  bool all_finite() const;
};

// Random initialization: real components uniform in (-6/sqrt(d), 6/sqrt(d)),
// RotatE phases uniform in [0, 2*pi). Each KG's tables are filled from an
// independent stream derived from (seed, kg id), so a KG's starting point
// does not depend on which other KGs are present.
EmbeddingSpace init_space(ModelKind kind, int dim,
                          std::span<const KnowledgeGraph> kgs, uint64_t seed);

// Text checkpoint, format:
//   KENS-EMB v1 <model-kind> <d>
//   KG <kg_id> <|E|> <|R|>
//   <entity id> <d or 2d floats>     (one line per entity)
//   <relation id> <d floats>         (one line per relation)
void save_checkpoint(const EmbeddingSpace& space, const std::filesystem::path& path);
EmbeddingSpace load_checkpoint(const std::filesystem::path& path);

}  // namespace kens
