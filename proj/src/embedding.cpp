#include "kens/embedding.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include "kens/rng.hpp"
#include "kens/util.hpp"

namespace kens {

const char* model_kind_name(ModelKind k) {
  return k == ModelKind::TransE ? "transe" : "rotate";
}

ModelKind parse_model_kind(std::string_view s) {
  if (s == "transe" || s == "TransE") return ModelKind::TransE;
  if (s == "rotate" || s == "RotatE") return ModelKind::RotatE;
  throw ConfigError("unknown model kind: " + std::string(s));
}

int EmbeddingSpace::kg_of(std::string_view id) const {
  auto it = kg_index.find(std::string(id));
  if (it == kg_index.end())
    throw ContractError("KG not in embedding space: " + std::string(id));
  return it->second;
}

bool EmbeddingSpace::all_finite() const {
  for (const KgEmbedding& kg : kgs) {
    for (double v : kg.entity)
      if (!std::isfinite(v)) return false;
    for (double v : kg.relation)
      if (!std::isfinite(v)) return false;
  }
  return true;
}

EmbeddingSpace init_space(ModelKind kind, int dim,
                          std::span<const KnowledgeGraph> kgs, uint64_t seed) {
  if (dim <= 0) throw ConfigError("embedding dimension must be positive");
  EmbeddingSpace space;
  space.kind = kind;
  space.dim = dim;
  const double bound = 6.0 / std::sqrt(static_cast<double>(dim));
  for (const KnowledgeGraph& kg : kgs) {
    Rng rng(mix_seed(seed, hash_tag(kg.id)));
    KgEmbedding table;
    table.entity_ids = kg.entities;
    table.relation_ids = kg.relations;
    table.entity.resize(kg.entities.size() * static_cast<size_t>(space.entity_width()));
    table.relation.resize(kg.relations.size() * static_cast<size_t>(dim));
    for (double& v : table.entity) v = rng.uniform(-bound, bound);
    if (kind == ModelKind::RotatE) {
      for (double& v : table.relation) v = rng.uniform(0.0, 2.0 * std::numbers::pi);
    } else {
      for (double& v : table.relation) v = rng.uniform(-bound, bound);
    }
    space.kg_index.emplace(kg.id, space.n_kgs());
    space.kg_ids.push_back(kg.id);
    space.kgs.push_back(std::move(table));
  }
  return space;
}

void save_checkpoint(const EmbeddingSpace& space, const std::filesystem::path& path) {
  atomic_write(path, [&](std::ostream& out) {
    out << "KENS-EMB v1 " << model_kind_name(space.kind) << " " << space.dim << "\n";
    for (int k = 0; k < space.n_kgs(); ++k) {
      const KgEmbedding& kg = space.kgs[k];
      out << "KG " << space.kg_ids[k] << " " << kg.n_entities() << " "
          << kg.n_relations() << "\n";
      const int ew = space.entity_width();
      for (int32_t e = 0; e < kg.n_entities(); ++e) {
        out << kg.entity_ids[e];
        const double* row = kg.entity.data() + static_cast<size_t>(e) * ew;
        for (int j = 0; j < ew; ++j) out << ' ' << format_double(row[j]);
        out << '\n';
      }
      for (int32_t r = 0; r < kg.n_relations(); ++r) {
        out << kg.relation_ids[r];
        const double* row = kg.relation.data() + static_cast<size_t>(r) * space.dim;
        for (int j = 0; j < space.dim; ++j) out << ' ' << format_double(row[j]);
        out << '\n';
      }
    }
  });
}

namespace {

[[noreturn]] void bad_checkpoint(const std::filesystem::path& path, const std::string& what) {
  throw ParseError("checkpoint " + path.string() + ": " + what);
}

// IDs are opaque and may contain spaces, so a vector line is parsed from the
// right: the trailing `width` space-separated tokens are the floats, the
// rest of the line is the ID.
void parse_vector_line(const std::filesystem::path& path, const std::string& line,
                       int width, std::string& id, double* row) {
  size_t end = line.size();
  for (int j = width - 1; j >= 0; --j) {
    size_t sp = line.rfind(' ', end == 0 ? std::string::npos : end - 1);
    if (sp == std::string::npos) bad_checkpoint(path, "short vector line: " + line);
    const char* tok = line.c_str() + sp + 1;
    char* parsed_end = nullptr;
    row[j] = std::strtod(tok, &parsed_end);
    if (parsed_end == tok) bad_checkpoint(path, "bad float in line: " + line);
    end = sp;
  }
  if (end == 0) bad_checkpoint(path, "missing ID in line: " + line);
  id = line.substr(0, end);
}

std::string next_line(std::istream& in, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line)) bad_checkpoint(path, "unexpected end of file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

EmbeddingSpace load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint: " + path.string());

  {
    std::istringstream header(next_line(in, path));
    std::string magic, version, kind_str;
    int dim = 0;
    if (!(header >> magic >> version >> kind_str >> dim) || magic != "KENS-EMB" ||
        version != "v1" || dim <= 0)
      bad_checkpoint(path, "bad header");
    EmbeddingSpace space;
    space.kind = parse_model_kind(kind_str);
    space.dim = dim;

    std::string block;
    while (std::getline(in, block)) {
      if (!block.empty() && block.back() == '\r') block.pop_back();
      if (block.empty()) continue;
      std::istringstream bh(block);
      std::string kw, kg_id;
      int64_t n_ent = 0, n_rel = 0;
      if (!(bh >> kw >> kg_id >> n_ent >> n_rel) || kw != "KG" || n_ent < 0 || n_rel < 0)
        bad_checkpoint(path, "bad KG block header: " + block);
      KgEmbedding kg;
      const int ew = space.entity_width();
      kg.entity_ids.resize(n_ent);
      kg.entity.resize(static_cast<size_t>(n_ent) * ew);
      for (int64_t e = 0; e < n_ent; ++e)
        parse_vector_line(path, next_line(in, path), ew, kg.entity_ids[e],
                          kg.entity.data() + static_cast<size_t>(e) * ew);
      kg.relation_ids.resize(n_rel);
      kg.relation.resize(static_cast<size_t>(n_rel) * space.dim);
      for (int64_t r = 0; r < n_rel; ++r)
        parse_vector_line(path, next_line(in, path), space.dim, kg.relation_ids[r],
                          kg.relation.data() + static_cast<size_t>(r) * space.dim);
      space.kg_index.emplace(kg_id, space.n_kgs());
      space.kg_ids.push_back(kg_id);
      space.kgs.push_back(std::move(kg));
    }
    if (space.kgs.empty()) bad_checkpoint(path, "no KG blocks");
    return space;
  }
}

}  // namespace kens
