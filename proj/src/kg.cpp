#include "kens/kg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "kens/rng.hpp"

namespace kens {

std::optional<int32_t> KnowledgeGraph::entity_index(std::string_view s) const {
  auto it = entity_ids.find(std::string(s));
  if (it == entity_ids.end()) return std::nullopt;
  return it->second;
}

std::optional<int32_t> KnowledgeGraph::relation_index(std::string_view s) const {
  auto it = relation_ids.find(std::string(s));
  if (it == relation_ids.end()) return std::nullopt;
  return it->second;
}

int32_t KnowledgeGraph::intern_entity(std::string_view s) {
  auto it = entity_ids.find(std::string(s));
  if (it != entity_ids.end()) return it->second;
  int32_t idx = n_entities();
  entities.emplace_back(s);
  entity_ids.emplace(entities.back(), idx);
  return idx;
}

int32_t KnowledgeGraph::intern_relation(std::string_view s) {
  auto it = relation_ids.find(std::string(s));
  if (it != relation_ids.end()) return it->second;
  int32_t idx = n_relations();
  relations.emplace_back(s);
  relation_ids.emplace(relations.back(), idx);
  return idx;
}

std::vector<Triple> KnowledgeGraph::all_triples() const {
  std::vector<Triple> out;
  out.reserve(n_triples());
  out.insert(out.end(), train.begin(), train.end());
  out.insert(out.end(), valid.begin(), valid.end());
  out.insert(out.end(), test.begin(), test.end());
  return out;
}

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::Seed: return "seed";
    case Provenance::SelfLearned: return "self-learned";
    case Provenance::Predicted: return "predicted";
  }
  return "?";
}

bool SeedAlignment::add(int32_t a, int32_t b, Provenance prov) {
  auto ia = a_to_b.find(a);
  auto ib = b_to_a.find(b);
  if (ia != a_to_b.end() && ia->second == b) {
    ++duplicates_skipped;
    return false;
  }
  if (ia != a_to_b.end() || ib != b_to_a.end()) {
    ++conflicts_skipped;
    return false;
  }
  a_to_b.emplace(a, b);
  b_to_a.emplace(b, a);
  pairs.push_back({a, b, prov});
  return true;
}

double SeedAlignment::coverage(const KnowledgeGraph& a, const KnowledgeGraph& b) const {
  size_t smaller = std::min(a.entities.size(), b.entities.size());
  if (smaller == 0) return 0.0;
  return static_cast<double>(pairs.size()) / static_cast<double>(smaller);
}

namespace {

// Splits a line on single tabs. Returns false if the field count differs
// from `want` or any field is empty.
bool split_fields(const std::string& line, size_t want, std::vector<std::string_view>& out) {
  out.clear();
  size_t start = 0;
  while (true) {
    size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.emplace_back(line.data() + start, line.size() - start);
      break;
    }
    out.emplace_back(line.data() + start, pos - start);
    start = pos + 1;
  }
  if (out.size() != want) return false;
  for (auto f : out)
    if (f.empty()) return false;
  return true;
}

bool skippable(const std::string& line) {
  return line.empty() || line[0] == '#';
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

KnowledgeGraph load_triples(const std::filesystem::path& path, std::string kg_id) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open triple file: " + path.string());

  KnowledgeGraph kg;
  kg.id = std::move(kg_id);
  TripleSet seen;
  std::vector<std::string_view> fields;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(std::move(line));
    if (skippable(line)) continue;
    ++kg.source_lines;
    if (!split_fields(line, 3, fields)) {
      std::ostringstream msg;
      msg << path.string() << ":" << lineno << ": expected 3 tab-separated fields";
      throw ParseError(msg.str());
    }
    Triple t;
    t.head = kg.intern_entity(fields[0]);
    t.relation = kg.intern_relation(fields[1]);
    t.tail = kg.intern_entity(fields[2]);
    if (!seen.insert(t).second) {
      ++kg.duplicates_dropped;
      continue;
    }
    kg.train.push_back(t);
  }
  if (kg.train.empty())
    throw Error("empty graph: no triples in " + path.string());
  return kg;
}

void save_triples(const KnowledgeGraph& kg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write triple file: " + path.string());
  auto dump = [&](const std::vector<Triple>& split) {
    for (const Triple& t : split)
      out << kg.entities[t.head] << '\t' << kg.relations[t.relation] << '\t'
          << kg.entities[t.tail] << '\n';
  };
  dump(kg.train);
  dump(kg.valid);
  dump(kg.test);
  if (!out) throw Error("write failed: " + path.string());
}

SeedAlignment load_alignment(const std::filesystem::path& path,
                             const KnowledgeGraph& kg_a,
                             const KnowledgeGraph& kg_b) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open alignment file: " + path.string());

  SeedAlignment store;
  store.kg_a = kg_a.id;
  store.kg_b = kg_b.id;
  std::vector<std::string_view> fields;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(std::move(line));
    if (skippable(line)) continue;
    if (!split_fields(line, 2, fields)) {
      std::ostringstream msg;
      msg << path.string() << ":" << lineno << ": expected 2 tab-separated fields";
      throw ParseError(msg.str());
    }
    auto a = kg_a.entity_index(fields[0]);
    if (!a) throw Error("alignment entity not in " + kg_a.id + ": " + std::string(fields[0]));
    auto b = kg_b.entity_index(fields[1]);
    if (!b) throw Error("alignment entity not in " + kg_b.id + ": " + std::string(fields[1]));
    store.add(*a, *b, Provenance::Seed);
  }
  return store;
}

void split_dataset(KnowledgeGraph& kg, std::array<double, 3> ratios, uint64_t seed) {
  double sum = ratios[0] + ratios[1] + ratios[2];
  for (double r : ratios)
    if (!(r > 0.0)) throw ConfigError("split ratios: all must be positive");
  if (std::fabs(sum - 1.0) > 1e-9)
    throw ConfigError("split ratios: must sum to 1");

  std::vector<Triple> pool = kg.all_triples();
  const size_t n = pool.size();
  Rng rng(seed);
  shuffle(std::span<Triple>(pool), rng);

  auto rounded = [n](double r) {
    return static_cast<size_t>(std::llround(static_cast<double>(n) * r));
  };
  size_t n_valid = std::min(rounded(ratios[1]), n);
  size_t n_test = std::min(rounded(ratios[2]), n - n_valid);
  size_t n_train = n - n_valid - n_test;

  kg.train.assign(pool.begin(), pool.begin() + n_train);
  kg.valid.assign(pool.begin() + n_train, pool.begin() + n_train + n_valid);
  kg.test.assign(pool.begin() + n_train + n_valid, pool.end());
}

SchemaReport validate_unified_schema(std::span<const KnowledgeGraph> kgs) {
  if (kgs.size() < 2)
    throw ConfigError("unified schema check needs at least 2 KGs");
  SchemaReport report;
  std::map<std::string, std::vector<std::string>> usage;
  for (const KnowledgeGraph& kg : kgs) {
    if (kg.relations.empty())
      throw ConfigError("KG " + kg.id + " has an empty relation vocabulary");
    report.relations_per_kg[kg.id] = kg.relations.size();
    for (const std::string& r : kg.relations) usage[r].push_back(kg.id);
  }
  for (auto& [rel, users] : usage) {
    if (users.size() == 1) report.non_shared.push_back(rel);
    report.relations.push_back({rel, std::move(users)});
  }
  return report;
}

TripleSet make_triple_set(std::span<const Triple> triples) {
  TripleSet s;
  s.reserve(triples.size() * 2);
  for (const Triple& t : triples) s.insert(t);
  return s;
}

}  // namespace kens
