#include "kens/align.hpp"

#include <algorithm>
#include <queue>

#include "kens/parallel.hpp"
#include "kens/util.hpp"

namespace kens {

CslsIndex::CslsIndex(const EmbeddingSpace& space, int kg_a, int kg_b, int k)
    : kg_a_(kg_a), kg_b_(kg_b), k_(k) {
  if (kg_a == kg_b) throw ContractError("CslsIndex: the two KGs must differ");
  a_ = kernels::normalize_entity_rows(space, kg_a);
  b_ = kernels::normalize_entity_rows(space, kg_b);
  if (k < 1 || k > std::min(a_.n, b_.n))
    throw ContractError("CslsIndex: neighborhood size out of range");
  ra_.resize(a_.n);
  rb_.resize(b_.n);
  kernels::knn_mean_cos(a_, b_, k, ra_);
  kernels::knn_mean_cos(b_, a_, k, rb_);
}

void CslsIndex::csls_row(int32_t a, std::span<double> out) const {
  kernels::cos_row(a_, a, b_, out);
  for (int32_t j = 0; j < b_.n; ++j) out[j] = 2.0 * out[j] - (ra_[a] + rb_[j]);
}

void CslsIndex::csls_col(int32_t b, std::span<double> out) const {
  kernels::cos_row(b_, b, a_, out);
  for (int32_t i = 0; i < a_.n; ++i) out[i] = 2.0 * out[i] - (ra_[i] + rb_[b]);
}

namespace {

// argmax over unaligned candidates; ties go to the lower index.
int32_t best_unaligned(std::span<const double> sims, std::span<const char> aligned) {
  int32_t best = -1;
  double best_sim = 0.0;
  for (int32_t j = 0; j < static_cast<int32_t>(sims.size()); ++j) {
    if (aligned[j]) continue;
    if (best < 0 || sims[j] > best_sim) {
      best = j;
      best_sim = sims[j];
    }
  }
  return best;
}

}  // namespace

std::vector<AlignmentPair> propose_mutual_nn(const CslsIndex& index,
                                             const SeedAlignment& existing) {
  const int32_t na = index.n_a(), nb = index.n_b();
  std::vector<char> aligned_a(na, 0), aligned_b(nb, 0);
  for (const AlignmentPair& p : existing.pairs) {
    aligned_a[p.a] = 1;
    aligned_b[p.b] = 1;
  }

  // Best unaligned counterpart for every unaligned entity, both directions.
  std::vector<int32_t> best_b(na, -1), best_a(nb, -1);
  auto fill_best = [&](auto&& body, int32_t n) {
    if (parallel::enabled()) {
#pragma omp parallel
      {
        std::vector<double> sims;
#pragma omp for schedule(static)
        for (int32_t i = 0; i < n; ++i) body(i, sims);
      }
    } else {
      std::vector<double> sims;
      for (int32_t i = 0; i < n; ++i) body(i, sims);
    }
  };
  fill_best(
      [&](int32_t a, std::vector<double>& sims) {
        if (aligned_a[a]) return;
        sims.resize(nb);
        index.csls_row(a, sims);
        best_b[a] = best_unaligned(sims, aligned_b);
      },
      na);
  fill_best(
      [&](int32_t b, std::vector<double>& sims) {
        if (aligned_b[b]) return;
        sims.resize(na);
        index.csls_col(b, sims);
        best_a[b] = best_unaligned(sims, aligned_a);
      },
      nb);

  std::vector<AlignmentPair> proposals;
  for (int32_t a = 0; a < na; ++a) {
    int32_t b = best_b[a];
    if (b >= 0 && best_a[b] == a)
      proposals.push_back({a, b, Provenance::SelfLearned});
  }
  return proposals;
}

std::optional<int32_t> AlignmentMap::to_large(int32_t small) const {
  auto it = forward.find(small);
  if (it == forward.end()) return std::nullopt;
  return it->second;
}

std::optional<int32_t> AlignmentMap::to_small(int32_t large) const {
  auto it = backward.find(large);
  if (it == backward.end()) return std::nullopt;
  return it->second;
}

std::optional<int32_t> AlignmentMap::translate(int32_t e, const std::string& from_kg) const {
  if (from_kg == kg_small) return to_large(e);
  if (from_kg == kg_large) return to_small(e);
  throw ContractError("AlignmentMap: KG " + from_kg + " is not a side of this map");
}

namespace {

struct Claim {
  double sim;
  int32_t small;
  int32_t large;
};

struct ClaimLess {
  bool operator()(const Claim& x, const Claim& y) const {
    if (x.sim != y.sim) return x.sim < y.sim;
    if (x.small != y.small) return x.small > y.small;
    return x.large > y.large;
  }
};

// Top candidates of one small entity, refilled from a full rescan when
// exhausted, so the greedy pass never misses the true next-best.
struct CandidateCursor {
  std::vector<Claim> sorted;  // descending
  size_t next = 0;
};

}  // namespace

AlignmentMap predict_alignment(const EmbeddingSpace& space,
                               const KnowledgeGraph& kg_small,
                               const KnowledgeGraph& kg_large,
                               const SeedAlignment* fixed, int csls_k) {
  if (kg_small.n_entities() > kg_large.n_entities())
    throw ContractError("predict_alignment: caller must pass the smaller KG first");

  const int ks = space.kg_of(kg_small.id);
  const int kl = space.kg_of(kg_large.id);
  CslsIndex index(space, ks, kl, csls_k);
  const int32_t ns = index.n_a(), nl = index.n_b();

  AlignmentMap map;
  map.kg_small = kg_small.id;
  map.kg_large = kg_large.id;

  std::vector<char> taken_small(ns, 0), taken_large(nl, 0);
  if (fixed) {
    const bool small_is_a = fixed->kg_a == kg_small.id;
    if (!small_is_a && fixed->kg_b != kg_small.id)
      throw ContractError("predict_alignment: fixed pairs belong to another KG pair");
    for (const AlignmentPair& p : fixed->pairs) {
      const int32_t s = small_is_a ? p.a : p.b;
      const int32_t l = small_is_a ? p.b : p.a;
      map.forward.emplace(s, l);
      map.backward.emplace(l, s);
      map.matches.push_back({s, l, index.csls(s, l), p.provenance});
      taken_small[s] = 1;
      taken_large[l] = 1;
    }
  }

  // Sorted candidate rows for the contested entities, truncated and lazily
  // refilled; keeps memory at O(ns * chunk) instead of the full matrix.
  const int32_t chunk = std::min<int32_t>(nl, 64);
  std::vector<CandidateCursor> cursors(ns);
  std::vector<int32_t> rescan_from(ns, 0);

  auto refill = [&](int32_t s) {
    CandidateCursor& cur = cursors[s];
    cur.sorted.clear();
    cur.next = 0;
    std::vector<double> sims(nl);
    index.csls_row(s, sims);
    std::vector<Claim> all;
    all.reserve(nl);
    for (int32_t l = 0; l < nl; ++l)
      if (!taken_large[l]) all.push_back({sims[l], s, l});
    const size_t keep = std::min<size_t>(all.size(), static_cast<size_t>(chunk));
    std::partial_sort(all.begin(), all.begin() + keep, all.end(),
                      [](const Claim& x, const Claim& y) { return ClaimLess{}(y, x); });
    all.resize(keep);
    cur.sorted = std::move(all);
  };

  std::priority_queue<Claim, std::vector<Claim>, ClaimLess> heap;
  auto push_next = [&](int32_t s) {
    CandidateCursor& cur = cursors[s];
    while (true) {
      if (cur.next >= cur.sorted.size()) {
        refill(s);
        if (cur.sorted.empty()) return;  // every large entity is taken
      }
      const Claim c = cur.sorted[cur.next++];
      if (taken_large[c.large]) continue;  // claimed since this row was built
      heap.push(c);
      return;
    }
  };

  for (int32_t s = 0; s < ns; ++s)
    if (!taken_small[s]) push_next(s);

  while (!heap.empty()) {
    const Claim c = heap.top();
    heap.pop();
    if (taken_large[c.large]) {
      push_next(c.small);
      continue;
    }
    taken_small[c.small] = 1;
    taken_large[c.large] = 1;
    map.forward.emplace(c.small, c.large);
    map.backward.emplace(c.large, c.small);
    map.matches.push_back({c.small, c.large, c.sim, Provenance::Predicted});
  }

  for (int32_t l = 0; l < nl; ++l)
    if (!taken_large[l]) map.unmatched_large.push_back(l);
  return map;
}

TransferredQuery transfer_query(const Query& q, const AlignmentMap& map,
                                const KnowledgeGraph& from, const KnowledgeGraph& to) {
  auto counterpart = map.translate(q.anchor, from.id);
  if (!counterpart) return {std::nullopt, TransferFailure::UnmatchedEntity};
  auto rel = to.relation_index(from.relations[q.relation]);
  if (!rel) return {std::nullopt, TransferFailure::RelationMissing};
  return {Query{*counterpart, *rel, q.direction}, TransferFailure::None};
}

std::vector<int32_t> transfer_answers(std::span<const int32_t> ranked,
                                      const AlignmentMap& map,
                                      const std::string& from_kg) {
  std::vector<int32_t> out;
  out.reserve(ranked.size());
  for (int32_t e : ranked)
    if (auto m = map.translate(e, from_kg)) out.push_back(*m);
  return out;
}

void save_alignment_tsv(const AlignmentMap& map, const KnowledgeGraph& kg_small,
                        const KnowledgeGraph& kg_large,
                        const std::filesystem::path& path) {
  atomic_write(path, [&](std::ostream& out) {
    for (const MatchRecord& m : map.matches)
      out << kg_small.entities[m.small] << '\t' << kg_large.entities[m.large] << '\t'
          << format_fixed6(m.similarity) << '\t' << provenance_name(m.provenance)
          << '\n';
  });
}

}  // namespace kens
