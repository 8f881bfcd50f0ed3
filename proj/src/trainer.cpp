#include "kens/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "kens/align.hpp"
#include "kens/kernels.hpp"
#include "kens/util.hpp"

namespace kens {

void TrainConfig::validate() const {
  auto positive = [](double v, const char* field) {
    if (!(v > 0.0)) throw ConfigError(std::string("train config: ") + field +
                                      " must be positive");
  };
  positive(lr, "lr");
  positive(dim, "dim");
  positive(batch_size, "batch_size");
  positive(margin, "margin");
  positive(negatives, "negatives");
  positive(epochs, "epochs");
  positive(csls_k, "csls_k");
  if (lambda < 0.0) throw ConfigError("train config: lambda must be non-negative");
  if (l2 < 0.0) throw ConfigError("train config: l2 must be non-negative");
  if (selflearn_warmup < 0) throw ConfigError("train config: selflearn_warmup must be non-negative");
  if (selflearn_period <= 0) throw ConfigError("train config: selflearn_period must be positive");
}

TrainConfig TrainConfig::defaults_for(ModelKind kind) {
  TrainConfig cfg;
  cfg.model = kind;
  if (kind == ModelKind::RotatE) {
    cfg.lr = 0.01;
    cfg.dim = 200;
    cfg.batch_size = 512;
  }
  return cfg;
}

AdamState::AdamState(const EmbeddingSpace& space, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  kgs_.resize(space.n_kgs());
  for (int k = 0; k < space.n_kgs(); ++k) {
    const KgEmbedding& kg = space.kgs[k];
    kgs_[k].entity.m.assign(kg.entity.size(), 0.0);
    kgs_[k].entity.v.assign(kg.entity.size(), 0.0);
    kgs_[k].entity.step.assign(kg.n_entities(), 0);
    kgs_[k].relation.m.assign(kg.relation.size(), 0.0);
    kgs_[k].relation.v.assign(kg.relation.size(), 0.0);
    kgs_[k].relation.step.assign(kg.n_relations(), 0);
  }
}

void AdamState::apply(EmbeddingSpace& space, std::span<const RowGrad> grads, double lr) {
  for (const RowGrad& rg : grads) {
    const int kg = row_key_kg(rg.key);
    const int32_t row = row_key_row(rg.key);
    const bool is_entity = row_key_kind(rg.key) == TableKind::Entity;
    Table& tab = is_entity ? kgs_[kg].entity : kgs_[kg].relation;
    std::span<double> param = is_entity ? space.entity_vec(kg, row)
                                        : space.relation_vec(kg, row);
    const size_t offset = static_cast<size_t>(row) * param.size();
    const int64_t t = ++tab.step[row];
    const double corr1 = 1.0 - std::pow(beta1_, static_cast<double>(t));
    const double corr2 = 1.0 - std::pow(beta2_, static_cast<double>(t));
    for (size_t j = 0; j < param.size(); ++j) {
      const double g = rg.g[j];
      double& m = tab.m[offset + j];
      double& v = tab.v[offset + j];
      m = beta1_ * m + (1.0 - beta1_) * g;
      v = beta2_ * v + (1.0 - beta2_) * g * g;
      param[j] -= lr * (m / corr1) / (std::sqrt(v / corr2) + eps_);
    }
  }
}

Triple sample_negative_side(const Triple& t, int32_t n_entities,
                            const TripleSet& train, bool corrupt_tail, Rng& rng,
                            int max_retries) {
  if (n_entities < 2) throw SamplingError("negative sampling needs >= 2 entities");
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    Triple neg = t;
    const int32_t e = static_cast<int32_t>(rng.below(n_entities));
    if (corrupt_tail)
      neg.tail = e;
    else
      neg.head = e;
    if (!train.contains(neg)) return neg;
  }
  throw SamplingError("negative sampling: retry budget exhausted (KG too dense)");
}

Triple sample_negative(const Triple& t, const KnowledgeGraph& kg,
                       const TripleSet& train, Rng& rng, int max_retries) {
  const bool corrupt_tail = rng.below(2) == 1;
  return sample_negative_side(t, kg.n_entities(), train, corrupt_tail, rng, max_retries);
}

double EpochTrace::knowledge_total() const {
  return std::accumulate(knowledge.begin(), knowledge.end(), 0.0);
}

namespace {

// L2 on the rows a batch touched: loss += l2 * ||row||^2, grad += 2*l2*row.
double add_l2_on_touched(const EmbeddingSpace& space, double l2,
                         std::vector<RowGrad>& grads) {
  if (l2 <= 0.0) return 0.0;
  double reg = 0.0;
  for (RowGrad& rg : grads) {
    const int kg = row_key_kg(rg.key);
    const int32_t row = row_key_row(rg.key);
    std::span<const double> param = row_key_kind(rg.key) == TableKind::Entity
                                        ? space.entity_vec(kg, row)
                                        : space.relation_vec(kg, row);
    for (size_t j = 0; j < param.size(); ++j) {
      reg += l2 * param[j] * param[j];
      rg.g[j] += 2.0 * l2 * param[j];
    }
  }
  return reg;
}

struct PairCursor {
  std::vector<size_t> order;
  size_t next = 0;
};

}  // namespace

TrainResult train_joint(std::span<const KnowledgeGraph> kgs,
                        std::vector<SeedAlignment> seeds, const TrainConfig& cfg) {
  cfg.validate();
  if (kgs.empty()) throw ConfigError("train_joint: at least one KG required");

  TrainResult result;
  result.space = init_space(cfg.model, cfg.dim, kgs, cfg.seed);
  result.alignments = std::move(seeds);
  EmbeddingSpace& space = result.space;
  for (const SeedAlignment& s : result.alignments) {
    space.kg_of(s.kg_a);
    space.kg_of(s.kg_b);
  }

  AdamState adam(space, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);

  // Per-KG sampling streams derived from (seed, kg id): a KG's draws do not
  // depend on which other KGs are trained alongside it.
  const size_t M = kgs.size();
  std::vector<Rng> kg_rng;
  kg_rng.reserve(M);
  std::vector<TripleSet> train_sets(M);
  for (size_t i = 0; i < M; ++i) {
    kg_rng.emplace_back(mix_seed(cfg.seed, hash_tag(kgs[i].id) ^ 0x5eedull));
    train_sets[i] = make_triple_set(kgs[i].train);
    if (kgs[i].train.empty())
      throw ConfigError("train_joint: KG " + kgs[i].id + " has an empty train split");
  }
  std::vector<Rng> pair_rng;
  for (const SeedAlignment& s : result.alignments)
    pair_rng.emplace_back(mix_seed(cfg.seed, hash_tag(s.kg_a) ^ hash_tag(s.kg_b)));

  const size_t B = static_cast<size_t>(cfg.batch_size);
  const bool align_active = cfg.lambda > 0.0 && !result.alignments.empty();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    EpochTrace trace;
    trace.knowledge.assign(M, 0.0);

    // Per-epoch shuffled batch orders.
    std::vector<std::vector<size_t>> kg_order(M);
    size_t max_batches = 1;
    for (size_t i = 0; i < M; ++i) {
      kg_order[i].resize(kgs[i].train.size());
      std::iota(kg_order[i].begin(), kg_order[i].end(), size_t{0});
      shuffle(std::span<size_t>(kg_order[i]), kg_rng[i]);
      max_batches = std::max(max_batches, (kgs[i].train.size() + B - 1) / B);
    }
    std::vector<PairCursor> pair_cursors(result.alignments.size());
    if (align_active) {
      for (size_t p = 0; p < result.alignments.size(); ++p) {
        pair_cursors[p].order.resize(result.alignments[p].pairs.size());
        std::iota(pair_cursors[p].order.begin(), pair_cursors[p].order.end(), size_t{0});
        shuffle(std::span<size_t>(pair_cursors[p].order), pair_rng[p]);
      }
    }

    for (size_t round = 0; round < max_batches; ++round) {
      // One knowledge batch per KG.
      for (size_t i = 0; i < M; ++i) {
        const size_t n = kgs[i].train.size();
        const size_t n_batches = (n + B - 1) / B;
        const size_t b = round % n_batches;
        const size_t lo = b * B, hi = std::min(n, lo + B);

        std::vector<Triple> pos, neg;
        pos.reserve((hi - lo) * cfg.negatives);
        neg.reserve((hi - lo) * cfg.negatives);
        for (size_t idx = lo; idx < hi; ++idx) {
          const Triple& t = kgs[i].train[kg_order[i][idx]];
          for (int c = 0; c < cfg.negatives; ++c) {
            pos.push_back(t);
            neg.push_back(sample_negative(t, kgs[i], train_sets[i], kg_rng[i]));
          }
        }
        std::vector<RowGrad> grads;
        const int kg_idx = space.kg_of(kgs[i].id);
        double loss = kernels::batch_hinge_grads(space, kg_idx, pos, neg, cfg.margin, grads);
        loss += add_l2_on_touched(space, cfg.l2, grads);
        adam.apply(space, grads, cfg.lr);
        trace.knowledge[i] += loss;
      }

      // One alignment batch per KG pair, scaled by lambda.
      if (align_active) {
        for (size_t p = 0; p < result.alignments.size(); ++p) {
          SeedAlignment& store = result.alignments[p];
          if (store.pairs.empty()) continue;
          PairCursor& cur = pair_cursors[p];
          const int kg_a = space.kg_of(store.kg_a);
          const int kg_b = space.kg_of(store.kg_b);

          std::vector<RowGrad> grads;
          double dist_sum = 0.0;
          for (size_t c = 0; c < std::min(B, store.pairs.size()); ++c) {
            if (cur.next >= cur.order.size()) cur.next = 0;
            const AlignmentPair& pair = store.pairs[cur.order[cur.next++]];
            dist_sum += alignment_pair_grad(space, kg_a, kg_b, pair, cfg.lambda, grads);
          }
          double loss = cfg.lambda * dist_sum;
          loss += add_l2_on_touched(space, cfg.l2, grads);
          adam.apply(space, grads, cfg.lr);
          trace.alignment += loss;
        }
      }
    }

    if (!std::isfinite(trace.knowledge_total()) || !std::isfinite(trace.alignment)) {
      std::ostringstream msg;
      msg << "non-finite loss at epoch " << epoch
          << "; the learning rate is likely too high (lr=" << cfg.lr << ")";
      throw Error(msg.str());
    }

    // Self-learning: propose mutual nearest neighbors as new training pairs.
    const int completed = epoch + 1;
    if (align_active && completed >= cfg.selflearn_warmup &&
        (completed - cfg.selflearn_warmup) % cfg.selflearn_period == 0) {
      for (SeedAlignment& store : result.alignments) {
        const int kg_a = space.kg_of(store.kg_a);
        const int kg_b = space.kg_of(store.kg_b);
        const int32_t na = space.kgs[kg_a].n_entities();
        const int32_t nb = space.kgs[kg_b].n_entities();
        const int k = std::min(cfg.csls_k, std::min(na, nb) - 1);
        if (k < 1) continue;
        CslsIndex index(space, kg_a, kg_b, k);
        for (const AlignmentPair& p : propose_mutual_nn(index, store))
          if (store.add(p.a, p.b, Provenance::SelfLearned)) ++trace.self_learned_added;
      }
    }

    result.trace.push_back(std::move(trace));
  }

  if (!space.all_finite())
    throw Error("training produced non-finite embeddings; lower the learning rate");
  return result;
}

}  // namespace kens
