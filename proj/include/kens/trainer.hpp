#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kens/embedding.hpp"
#include "kens/kg.hpp"
#include "kens/rng.hpp"
#include "kens/scoring.hpp"

namespace kens {

struct TrainConfig {
  ModelKind model = ModelKind::TransE;
  int dim = 300;
  double lr = 0.001;
  int batch_size = 256;
  double margin = 0.3;
  double lambda = 1.0;  // alignment loss weight
  double l2 = 1e-4;     // coefficient on touched rows per batch
  int negatives = 1;    // corruptions per positive
  int epochs = 100;
  int selflearn_warmup = 10;  // epochs before the first proposal round
  int selflearn_period = 5;   // epochs between proposal rounds
  int csls_k = 10;
  uint64_t seed = 42;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;  // throws ConfigError naming the bad field

  // Tuned defaults per model kind: TransE lr=0.001 d=300 batch=256,
  // RotatE lr=0.01 d=200 batch=512.
  static TrainConfig defaults_for(ModelKind kind);
};

// Adam with per-row moments and step counts; only rows touched by a batch
// are advanced, so a KG's update sequence is independent of unrelated KGs.
class AdamState {
 public:
  AdamState(const EmbeddingSpace& space, double beta1, double beta2, double eps);
  void apply(EmbeddingSpace& space, std::span<const RowGrad> grads, double lr);

 private:
  struct Table {
    std::vector<double> m, v;
    std::vector<int64_t> step;  // per row
  };
  struct KgMoments {
    Table entity, relation;
  };
  std::vector<KgMoments> kgs_;
  double beta1_, beta2_, eps_;
};

// Replaces the head or the tail (chosen by `corrupt_tail`) with a uniform
// entity, resampling until the corrupted triple is absent from the training
// set. Throws SamplingError when the retry budget runs out.
Triple sample_negative_side(const Triple& t, int32_t n_entities,
                            const TripleSet& train, bool corrupt_tail, Rng& rng,
                            int max_retries = 100);
// Corrupts head or tail with equal probability.
Triple sample_negative(const Triple& t, const KnowledgeGraph& kg,
                       const TripleSet& train, Rng& rng, int max_retries = 100);

struct EpochTrace {
  std::vector<double> knowledge;  // per KG, batch-loss sum incl. L2 terms
  double alignment = 0.0;         // weighted alignment loss sum incl. L2
  size_t self_learned_added = 0;

  double knowledge_total() const;
};

struct TrainResult {
  EmbeddingSpace space;
  std::vector<EpochTrace> trace;
  std::vector<SeedAlignment> alignments;  // seeds plus self-learned pairs
};

// Joint training: per epoch, alternating rounds of one knowledge batch per
// KG followed by one alignment batch per KG pair (scaled by lambda), with
// Adam updates and L2 on the rows each batch touches. Self-learning runs
// every `selflearn_period` epochs once past `selflearn_warmup`.
TrainResult train_joint(std::span<const KnowledgeGraph> kgs,
                        std::vector<SeedAlignment> seeds, const TrainConfig& cfg);

}  // namespace kens
