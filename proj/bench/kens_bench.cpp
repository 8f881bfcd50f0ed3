// Compares the serial reference kernels against the OpenMP variants on
// synthetic data of configurable size.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kens/embedding.hpp"
#include "kens/kernels.hpp"
#include "kens/kg.hpp"
#include "kens/parallel.hpp"
#include "kens/rng.hpp"
#include "kens/trainer.hpp"
#include "kens/util.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace kens;

KnowledgeGraph synthetic_kg(const std::string& id, int32_t n_entities,
                            int32_t n_relations, size_t n_triples, uint64_t seed) {
  KnowledgeGraph kg;
  kg.id = id;
  Rng rng(seed);
  for (int32_t e = 0; e < n_entities; ++e) kg.intern_entity(id + ":e" + std::to_string(e));
  for (int32_t r = 0; r < n_relations; ++r) kg.intern_relation("r" + std::to_string(r));
  TripleSet seen;
  while (kg.train.size() < n_triples) {
    Triple t{static_cast<int32_t>(rng.below(n_entities)),
             static_cast<int32_t>(rng.below(n_relations)),
             static_cast<int32_t>(rng.below(n_entities))};
    if (seen.insert(t).second) kg.train.push_back(t);
  }
  return kg;
}

template <typename F>
double time_best_of(int reps, F&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    Timer t;
    fn();
    best = std::min(best, t.seconds());
  }
  return best;
}

void report(const char* name, double serial_s, double parallel_s) {
  std::printf("%-24s serial %9.3f ms   omp %9.3f ms   speedup %.2fx\n", name,
              serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kens kernel benchmark: serial reference vs OpenMP"};
  int n_entities = 20000;
  int dim = 200;
  int n_queries = 64;
  int batch = 1024;
  int reps = 3;
  std::string model = "rotate";
  app.add_option("--entities", n_entities, "entities per KG");
  app.add_option("--dim", dim, "embedding dimension");
  app.add_option("--queries", n_queries, "queries for the scoring kernel");
  app.add_option("--batch", batch, "pairs for the gradient kernel");
  app.add_option("--reps", reps, "repetitions (best-of)");
  app.add_option("--model", model, "transe|rotate");
  CLI11_PARSE(app, argc, argv);

  const ModelKind kind = parse_model_kind(model);
  KnowledgeGraph a = synthetic_kg("a", n_entities, 16, static_cast<size_t>(batch) * 2, 1);
  KnowledgeGraph b = synthetic_kg("b", n_entities, 16, 64, 2);
  std::vector<KnowledgeGraph> kgs{a, b};
  EmbeddingSpace space = init_space(kind, dim, kgs, 42);

#ifdef _OPENMP
  std::printf("model=%s entities=%d dim=%d threads=%d\n", model_kind_name(kind),
              n_entities, dim, omp_get_max_threads());
#else
  std::printf("model=%s entities=%d dim=%d (compiled without OpenMP)\n",
              model_kind_name(kind), n_entities, dim);
#endif

  // query-vs-all-entities scoring
  {
    std::vector<double> out(n_entities);
    Rng rng(7);
    std::vector<Query> queries;
    for (int q = 0; q < n_queries; ++q)
      queries.push_back({static_cast<int32_t>(rng.below(n_entities)),
                         static_cast<int32_t>(rng.below(16)), Direction::PredictTail});
    double s = time_best_of(reps, [&] {
      for (const Query& q : queries) kernels::score_all_serial(space, 0, q, out);
    });
    double p = time_best_of(reps, [&] {
      for (const Query& q : queries) kernels::score_all_parallel(space, 0, q, out);
    });
    report("score_all", s, p);
  }

  // CSLS neighborhood tables
  {
    kernels::UnitRows ua = kernels::normalize_entity_rows(space, 0);
    kernels::UnitRows ub = kernels::normalize_entity_rows(space, 1);
    std::vector<double> out(ua.n);
    double s = time_best_of(reps, [&] { kernels::knn_mean_cos_serial(ua, ub, 10, out); });
    double p = time_best_of(reps, [&] { kernels::knn_mean_cos_parallel(ua, ub, 10, out); });
    report("knn_mean_cos", s, p);
  }

  // batch hinge gradients
  {
    TripleSet train = make_triple_set(a.train);
    Rng rng(11);
    std::vector<Triple> pos, neg;
    for (int i = 0; i < batch; ++i) {
      const Triple& t = a.train[rng.below(a.train.size())];
      pos.push_back(t);
      neg.push_back(sample_negative(t, a, train, rng));
    }
    double s = time_best_of(reps, [&] {
      std::vector<RowGrad> grads;
      kernels::batch_hinge_grads_serial(space, 0, pos, neg, 0.5, grads);
    });
    double p = time_best_of(reps, [&] {
      std::vector<RowGrad> grads;
      kernels::batch_hinge_grads_parallel(space, 0, pos, neg, 0.5, grads);
    });
    report("batch_hinge_grads", s, p);
  }
  return 0;
}
