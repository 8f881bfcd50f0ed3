#include <doctest.h>

#include <cmath>

#include "kens/eval.hpp"
#include "kens/rng.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace kens;

TEST_CASE("filtered_rank: filtering promotes the truth, absence is absent") {
  std::vector<int32_t> ranked{4, 9};
  CHECK(filtered_rank(ranked, 9, {4}) == 1);
  CHECK(filtered_rank(ranked, 9, {}) == 2);
  CHECK(!filtered_rank(ranked, 7, {4}).has_value());
  // the truth itself is never filtered out
  CHECK(filtered_rank(ranked, 9, {4, 9}) == 1);
}

TEST_CASE("filtered_rank equals the counting oracle on fuzzed lists") {
  Rng rng(61);
  for (int round = 0; round < 200; ++round) {
    std::vector<int32_t> ranked;
    std::set<int32_t> used;
    const size_t n = 1 + rng.below(20);
    while (ranked.size() < n) {
      int32_t e = static_cast<int32_t>(rng.below(30));
      if (used.insert(e).second) ranked.push_back(e);
    }
    std::unordered_set<int32_t> filter;
    for (int i = 0; i < 8; ++i) filter.insert(static_cast<int32_t>(rng.below(30)));
    const int32_t truth = static_cast<int32_t>(rng.below(30));
    CHECK(filtered_rank(ranked, truth, filter) ==
          oracle::filtered_rank(ranked, truth, filter));
  }
}

TEST_CASE("hits_at_k: worked values and edge cases") {
  std::vector<std::optional<int>> ranks{1, 4, std::nullopt};
  CHECK(hits_at_k(ranks, 3) == doctest::Approx(1.0 / 3.0));
  std::vector<std::optional<int>> all_first{1, 1, 1};
  for (int k : {1, 3, 10}) CHECK(hits_at_k(all_first, k) == doctest::Approx(1.0));
  CHECK_THROWS_AS(hits_at_k({}, 1), ContractError);
  CHECK_THROWS_AS(hits_at_k(ranks, 0), ContractError);
}

TEST_CASE("mrr: worked values and edge cases") {
  std::vector<std::optional<int>> ranks{1, 2};
  CHECK(mrr(ranks) == doctest::Approx(0.75));
  std::vector<std::optional<int>> absent{std::nullopt, std::nullopt};
  CHECK(mrr(absent) == doctest::Approx(0.0));
  CHECK_THROWS_AS(mrr({}), ContractError);
}

TEST_CASE("hits and mrr match the direct-formula oracles on fuzzed multisets") {
  Rng rng(62);
  for (int round = 0; round < 100; ++round) {
    std::vector<std::optional<int>> ranks;
    const size_t n = 1 + rng.below(40);
    for (size_t i = 0; i < n; ++i) {
      if (rng.below(4) == 0)
        ranks.emplace_back(std::nullopt);
      else
        ranks.emplace_back(1 + static_cast<int>(rng.below(20)));
    }
    for (int k : {1, 3, 10})
      CHECK(std::abs(hits_at_k(ranks, k) - oracle::hits_at_k(ranks, k)) <= 1e-12);
    CHECK(std::abs(mrr(ranks) - oracle::mrr(ranks)) <= 1e-12);
    // monotone in k
    CHECK(hits_at_k(ranks, 1) <= hits_at_k(ranks, 3));
    CHECK(hits_at_k(ranks, 3) <= hits_at_k(ranks, 10));
  }
}

namespace {

// One-KG model set whose ranking is controlled by entity placement: the
// query vector for r0 sits at (1,0).
struct EvalFixture {
  std::vector<KnowledgeGraph> kgs;
  EmbeddingSpace space;
  ModelSet models;

  EvalFixture() {
    kgs.push_back(synth::kg_from_triples(
        "t", 5, 1, {{0, 0, 1}}));           // train: (0, r0, 1)
    kgs[0].valid = {{0, 0, 2}};             // valid: (0, r0, 2)
    kgs[0].test = {{0, 0, 2}};              // test:  (0, r0, 2)
    std::vector<std::vector<double>> rows{
        {0, 0},    // e0: anchor
        {1, 0},    // e1: exact answer of the training triple
        {1.1, 0},  // e2: the test answer, second-nearest
        {2, 0},    // e3
        {3, 0},    // e4
    };
    space = synth::space_from_entities(ModelKind::TransE, 2, {{"t", rows}});
    space.kgs[0].relation = {1, 0};
    models.space = &space;
    models.kgs = kgs;
    models.target = 0;
    models.maps = {nullptr};
    models.k = 5;
  }
};

}  // namespace

TEST_CASE("evaluate_kg filters training answers out of the candidate list") {
  EvalFixture fx;
  static const int ks[] = {1, 3, 10};
  EvalReport report = evaluate_kg(fx.models, EnsembleMode::Single, ks);
  // unfiltered rank of the test answer would be 2; filtering (0,r0)->1 lifts it
  CHECK(report.hits.at(1) == doctest::Approx(1.0));
  CHECK(report.hits.at(3) == doctest::Approx(1.0));
  CHECK(report.n_queries == 1);
  CHECK(report.kg == "t");
  CHECK(report.direction == "tail");
  // validation MRR: valid triple (0,r0,2), same filtering -> rank 1
  CHECK(report.u.at("t") == doctest::Approx(1.0));
}

TEST_CASE("evaluate_kg: a single-model ensemble equals single-model mode") {
  EvalFixture fx;
  static const int ks[] = {1, 3, 10};
  EvalReport single = evaluate_kg(fx.models, EnsembleMode::Single, ks);
  EvalReport vote = evaluate_kg(fx.models, EnsembleMode::Vote, ks);
  EvalReport boost = evaluate_kg(fx.models, EnsembleMode::Boost, ks);
  for (int k : ks) {
    CHECK(single.hits.at(k) == vote.hits.at(k));
    CHECK(single.hits.at(k) == boost.hits.at(k));
  }
  // determinism
  EvalReport again = evaluate_kg(fx.models, EnsembleMode::Vote, ks);
  CHECK(again.hits == vote.hits);
  CHECK_THROWS_AS(
      [&] {
        EvalFixture empty;
        empty.kgs[0].test.clear();
        static const int kk[] = {1};
        evaluate_kg(empty.models, EnsembleMode::Single, kk);
      }(),
      ContractError);
}

TEST_CASE("report serialization carries hits, counts and weights") {
  EvalFixture fx;
  static const int ks[] = {1, 3, 10};
  EvalReport report = evaluate_kg(fx.models, EnsembleMode::Vote, ks);
  auto dir = synth::temp_dir("eval");
  save_report_json(report, dir / "r.json");
  save_report_tsv(report, dir / "r.tsv");
  const std::string json = synth::read_file(dir / "r.json");
  CHECK(json.find("\"kg\": \"t\"") != std::string::npos);
  CHECK(json.find("\"mode\": \"vote\"") != std::string::npos);
  CHECK(json.find("\"1\"") != std::string::npos);
  const std::string tsv = synth::read_file(dir / "r.tsv");
  CHECK(tsv.find("hits@10") != std::string::npos);
  CHECK(tsv.find("\tvote\t") != std::string::npos);
}
