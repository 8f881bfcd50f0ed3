#include <doctest.h>

#include <algorithm>
#include <set>

#include "kens/align.hpp"
#include "kens/rng.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace kens;

namespace {

std::vector<std::vector<double>> random_rows(int n, int dim, Rng& rng) {
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < n; ++i) rows.push_back(synth::random_vec(dim, rng));
  return rows;
}

std::set<std::pair<int32_t, int32_t>> pair_set(const std::vector<AlignmentPair>& pairs) {
  std::set<std::pair<int32_t, int32_t>> out;
  for (const AlignmentPair& p : pairs) out.emplace(p.a, p.b);
  return out;
}

}  // namespace

TEST_CASE("csls: identical unit vectors that are each other's top neighbor give 0") {
  std::vector<std::vector<double>> a{{1, 0}, {0, 1}};
  std::vector<std::vector<double>> b{{1, 0}, {0, -1}};
  auto space = synth::space_from_entities(ModelKind::TransE, 2, {{"A", a}, {"B", b}});
  CslsIndex index(space, 0, 1, 1);
  // r_1(a0) = cos(a0, b0) = 1 and r_1(b0) = cos(b0, a0) = 1
  CHECK(index.csls(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("csls matches the hand oracle on 2-entity KGs") {
  Rng rng(7);
  for (int round = 0; round < 20; ++round) {
    auto a = random_rows(2, 4, rng);
    auto b = random_rows(2, 4, rng);
    auto space = synth::space_from_entities(ModelKind::TransE, 4, {{"A", a}, {"B", b}});
    CslsIndex index(space, 0, 1, 1);
    for (int32_t i = 0; i < 2; ++i)
      for (int32_t j = 0; j < 2; ++j)
        CHECK(index.csls(i, j) ==
              doctest::Approx(oracle::csls(a[i], b[j], a, b, 1)).epsilon(1e-9));
  }
}

TEST_CASE("csls is symmetric") {
  Rng rng(8);
  auto a = random_rows(12, 5, rng);
  auto b = random_rows(9, 5, rng);
  auto space = synth::space_from_entities(ModelKind::TransE, 5, {{"A", a}, {"B", b}});
  CslsIndex ab(space, 0, 1, 3);
  CslsIndex ba(space, 1, 0, 3);
  for (int32_t i = 0; i < 12; ++i)
    for (int32_t j = 0; j < 9; ++j) CHECK(ab.csls(i, j) == ba.csls(j, i));
}

TEST_CASE("csls rejects zero vectors and out-of-range k") {
  auto space = synth::space_from_entities(ModelKind::TransE, 2,
                                          {{"A", {{0, 0}, {1, 0}}}, {"B", {{1, 1}, {0, 1}}}});
  CHECK_THROWS_AS(CslsIndex(space, 0, 1, 1), ContractError);
  auto ok = synth::space_from_entities(ModelKind::TransE, 2,
                                       {{"A", {{1, 0}, {0, 1}}}, {"B", {{1, 1}, {0, 1}}}});
  CHECK_THROWS_AS(CslsIndex(ok, 0, 1, 3), ContractError);
  CHECK_THROWS_AS(CslsIndex(ok, 0, 1, 0), ContractError);
}

TEST_CASE("propose_mutual_nn: a forced mutual pair is proposed, aligned ones are not") {
  // a1 and b1 are near-identical and far from everything else
  std::vector<std::vector<double>> a{{1, 0, 0}, {0, 1, 0}, {0.5, 0.5, 0.7}};
  std::vector<std::vector<double>> b{{-1, 0.2, 0}, {0, 1.01, 0.01}, {0.4, -0.6, 0.7}};
  auto space = synth::space_from_entities(ModelKind::TransE, 3, {{"A", a}, {"B", b}});
  CslsIndex index(space, 0, 1, 1);

  SeedAlignment none;
  auto proposals = propose_mutual_nn(index, none);
  auto as_set = pair_set(proposals);
  CHECK(as_set.contains({1, 1}));

  SeedAlignment aligned;
  aligned.add(1, 1, Provenance::Seed);
  for (const AlignmentPair& p : propose_mutual_nn(index, aligned)) {
    CHECK(p.a != 1);
    CHECK(p.b != 1);
    CHECK(p.provenance == Provenance::SelfLearned);
  }

  SeedAlignment all;
  for (int32_t e = 0; e < 3; ++e) all.add(e, e, Provenance::Seed);
  CHECK(propose_mutual_nn(index, all).empty());
}

TEST_CASE("propose_mutual_nn equals the exhaustive mutual-argmax oracle on 20+20") {
  Rng rng(9);
  auto a = random_rows(20, 6, rng);
  auto b = random_rows(20, 6, rng);
  auto space = synth::space_from_entities(ModelKind::TransE, 6, {{"A", a}, {"B", b}});
  CslsIndex index(space, 0, 1, 5);

  SeedAlignment existing;
  existing.add(0, 3, Provenance::Seed);
  existing.add(5, 5, Provenance::Seed);

  auto got = pair_set(propose_mutual_nn(index, existing));
  auto expected = oracle::mutual_nn(a, b, {0, 5}, {3, 5}, 5);
  CHECK(got == std::set<std::pair<int32_t, int32_t>>(expected.begin(), expected.end()));
  CHECK(!got.empty());
}

TEST_CASE("repeated self-learning is monotone: the store only grows") {
  Rng rng(10);
  auto a = random_rows(15, 4, rng);
  auto b = random_rows(15, 4, rng);
  auto space = synth::space_from_entities(ModelKind::TransE, 4, {{"A", a}, {"B", b}});
  CslsIndex index(space, 0, 1, 3);

  SeedAlignment store;
  store.add(2, 2, Provenance::Seed);
  size_t prev = store.pairs.size();
  for (int round = 0; round < 5; ++round) {
    for (const AlignmentPair& p : propose_mutual_nn(index, store)) {
      CHECK(!store.contains_a(p.a));
      CHECK(!store.contains_b(p.b));
      store.add(p.a, p.b, Provenance::SelfLearned);
    }
    CHECK(store.pairs.size() >= prev);
    prev = store.pairs.size();
    CHECK(store.a_to_b.size() == store.pairs.size());  // still 1-to-1
  }
}

TEST_CASE("predict_alignment: single small entity matches the nearer large one") {
  std::vector<std::vector<double>> small{{1, 0}};
  std::vector<std::vector<double>> large{{0.9, 0.1}, {-1, 0}, {0, 1}};
  auto space = synth::space_from_entities(ModelKind::TransE, 2,
                                          {{"S", small}, {"L", large}});
  KnowledgeGraph ks = synth::kg_from_triples("S", 1, 1, {{0, 0, 0}});
  KnowledgeGraph kl = synth::kg_from_triples("L", 3, 1, {{0, 0, 1}});
  AlignmentMap map = predict_alignment(space, ks, kl, nullptr, 1);
  CHECK(map.forward.at(0) == 0);
  CHECK(map.unmatched_large == std::vector<int32_t>{1, 2});
  CHECK(map.matches.size() == 1);
  CHECK(map.matches[0].provenance == Provenance::Predicted);
}

TEST_CASE("predict_alignment: conflicting claims resolve by similarity") {
  // both smalls prefer large 0; small 0 is closer, so small 1 takes its
  // second-best (large 1)
  std::vector<std::vector<double>> small{{1, 0, 0}, {0.9, 0.1, 0.3}};
  std::vector<std::vector<double>> large{{1, 0.01, 0}, {0.8, 0.2, 0.4}, {0, 0, 1}};
  auto space = synth::space_from_entities(ModelKind::TransE, 3,
                                          {{"S", small}, {"L", large}});
  KnowledgeGraph ks = synth::kg_from_triples("S", 2, 1, {{0, 0, 1}});
  KnowledgeGraph kl = synth::kg_from_triples("L", 3, 1, {{0, 0, 1}});
  AlignmentMap map = predict_alignment(space, ks, kl, nullptr, 1);

  CslsIndex index(space, 0, 1, 1);
  REQUIRE(index.csls(0, 0) > index.csls(1, 0));  // construction sanity
  CHECK(map.forward.at(0) == 0);
  CHECK(map.forward.at(1) == 1);
  CHECK(map.unmatched_large == std::vector<int32_t>{2});
}

TEST_CASE("predict_alignment matches the brute-force greedy oracle") {
  Rng rng(11);
  for (int round = 0; round < 5; ++round) {
    const int ns = 12, nl = 17;
    auto s_rows = random_rows(ns, 5, rng);
    auto l_rows = random_rows(nl, 5, rng);
    auto space = synth::space_from_entities(ModelKind::TransE, 5,
                                            {{"S", s_rows}, {"L", l_rows}});
    KnowledgeGraph ks = synth::kg_from_triples("S", ns, 1, {{0, 0, 1}});
    KnowledgeGraph kl = synth::kg_from_triples("L", nl, 1, {{0, 0, 1}});

    SeedAlignment fixed;
    fixed.kg_a = "S";
    fixed.kg_b = "L";
    fixed.add(3, 7, Provenance::Seed);

    AlignmentMap map = predict_alignment(space, ks, kl, &fixed, 4);

    std::vector<std::vector<double>> sim(ns, std::vector<double>(nl));
    for (int i = 0; i < ns; ++i)
      for (int j = 0; j < nl; ++j)
        sim[i][j] = oracle::csls(s_rows[i], l_rows[j], s_rows, l_rows, 4);
    auto expected = oracle::greedy_match(sim, {{3, 7}});

    std::vector<std::pair<int32_t, int32_t>> got;
    for (const auto& [s, l] : map.forward)
      if (s != 3) got.emplace_back(s, l);
    std::sort(got.begin(), got.end());
    CHECK(got == expected);

    // injective, total on the small side
    CHECK(map.forward.size() == static_cast<size_t>(ns));
    CHECK(map.backward.size() == static_cast<size_t>(ns));
    for (const auto& [s, l] : map.forward) CHECK(map.backward.at(l) == s);
    CHECK(map.unmatched_large.size() == static_cast<size_t>(nl - ns));
  }
}

TEST_CASE("predict_alignment requires the smaller KG first") {
  Rng rng(12);
  auto space = synth::space_from_entities(
      ModelKind::TransE, 3, {{"S", random_rows(5, 3, rng)}, {"L", random_rows(4, 3, rng)}});
  KnowledgeGraph ks = synth::kg_from_triples("S", 5, 1, {{0, 0, 1}});
  KnowledgeGraph kl = synth::kg_from_triples("L", 4, 1, {{0, 0, 1}});
  CHECK_THROWS_AS(predict_alignment(space, ks, kl, nullptr, 2), ContractError);
}

namespace {

struct TransferFixture {
  KnowledgeGraph small = synth::kg_from_triples("S", 3, 2, {{0, 0, 1}, {1, 1, 2}});
  KnowledgeGraph large = synth::kg_from_triples("L", 4, 2, {{0, 0, 1}, {2, 1, 3}});
  AlignmentMap map;

  TransferFixture() {
    map.kg_small = "S";
    map.kg_large = "L";
    auto link = [&](int32_t s, int32_t l) {
      map.forward[s] = l;
      map.backward[l] = s;
      map.matches.push_back({s, l, 1.0, Provenance::Predicted});
    };
    link(0, 2);
    link(1, 0);  // entity 2 of S unmatched; 1 and 3 of L unmatched
    map.unmatched_large = {1, 3};
  }
};

}  // namespace

TEST_CASE("transfer_query maps the anchor and keeps the relation") {
  TransferFixture fx;
  // relation vocabularies are identical ("r0", "r1")
  TransferredQuery out =
      transfer_query(Query{0, 1, Direction::PredictTail}, fx.map, fx.small, fx.large);
  REQUIRE(out.query.has_value());
  CHECK(out.query->anchor == 2);
  CHECK(fx.large.relations[out.query->relation] == "r1");
  CHECK(out.query->direction == Direction::PredictTail);

  // reverse direction through the same map
  TransferredQuery back =
      transfer_query(*out.query, fx.map, fx.large, fx.small);
  REQUIRE(back.query.has_value());
  CHECK(back.query->anchor == 0);
}

TEST_CASE("transfer_query: unmatched anchor and missing relation are reported") {
  TransferFixture fx;
  TransferredQuery unmatched =
      transfer_query(Query{2, 0, Direction::PredictTail}, fx.map, fx.small, fx.large);
  CHECK(!unmatched.query.has_value());
  CHECK(unmatched.failure == TransferFailure::UnmatchedEntity);

  KnowledgeGraph narrow = synth::kg_from_triples("L", 4, 1, {{0, 0, 1}});
  narrow.id = "L";
  TransferredQuery missing =
      transfer_query(Query{1, 1, Direction::PredictTail}, fx.map, fx.small, narrow);
  CHECK(!missing.query.has_value());
  CHECK(missing.failure == TransferFailure::RelationMissing);
}

TEST_CASE("transfer_answers preserves order and drops unmatched entities") {
  TransferFixture fx;
  std::vector<int32_t> ranked{1, 2, 0};
  auto out = transfer_answers(ranked, fx.map, "S");
  CHECK(out == std::vector<int32_t>{0, 2});  // entity 2 dropped, order kept

  // inverse transfer over fully-matched lists is the identity
  std::vector<int32_t> matched{0, 1};
  auto there = transfer_answers(matched, fx.map, "S");
  auto back = transfer_answers(there, fx.map, "L");
  CHECK(back == matched);
}

TEST_CASE("transfer_answers never repeats an entity (fuzzed)") {
  Rng rng(13);
  TransferFixture fx;
  for (int round = 0; round < 50; ++round) {
    std::vector<int32_t> ranked;
    std::set<int32_t> used;
    while (used.size() < 3) {
      int32_t e = static_cast<int32_t>(rng.below(3));
      if (used.insert(e).second) ranked.push_back(e);
    }
    auto out = transfer_answers(ranked, fx.map, "S");
    std::set<int32_t> seen(out.begin(), out.end());
    CHECK(seen.size() == out.size());
  }
}

TEST_CASE("alignment TSV export carries similarity and provenance") {
  TransferFixture fx;
  auto dir = synth::temp_dir("align");
  save_alignment_tsv(fx.map, fx.small, fx.large, dir / "map.tsv");
  const std::string content = synth::read_file(dir / "map.tsv");
  CHECK(content ==
        "S:e0\tL:e2\t1.000000\tpredicted\n"
        "S:e1\tL:e0\t1.000000\tpredicted\n");
}
