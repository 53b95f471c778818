#include <doctest.h>

#include <sstream>

#include "ddikg/error.hpp"
#include "ddikg/kge_eval.hpp"
#include "ddikg/text.hpp"
#include "kge_oracles.hpp"
#include "test_util.hpp"

using namespace ddikg;
using namespace ddikg::testing;

TEST_CASE("tied_rank uses the mean rank of the tied block") {
  const std::vector<double> all_tied(5, 0.25);
  CHECK(tied_rank(0.25, all_tied, true) == 3.0);
  CHECK(tied_rank(0.25, all_tied, false) == 3.0);
  const std::vector<double> scores = {0.1, 0.5, 0.5, 0.9};
  CHECK(tied_rank(0.5, scores, true) == 2.5);   // one strictly better, tie of two
  CHECK(tied_rank(0.5, scores, false) == 2.5);
  CHECK(tied_rank(0.1, scores, true) == 1.0);
  CHECK(tied_rank(0.1, scores, false) == 4.0);
}

TEST_CASE("perfect model on a two-entity graph") {
  auto vocab = single_kind_vocab(2, 1);
  KnowledgeGraph g(vocab, {{0, 0, 1}});
  KgeConfig cfg;
  cfg.model = KgeModel::DistMult;
  cfg.dim = 1;
  auto p = init_params(cfg, *vocab, 1);
  // Scores: (0,r,1) = 2, (1,r,1) = -4, (0,r,0) = -1.
  p.entities(0, 0) = 1.0;
  p.entities(1, 0) = -2.0;
  p.relations(0, 0) = -1.0;
  const auto r = rank_triples(p, g, g, RankMode::Raw);
  CHECK(r.n_queries == 2);
  CHECK(r.mrr == 1.0);
  CHECK(r.hits_at.at(1) == 1.0);
}

TEST_CASE("zero model gives mean-rank ties") {
  auto vocab = single_kind_vocab(5, 1);
  KnowledgeGraph g(vocab, {{0, 0, 1}});
  KgeConfig cfg;
  cfg.model = KgeModel::DistMult;
  cfg.dim = 3;
  auto p = init_params(cfg, *vocab, 1);
  p.entities.fill(0.0);
  const auto r = rank_triples(p, g, g, RankMode::Raw);
  CHECK(r.ranks == std::vector<double>{3.0, 3.0});
  CHECK(r.mrr == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(r.hits_at.at(1) == 0.0);
  CHECK(r.hits_at.at(3) == 1.0);
}

TEST_CASE("empty test set") {
  auto vocab = single_kind_vocab(3, 1);
  KgeConfig cfg;
  cfg.dim = 2;
  const auto p = init_params(cfg, *vocab, 1);
  const auto r = rank_triples(p, KnowledgeGraph(vocab, {}), KnowledgeGraph(vocab, {{0, 0, 1}}), RankMode::Filtered);
  CHECK(r.n_queries == 0);
  CHECK(r.mrr == 0.0);
}

TEST_CASE("ranking properties on random models") {
  Rng rng(21);
  for (auto model : {KgeModel::TransE, KgeModel::TransR, KgeModel::Rescal, KgeModel::DistMult}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto vocab = single_kind_vocab(12, 2);
      std::vector<IndexedTriple> triples;
      for (int i = 0; i < 40; ++i) triples.push_back(random_triple(rng, 12, 2));
      const KnowledgeGraph all(vocab, triples);
      std::vector<IndexedTriple> test_triples(all.triples().begin(), all.triples().begin() + 15);
      const KnowledgeGraph test(vocab, test_triples);
      KgeConfig cfg;
      cfg.model = model;
      cfg.dim = 4;
      const auto p = init_params(cfg, *vocab, seed);

      const auto raw = rank_triples(p, test, all, RankMode::Raw);
      const auto filt = rank_triples(p, test, all, RankMode::Filtered);
      REQUIRE(raw.ranks.size() == filt.ranks.size());
      for (std::size_t q = 0; q < raw.ranks.size(); ++q) CHECK(filt.ranks[q] <= raw.ranks[q]);
      for (const auto* r : {&raw, &filt}) {
        CHECK(r->hits_at.at(1) <= r->hits_at.at(3));
        CHECK(r->hits_at.at(3) <= r->hits_at.at(10));
        CHECK(r->mrr > 0.0);
        CHECK(r->mrr <= 1.0);
      }

      std::reverse(test_triples.begin(), test_triples.end());
      const auto permuted = rank_triples(p, KnowledgeGraph(vocab, test_triples), all, RankMode::Filtered);
      CHECK(permuted.mrr == doctest::Approx(filt.mrr).epsilon(1e-12));
      for (int k : {1, 3, 10}) CHECK(permuted.hits_at.at(k) == filt.hits_at.at(k));
    }
  }
}

TEST_CASE("report formats") {
  LinkPredictionReport r;
  r.n_queries = 4;
  r.mrr = 0.5;
  r.hits_at = {{1, 0.25}, {3, 0.5}, {10, 1.0}};
  const auto kv = format_report_kv(r);
  CHECK(kv.find("mrr=0.5\n") != std::string::npos);
  CHECK(kv.find("hits@10=1\n") != std::string::npos);
  CHECK(format_report(r).find("hits@3") != std::string::npos);
}

TEST_CASE("embeddings.tsv export/import") {
  SUBCASE("empty") {
    std::ostringstream out;
    CHECK(export_embeddings(std::vector<DrugEmbedding>{}, out) == 0);
    CHECK(out.str().empty());
  }
  SUBCASE("shape") {
    std::vector<DrugEmbedding> e = {{"DB1", {0.1, 0.2, 0.3, 0.4}}, {"DB2", {1, 2, 3, 4}}, {"DB3", {-1e-9, 0, 5, 6}}};
    std::ostringstream out;
    CHECK(export_embeddings(e, out) == 3);
    std::istringstream in(out.str());
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) {
      ++lines;
      CHECK(ddikg::text::split_whitespace(line).size() == 5);
    }
    CHECK(lines == 3);
  }
  SUBCASE("round trip reproduces vectors and bytes") {
    Rng rng(8);
    std::vector<DrugEmbedding> e;
    for (int i = 0; i < 10; ++i) {
      DrugEmbedding d{"DB" + std::to_string(i), Vector(7)};
      for (double& v : d.vector) v = rng.uniform(-2.0, 2.0) * std::pow(10.0, rng.uniform(-6, 3));
      e.push_back(d);
    }
    std::ostringstream first;
    export_embeddings(e, first);
    std::istringstream in(first.str());
    const auto back = import_embeddings(in);
    REQUIRE(back.size() == e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
      CHECK(back[i].entity == e[i].entity);
      for (std::size_t k = 0; k < 7; ++k) {
        CHECK(std::abs(back[i].vector[k] - e[i].vector[k]) <= 1e-7 * std::abs(e[i].vector[k]));
      }
    }
    std::ostringstream second;
    export_embeddings(back, second);
    CHECK(first.str() == second.str());
  }
  SUBCASE("inconsistent dimensions") {
    std::vector<DrugEmbedding> e = {{"a", {1, 2}}, {"b", {1}}};
    std::ostringstream out;
    CHECK_THROWS_AS(export_embeddings(e, out), ShapeError);
    std::istringstream in("a 1 2\nb 1\n");
    CHECK_THROWS_AS(import_embeddings(in), ParseError);
  }
  SUBCASE("I/O failure") {
    std::vector<DrugEmbedding> e = {{"a", {1, 2}}};
    CHECK_THROWS_AS(export_embeddings(e, std::filesystem::path("/nonexistent/dir/e.tsv")), IoError);
  }
}
