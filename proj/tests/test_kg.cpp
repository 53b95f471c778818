#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>
#include <tuple>

#include "ddikg/error.hpp"
#include "ddikg/kg.hpp"
#include "ddikg/rng.hpp"
#include "test_util.hpp"

using namespace ddikg;
using ddikg::testing::graph_from;

namespace {

const char* kTypes =
    "DB001\tdrug\n"
    "DB002\tDrug\n"
    "P1\ttarget\n"
    "D1\tdisease\n";

const char* kTriples =
    "DB001\tdrug-target\tP1\n"
    "DB002\tdrug-disease\tD1\n"
    "D1\tdisease-target\tP1\n";

std::set<std::tuple<std::string, std::string, std::string>> triple_set(const KnowledgeGraph& g) {
  std::set<std::tuple<std::string, std::string, std::string>> out;
  for (const auto& t : g.triples()) {
    const auto n = g.name(t);
    out.emplace(n.head, n.relation, n.tail);
  }
  return out;
}

// Random graph over one self-compatible relation per kind.
KnowledgeGraph random_graph(Rng& rng, std::size_t n_entities, std::size_t n_triples) {
  std::ostringstream types, triples;
  types << "@relation\trel_a\tdrug\tdrug\n@relation\trel_b\tdrug\tdrug\n";
  for (std::size_t i = 0; i < n_entities; ++i) types << "e" << i << "\tdrug\n";
  for (std::size_t i = 0; i < n_triples; ++i) {
    triples << "e" << rng.index(n_entities) << '\t' << (rng.coin() ? "rel_a" : "rel_b") << "\te"
            << rng.index(n_entities) << '\n';
  }
  return graph_from(triples.str(), types.str());
}

}  // namespace

TEST_CASE("load_graph builds a validated graph") {
  const auto g = graph_from(kTriples, kTypes);
  CHECK(g.size() == 3);
  CHECK(g.vocab().num_entities() == 4);
  CHECK(g.vocab().num_relations() == 5);
  CHECK(g.vocab().entity_kind(g.vocab().entity("DB002")) == EntityKind::Drug);
}

TEST_CASE("comments and blank lines are ignored") {
  const auto g = graph_from(std::string("# header\n\n") + kTriples, std::string("# kinds\n") + kTypes);
  CHECK(g.size() == 3);
}

TEST_CASE("malformed triple line is a parse error naming the line") {
  try {
    graph_from("DB001\tdrug-target\tP1\nDB002\tdrug-disease\n", kTypes);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
}

TEST_CASE("unknown kind string is a schema error") {
  CHECK_THROWS_AS(graph_from(kTriples, "DB001\tprotein\n"), SchemaError);
}

TEST_CASE("entities missing from the types source are rejected") {
  CHECK_THROWS_AS(graph_from("DB009\tdrug-target\tP1\n", kTypes), ValidationError);
}

TEST_CASE("relation signature violation lists the offending triple") {
  try {
    graph_from("P1\tdrug-target\tDB001\n", kTypes);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("(P1, drug-target, DB001)") != std::string::npos);
  }
}

TEST_CASE("undeclared relation is a validation error") {
  CHECK_THROWS_AS(graph_from("DB001\tdrug-drug\tDB002\n", kTypes), ValidationError);
}

TEST_CASE("relation declarations replace the default profile") {
  const auto g = graph_from("DB001\tdrug-drug\tDB002\n",
                            std::string("@relation\tdrug-drug\tdrug\tdrug\n") + kTypes);
  CHECK(g.vocab().num_relations() == 1);
  CHECK(g.size() == 1);
}

TEST_CASE("duplicate triples are collapsed and counted") {
  const auto g = graph_from(std::string(kTriples) + "DB001\tdrug-target\tP1\n", kTypes);
  CHECK(g.size() == 3);
  CHECK(g.duplicates_collapsed() == 1);
  CHECK(g.contains(Triple{"DB001", "drug-target", "P1"}));
  CHECK(stats(g).duplicates_collapsed == 1);
}

TEST_CASE("contains") {
  const auto g = graph_from(kTriples, kTypes);
  CHECK(g.contains(Triple{"DB001", "drug-target", "P1"}));
  CHECK_FALSE(g.contains(Triple{"DB002", "drug-target", "P1"}));
  CHECK_THROWS_AS(g.contains(Triple{"DB404", "drug-target", "P1"}), LookupError);
  CHECK_THROWS_AS(g.contains(Triple{"DB001", "nope", "P1"}), LookupError);
}

TEST_CASE("contains agrees with the triple list under exhaustive enumeration") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + rng.index(9);  // <= 10 entities
    const auto g = random_graph(rng, n, 3 * n);
    const auto& vocab = g.vocab();
    std::set<std::tuple<EntityIndex, RelationIndex, EntityIndex>> expected;
    for (const auto& t : g.triples()) expected.emplace(t.head, t.relation, t.tail);
    for (EntityIndex h = 0; h < vocab.num_entities(); ++h) {
      for (RelationIndex r = 0; r < vocab.num_relations(); ++r) {
        for (EntityIndex t = 0; t < vocab.num_entities(); ++t) {
          CHECK(g.contains(IndexedTriple{h, r, t}) == expected.contains({h, r, t}));
        }
      }
    }
  }
}

TEST_CASE("stats") {
  SUBCASE("empty graph") {
    const auto s = stats(KnowledgeGraph{});
    CHECK(s.total_nodes == 0);
    CHECK(s.total_edges == 0);
    CHECK(s.edges.empty());
  }
  SUBCASE("direct counts") {
    // The drug-drug test edge is not part of the Bio-KG profile, so it is
    // kept out of the graph passed to stats.
    const auto g = graph_from("DB001\tdrug-target\tP1\n", "DB001\tdrug\nDB002\tdrug\nP1\ttarget\n");
    const auto s = stats(g);
    CHECK(s.nodes[0] == 2);
    CHECK(s.nodes[1] == 1);
    CHECK(s.nodes[2] == 0);
    CHECK(s.edges[0] == std::pair<std::string, std::size_t>{"drug-target", 1});
    CHECK(s.total_edges == 1);
    CHECK(s.total_nodes == 3);
  }
  SUBCASE("self loops are allowed and counted") {
    const auto g = graph_from("P1\ttarget-target\tP1\n", kTypes);
    CHECK(stats(g).self_loops == 1);
  }
  SUBCASE("table layout") {
    const auto table = format_stats(stats(graph_from(kTriples, kTypes)));
    CHECK(table.find("Node Types") != std::string::npos);
    CHECK(table.find("Total Nodes") != std::string::npos);
    CHECK(table.find("Total Edges") != std::string::npos);
    CHECK(table.find("drug-target") != std::string::npos);
  }
}

TEST_CASE("Bio-KG profile reports the published totals") {
  // Synthesize a graph with Bio-KG-scale node and edge counts.
  const std::array<std::size_t, 3> nodes = {6512, 30098, 23458};
  const std::array<std::size_t, 5> edges = {15245, 77108, 84745, 35382, 31161};
  auto vocab = std::make_shared<Vocabulary>();
  for (const auto& sig : biokg_profile()) vocab->add_relation(sig);
  const std::array<EntityKind, 3> kinds = {EntityKind::Drug, EntityKind::Target, EntityKind::Disease};
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < nodes[k]; ++i) {
      vocab->add_entity(std::string(to_string(kinds[k])) + std::to_string(i), kinds[k]);
    }
  }
  std::vector<IndexedTriple> triples;
  for (RelationIndex r = 0; r < 5; ++r) {
    const auto& heads = vocab->entities_of_kind(vocab->relation_signature(r).head);
    const auto& tails = vocab->entities_of_kind(vocab->relation_signature(r).tail);
    for (std::size_t i = 0; i < edges[r]; ++i) {
      triples.push_back({heads[i % heads.size()], r, tails[(i / heads.size() + i) % tails.size()]});
    }
  }
  const KnowledgeGraph g(vocab, std::move(triples));
  const auto s = stats(g);
  CHECK(s.nodes[0] == 6512);
  CHECK(s.nodes[1] == 30098);
  CHECK(s.nodes[2] == 23458);
  CHECK(s.total_nodes == 60068);
  CHECK(s.total_edges == 243641);
}

TEST_CASE("stats totals are invariant under triple reordering") {
  Rng rng(3);
  const auto g = random_graph(rng, 8, 40);
  std::ostringstream a;
  write_triples(g, a);
  auto lines = std::vector<std::string>();
  std::istringstream in(a.str());
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  std::reverse(lines.begin(), lines.end());
  std::string reversed;
  for (const auto& l : lines) reversed += l + "\n";
  std::ostringstream types;
  write_types(g.vocab(), types);
  const auto g2 = graph_from(reversed, types.str());
  const auto s1 = stats(g), s2 = stats(g2);
  CHECK(s1.total_edges == s2.total_edges);
  CHECK(s1.edges == s2.edges);
  CHECK(s1.nodes == s2.nodes);
}

TEST_CASE("serialize/load round trip preserves the triple set") {
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const auto g = random_graph(rng, 10, 30);
    std::ostringstream t, ty;
    write_triples(g, t);
    write_types(g.vocab(), ty);
    const auto g2 = graph_from(t.str(), ty.str());
    CHECK(triple_set(g) == triple_set(g2));
    std::ostringstream t2;
    write_triples(g2, t2);
    CHECK(t.str() == t2.str());
  }
}

TEST_CASE("split") {
  std::ostringstream types, triples;
  types << "@relation\tr\tdrug\tdrug\n";
  for (int i = 0; i < 10; ++i) types << "e" << i << "\tdrug\n";
  for (int h = 0; h < 10; ++h) {
    for (int t = 0; t < 10; ++t) triples << "e" << h << "\tr\te" << t << '\n';
  }
  const auto g = graph_from(triples.str(), types.str());
  REQUIRE(g.size() == 100);

  SUBCASE("identity fractions") {
    const auto s = split(g, {1.0, 0.0, 0.0}, 1);
    CHECK(triple_set(s.train) == triple_set(g));
    CHECK(s.valid.empty());
    CHECK(s.test.empty());
  }
  SUBCASE("80/10/10 on a fully connected graph needs no reassignment") {
    const auto s = split(g, {0.8, 0.1, 0.1}, 42);
    CHECK(s.train.size() == 80);
    CHECK(s.valid.size() == 10);
    CHECK(s.test.size() == 10);
  }
  SUBCASE("determinism") {
    const auto a = split(g, {0.8, 0.1, 0.1}, 7);
    const auto b = split(g, {0.8, 0.1, 0.1}, 7);
    CHECK(a.train.triples() == b.train.triples());
    CHECK(a.valid.triples() == b.valid.triples());
    CHECK(a.test.triples() == b.test.triples());
  }
  SUBCASE("bad fractions") {
    CHECK_THROWS_AS(split(g, {0.5, 0.1, 0.1}, 1), ArgumentError);
    CHECK_THROWS_AS(split(g, {0.0, 0.5, 0.5}, 1), ArgumentError);
  }
}

TEST_CASE("split is a partition with entity coverage") {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = random_graph(rng, 12, 60);
    const auto s = split(g, {0.6, 0.2, 0.2}, static_cast<std::uint64_t>(trial));
    const auto tr = triple_set(s.train), va = triple_set(s.valid), te = triple_set(s.test);
    CHECK(tr.size() + va.size() + te.size() == g.size());
    auto all = tr;
    all.insert(va.begin(), va.end());
    all.insert(te.begin(), te.end());
    CHECK(all == triple_set(g));
    std::set<std::string> train_entities;
    for (const auto& [h, r, t] : tr) {
      train_entities.insert(h);
      train_entities.insert(t);
    }
    for (const auto* part : {&va, &te}) {
      for (const auto& [h, r, t] : *part) {
        CHECK(train_entities.contains(h));
        CHECK(train_entities.contains(t));
      }
    }
  }
}

TEST_CASE("split of a graph too small to honor fractions fails") {
  // Every triple introduces new entities, so everything is reassigned to train.
  const auto g = graph_from("e0\tr\te1\ne2\tr\te3\ne4\tr\te5\n",
                            "@relation\tr\tdrug\tdrug\ne0\tdrug\ne1\tdrug\ne2\tdrug\ne3\tdrug\ne4\tdrug\ne5\tdrug\n");
  CHECK_THROWS_AS(split(g, {0.4, 0.3, 0.3}, 1), SplitError);
}
