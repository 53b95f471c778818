#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace ddikg {

enum class EntityKind : std::uint8_t { Drug = 0, Target = 1, Disease = 2 };
inline constexpr std::size_t kNumEntityKinds = 3;

// Case-insensitive; throws SchemaError on anything but drug|target|disease.
EntityKind parse_entity_kind(std::string_view s);
std::string_view to_string(EntityKind kind);

using EntityIndex = std::uint32_t;
using RelationIndex = std::uint32_t;

struct RelationSignature {
  std::string name;
  EntityKind head;
  EntityKind tail;
};

// The five relation kinds of the Bio-KG schema.
const std::vector<RelationSignature>& biokg_profile();

// Triple over string identifiers.
struct Triple {
  std::string head;
  std::string relation;
  std::string tail;
  friend bool operator==(const Triple&, const Triple&) = default;
};

struct IndexedTriple {
  EntityIndex head;
  RelationIndex relation;
  EntityIndex tail;
  friend bool operator==(const IndexedTriple&, const IndexedTriple&) = default;
};

struct IndexedTripleHash {
  std::size_t operator()(const IndexedTriple& t) const noexcept {
    std::uint64_t h = (static_cast<std::uint64_t>(t.head) << 32) | t.tail;
    h ^= static_cast<std::uint64_t>(t.relation) * 0x9E3779B97F4A7C15ULL;
    h ^= h >> 29;
    h *= 0xBF58476D1CE4E5B9ULL;
    h ^= h >> 32;
    return static_cast<std::size_t>(h);
  }
};

// Entity and relation vocabularies with dense indices.
class Vocabulary {
 public:
  EntityIndex add_entity(const std::string& name, EntityKind kind);
  RelationIndex add_relation(const RelationSignature& sig);

  std::optional<EntityIndex> find_entity(std::string_view name) const;
  std::optional<RelationIndex> find_relation(std::string_view name) const;
  // Throw LookupError when absent.
  EntityIndex entity(std::string_view name) const;
  RelationIndex relation(std::string_view name) const;

  std::size_t num_entities() const { return entity_names_.size(); }
  std::size_t num_relations() const { return relations_.size(); }
  const std::string& entity_name(EntityIndex i) const { return entity_names_.at(i); }
  EntityKind entity_kind(EntityIndex i) const { return entity_kinds_.at(i); }
  const RelationSignature& relation_signature(RelationIndex r) const { return relations_.at(r); }
  const std::vector<EntityIndex>& entities_of_kind(EntityKind kind) const {
    return by_kind_[static_cast<std::size_t>(kind)];
  }

 private:
  std::vector<std::string> entity_names_;
  std::vector<EntityKind> entity_kinds_;
  std::unordered_map<std::string, EntityIndex> entity_index_;
  std::vector<RelationSignature> relations_;
  std::unordered_map<std::string, RelationIndex> relation_index_;
  std::array<std::vector<EntityIndex>, kNumEntityKinds> by_kind_;
};

// Immutable typed knowledge graph. Several graphs (e.g. the parts of a split)
// can share one vocabulary so their indices agree.
class KnowledgeGraph {
 public:
  KnowledgeGraph() : vocab_(std::make_shared<Vocabulary>()) {}
  // Validates relation signatures; duplicate triples are collapsed and counted.
  KnowledgeGraph(std::shared_ptr<const Vocabulary> vocab, std::vector<IndexedTriple> triples);

  const Vocabulary& vocab() const { return *vocab_; }
  const std::shared_ptr<const Vocabulary>& shared_vocab() const { return vocab_; }
  const std::vector<IndexedTriple>& triples() const { return triples_; }
  std::size_t size() const { return triples_.size(); }
  bool empty() const { return triples_.empty(); }

  bool contains(const IndexedTriple& t) const { return set_.contains(t); }
  // Throws LookupError for unregistered identifiers.
  bool contains(const Triple& t) const;

  IndexedTriple resolve(const Triple& t) const;
  Triple name(const IndexedTriple& t) const;
  std::string describe(const IndexedTriple& t) const;

  std::size_t duplicates_collapsed() const { return duplicates_; }

 private:
  std::shared_ptr<const Vocabulary> vocab_;
  std::vector<IndexedTriple> triples_;
  std::unordered_set<IndexedTriple, IndexedTripleHash> set_;
  std::size_t duplicates_ = 0;
};

// Parses an entity-types source (`entity<TAB>kind`). Lines of the form
// `@relation<TAB>name<TAB>head_kind<TAB>tail_kind` declare relation
// signatures; without any declaration the Bio-KG profile is used.
std::shared_ptr<Vocabulary> load_vocabulary(std::istream& types, const std::string& source = "types");

// Parses `head<TAB>relation<TAB>tail` lines against an existing vocabulary.
KnowledgeGraph load_triples(std::istream& triples, std::shared_ptr<const Vocabulary> vocab,
                            const std::string& source = "triples");

KnowledgeGraph load_graph(std::istream& triples, std::istream& types);
KnowledgeGraph load_graph(const std::filesystem::path& triples, const std::filesystem::path& types);
KnowledgeGraph load_triples(const std::filesystem::path& triples, std::shared_ptr<const Vocabulary> vocab);

void write_triples(const KnowledgeGraph& graph, std::ostream& out);
// Writes relation declarations followed by every entity in index order.
void write_types(const Vocabulary& vocab, std::ostream& out);

struct KgStats {
  std::array<std::size_t, kNumEntityKinds> nodes{};
  std::vector<std::pair<std::string, std::size_t>> edges;  // relation index order
  std::size_t total_nodes = 0;
  std::size_t total_edges = 0;
  std::size_t self_loops = 0;
  std::size_t duplicates_collapsed = 0;
};

KgStats stats(const KnowledgeGraph& graph);
// Two-column node/edge table.
std::string format_stats(const KgStats& s);

struct SplitFractions {
  double train = 1.0;
  double valid = 0.0;
  double test = 0.0;
};

struct GraphSplit {
  KnowledgeGraph train;
  KnowledgeGraph valid;
  KnowledgeGraph test;
};

// Shuffled partition of the triples. Valid/test triples whose head or tail
// never occurs in train are moved to train.
GraphSplit split(const KnowledgeGraph& graph, const SplitFractions& fractions, std::uint64_t seed);

}  // namespace ddikg
