#include "ddikg/kg.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "ddikg/error.hpp"
#include "ddikg/rng.hpp"
#include "ddikg/text.hpp"

namespace ddikg {

EntityKind parse_entity_kind(std::string_view s) {
  const auto t = text::trim(s);
  if (text::iequals(t, "drug")) return EntityKind::Drug;
  if (text::iequals(t, "target")) return EntityKind::Target;
  if (text::iequals(t, "disease")) return EntityKind::Disease;
  throw SchemaError("unknown entity kind '" + std::string(t) + "'");
}

std::string_view to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::Drug: return "drug";
    case EntityKind::Target: return "target";
    case EntityKind::Disease: return "disease";
  }
  return "?";
}

const std::vector<RelationSignature>& biokg_profile() {
  static const std::vector<RelationSignature> profile = {
      {"drug-target", EntityKind::Drug, EntityKind::Target},
      {"target-target", EntityKind::Target, EntityKind::Target},
      {"drug-disease", EntityKind::Drug, EntityKind::Disease},
      {"disease-disease", EntityKind::Disease, EntityKind::Disease},
      {"disease-target", EntityKind::Disease, EntityKind::Target},
  };
  return profile;
}

// ---- Vocabulary ----

EntityIndex Vocabulary::add_entity(const std::string& name, EntityKind kind) {
  if (name.empty()) throw ValidationError("empty entity identifier");
  if (auto it = entity_index_.find(name); it != entity_index_.end()) {
    if (entity_kinds_[it->second] != kind) {
      throw ValidationError("entity '" + name + "' declared with conflicting kinds");
    }
    return it->second;
  }
  const auto idx = static_cast<EntityIndex>(entity_names_.size());
  entity_names_.push_back(name);
  entity_kinds_.push_back(kind);
  entity_index_.emplace(name, idx);
  by_kind_[static_cast<std::size_t>(kind)].push_back(idx);
  return idx;
}

RelationIndex Vocabulary::add_relation(const RelationSignature& sig) {
  if (sig.name.empty()) throw ValidationError("empty relation name");
  if (relation_index_.contains(sig.name)) {
    throw ValidationError("relation '" + sig.name + "' declared twice");
  }
  const auto idx = static_cast<RelationIndex>(relations_.size());
  relations_.push_back(sig);
  relation_index_.emplace(sig.name, idx);
  return idx;
}

std::optional<EntityIndex> Vocabulary::find_entity(std::string_view name) const {
  if (auto it = entity_index_.find(std::string(name)); it != entity_index_.end()) return it->second;
  return std::nullopt;
}

std::optional<RelationIndex> Vocabulary::find_relation(std::string_view name) const {
  if (auto it = relation_index_.find(std::string(name)); it != relation_index_.end()) return it->second;
  return std::nullopt;
}

EntityIndex Vocabulary::entity(std::string_view name) const {
  if (auto i = find_entity(name)) return *i;
  throw LookupError("unknown entity '" + std::string(name) + "'");
}

RelationIndex Vocabulary::relation(std::string_view name) const {
  if (auto i = find_relation(name)) return *i;
  throw LookupError("unknown relation '" + std::string(name) + "'");
}

// ---- KnowledgeGraph ----

KnowledgeGraph::KnowledgeGraph(std::shared_ptr<const Vocabulary> vocab,
                               std::vector<IndexedTriple> triples)
    : vocab_(std::move(vocab)) {
  triples_.reserve(triples.size());
  set_.reserve(triples.size());
  for (const auto& t : triples) {
    if (t.head >= vocab_->num_entities() || t.tail >= vocab_->num_entities() ||
        t.relation >= vocab_->num_relations()) {
      throw LookupError("triple references an unregistered index");
    }
    const auto& sig = vocab_->relation_signature(t.relation);
    if (vocab_->entity_kind(t.head) != sig.head || vocab_->entity_kind(t.tail) != sig.tail) {
      throw ValidationError("relation signature violated by " + describe(t) + ": '" + sig.name +
                            "' expects (" + std::string(to_string(sig.head)) + ", " +
                            std::string(to_string(sig.tail)) + ")");
    }
    if (set_.insert(t).second) {
      triples_.push_back(t);
    } else {
      ++duplicates_;
    }
  }
}

bool KnowledgeGraph::contains(const Triple& t) const { return contains(resolve(t)); }

IndexedTriple KnowledgeGraph::resolve(const Triple& t) const {
  return {vocab_->entity(t.head), vocab_->relation(t.relation), vocab_->entity(t.tail)};
}

Triple KnowledgeGraph::name(const IndexedTriple& t) const {
  return {vocab_->entity_name(t.head), vocab_->relation_signature(t.relation).name,
          vocab_->entity_name(t.tail)};
}

std::string KnowledgeGraph::describe(const IndexedTriple& t) const {
  const auto n = name(t);
  return "(" + n.head + ", " + n.relation + ", " + n.tail + ")";
}

// ---- loading ----

namespace {

bool skip_line(std::string_view line) {
  const auto t = text::trim(line);
  return t.empty() || t.front() == '#';
}

std::ifstream open_input(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open '" + p.string() + "'");
  return in;
}

}  // namespace

std::shared_ptr<Vocabulary> load_vocabulary(std::istream& types, const std::string& source) {
  struct PendingEntity {
    std::string name;
    EntityKind kind;
  };
  std::vector<PendingEntity> entities;
  std::vector<RelationSignature> relations;
  std::string line;
  std::size_t lineno = 0;
  while (text::read_line(types, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    const auto fields = text::split(line, '\t');
    try {
      if (fields[0] == "@relation") {
        if (fields.size() != 4) throw ParseError(source, lineno, "expected 4 fields in @relation line");
        relations.push_back({std::string(text::trim(fields[1])), parse_entity_kind(fields[2]),
                             parse_entity_kind(fields[3])});
        continue;
      }
      if (fields.size() != 2) {
        throw ParseError(source, lineno, "expected 2 tab-separated fields, got " +
                                             std::to_string(fields.size()));
      }
      entities.push_back({std::string(text::trim(fields[0])), parse_entity_kind(fields[1])});
    } catch (const SchemaError& e) {
      throw SchemaError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  auto vocab = std::make_shared<Vocabulary>();
  for (const auto& sig : relations.empty() ? biokg_profile() : relations) vocab->add_relation(sig);
  for (const auto& e : entities) vocab->add_entity(e.name, e.kind);
  return vocab;
}

KnowledgeGraph load_triples(std::istream& triples, std::shared_ptr<const Vocabulary> vocab,
                            const std::string& source) {
  std::vector<IndexedTriple> out;
  std::string line;
  std::size_t lineno = 0;
  while (text::read_line(triples, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    const auto fields = text::split(line, '\t');
    if (fields.size() != 3) {
      throw ParseError(source, lineno,
                       "expected 3 tab-separated fields, got " + std::to_string(fields.size()));
    }
    const auto head = vocab->find_entity(fields[0]);
    const auto rel = vocab->find_relation(fields[1]);
    const auto tail = vocab->find_entity(fields[2]);
    const auto where = source + ":" + std::to_string(lineno) + ": ";
    if (!head) throw ValidationError(where + "entity '" + std::string(fields[0]) + "' has no declared type");
    if (!tail) throw ValidationError(where + "entity '" + std::string(fields[2]) + "' has no declared type");
    if (!rel) throw ValidationError(where + "undeclared relation '" + std::string(fields[1]) + "'");
    out.push_back({*head, *rel, *tail});
  }
  return KnowledgeGraph(std::move(vocab), std::move(out));
}

KnowledgeGraph load_graph(std::istream& triples, std::istream& types) {
  return load_triples(triples, load_vocabulary(types));
}

KnowledgeGraph load_graph(const std::filesystem::path& triples, const std::filesystem::path& types) {
  auto types_in = open_input(types);
  auto vocab = load_vocabulary(types_in, types.string());
  auto triples_in = open_input(triples);
  return load_triples(triples_in, std::move(vocab), triples.string());
}

KnowledgeGraph load_triples(const std::filesystem::path& triples,
                            std::shared_ptr<const Vocabulary> vocab) {
  auto in = open_input(triples);
  return load_triples(in, std::move(vocab), triples.string());
}

void write_triples(const KnowledgeGraph& graph, std::ostream& out) {
  for (const auto& t : graph.triples()) {
    const auto n = graph.name(t);
    out << n.head << '\t' << n.relation << '\t' << n.tail << '\n';
  }
}

void write_types(const Vocabulary& vocab, std::ostream& out) {
  for (RelationIndex r = 0; r < vocab.num_relations(); ++r) {
    const auto& sig = vocab.relation_signature(r);
    out << "@relation\t" << sig.name << '\t' << to_string(sig.head) << '\t' << to_string(sig.tail)
        << '\n';
  }
  for (EntityIndex e = 0; e < vocab.num_entities(); ++e) {
    out << vocab.entity_name(e) << '\t' << to_string(vocab.entity_kind(e)) << '\n';
  }
}

// ---- stats ----

KgStats stats(const KnowledgeGraph& graph) {
  const auto& vocab = graph.vocab();
  KgStats s;
  for (EntityIndex e = 0; e < vocab.num_entities(); ++e) {
    ++s.nodes[static_cast<std::size_t>(vocab.entity_kind(e))];
  }
  std::vector<std::size_t> per_relation(vocab.num_relations(), 0);
  for (const auto& t : graph.triples()) {
    ++per_relation[t.relation];
    if (t.head == t.tail) ++s.self_loops;
  }
  for (RelationIndex r = 0; r < vocab.num_relations(); ++r) {
    s.edges.emplace_back(vocab.relation_signature(r).name, per_relation[r]);
    s.total_edges += per_relation[r];
  }
  for (auto n : s.nodes) s.total_nodes += n;
  s.duplicates_collapsed = graph.duplicates_collapsed();
  return s;
}

std::string format_stats(const KgStats& s) {
  static constexpr std::array<const char*, kNumEntityKinds> kNodeLabels = {"Drug", "Target", "Disease"};
  std::vector<std::pair<std::string, std::string>> left;
  for (std::size_t k = 0; k < kNumEntityKinds; ++k) left.emplace_back(kNodeLabels[k], std::to_string(s.nodes[k]));
  std::vector<std::pair<std::string, std::string>> right;
  for (const auto& [name, count] : s.edges) right.emplace_back(name, std::to_string(count));

  std::size_t w_left = std::string("Total Nodes").size();
  std::size_t w_right = std::string("Total Edges").size();
  for (const auto& [k, v] : left) w_left = std::max(w_left, k.size());
  for (const auto& [k, v] : right) w_right = std::max(w_right, k.size());

  std::ostringstream out;
  auto row = [&](const std::string& a, const std::string& b, const std::string& c, const std::string& d) {
    out << std::left << std::setw(static_cast<int>(w_left)) << a << "  " << std::right << std::setw(8) << b
        << "  |  " << std::left << std::setw(static_cast<int>(w_right)) << c << "  " << std::right
        << std::setw(8) << d << '\n';
  };
  row("Node Types", "Count", "Edge Types", "Count");
  const std::size_t n = std::max(left.size(), right.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto l = i < left.size() ? left[i] : std::pair<std::string, std::string>{};
    const auto r = i < right.size() ? right[i] : std::pair<std::string, std::string>{};
    row(l.first, l.second, r.first, r.second);
  }
  row("Total Nodes", std::to_string(s.total_nodes), "Total Edges", std::to_string(s.total_edges));
  out << "self-loops: " << s.self_loops << "  duplicates collapsed: " << s.duplicates_collapsed << '\n';
  return out.str();
}

// ---- split ----

GraphSplit split(const KnowledgeGraph& graph, const SplitFractions& f, std::uint64_t seed) {
  if (f.train <= 0.0 || f.valid < 0.0 || f.test < 0.0 || std::abs(f.train + f.valid + f.test - 1.0) > 1e-9) {
    throw ArgumentError("split fractions must be non-negative, train positive, and sum to 1");
  }
  const std::size_t n = graph.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());

  const auto n_valid = static_cast<std::size_t>(std::llround(f.valid * static_cast<double>(n)));
  const auto n_test = std::min(n - std::min(n, n_valid),
                               static_cast<std::size_t>(std::llround(f.test * static_cast<double>(n))));
  const std::size_t n_train = n - std::min(n, n_valid) - n_test;

  const auto& all = graph.triples();
  std::vector<IndexedTriple> train, valid, test;
  std::vector<bool> seen(graph.vocab().num_entities(), false);
  for (std::size_t i = 0; i < n_train; ++i) {
    const auto& t = all[order[i]];
    train.push_back(t);
    seen[t.head] = seen[t.tail] = true;
  }
  auto assign = [&](std::size_t begin, std::size_t end, std::vector<IndexedTriple>& part) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& t = all[order[i]];
      if (seen[t.head] && seen[t.tail]) {
        part.push_back(t);
      } else {
        train.push_back(t);
        seen[t.head] = seen[t.tail] = true;
      }
    }
  };
  assign(n_train, n_train + std::min(n, n_valid), valid);
  assign(n_train + std::min(n, n_valid), n, test);

  if ((f.valid > 0.0 && valid.empty()) || (f.test > 0.0 && test.empty())) {
    throw SplitError("graph of " + std::to_string(n) +
                     " triples is too small to honor the split fractions after entity-coverage reassignment");
  }
  return {KnowledgeGraph(graph.shared_vocab(), std::move(train)),
          KnowledgeGraph(graph.shared_vocab(), std::move(valid)),
          KnowledgeGraph(graph.shared_vocab(), std::move(test))};
}

}  // namespace ddikg
