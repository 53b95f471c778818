#include "ddikg/kge.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "ddikg/error.hpp"
#include "ddikg/text.hpp"

namespace ddikg {

KgeModel parse_kge_model(std::string_view s) {
  if (text::iequals(s, "transe")) return KgeModel::TransE;
  if (text::iequals(s, "transr")) return KgeModel::TransR;
  if (text::iequals(s, "rescal")) return KgeModel::Rescal;
  if (text::iequals(s, "distmult")) return KgeModel::DistMult;
  throw ArgumentError("unknown KGE model '" + std::string(s) + "'");
}

std::string_view to_string(KgeModel m) {
  switch (m) {
    case KgeModel::TransE: return "transe";
    case KgeModel::TransR: return "transr";
    case KgeModel::Rescal: return "rescal";
    case KgeModel::DistMult: return "distmult";
  }
  return "?";
}

Norm parse_norm(std::string_view s) {
  if (text::iequals(s, "l1")) return Norm::L1;
  if (text::iequals(s, "l2")) return Norm::L2;
  throw ArgumentError("unknown norm '" + std::string(s) + "'");
}

std::string_view to_string(Norm n) { return n == Norm::L1 ? "l1" : "l2"; }

void KgeConfig::validate() const {
  if (dim == 0) throw ArgumentError("dim must be positive");
  if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
  if (!(margin > 0.0)) throw ArgumentError("margin must be positive");
  if (negatives == 0) throw ArgumentError("negatives-per-positive must be positive");
  if (batch_size == 0) throw ArgumentError("batch size must be positive");
}

KgeParams init_params(const KgeConfig& config, const Vocabulary& vocab, std::uint64_t seed) {
  config.validate();
  KgeParams p;
  p.model = config.model;
  p.norm = config.norm;
  p.dim = config.dim;
  p.rel_dim = config.model == KgeModel::TransR ? config.relation_dim() : config.dim;
  const std::size_t n_ent = vocab.num_entities();
  const std::size_t n_rel = vocab.num_relations();
  const double bound = 6.0 / std::sqrt(static_cast<double>(config.dim));

  Rng rng(seed);
  auto fill_uniform = [&](Matrix& m) {
    for (double& v : m.data()) v = rng.uniform(-bound, bound);
  };

  p.entities = Matrix(n_ent, p.dim);
  fill_uniform(p.entities);
  if (is_translational(p.model)) {
    for (std::size_t e = 0; e < n_ent; ++e) linalg::normalize_l2(p.entities.row(e));
  }

  switch (p.model) {
    case KgeModel::TransE:
    case KgeModel::DistMult:
      p.relations = Matrix(n_rel, p.dim);
      fill_uniform(p.relations);
      break;
    case KgeModel::TransR:
      p.relations = Matrix(n_rel, p.rel_dim);
      fill_uniform(p.relations);
      p.relation_matrices.assign(n_rel, Matrix::identity(p.rel_dim, p.dim));
      break;
    case KgeModel::Rescal:
      p.relations = Matrix(n_rel, 0);
      p.relation_matrices.assign(n_rel, Matrix(p.dim, p.dim));
      for (auto& m : p.relation_matrices) fill_uniform(m);
      break;
  }
  return p;
}

namespace {

// d(norm)/dv for the chosen norm; zero at the origin.
void norm_grad(Norm norm, std::span<const double> v, double value, std::span<double> g) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (norm == Norm::L1) {
      g[i] = v[i] > 0.0 ? 1.0 : (v[i] < 0.0 ? -1.0 : 0.0);
    } else {
      g[i] = value > 0.0 ? v[i] / value : 0.0;
    }
  }
}

double norm_of(Norm norm, std::span<const double> v) {
  if (norm == Norm::L2) return linalg::l2_norm(v);
  double acc = 0.0;
  for (double x : v) acc += std::abs(x);
  return acc;
}

Vector& row_of(std::map<std::uint32_t, Vector>& m, std::uint32_t key, std::size_t n) {
  auto [it, inserted] = m.try_emplace(key);
  if (inserted) it->second.assign(n, 0.0);
  return it->second;
}

// Score of `t`; when `grad` is non-null also adds coeff * d(score)/d(params).
double score_impl(const KgeParams& p, const IndexedTriple& t, double coeff, KgeGradient* grad) {
  const auto h = p.entities.row(t.head);
  const auto tl = p.entities.row(t.tail);
  switch (p.model) {
    case KgeModel::TransE: {
      const auto r = p.relations.row(t.relation);
      Vector v(p.dim);
      for (std::size_t i = 0; i < p.dim; ++i) v[i] = h[i] + r[i] - tl[i];
      const double s = norm_of(p.norm, v);
      if (grad) {
        Vector g(p.dim);
        norm_grad(p.norm, v, s, g);
        linalg::axpy(coeff, g, row_of(grad->entities, t.head, p.dim));
        linalg::axpy(-coeff, g, row_of(grad->entities, t.tail, p.dim));
        linalg::axpy(coeff, g, row_of(grad->relations, t.relation, p.dim));
      }
      return s;
    }
    case KgeModel::TransR: {
      const auto r = p.relations.row(t.relation);
      const auto& m = p.relation_matrices[t.relation];
      Vector diff(p.dim);
      for (std::size_t i = 0; i < p.dim; ++i) diff[i] = h[i] - tl[i];
      Vector v(p.rel_dim);
      linalg::matvec(m, diff, v);
      for (std::size_t i = 0; i < p.rel_dim; ++i) v[i] += r[i];
      const double s = norm_of(p.norm, v);
      if (grad) {
        Vector g(p.rel_dim);
        norm_grad(p.norm, v, s, g);
        Vector mt_g(p.dim, 0.0);
        linalg::matvec_t_acc(m, g, mt_g);
        linalg::axpy(coeff, mt_g, row_of(grad->entities, t.head, p.dim));
        linalg::axpy(-coeff, mt_g, row_of(grad->entities, t.tail, p.dim));
        linalg::axpy(coeff, g, row_of(grad->relations, t.relation, p.rel_dim));
        auto [it, inserted] = grad->relation_matrices.try_emplace(t.relation);
        if (inserted) it->second = Matrix(p.rel_dim, p.dim);
        linalg::outer_acc(g, diff, coeff, it->second);
      }
      return s;
    }
    case KgeModel::Rescal: {
      const auto& m = p.relation_matrices[t.relation];
      Vector mt(p.dim);
      linalg::matvec(m, tl, mt);
      const double s = linalg::dot(h, mt);
      if (grad) {
        linalg::axpy(coeff, mt, row_of(grad->entities, t.head, p.dim));
        Vector mth(p.dim, 0.0);
        linalg::matvec_t_acc(m, h, mth);
        linalg::axpy(coeff, mth, row_of(grad->entities, t.tail, p.dim));
        auto [it, inserted] = grad->relation_matrices.try_emplace(t.relation);
        if (inserted) it->second = Matrix(p.dim, p.dim);
        linalg::outer_acc(h, tl, coeff, it->second);
      }
      return s;
    }
    case KgeModel::DistMult: {
      const auto r = p.relations.row(t.relation);
      double s = 0.0;
      for (std::size_t i = 0; i < p.dim; ++i) s += r[i] * h[i] * tl[i];
      if (grad) {
        auto& gh = row_of(grad->entities, t.head, p.dim);
        for (std::size_t i = 0; i < p.dim; ++i) gh[i] += coeff * r[i] * tl[i];
        auto& gt = row_of(grad->entities, t.tail, p.dim);
        for (std::size_t i = 0; i < p.dim; ++i) gt[i] += coeff * r[i] * h[i];
        auto& gr = row_of(grad->relations, t.relation, p.dim);
        for (std::size_t i = 0; i < p.dim; ++i) gr[i] += coeff * h[i] * tl[i];
      }
      return s;
    }
  }
  return 0.0;
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::string describe(const IndexedTriple& t, const Vocabulary* vocab) {
  if (vocab) {
    return "(" + vocab->entity_name(t.head) + ", " + vocab->relation_signature(t.relation).name + ", " +
           vocab->entity_name(t.tail) + ")";
  }
  return "(" + std::to_string(t.head) + ", " + std::to_string(t.relation) + ", " + std::to_string(t.tail) + ")";
}

void check_registered(const KgeParams& p, const IndexedTriple& t) {
  if (t.head >= p.entities.rows() || t.tail >= p.entities.rows() ||
      (t.relation >= p.relations.rows() && t.relation >= p.relation_matrices.size())) {
    throw LookupError("triple " + describe(t, nullptr) + " outside the parameter vocabulary");
  }
}

}  // namespace

double score(const KgeParams& params, const IndexedTriple& t) {
  check_registered(params, t);
  return score_impl(params, t, 0.0, nullptr);
}

double score(const KgeParams& params, const KnowledgeGraph& graph, const Triple& t) {
  return score(params, graph.resolve(t));
}

IndexedTriple corrupt(const IndexedTriple& t, const KnowledgeGraph& graph, Rng& rng) {
  const auto& vocab = graph.vocab();
  const bool replace_head = rng.coin();
  const auto& pool = vocab.entities_of_kind(vocab.entity_kind(replace_head ? t.head : t.tail));
  IndexedTriple out = t;
  for (int attempt = 0; attempt < kMaxCorruptAttempts; ++attempt) {
    const EntityIndex e = pool[rng.index(pool.size())];
    out = t;
    (replace_head ? out.head : out.tail) = e;
    if (!graph.contains(out)) return out;
  }
  return out;
}

LossAndGrad loss_and_grad(const KgeParams& params, std::span<const IndexedTriple> positives,
                          std::span<const IndexedTriple> negatives, double margin, const Vocabulary* vocab) {
  if (positives.empty() || negatives.size() % positives.size() != 0) {
    throw ArgumentError("negatives must be a positive multiple of positives");
  }
  const std::size_t per_positive = negatives.size() / positives.size();
  for (const auto& t : positives) check_registered(params, t);
  for (const auto& t : negatives) check_registered(params, t);

  LossAndGrad out;
  if (is_translational(params.model)) {
    for (std::size_t j = 0; j < negatives.size(); ++j) {
      const auto& pos = positives[j / per_positive];
      const auto& neg = negatives[j];
      const double sp = score_impl(params, pos, 0.0, nullptr);
      const double sn = score_impl(params, neg, 0.0, nullptr);
      const double term = margin + sp - sn;
      if (!std::isfinite(term)) throw NumericError("non-finite margin loss", describe(pos, vocab));
      if (term > 0.0) {
        out.loss += term;
        score_impl(params, pos, 1.0, &out.grad);
        score_impl(params, neg, -1.0, &out.grad);
      }
    }
  } else {
    for (const auto& pos : positives) {
      const double s = score_impl(params, pos, 0.0, nullptr);
      const double term = softplus(-s);
      if (!std::isfinite(term)) throw NumericError("non-finite logistic loss", describe(pos, vocab));
      out.loss += term;
      score_impl(params, pos, -sigmoid(-s), &out.grad);
    }
    for (const auto& neg : negatives) {
      const double s = score_impl(params, neg, 0.0, nullptr);
      const double term = softplus(s);
      if (!std::isfinite(term)) throw NumericError("non-finite logistic loss", describe(neg, vocab));
      out.loss += term;
      score_impl(params, neg, sigmoid(s), &out.grad);
    }
  }
  return out;
}

namespace {

void apply_sgd(KgeParams& p, const KgeGradient& g, double lr) {
  for (const auto& [e, v] : g.entities) linalg::axpy(-lr, v, p.entities.row(e));
  for (const auto& [r, v] : g.relations) linalg::axpy(-lr, v, p.relations.row(r));
  for (const auto& [r, m] : g.relation_matrices) {
    linalg::axpy(-lr, m.data(), p.relation_matrices[r].data());
  }
  if (is_translational(p.model)) {
    for (const auto& [e, v] : g.entities) linalg::normalize_l2(p.entities.row(e));
  }
}

}  // namespace

KgeParams train(const KnowledgeGraph& graph, const KgeConfig& config, const KgeTrainHooks& hooks) {
  config.validate();
  if (graph.empty()) throw PreconditionError("cannot train on an empty graph");
  KgeParams params = init_params(config, graph.vocab(), config.seed);
  // Separate stream so init draws do not depend on training settings.
  Rng rng(config.seed ^ 0x5DEECE66DULL);

  const auto& triples = graph.triples();
  std::vector<std::size_t> order(triples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<IndexedTriple> pos, neg;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      pos.clear();
      neg.clear();
      for (std::size_t i = start; i < end; ++i) {
        const auto& t = triples[order[i]];
        pos.push_back(t);
        for (std::size_t k = 0; k < config.negatives; ++k) neg.push_back(corrupt(t, graph, rng));
      }
      const auto lg = loss_and_grad(params, pos, neg, config.margin, &graph.vocab());
      epoch_loss += lg.loss;
      apply_sgd(params, lg.grad, config.learning_rate);
      if (hooks.after_step) hooks.after_step(params);
    }
    if (hooks.log) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%zu\t%.9g\n", epoch, epoch_loss / static_cast<double>(triples.size()));
      *hooks.log << buf;
    }
  }
  return params;
}

std::vector<DrugEmbedding> drug_embeddings(const KgeParams& params, const Vocabulary& vocab) {
  std::vector<DrugEmbedding> out;
  for (EntityIndex e : vocab.entities_of_kind(EntityKind::Drug)) {
    const auto row = params.entities.row(e);
    out.push_back({vocab.entity_name(e), Vector(row.begin(), row.end())});
  }
  return out;
}

// ---- persistence ----

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Matrix matrix_from_json(const json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  const auto& data = j.at("data");
  if (data.size() != m.rows()) throw ShapeError("matrix row count mismatch");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto& row = data[r];
    if (row.size() != m.cols()) throw ShapeError("matrix column count mismatch");
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = row[c].get<double>();
  }
  return m;
}

}  // namespace

void save_model(const KgeModelFile& model, std::ostream& out) {
  const auto& c = model.config;
  const auto& p = model.params;
  const auto& vocab = *model.vocab;
  json j;
  j["format"] = "ddikg-kge-params";
  j["config"] = {{"model", to_string(c.model)}, {"dim", c.dim},
                 {"rel_dim", c.relation_dim()}, {"learning_rate", c.learning_rate},
                 {"epochs", c.epochs}, {"margin", c.margin},
                 {"negatives", c.negatives}, {"norm", to_string(c.norm)},
                 {"seed", c.seed}, {"batch_size", c.batch_size}};
  json rels = json::array();
  for (RelationIndex r = 0; r < vocab.num_relations(); ++r) {
    const auto& sig = vocab.relation_signature(r);
    rels.push_back({{"name", sig.name}, {"head", to_string(sig.head)}, {"tail", to_string(sig.tail)}});
  }
  json ents = json::array();
  for (EntityIndex e = 0; e < vocab.num_entities(); ++e) {
    ents.push_back({{"id", vocab.entity_name(e)}, {"kind", to_string(vocab.entity_kind(e))}});
  }
  j["relations"] = std::move(rels);
  j["entities"] = std::move(ents);
  j["entity_embeddings"] = matrix_to_json(p.entities);
  j["relation_embeddings"] = matrix_to_json(p.relations);
  json mats = json::array();
  for (const auto& m : p.relation_matrices) mats.push_back(matrix_to_json(m));
  j["relation_matrices"] = std::move(mats);
  out << j.dump() << '\n';
  if (!out) throw IoError("failed writing KGE parameters");
}

KgeModelFile load_model(std::istream& in, const std::string& source) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(source, 1, std::string("invalid JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != "ddikg-kge-params") throw ValidationError(source + ": not a KGE parameter file");
    KgeModelFile m;
    const auto& c = j.at("config");
    m.config.model = parse_kge_model(c.at("model").get<std::string>());
    m.config.dim = c.at("dim").get<std::size_t>();
    m.config.rel_dim = c.at("rel_dim").get<std::size_t>();
    m.config.learning_rate = c.at("learning_rate").get<double>();
    m.config.epochs = c.at("epochs").get<std::size_t>();
    m.config.margin = c.at("margin").get<double>();
    m.config.negatives = c.at("negatives").get<std::size_t>();
    m.config.norm = parse_norm(c.at("norm").get<std::string>());
    m.config.seed = c.at("seed").get<std::uint64_t>();
    m.config.batch_size = c.at("batch_size").get<std::size_t>();

    auto vocab = std::make_shared<Vocabulary>();
    for (const auto& r : j.at("relations")) {
      vocab->add_relation({r.at("name").get<std::string>(), parse_entity_kind(r.at("head").get<std::string>()),
                           parse_entity_kind(r.at("tail").get<std::string>())});
    }
    for (const auto& e : j.at("entities")) {
      vocab->add_entity(e.at("id").get<std::string>(), parse_entity_kind(e.at("kind").get<std::string>()));
    }
    m.vocab = vocab;

    auto& p = m.params;
    p.model = m.config.model;
    p.norm = m.config.norm;
    p.dim = m.config.dim;
    p.rel_dim = p.model == KgeModel::TransR ? m.config.relation_dim() : m.config.dim;
    p.entities = matrix_from_json(j.at("entity_embeddings"));
    p.relations = matrix_from_json(j.at("relation_embeddings"));
    for (const auto& mj : j.at("relation_matrices")) p.relation_matrices.push_back(matrix_from_json(mj));
    if (p.entities.rows() != vocab->num_entities() || p.entities.cols() != p.dim) {
      throw ShapeError(source + ": entity matrix does not match vocabulary/dim");
    }
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(source + ": malformed KGE parameter file: " + e.what());
  }
}

void save_model(const KgeModelFile& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  save_model(model, out);
}

KgeModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return load_model(in, path.string());
}

}  // namespace ddikg
