#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ddikg/kg.hpp"
#include "ddikg/matrix.hpp"
#include "ddikg/rng.hpp"

namespace ddikg {

enum class KgeModel { TransE, TransR, Rescal, DistMult };
enum class Norm { L1, L2 };

KgeModel parse_kge_model(std::string_view s);
std::string_view to_string(KgeModel m);
Norm parse_norm(std::string_view s);
std::string_view to_string(Norm n);

// Translational models score a distance (lower is more plausible); bilinear
// models score a similarity (higher is more plausible).
constexpr bool is_translational(KgeModel m) { return m == KgeModel::TransE || m == KgeModel::TransR; }
constexpr bool lower_is_better(KgeModel m) { return is_translational(m); }

struct KgeConfig {
  KgeModel model = KgeModel::TransE;
  std::size_t dim = 200;
  std::size_t rel_dim = 0;  // TransR relation space; 0 means "same as dim"
  double learning_rate = 1e-4;
  std::size_t epochs = 300;
  double margin = 1.0;
  std::size_t negatives = 1;
  Norm norm = Norm::L2;
  std::uint64_t seed = 0;
  std::size_t batch_size = 256;

  std::size_t relation_dim() const { return rel_dim == 0 ? dim : rel_dim; }
  // Throws ArgumentError on non-positive settings.
  void validate() const;
};

struct KgeParams {
  KgeModel model = KgeModel::TransE;
  Norm norm = Norm::L2;
  std::size_t dim = 0;
  std::size_t rel_dim = 0;
  Matrix entities;                        // |E| x d
  Matrix relations;                       // |R| x d (|R| x k for TransR, |R| x 0 for RESCAL)
  std::vector<Matrix> relation_matrices;  // TransR: k x d projections; RESCAL: d x d bilinear

  friend bool operator==(const KgeParams&, const KgeParams&) = default;
};

// Sparse gradient: only rows touched by the batch are present.
struct KgeGradient {
  std::map<EntityIndex, Vector> entities;
  std::map<RelationIndex, Vector> relations;
  std::map<RelationIndex, Matrix> relation_matrices;
};

struct LossAndGrad {
  double loss = 0.0;
  KgeGradient grad;
};

struct DrugEmbedding {
  std::string entity;
  Vector vector;
};

KgeParams init_params(const KgeConfig& config, const Vocabulary& vocab, std::uint64_t seed);

double score(const KgeParams& params, const IndexedTriple& t);
// Throws LookupError for unregistered identifiers.
double score(const KgeParams& params, const KnowledgeGraph& graph, const Triple& t);

// Same-kind head-or-tail corruption, filtered against `graph` with at most
// `kMaxCorruptAttempts` draws; the last draw is returned when the cap is hit.
inline constexpr int kMaxCorruptAttempts = 100;
IndexedTriple corrupt(const IndexedTriple& t, const KnowledgeGraph& graph, Rng& rng);

// Negative j pairs with positive j / (|negatives| / |positives|).
// Translational: sum of max(0, margin + s(pos) - s(neg)).
// Bilinear: sum of softplus(-s(pos)) + softplus(s(neg)).
// `vocab` is only used to name the triple in a NumericError.
LossAndGrad loss_and_grad(const KgeParams& params, std::span<const IndexedTriple> positives,
                          std::span<const IndexedTriple> negatives, double margin,
                          const Vocabulary* vocab = nullptr);

struct KgeTrainHooks {
  std::ostream* log = nullptr;  // `epoch<TAB>mean_loss` lines
  std::function<void(const KgeParams&)> after_step;
};

KgeParams train(const KnowledgeGraph& graph, const KgeConfig& config, const KgeTrainHooks& hooks = {});

// Entity-space rows of every Drug entity, in entity index order.
std::vector<DrugEmbedding> drug_embeddings(const KgeParams& params, const Vocabulary& vocab);

// Trained model plus the vocabulary it was trained on.
struct KgeModelFile {
  KgeConfig config;
  KgeParams params;
  std::shared_ptr<const Vocabulary> vocab;
};

void save_model(const KgeModelFile& model, std::ostream& out);
KgeModelFile load_model(std::istream& in, const std::string& source = "params");
void save_model(const KgeModelFile& model, const std::filesystem::path& path);
KgeModelFile load_model(const std::filesystem::path& path);

}  // namespace ddikg
