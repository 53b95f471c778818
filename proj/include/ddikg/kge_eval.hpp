#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ddikg/kg.hpp"
#include "ddikg/kge.hpp"

namespace ddikg {

enum class RankMode { Raw, Filtered };

struct LinkPredictionReport {
  double mrr = 0.0;
  std::map<int, double> hits_at{{1, 0.0}, {3, 0.0}, {10, 0.0}};
  double mean_rank = 0.0;
  std::size_t n_queries = 0;
  std::vector<double> ranks;  // head query then tail query, per test triple
};

// Rank of `true_score` among `candidates` (which include it), using the mean
// rank of the tied block.
double tied_rank(double true_score, std::span<const double> candidates, bool lower_better);

// Head and tail prediction for every test triple against same-kind candidates.
// `test` and `all` must share the vocabulary the params were trained on.
LinkPredictionReport rank_triples(const KgeParams& params, const KnowledgeGraph& test,
                                  const KnowledgeGraph& all, RankMode mode);

std::string format_report(const LinkPredictionReport& r);
// `key=value` lines.
std::string format_report_kv(const LinkPredictionReport& r);

// `entity_id v1 ... vd` per line; returns rows written.
std::size_t export_embeddings(std::span<const DrugEmbedding> embeddings, std::ostream& sink);
std::vector<DrugEmbedding> import_embeddings(std::istream& in, const std::string& source = "embeddings");
std::size_t export_embeddings(std::span<const DrugEmbedding> embeddings, const std::filesystem::path& path);
std::vector<DrugEmbedding> import_embeddings(const std::filesystem::path& path);

}  // namespace ddikg
