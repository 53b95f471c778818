#include "ddikg/kge_eval.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ddikg/error.hpp"
#include "ddikg/text.hpp"

namespace ddikg {

double tied_rank(double true_score, std::span<const double> candidates, bool lower_better) {
  std::size_t better = 0;
  std::size_t tied = 0;  // includes the true entity itself
  for (double s : candidates) {
    if (s == true_score) {
      ++tied;
    } else if (lower_better ? s < true_score : s > true_score) {
      ++better;
    }
  }
  return static_cast<double>(better) + (static_cast<double>(tied) + 1.0) / 2.0;
}

LinkPredictionReport rank_triples(const KgeParams& params, const KnowledgeGraph& test,
                                  const KnowledgeGraph& all, RankMode mode) {
  LinkPredictionReport report;
  if (test.empty()) return report;
  if (test.vocab().num_entities() != all.vocab().num_entities() ||
      params.entities.rows() != all.vocab().num_entities()) {
    throw LookupError("test graph, reference graph and parameters use different vocabularies");
  }
  const auto& vocab = all.vocab();
  const bool lower_better = lower_is_better(params.model);

  double rr_sum = 0.0;
  double rank_sum = 0.0;
  std::map<int, std::size_t> hits{{1, 0}, {3, 0}, {10, 0}};
  std::vector<double> scores;
  for (const auto& t : test.triples()) {
    for (const bool replace_head : {true, false}) {
      const EntityIndex truth = replace_head ? t.head : t.tail;
      const auto& pool = vocab.entities_of_kind(vocab.entity_kind(truth));
      const double true_score = score(params, t);
      scores.clear();
      for (EntityIndex c : pool) {
        IndexedTriple cand = t;
        (replace_head ? cand.head : cand.tail) = c;
        if (c != truth && mode == RankMode::Filtered && all.contains(cand)) continue;
        scores.push_back(c == truth ? true_score : score(params, cand));
      }
      const double rank = tied_rank(true_score, scores, lower_better);
      report.ranks.push_back(rank);
      rr_sum += 1.0 / rank;
      rank_sum += rank;
      for (auto& [k, n] : hits) {
        if (rank <= static_cast<double>(k)) ++n;
      }
      ++report.n_queries;
    }
  }
  const auto nq = static_cast<double>(report.n_queries);
  report.mrr = rr_sum / nq;
  report.mean_rank = rank_sum / nq;
  for (const auto& [k, n] : hits) report.hits_at[k] = static_cast<double>(n) / nq;
  return report;
}

std::string format_report(const LinkPredictionReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%-10s %10s\n%-10s %10zu\n%-10s %10.6f\n%-10s %10.4f\n%-10s %10.6f\n%-10s %10.6f\n%-10s %10.6f\n",
                "metric", "value", "queries", r.n_queries, "mrr", r.mrr, "mean_rank", r.mean_rank, "hits@1",
                r.hits_at.at(1), "hits@3", r.hits_at.at(3), "hits@10", r.hits_at.at(10));
  return buf;
}

std::string format_report_kv(const LinkPredictionReport& r) {
  std::ostringstream out;
  out << "n_queries=" << r.n_queries << '\n'
      << "mrr=" << text::format_double(r.mrr) << '\n'
      << "mean_rank=" << text::format_double(r.mean_rank) << '\n';
  for (const auto& [k, v] : r.hits_at) out << "hits@" << k << '=' << text::format_double(v) << '\n';
  return out.str();
}

std::size_t export_embeddings(std::span<const DrugEmbedding> embeddings, std::ostream& sink) {
  if (!embeddings.empty()) {
    const auto dim = embeddings.front().vector.size();
    for (const auto& e : embeddings) {
      if (e.vector.size() != dim) throw ShapeError("inconsistent embedding dimension for '" + e.entity + "'");
    }
  }
  for (const auto& e : embeddings) {
    sink << e.entity;
    for (double v : e.vector) sink << ' ' << text::format_double(v);
    sink << '\n';
  }
  if (!sink) throw IoError("failed writing embeddings");
  return embeddings.size();
}

std::vector<DrugEmbedding> import_embeddings(std::istream& in, const std::string& source) {
  std::vector<DrugEmbedding> out;
  std::string line;
  std::size_t lineno = 0;
  std::size_t dim = 0;
  while (text::read_line(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto fields = text::split_whitespace(line);
    if (fields.size() < 2) throw ParseError(source, lineno, "expected an identifier followed by values");
    DrugEmbedding e{fields[0], {}};
    for (std::size_t i = 1; i < fields.size(); ++i) {
      double v;
      if (!text::parse_double(fields[i], v)) throw ParseError(source, lineno, "bad number '" + fields[i] + "'");
      e.vector.push_back(v);
    }
    if (dim == 0) dim = e.vector.size();
    if (e.vector.size() != dim) throw ParseError(source, lineno, "dimension differs from first row");
    out.push_back(std::move(e));
  }
  return out;
}

std::size_t export_embeddings(std::span<const DrugEmbedding> embeddings, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return export_embeddings(embeddings, out);
}

std::vector<DrugEmbedding> import_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return import_embeddings(in, path.string());
}

}  // namespace ddikg
