#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ddikg/matrix.hpp"

namespace ddikg {

// Lower-cased, whitespace-collapsed, trimmed.
std::string normalize_surface(std::string_view s);

// Surface form -> entity identifier, matched by longest token overlap.
class Lexicon {
 public:
  // Lines `surface<TAB>entity_id`. On a surface collision the first entry
  // wins and the collision is counted in collisions().
  static Lexicon build(std::istream& names, const std::string& source = "names");
  static Lexicon build(const std::filesystem::path& path);

  void add(std::string_view surface, const std::string& entity_id);

  std::size_t size() const { return entries_.size(); }
  std::size_t collisions() const { return collisions_; }

  // Exact normalized match, else the key with the longest contiguous token
  // overlap (>= 1 token); ties go to the longer key, then the smaller key.
  std::optional<std::string> link(std::string_view mention) const;

 private:
  struct Entry {
    std::string key;
    std::vector<std::string> tokens;
    std::string id;
  };
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> exact_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_token_;
  std::size_t collisions_ = 0;
};

inline std::optional<std::string> link(std::string_view mention, const Lexicon& lexicon) {
  return lexicon.link(mention);
}

// Length of the longest run of tokens shared contiguously by both sequences.
std::size_t longest_token_overlap(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Pretrained word vectors with a deterministic out-of-vocabulary rule.
class FallbackTable {
 public:
  explicit FallbackTable(std::size_t dim = 0) : dim_(dim) {}

  // word2vec text format: `count dim` header, then `token v1 ... vdim`.
  static FallbackTable load(std::istream& in, const std::string& source = "wordvecs");
  static FallbackTable load(const std::filesystem::path& path);

  void add(const std::string& token, Vector v);
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  const Vector* find(const std::string& token) const;

 private:
  std::size_t dim_;
  std::unordered_map<std::string, Vector> vectors_;
};

// Hash-seeded vector, uniform in [-0.5/dim, 0.5/dim].
Vector oov_vector(std::string_view token, std::size_t dim);

// Mean of per-token vectors (exact token, then lower-cased, then OOV rule).
// Throws ArgumentError for an empty mention.
Vector fallback_vector(std::string_view mention, const FallbackTable& table);

}  // namespace ddikg
