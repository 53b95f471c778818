#include "ddikg/linker.hpp"

#include <fstream>

#include "ddikg/error.hpp"
#include "ddikg/rng.hpp"
#include "ddikg/text.hpp"

namespace ddikg {

std::string normalize_surface(std::string_view s) {
  std::string out;
  for (const auto& tok : text::split_whitespace(text::to_lower(s))) {
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

Lexicon Lexicon::build(std::istream& names, const std::string& source) {
  Lexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (text::read_line(names, line)) {
    ++lineno;
    const auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto fields = text::split(line, '\t');
    if (fields.size() != 2) throw ParseError(source, lineno, "expected `surface<TAB>entity_id`");
    const auto id = text::trim(fields[1]);
    if (normalize_surface(fields[0]).empty() || id.empty()) {
      throw ParseError(source, lineno, "empty surface form or identifier");
    }
    lex.add(fields[0], std::string(id));
  }
  return lex;
}

Lexicon Lexicon::build(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return build(in, path.string());
}

void Lexicon::add(std::string_view surface, const std::string& entity_id) {
  auto key = normalize_surface(surface);
  if (key.empty()) throw ArgumentError("empty surface form");
  if (auto it = exact_.find(key); it != exact_.end()) {
    if (entries_[it->second].id != entity_id) ++collisions_;
    return;
  }
  const std::size_t idx = entries_.size();
  Entry e{key, text::split_whitespace(key), entity_id};
  for (const auto& tok : e.tokens) {
    auto& postings = by_token_[tok];
    if (postings.empty() || postings.back() != idx) postings.push_back(idx);
  }
  exact_.emplace(std::move(key), idx);
  entries_.push_back(std::move(e));
}

std::size_t longest_token_overlap(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  std::size_t best = 0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : 0;
      best = std::max(best, cur[j]);
    }
    std::swap(prev, cur);
  }
  return best;
}

std::optional<std::string> Lexicon::link(std::string_view mention) const {
  const auto key = normalize_surface(mention);
  if (key.empty()) return std::nullopt;
  if (auto it = exact_.find(key); it != exact_.end()) return entries_[it->second].id;

  const auto tokens = text::split_whitespace(key);
  const Entry* best = nullptr;
  std::size_t best_overlap = 0;
  for (const auto& tok : tokens) {
    auto it = by_token_.find(tok);
    if (it == by_token_.end()) continue;
    for (std::size_t idx : it->second) {
      const auto& e = entries_[idx];
      const std::size_t overlap = longest_token_overlap(tokens, e.tokens);
      if (overlap == 0) continue;
      const bool wins =
          !best || overlap > best_overlap ||
          (overlap == best_overlap && (e.tokens.size() > best->tokens.size() ||
                                       (e.tokens.size() == best->tokens.size() && e.key < best->key)));
      if (wins) {
        best = &e;
        best_overlap = overlap;
      }
    }
  }
  if (!best) return std::nullopt;
  return best->id;
}

// ---- fallback vectors ----

FallbackTable FallbackTable::load(std::istream& in, const std::string& source) {
  std::string line;
  if (!text::read_line(in, line)) throw ParseError(source, 1, "missing `count dim` header");
  const auto header = text::split_whitespace(line);
  double count_d = 0.0, dim_d = 0.0;
  if (header.size() != 2 || !text::parse_double(header[0], count_d) || !text::parse_double(header[1], dim_d) ||
      dim_d < 1.0) {
    throw ParseError(source, 1, "header must be `count dim`");
  }
  FallbackTable table(static_cast<std::size_t>(dim_d));
  std::size_t lineno = 1;
  while (text::read_line(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split_whitespace(line);
    if (fields.size() != table.dim_ + 1) {
      throw ParseError(source, lineno, "expected token followed by " + std::to_string(table.dim_) + " values");
    }
    Vector v(table.dim_);
    for (std::size_t i = 0; i < table.dim_; ++i) {
      if (!text::parse_double(fields[i + 1], v[i])) throw ParseError(source, lineno, "bad number");
    }
    table.add(fields[0], std::move(v));
  }
  if (table.size() != static_cast<std::size_t>(count_d)) {
    throw ParseError(source, 1, "header declares " + header[0] + " vectors, found " + std::to_string(table.size()));
  }
  return table;
}

FallbackTable FallbackTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return load(in, path.string());
}

void FallbackTable::add(const std::string& token, Vector v) {
  if (v.size() != dim_) throw ShapeError("word vector for '" + token + "' has wrong dimension");
  vectors_.insert_or_assign(token, std::move(v));
}

const Vector* FallbackTable::find(const std::string& token) const {
  auto it = vectors_.find(token);
  return it == vectors_.end() ? nullptr : &it->second;
}

Vector oov_vector(std::string_view token, std::size_t dim) {
  // FNV-1a 64
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  Rng rng(h);
  const double bound = 0.5 / static_cast<double>(dim);
  Vector v(dim);
  for (double& x : v) x = rng.uniform(-bound, bound);
  return v;
}

Vector fallback_vector(std::string_view mention, const FallbackTable& table) {
  const auto tokens = text::split_whitespace(mention);
  if (tokens.empty()) throw ArgumentError("empty mention");
  Vector out(table.dim(), 0.0);
  for (const auto& tok : tokens) {
    const Vector* v = table.find(tok);
    if (!v) v = table.find(text::to_lower(tok));
    if (v) {
      linalg::axpy(1.0, *v, out);
    } else {
      linalg::axpy(1.0, oov_vector(text::to_lower(tok), table.dim()), out);
    }
  }
  for (double& x : out) x /= static_cast<double>(tokens.size());
  return out;
}

}  // namespace ddikg
