#include "ddikg/rc_head.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "ddikg/error.hpp"
#include "ddikg/rng.hpp"
#include "ddikg/text.hpp"

namespace ddikg {

RcLabel parse_label(std::string_view s) {
  const auto t = text::trim(s);
  if (text::iequals(t, "mechanism")) return RcLabel::Mechanism;
  if (text::iequals(t, "effect")) return RcLabel::Effect;
  if (text::iequals(t, "advice")) return RcLabel::Advice;
  if (text::iequals(t, "int") || text::iequals(t, "interaction")) return RcLabel::Int;
  if (text::iequals(t, "other")) return RcLabel::Other;
  throw ValidationError("unknown relation label '" + std::string(t) + "'");
}

std::string_view to_string(RcLabel label) {
  switch (label) {
    case RcLabel::Mechanism: return "Mechanism";
    case RcLabel::Effect: return "Effect";
    case RcLabel::Advice: return "Advice";
    case RcLabel::Int: return "Int";
    case RcLabel::Other: return "Other";
  }
  return "?";
}

RcMode parse_mode(std::string_view s) {
  if (text::iequals(s, "text")) return RcMode::Text;
  if (text::iequals(s, "fused")) return RcMode::Fused;
  throw ArgumentError("unknown mode '" + std::string(s) + "'");
}

std::string_view to_string(RcMode m) { return m == RcMode::Text ? "text" : "fused"; }

void validate(const RcInstance& inst, std::size_t max_seq_len) {
  const std::size_t t = inst.hidden.rows();
  const std::string who = "instance '" + inst.id + "': ";
  if (t < 1 || t > max_seq_len) {
    throw ValidationError(who + "sequence length " + std::to_string(t) + " outside [1, " +
                          std::to_string(max_seq_len) + "]");
  }
  for (const auto& [name, span] : {std::pair{"span1", inst.span1}, std::pair{"span2", inst.span2}}) {
    if (span.first == 0 || span.first > span.last || span.last >= t) {
      throw BoundsError(who + name + " [" + std::to_string(span.first) + ", " + std::to_string(span.last) +
                        "] must satisfy 0 < first <= last < " + std::to_string(t));
    }
  }
  for (double v : inst.hidden.data()) {
    if (!std::isfinite(v)) throw ValidationError(who + "non-finite hidden state");
  }
}

RcParams RcParams::zeros(std::size_t d, std::size_t dk, std::size_t df) {
  RcParams p;
  p.hidden_dim = d;
  p.kg_dim = dk;
  p.fused_dim = df;
  p.w = Matrix(d, d);
  p.b.assign(d, 0.0);
  p.w0 = Matrix(d, d);
  p.b0.assign(d, 0.0);
  p.w_kg = Matrix(df, 2 * dk);
  p.b_kg.assign(df, 0.0);
  p.w3_text = Matrix(kNumClasses, 3 * d);
  p.b3_text.assign(kNumClasses, 0.0);
  p.w3_fused = Matrix(kNumClasses, 3 * d + df);
  p.b3_fused.assign(kNumClasses, 0.0);
  return p;
}

std::size_t RcParams::size() const {
  return w.size() + b.size() + w0.size() + b0.size() + w_kg.size() + b_kg.size() + w3_text.size() +
         b3_text.size() + w3_fused.size() + b3_fused.size();
}

RcParams init_rc_params(std::size_t d, std::size_t dk, std::size_t df, std::uint64_t seed) {
  if (d == 0) throw ArgumentError("hidden dimension must be positive");
  if (df == 0) df = dk;
  RcParams p = RcParams::zeros(d, dk, df);
  Rng rng(seed);
  auto glorot = [&](Matrix& m) {
    if (m.empty()) return;
    const double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    for (double& v : m.data()) v = rng.uniform(-bound, bound);
  };
  glorot(p.w);
  glorot(p.w0);
  glorot(p.w_kg);
  glorot(p.w3_text);
  glorot(p.w3_fused);
  return p;
}

namespace {

void check_vec(std::span<const double> v, std::size_t n, const char* what) {
  if (v.size() != n) {
    throw ShapeError(std::string(what) + ": expected length " + std::to_string(n) + ", got " +
                     std::to_string(v.size()));
  }
}

Vector affine(const Matrix& w, std::span<const double> x, std::span<const double> b) {
  Vector out(w.rows());
  linalg::matvec(w, x, out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

Vector span_tanh_mean(const Matrix& hidden, TokenSpan span) {
  if (span.first > span.last || span.last >= hidden.rows()) {
    throw BoundsError("span [" + std::to_string(span.first) + ", " + std::to_string(span.last) +
                      "] outside a sequence of length " + std::to_string(hidden.rows()));
  }
  if (span.first == 0) throw BoundsError("entity span must not include row 0");
  Vector mean(hidden.cols(), 0.0);
  for (std::size_t t = span.first; t <= span.last; ++t) linalg::axpy(1.0, hidden.row(t), mean);
  const double n = static_cast<double>(span.last - span.first + 1);
  for (double& v : mean) v = std::tanh(v / n);
  return mean;
}

}  // namespace

Vector pool_entity(const Matrix& hidden, TokenSpan span, const Matrix& w, std::span<const double> b) {
  check_vec(b, w.rows(), "pool_entity bias");
  if (w.cols() != hidden.cols()) throw ShapeError("pool_entity: weight width does not match hidden size");
  return affine(w, span_tanh_mean(hidden, span), b);
}

Vector cls_transform(std::span<const double> h0, const Matrix& w0, std::span<const double> b0) {
  check_vec(h0, w0.cols(), "cls_transform input");
  check_vec(b0, w0.rows(), "cls_transform bias");
  Vector a(h0.begin(), h0.end());
  for (double& v : a) v = std::tanh(v);
  return affine(w0, a, b0);
}

Vector fuse_kge(std::span<const double> kge1, std::span<const double> kge2, const Matrix& w_kg,
                std::span<const double> b_kg) {
  if (kge1.size() != kge2.size() || kge1.size() + kge2.size() != w_kg.cols()) {
    throw ShapeError("fuse_kge: KG vectors of length " + std::to_string(kge1.size()) + "/" +
                     std::to_string(kge2.size()) + " do not match a fusion layer of width " +
                     std::to_string(w_kg.cols()));
  }
  check_vec(b_kg, w_kg.rows(), "fuse_kge bias");
  Vector c(kge1.begin(), kge1.end());
  c.insert(c.end(), kge2.begin(), kge2.end());
  return affine(w_kg, c, b_kg);
}

Vector softmax(std::span<const double> logits) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double z : logits) mx = std::max(mx, z);
  Vector p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

// ---- KG lookup ----

KgeLookup::KgeLookup(std::unordered_map<std::string, Vector> embeddings, std::optional<Lexicon> lexicon,
                     std::optional<FallbackTable> fallback)
    : embeddings_(std::move(embeddings)), lexicon_(std::move(lexicon)), fallback_(std::move(fallback)) {
  for (const auto& [id, v] : embeddings_) {
    if (dim_ == 0) dim_ = v.size();
    if (v.size() != dim_) throw ShapeError("KG embedding for '" + id + "' has inconsistent dimension");
  }
  if (fallback_) {
    if (dim_ == 0) dim_ = fallback_->dim();
    if (fallback_->dim() != dim_) {
      throw ShapeError("word-vector dimension " + std::to_string(fallback_->dim()) +
                       " differs from KG embedding dimension " + std::to_string(dim_));
    }
  }
}

Vector KgeLookup::resolve(const std::optional<std::string>& drug_id, const std::string& mention) const {
  if (drug_id) {
    if (auto it = embeddings_.find(*drug_id); it != embeddings_.end()) return it->second;
  }
  if (lexicon_ && !mention.empty()) {
    if (auto id = lexicon_->link(mention)) {
      if (auto it = embeddings_.find(*id); it != embeddings_.end()) return it->second;
    }
  }
  if (fallback_ && !text::trim(mention).empty()) return fallback_vector(mention, *fallback_);
  throw ResolutionError("no KG vector for drug '" + (drug_id ? *drug_id : mention) + "' (mention '" + mention +
                        "') and no fallback available");
}

// ---- forward / backward ----

namespace {

struct Activations {
  Vector a0, a1, a2;  // tanh inputs to the three affine maps
  Vector kg_in;       // [kge1; kge2]
  Vector features;    // concat(H'0, H'1, H'2[, kge])
  Vector probs;
};

void check_params(const RcParams& p, const RcInstance& inst) {
  if (inst.hidden.cols() != p.hidden_dim) {
    throw ShapeError("instance '" + inst.id + "' has hidden size " + std::to_string(inst.hidden.cols()) +
                     ", parameters expect " + std::to_string(p.hidden_dim));
  }
}

Activations run_forward(const RcInstance& inst, const RcParams& p, RcMode mode, const KgeLookup* lookup) {
  check_params(p, inst);
  Activations act;
  const auto h0 = inst.hidden.row(0);
  act.a0.assign(h0.begin(), h0.end());
  for (double& v : act.a0) v = std::tanh(v);
  act.a1 = span_tanh_mean(inst.hidden, inst.span1);
  act.a2 = span_tanh_mean(inst.hidden, inst.span2);

  const auto h0p = affine(p.w0, act.a0, p.b0);
  const auto h1p = affine(p.w, act.a1, p.b);
  const auto h2p = affine(p.w, act.a2, p.b);
  act.features = h0p;
  act.features.insert(act.features.end(), h1p.begin(), h1p.end());
  act.features.insert(act.features.end(), h2p.begin(), h2p.end());

  const Matrix* w3 = &p.w3_text;
  const Vector* b3 = &p.b3_text;
  if (mode == RcMode::Fused) {
    if (!lookup) throw ResolutionError("fused mode requires a KG lookup");
    const auto k1 = lookup->resolve(inst.drug1, inst.mention1);
    const auto k2 = lookup->resolve(inst.drug2, inst.mention2);
    const auto kg = fuse_kge(k1, k2, p.w_kg, p.b_kg);
    act.kg_in = k1;
    act.kg_in.insert(act.kg_in.end(), k2.begin(), k2.end());
    act.features.insert(act.features.end(), kg.begin(), kg.end());
    w3 = &p.w3_fused;
    b3 = &p.b3_fused;
  }
  act.probs = softmax(affine(*w3, act.features, *b3));
  return act;
}

}  // namespace

Vector forward(const RcInstance& inst, const RcParams& params, RcMode mode, const KgeLookup* lookup) {
  return run_forward(inst, params, mode, lookup).probs;
}

namespace {

// Adds scale * d(-log p[gold])/d(params) to grad; returns -log p[gold].
double accumulate_grad(const RcInstance& inst, const RcParams& p, RcMode mode, const KgeLookup* lookup,
                       double scale, RcParams& grad) {
  if (!inst.label) throw ValidationError("instance '" + inst.id + "' has no label");
  const std::size_t d = p.hidden_dim;
  const auto act = run_forward(inst, p, mode, lookup);
  const std::size_t gold = index_of(*inst.label);

  Vector dz = act.probs;
  dz[gold] -= 1.0;
  for (double& v : dz) v *= scale;

  const Matrix& w3 = mode == RcMode::Fused ? p.w3_fused : p.w3_text;
  Matrix& gw3 = mode == RcMode::Fused ? grad.w3_fused : grad.w3_text;
  Vector& gb3 = mode == RcMode::Fused ? grad.b3_fused : grad.b3_text;
  linalg::outer_acc(dz, act.features, 1.0, gw3);
  linalg::axpy(1.0, dz, gb3);
  Vector dx(act.features.size(), 0.0);
  linalg::matvec_t_acc(w3, dz, dx);

  const std::span<const double> dxs(dx);
  const auto d0 = dxs.subspan(0, d);
  const auto d1 = dxs.subspan(d, d);
  const auto d2 = dxs.subspan(2 * d, d);
  linalg::outer_acc(d0, act.a0, 1.0, grad.w0);
  linalg::axpy(1.0, d0, grad.b0);
  linalg::outer_acc(d1, act.a1, 1.0, grad.w);
  linalg::axpy(1.0, d1, grad.b);
  linalg::outer_acc(d2, act.a2, 1.0, grad.w);
  linalg::axpy(1.0, d2, grad.b);
  if (mode == RcMode::Fused) {
    const auto dk = dxs.subspan(3 * d);
    linalg::outer_acc(dk, act.kg_in, 1.0, grad.w_kg);
    linalg::axpy(1.0, dk, grad.b_kg);
  }
  return -std::log(std::max(act.probs[gold], std::numeric_limits<double>::min()));
}

}  // namespace

double rc_loss_and_grad(std::span<const RcInstance> batch, const RcParams& p, RcMode mode, const KgeLookup* lookup,
                        RcParams& grad) {
  grad = RcParams::zeros(p.hidden_dim, p.kg_dim, p.fused_dim);
  if (batch.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const auto& inst : batch) loss += accumulate_grad(inst, p, mode, lookup, scale, grad);
  return loss * scale;
}

void RcTrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
  if (batch_size == 0) throw ArgumentError("batch size must be positive");
}

RcParams train_rc(std::span<const RcInstance> dataset, const RcTrainConfig& config, const KgeLookup* lookup,
                  std::ostream* log, std::size_t kg_dim) {
  config.validate();
  if (dataset.empty()) throw PreconditionError("cannot train on an empty dataset");
  for (const auto& inst : dataset) {
    if (!inst.label) throw ValidationError("instance '" + inst.id + "' has no label");
  }
  if (config.mode == RcMode::Fused && !lookup) throw ResolutionError("fused mode requires a KG lookup");
  if (lookup) kg_dim = lookup->dim();
  RcParams params = init_rc_params(dataset.front().hidden.cols(), kg_dim, config.fused_dim, config.seed);

  Rng rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  RcParams grad;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      grad = RcParams::zeros(params.hidden_dim, params.kg_dim, params.fused_dim);
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t i = start; i < end; ++i) {
        epoch_loss += accumulate_grad(dataset[order[i]], params, config.mode, lookup, scale, grad);
      }
      std::vector<std::span<double>> gblocks;
      grad.for_each_block([&](std::span<double> g) { gblocks.push_back(g); });
      std::size_t k = 0;
      params.for_each_block([&](std::span<double> w) { linalg::axpy(-config.learning_rate, gblocks[k++], w); });
    }
    if (log) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%zu\t%.9g\n", epoch, epoch_loss / static_cast<double>(dataset.size()));
      *log << buf;
    }
  }
  return params;
}

// ---- evaluation ----

MetricsReport evaluate_predictions(std::span<const RcLabel> gold, std::span<const RcLabel> predicted) {
  if (gold.size() != predicted.size()) throw ArgumentError("gold and predicted label counts differ");
  MetricsReport r;
  r.n = gold.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++r.confusion[index_of(gold[i])][index_of(predicted[i])];
    if (gold[i] == predicted[i]) ++correct;
  }
  auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
  auto f1_of = [](double p, double rc) { return p + rc == 0.0 ? 0.0 : 2.0 * p * rc / (p + rc); };
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    auto& m = r.per_class[c];
    m.true_positive = r.confusion[c][c];
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      m.support += r.confusion[c][k];
      m.predicted += r.confusion[k][c];
    }
    m.precision = ratio(m.true_positive, m.predicted);
    m.recall = ratio(m.true_positive, m.support);
    m.f1 = f1_of(m.precision, m.recall);
  }
  std::size_t tp = 0, pred = 0, sup = 0;
  for (RcLabel l : kPositiveClasses) {
    const auto& m = r[l];
    tp += m.true_positive;
    pred += m.predicted;
    sup += m.support;
    if (m.support > 0 || m.predicted > 0) {
      r.macro_classes.push_back(l);
      r.macro_precision += m.precision;
      r.macro_recall += m.recall;
      r.macro_f1 += m.f1;
    }
  }
  if (!r.macro_classes.empty()) {
    const auto n = static_cast<double>(r.macro_classes.size());
    r.macro_precision /= n;
    r.macro_recall /= n;
    r.macro_f1 /= n;
  }
  r.micro_precision = ratio(tp, pred);
  r.micro_recall = ratio(tp, sup);
  r.micro_f1 = f1_of(r.micro_precision, r.micro_recall);
  r.accuracy = ratio(correct, r.n);
  return r;
}

RcLabel argmax_label(std::span<const double> probs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return static_cast<RcLabel>(best);
}

std::vector<RcLabel> predict(std::span<const RcInstance> dataset, const RcParams& params, RcMode mode,
                             const KgeLookup* lookup) {
  std::vector<RcLabel> out;
  out.reserve(dataset.size());
  for (const auto& inst : dataset) out.push_back(argmax_label(forward(inst, params, mode, lookup)));
  return out;
}

MetricsReport evaluate(std::span<const RcInstance> dataset, const RcParams& params, RcMode mode,
                       const KgeLookup* lookup) {
  std::vector<RcLabel> gold;
  for (const auto& inst : dataset) {
    if (!inst.label) throw ValidationError("instance '" + inst.id + "' has no label");
    gold.push_back(*inst.label);
  }
  return evaluate_predictions(gold, predict(dataset, params, mode, lookup));
}

std::string format_metrics(const MetricsReport& r) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-10s %9s %9s %9s %9s\n", "class", "precision", "recall", "f1", "support");
  out << buf;
  for (RcLabel l : {RcLabel::Advice, RcLabel::Effect, RcLabel::Mechanism, RcLabel::Int}) {
    const auto& m = r[l];
    std::snprintf(buf, sizeof(buf), "%-10s %9.4f %9.4f %9.4f %9zu\n", std::string(to_string(l)).c_str(),
                  m.precision, m.recall, m.f1, m.support);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "%-10s %9.4f %9.4f %9.4f %9zu\n", "macro", r.macro_precision, r.macro_recall,
                r.macro_f1, r.n);
  out << buf;
  std::snprintf(buf, sizeof(buf), "%-10s %9.4f %9.4f %9.4f %9zu\n", "micro", r.micro_precision, r.micro_recall,
                r.micro_f1, r.n);
  out << buf;
  std::snprintf(buf, sizeof(buf), "accuracy %.4f\n", r.accuracy);
  out << buf;
  return out.str();
}

void write_predictions(std::span<const RcInstance> dataset, const RcParams& params, RcMode mode,
                       const KgeLookup* lookup, std::ostream& out) {
  for (const auto& inst : dataset) {
    const auto probs = forward(inst, params, mode, lookup);
    out << inst.id << '\t' << to_string(argmax_label(probs)) << '\t';
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (i) out << ',';
      out << text::format_double(probs[i]);
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing predictions");
}

// ---- persistence ----

namespace {

using nlohmann::json;

json block(std::span<const double> v) { return std::vector<double>(v.begin(), v.end()); }

void read_block(const json& j, std::span<double> dst, const char* name) {
  if (!j.is_array() || j.size() != dst.size()) {
    throw ShapeError(std::string("parameter block '") + name + "' has the wrong size");
  }
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = j[i].get<double>();
}

constexpr std::array<const char*, 10> kBlockNames = {"w", "b", "w0", "b0", "w_kg", "b_kg",
                                                     "w3_text", "b3_text", "w3_fused", "b3_fused"};

}  // namespace

void save_rc_model(const RcModelFile& m, std::ostream& out) {
  json j;
  j["format"] = "ddikg-rc-params";
  j["mode"] = to_string(m.mode);
  j["hidden_dim"] = m.params.hidden_dim;
  j["kg_dim"] = m.params.kg_dim;
  j["fused_dim"] = m.params.fused_dim;
  json blocks;
  std::size_t k = 0;
  m.params.for_each_block([&](std::span<const double> v) { blocks[kBlockNames[k++]] = block(v); });
  j["blocks"] = std::move(blocks);
  out << j.dump() << '\n';
  if (!out) throw IoError("failed writing classifier parameters");
}

RcModelFile load_rc_model(std::istream& in, const std::string& source) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(source, 1, std::string("invalid JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != "ddikg-rc-params") throw ValidationError(source + ": not a classifier parameter file");
    RcModelFile m;
    m.mode = parse_mode(j.at("mode").get<std::string>());
    m.params = RcParams::zeros(j.at("hidden_dim").get<std::size_t>(), j.at("kg_dim").get<std::size_t>(),
                               j.at("fused_dim").get<std::size_t>());
    std::size_t k = 0;
    const auto& blocks = j.at("blocks");
    m.params.for_each_block([&](std::span<double> v) {
      read_block(blocks.at(kBlockNames[k]), v, kBlockNames[k]);
      ++k;
    });
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(source + ": malformed classifier parameter file: " + e.what());
  }
}

void save_rc_model(const RcModelFile& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  save_rc_model(m, out);
}

RcModelFile load_rc_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return load_rc_model(in, path.string());
}

}  // namespace ddikg
