#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ddikg/linker.hpp"
#include "ddikg/matrix.hpp"

namespace ddikg {

enum class RcLabel : std::uint8_t { Mechanism = 0, Effect = 1, Advice = 2, Int = 3, Other = 4 };
inline constexpr std::size_t kNumClasses = 5;
inline constexpr std::array<RcLabel, 4> kPositiveClasses = {RcLabel::Mechanism, RcLabel::Effect, RcLabel::Advice,
                                                            RcLabel::Int};
inline constexpr std::size_t kDefaultMaxSeqLen = 300;

// Case-insensitive; "Interaction" is accepted for Int.
RcLabel parse_label(std::string_view s);
std::string_view to_string(RcLabel label);
constexpr std::size_t index_of(RcLabel l) { return static_cast<std::size_t>(l); }

enum class RcMode { Text, Fused };
RcMode parse_mode(std::string_view s);
std::string_view to_string(RcMode m);

// Inclusive token range.
struct TokenSpan {
  std::size_t first = 0;
  std::size_t last = 0;
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct RcInstance {
  std::string id;
  Matrix hidden;  // T x d; row 0 is the sequence-start ([CLS]) state
  TokenSpan span1;
  TokenSpan span2;
  std::optional<std::string> drug1;
  std::optional<std::string> drug2;
  std::string mention1;
  std::string mention2;
  std::optional<RcLabel> label;
};

// Throws ValidationError/BoundsError when T, spans or entries are invalid.
void validate(const RcInstance& inst, std::size_t max_seq_len = kDefaultMaxSeqLen);

struct RcParams {
  std::size_t hidden_dim = 0;  // d
  std::size_t kg_dim = 0;      // d_k
  std::size_t fused_dim = 0;   // d_f
  Matrix w;                    // d x d, shared by both entity spans
  Vector b;
  Matrix w0;                   // d x d, [CLS] transform
  Vector b0;
  Matrix w_kg;                 // d_f x 2 d_k
  Vector b_kg;
  Matrix w3_text;              // N x 3d
  Vector b3_text;
  Matrix w3_fused;             // N x (3d + d_f)
  Vector b3_fused;

  static RcParams zeros(std::size_t hidden_dim, std::size_t kg_dim, std::size_t fused_dim);
  std::size_t size() const;
  // Visits every parameter block in a fixed order.
  template <typename F>
  void for_each_block(F&& f) {
    f(w.data()); f(std::span<double>(b)); f(w0.data()); f(std::span<double>(b0));
    f(w_kg.data()); f(std::span<double>(b_kg)); f(w3_text.data()); f(std::span<double>(b3_text));
    f(w3_fused.data()); f(std::span<double>(b3_fused));
  }
  template <typename F>
  void for_each_block(F&& f) const {
    f(w.data()); f(std::span<const double>(b)); f(w0.data()); f(std::span<const double>(b0));
    f(w_kg.data()); f(std::span<const double>(b_kg)); f(w3_text.data()); f(std::span<const double>(b3_text));
    f(w3_fused.data()); f(std::span<const double>(b3_fused));
  }
  friend bool operator==(const RcParams&, const RcParams&) = default;
};

// Glorot-uniform weights, zero biases. fused_dim 0 means "same as kg_dim".
RcParams init_rc_params(std::size_t hidden_dim, std::size_t kg_dim, std::size_t fused_dim, std::uint64_t seed);

// W tanh(mean(H[first..last])) + b
Vector pool_entity(const Matrix& hidden, TokenSpan span, const Matrix& w, std::span<const double> b);
// W0 tanh(h0) + b0
Vector cls_transform(std::span<const double> h0, const Matrix& w0, std::span<const double> b0);
// W_f [kge1; kge2] + b_f
Vector fuse_kge(std::span<const double> kge1, std::span<const double> kge2, const Matrix& w_kg,
                std::span<const double> b_kg);
// Max-shifted softmax.
Vector softmax(std::span<const double> logits);

// Resolves the KG vector of a drug: its identifier in the embedding table,
// then the lexicon link of its mention, then the word-vector fallback.
class KgeLookup {
 public:
  KgeLookup(std::unordered_map<std::string, Vector> embeddings, std::optional<Lexicon> lexicon = std::nullopt,
            std::optional<FallbackTable> fallback = std::nullopt);

  std::size_t dim() const { return dim_; }
  // Throws ResolutionError naming the drug when nothing applies.
  Vector resolve(const std::optional<std::string>& drug_id, const std::string& mention) const;

 private:
  std::unordered_map<std::string, Vector> embeddings_;
  std::optional<Lexicon> lexicon_;
  std::optional<FallbackTable> fallback_;
  std::size_t dim_ = 0;
};

// Class probabilities in RcLabel order.
Vector forward(const RcInstance& inst, const RcParams& params, RcMode mode, const KgeLookup* lookup = nullptr);

struct RcTrainConfig {
  std::size_t epochs = 5;
  double learning_rate = 0.01;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  RcMode mode = RcMode::Text;
  std::size_t fused_dim = 0;  // 0 means "same as the KG dimension"
  void validate() const;
};

// Mean cross-entropy over `batch` and its gradient (same shape as params).
// Instances must be labeled.
double rc_loss_and_grad(std::span<const RcInstance> batch, const RcParams& params, RcMode mode,
                        const KgeLookup* lookup, RcParams& grad);

// `kg_dim` sizes the KG blocks when no lookup is supplied.
RcParams train_rc(std::span<const RcInstance> dataset, const RcTrainConfig& config, const KgeLookup* lookup = nullptr,
                  std::ostream* log = nullptr, std::size_t kg_dim = 0);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;    // gold count
  std::size_t predicted = 0;
  std::size_t true_positive = 0;
};

struct MetricsReport {
  std::array<ClassMetrics, kNumClasses> per_class{};
  // Macro over the positive classes that occur in gold or predictions.
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::vector<RcLabel> macro_classes;
  // Micro over the four positive classes.
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
  double accuracy = 0.0;
  std::size_t n = 0;
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> confusion{};  // [gold][pred]

  const ClassMetrics& operator[](RcLabel l) const { return per_class[index_of(l)]; }
};

MetricsReport evaluate_predictions(std::span<const RcLabel> gold, std::span<const RcLabel> predicted);
RcLabel argmax_label(std::span<const double> probs);
std::vector<RcLabel> predict(std::span<const RcInstance> dataset, const RcParams& params, RcMode mode,
                             const KgeLookup* lookup);
MetricsReport evaluate(std::span<const RcInstance> dataset, const RcParams& params, RcMode mode,
                       const KgeLookup* lookup);

// Rows Advice/Effect/Mechanism/Int, then macro and micro lines.
std::string format_metrics(const MetricsReport& r);

// `instance_id<TAB>label<TAB>p1,...,p5` in RcLabel order.
void write_predictions(std::span<const RcInstance> dataset, const RcParams& params, RcMode mode,
                       const KgeLookup* lookup, std::ostream& out);

struct RcModelFile {
  RcMode mode = RcMode::Text;
  RcParams params;
};
void save_rc_model(const RcModelFile& m, std::ostream& out);
RcModelFile load_rc_model(std::istream& in, const std::string& source = "rc-params");
void save_rc_model(const RcModelFile& m, const std::filesystem::path& path);
RcModelFile load_rc_model(const std::filesystem::path& path);

}  // namespace ddikg
