#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hiepar/common.hpp"
#include "hiepar/corpus.hpp"

namespace hiepar::encoder {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

// ---------------------------------------------------------------------------
// Parameter blocks

// Gated recurrent unit: update gate, reset gate and candidate state, each
// with input->hidden weights, hidden->hidden weights and a bias.
struct GruBlock {
  Mat w_update, w_reset, w_candidate;  // hidden x input
  Mat u_update, u_reset, u_candidate;  // hidden x hidden
  Vec b_update, b_reset, b_candidate;  // hidden

  GruBlock() = default;
  GruBlock(Index input_size, Index hidden_size);  // zero-initialized

  Index input_size() const { return w_update.cols(); }
  Index hidden_size() const { return w_update.rows(); }
};

// Additive attention: u_t = tanh(projection * h_t + bias), score_t = u_t . context.
struct AttentionBlock {
  Mat projection;  // attention x input
  Vec bias;        // attention
  Vec context;     // attention

  AttentionBlock() = default;
  AttentionBlock(Index input_size, Index attention_size);

  Index input_size() const { return projection.cols(); }
  Index attention_size() const { return projection.rows(); }
};

struct ModelDims {
  Index vocab = 0;
  Index embed = 100;
  Index hidden = 50;      // per direction; annotations are 2*hidden wide
  Index attention = 100;
  Index labels = 0;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

// Named view of one parameter tensor, used for optimizers, gradient checks
// and serialization.
struct TensorView {
  std::string name;
  Index rows = 0;
  Index cols = 0;
  std::span<double> values;
};

struct ConstTensorView {
  std::string name;
  Index rows = 0;
  Index cols = 0;
  std::span<const double> values;
};

struct ModelParams {
  ModelDims dims;
  Mat embedding;  // embed x vocab, one column per token
  GruBlock word_forward, word_backward;
  AttentionBlock word_attention;
  GruBlock sentence_forward, sentence_backward;
  AttentionBlock sentence_attention;
  Mat output_weights;  // labels x (2*hidden)
  Vec output_bias;     // labels

  // All tensors zero.
  static ModelParams zeros(const ModelDims& dims);
  // Every entry uniform in [-scale, scale).
  static ModelParams random(const ModelDims& dims, RandomStream& rng, double scale = 0.05);

  std::vector<TensorView> tensors();
  std::vector<ConstTensorView> tensors() const;
  std::size_t parameter_count() const;
  bool all_finite() const;
  void set_zero();
};

bool bit_equal(const ModelParams& a, const ModelParams& b);

// ---------------------------------------------------------------------------
// GRU

// h_next = (1 - z) * h_prev + z * h~ with
//   z  = sigmoid(Wz x + Uz h_prev + bz)
//   r  = sigmoid(Wr x + Ur h_prev + br)
//   h~ = tanh(Wh x + Uh (r * h_prev) + bh)
Vec gru_cell(const Vec& x, const Vec& h_prev, const GruBlock& block);

struct GruStep {
  Vec h_prev, update, reset, candidate, h_next;
};

GruStep gru_step(const Vec& x, const Vec& h_prev, const GruBlock& block);

// Accumulates parameter gradients into `grad`, adds the input gradient to
// `dx`, and returns the gradient w.r.t. h_prev.
Vec gru_step_backward(const Vec& x, const GruStep& step, const Vec& dh_next, const GruBlock& block,
                      GruBlock& grad, Eigen::Ref<Vec> dx);

struct BiGruTrace {
  std::vector<GruStep> forward;   // indexed by position
  std::vector<GruStep> backward;  // indexed by position
  Mat states;                     // (2*hidden) x T, [forward; backward]
};

// Inputs are columns. Both directions start from a zero state.
BiGruTrace bigru_forward(const Mat& inputs, const GruBlock& forward, const GruBlock& backward);
// Returns the gradient w.r.t. the inputs.
Mat bigru_backward(const Mat& inputs, const BiGruTrace& trace, const Mat& d_states,
                   const GruBlock& forward, const GruBlock& backward, GruBlock& grad_forward,
                   GruBlock& grad_backward);

// ---------------------------------------------------------------------------
// Attention pooling

struct AttentionResult {
  Mat hidden;    // attention x T, u_t
  Vec weights;   // T, softmax of u_t . context
  Vec pooled;    // sum_t weights_t * h_t
};

AttentionResult attention_forward(const Mat& states, const AttentionBlock& block);
Mat attention_backward(const Mat& states, const AttentionResult& result, const Vec& d_pooled,
                       const AttentionBlock& block, AttentionBlock& grad);

// Numerically stable softmax.
Vec softmax(const Vec& scores);

// ---------------------------------------------------------------------------
// Document encoding

struct AttentionTrace {
  std::vector<Vec> word_weights;  // one vector per sentence, sums to 1
  Vec sentence_weights;           // sums to 1
};

struct SentenceEncoding {
  Vec vector;   // attention-pooled word annotations
  Vec weights;  // word weights
};

SentenceEncoding encode_sentence(std::span<const TokenId> tokens, const ModelParams& params);

struct DocumentEncoding {
  Vec vector;  // attention-pooled sentence annotations
  AttentionTrace attention;
};

DocumentEncoding encode_document(const corpus::Document& document, const ModelParams& params);

struct ForwardResult {
  Vec document_vector;
  Vec scores;         // pre-sigmoid, one per label
  Vec probabilities;  // sigmoid(scores)
  AttentionTrace attention;
};

ForwardResult forward(const corpus::Document& document, const ModelParams& params);

double sigmoid(double x);

// ---------------------------------------------------------------------------
// Loss and gradients

// Mean over documents of the summed per-label binary cross-entropy,
// computed from raw scores as max(f,0) - f*y + log(1 + exp(-|f|)).
// Targets must be exactly 0 or 1.
double bce_loss(std::span<const Vec> scores, std::span<const Vec> targets);
Vec label_targets(const LabelSet& labels, Index label_count);

struct Example {
  const corpus::Document* document = nullptr;
  const LabelSet* labels = nullptr;
};

struct LossAndGradient {
  double loss = 0.0;
  ModelParams gradient;
};

// Analytic gradient of the batch loss w.r.t. every parameter.
LossAndGradient param_gradients(std::span<const Example> batch, const ModelParams& params);

// Loss only; used by finite-difference checks and evaluation.
double batch_loss(std::span<const Example> batch, const ModelParams& params);

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  ModelDims dims;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double init_scale = 0.05;
  std::uint64_t seed = 1;
};

struct TrainResult {
  ModelParams params;
  std::vector<double> loss_history;  // mean training loss per epoch
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

// Mini-batch Adam over the profiles. Initialization draws from the
// "init" substream of the seed and batch order from the "shuffle"
// substream. Throws naming the epoch if the loss becomes non-finite.
TrainResult train(std::span<const Example> examples, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});
TrainResult train(const std::vector<corpus::ReviewerProfile>& profiles, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Initial parameters for a config (what train() starts from).
ModelParams initial_params(const TrainConfig& config);

// ---------------------------------------------------------------------------
// Transparency

struct TokenHighlight {
  std::size_t sentence = 0;
  std::size_t position = 0;
  TokenId token = 0;
  double weight = 0.0;
  bool highlighted = false;
};

struct SentenceHighlight {
  std::size_t sentence = 0;
  double weight = 0.0;
  bool highlighted = false;
};

struct Highlights {
  std::vector<TokenHighlight> tokens;        // sorted by descending weight
  std::vector<SentenceHighlight> sentences;  // sorted by descending weight
};

inline constexpr double kDefaultHighlightThreshold = 0.1;

// Flags word weights and sentence weights strictly above the threshold.
Highlights attention_highlights(const corpus::Document& document, const ModelParams& params,
                                double threshold = kDefaultHighlightThreshold);

inline constexpr std::string_view kSentenceMarker = "<sentence>";

// Lines "owner_id<TAB>sentence_index<TAB>token<TAB>weight" in document order;
// each sentence ends with a kSentenceMarker line carrying its sentence weight.
void write_attention_trace(std::ostream& out, const corpus::Document& document,
                           const AttentionTrace& trace, const corpus::Vocabulary& vocabulary);

// ---------------------------------------------------------------------------
// Checkpoints

// Binary container: magic, format version, dimensions, then every tensor
// with its name and shape. Doubles are stored bit-exactly.
void save_model(std::ostream& out, const ModelParams& params);
void save_model(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_model(std::istream& in);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace hiepar::encoder
