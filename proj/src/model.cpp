#include <algorithm>
#include <cmath>
#include <cstring>
#include <ostream>

#include "hiepar/encoder.hpp"

namespace hiepar::encoder {

namespace {

void add_gru(std::vector<TensorView>& out, const std::string& prefix, GruBlock& b) {
  auto add = [&](const char* name, auto& t) {
    out.push_back({prefix + "." + name, t.rows(), t.cols(), {t.data(), static_cast<std::size_t>(t.size())}});
  };
  add("w_update", b.w_update);
  add("w_reset", b.w_reset);
  add("w_candidate", b.w_candidate);
  add("u_update", b.u_update);
  add("u_reset", b.u_reset);
  add("u_candidate", b.u_candidate);
  add("b_update", b.b_update);
  add("b_reset", b.b_reset);
  add("b_candidate", b.b_candidate);
}

void add_attention(std::vector<TensorView>& out, const std::string& prefix, AttentionBlock& b) {
  auto add = [&](const char* name, auto& t) {
    out.push_back({prefix + "." + name, t.rows(), t.cols(), {t.data(), static_cast<std::size_t>(t.size())}});
  };
  add("projection", b.projection);
  add("bias", b.bias);
  add("context", b.context);
}

struct SentenceCache {
  Mat inputs;  // embed x T
  BiGruTrace gru;
  AttentionResult attention;
};

struct DocumentCache {
  std::vector<SentenceCache> sentences;
  Mat sentence_inputs;  // 2h x S
  BiGruTrace gru;
  AttentionResult attention;
  Vec scores;
};

Mat embed(std::span<const TokenId> tokens, const ModelParams& params) {
  if (tokens.empty()) throw Error("encode_sentence: empty sentence");
  Mat inputs(params.dims.embed, static_cast<Index>(tokens.size()));
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (tokens[t] >= static_cast<std::size_t>(params.embedding.cols())) {
      throw Error("encode_sentence: token id " + std::to_string(tokens[t]) + " outside vocabulary");
    }
    inputs.col(static_cast<Index>(t)) = params.embedding.col(tokens[t]);
  }
  return inputs;
}

SentenceCache run_sentence(std::span<const TokenId> tokens, const ModelParams& params) {
  SentenceCache cache;
  cache.inputs = embed(tokens, params);
  cache.gru = bigru_forward(cache.inputs, params.word_forward, params.word_backward);
  cache.attention = attention_forward(cache.gru.states, params.word_attention);
  return cache;
}

DocumentCache run_document(const corpus::Document& document, const ModelParams& params) {
  if (document.sentences.empty()) throw Error("encode_document: empty document");
  DocumentCache cache;
  cache.sentences.reserve(document.sentences.size());
  cache.sentence_inputs.resize(2 * params.dims.hidden, static_cast<Index>(document.sentences.size()));
  for (std::size_t i = 0; i < document.sentences.size(); ++i) {
    cache.sentences.push_back(run_sentence(document.sentences[i], params));
    cache.sentence_inputs.col(static_cast<Index>(i)) = cache.sentences.back().attention.pooled;
  }
  cache.gru = bigru_forward(cache.sentence_inputs, params.sentence_forward, params.sentence_backward);
  cache.attention = attention_forward(cache.gru.states, params.sentence_attention);
  cache.scores = params.output_weights * cache.attention.pooled + params.output_bias;
  return cache;
}

AttentionTrace trace_of(const DocumentCache& cache) {
  AttentionTrace trace;
  for (const auto& sentence : cache.sentences) trace.word_weights.push_back(sentence.attention.weights);
  trace.sentence_weights = cache.attention.weights;
  return trace;
}

double document_loss(const Vec& scores, const LabelSet& labels) {
  double loss = 0.0;
  for (Index l = 0; l < scores.size(); ++l) {
    const double f = scores[l];
    const double y = labels.contains(static_cast<LabelId>(l)) ? 1.0 : 0.0;
    loss += std::max(f, 0.0) - f * y + std::log1p(std::exp(-std::abs(f)));
  }
  return loss;
}

void check_labels(const LabelSet& labels, Index label_count) {
  if (!labels.empty() && labels.ids().back() >= static_cast<LabelId>(label_count)) {
    throw Error("label id " + std::to_string(labels.ids().back()) + " outside label space");
  }
}

void backward_document(const corpus::Document& document, const DocumentCache& cache,
                       const Vec& d_scores, const ModelParams& params, ModelParams& grad) {
  const Vec& v = cache.attention.pooled;
  grad.output_weights.noalias() += d_scores * v.transpose();
  grad.output_bias += d_scores;
  const Vec d_v = params.output_weights.transpose() * d_scores;

  const Mat d_doc_states =
      attention_backward(cache.gru.states, cache.attention, d_v, params.sentence_attention,
                         grad.sentence_attention);
  const Mat d_sentences =
      bigru_backward(cache.sentence_inputs, cache.gru, d_doc_states, params.sentence_forward,
                     params.sentence_backward, grad.sentence_forward, grad.sentence_backward);

  for (std::size_t i = 0; i < cache.sentences.size(); ++i) {
    const auto& sc = cache.sentences[i];
    const Mat d_word_states = attention_backward(sc.gru.states, sc.attention,
                                                 d_sentences.col(static_cast<Index>(i)),
                                                 params.word_attention, grad.word_attention);
    const Mat d_inputs = bigru_backward(sc.inputs, sc.gru, d_word_states, params.word_forward,
                                        params.word_backward, grad.word_forward, grad.word_backward);
    const auto& tokens = document.sentences[i];
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      grad.embedding.col(tokens[t]) += d_inputs.col(static_cast<Index>(t));
    }
  }
}

}  // namespace

ModelParams ModelParams::zeros(const ModelDims& dims) {
  if (dims.vocab <= 0 || dims.embed <= 0 || dims.hidden <= 0 || dims.attention <= 0 || dims.labels <= 0) {
    throw Error("model dimensions must be positive");
  }
  ModelParams p;
  p.dims = dims;
  p.embedding = Mat::Zero(dims.embed, dims.vocab);
  p.word_forward = GruBlock(dims.embed, dims.hidden);
  p.word_backward = GruBlock(dims.embed, dims.hidden);
  p.word_attention = AttentionBlock(2 * dims.hidden, dims.attention);
  p.sentence_forward = GruBlock(2 * dims.hidden, dims.hidden);
  p.sentence_backward = GruBlock(2 * dims.hidden, dims.hidden);
  p.sentence_attention = AttentionBlock(2 * dims.hidden, dims.attention);
  p.output_weights = Mat::Zero(dims.labels, 2 * dims.hidden);
  p.output_bias = Vec::Zero(dims.labels);
  return p;
}

ModelParams ModelParams::random(const ModelDims& dims, RandomStream& rng, double scale) {
  ModelParams p = zeros(dims);
  for (auto& tensor : p.tensors()) {
    for (double& value : tensor.values) value = rng.uniform(-scale, scale);
  }
  return p;
}

std::vector<TensorView> ModelParams::tensors() {
  std::vector<TensorView> out;
  out.push_back({"embedding", embedding.rows(), embedding.cols(),
                 {embedding.data(), static_cast<std::size_t>(embedding.size())}});
  add_gru(out, "word_forward", word_forward);
  add_gru(out, "word_backward", word_backward);
  add_attention(out, "word_attention", word_attention);
  add_gru(out, "sentence_forward", sentence_forward);
  add_gru(out, "sentence_backward", sentence_backward);
  add_attention(out, "sentence_attention", sentence_attention);
  out.push_back({"output_weights", output_weights.rows(), output_weights.cols(),
                 {output_weights.data(), static_cast<std::size_t>(output_weights.size())}});
  out.push_back({"output_bias", output_bias.rows(), output_bias.cols(),
                 {output_bias.data(), static_cast<std::size_t>(output_bias.size())}});
  return out;
}

std::vector<ConstTensorView> ModelParams::tensors() const {
  std::vector<ConstTensorView> out;
  for (auto& t : const_cast<ModelParams*>(this)->tensors()) {
    out.push_back({std::move(t.name), t.rows, t.cols, t.values});
  }
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t total = 0;
  for (const auto& t : tensors()) total += t.values.size();
  return total;
}

bool ModelParams::all_finite() const {
  for (const auto& t : tensors()) {
    for (double v : t.values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

void ModelParams::set_zero() {
  for (auto& t : tensors()) std::fill(t.values.begin(), t.values.end(), 0.0);
}

bool bit_equal(const ModelParams& a, const ModelParams& b) {
  if (!(a.dims == b.dims)) return false;
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (ta[i].values.size() != tb[i].values.size() || ta[i].rows != tb[i].rows) return false;
    if (std::memcmp(ta[i].values.data(), tb[i].values.data(), ta[i].values.size() * sizeof(double)) != 0) {
      return false;
    }
  }
  return true;
}

SentenceEncoding encode_sentence(std::span<const TokenId> tokens, const ModelParams& params) {
  const auto cache = run_sentence(tokens, params);
  return {cache.attention.pooled, cache.attention.weights};
}

DocumentEncoding encode_document(const corpus::Document& document, const ModelParams& params) {
  const auto cache = run_document(document, params);
  return {cache.attention.pooled, trace_of(cache)};
}

ForwardResult forward(const corpus::Document& document, const ModelParams& params) {
  const auto cache = run_document(document, params);
  ForwardResult result;
  result.document_vector = cache.attention.pooled;
  result.scores = cache.scores;
  result.probabilities = cache.scores.unaryExpr([](double f) { return sigmoid(f); });
  result.attention = trace_of(cache);
  return result;
}

Vec label_targets(const LabelSet& labels, Index label_count) {
  check_labels(labels, label_count);
  Vec y = Vec::Zero(label_count);
  for (LabelId id : labels) y[id] = 1.0;
  return y;
}

double bce_loss(std::span<const Vec> scores, std::span<const Vec> targets) {
  if (scores.size() != targets.size()) throw Error("bce_loss: batch size mismatch");
  if (scores.empty()) throw Error("bce_loss: empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i].size() != targets[i].size()) throw Error("bce_loss: label count mismatch");
    double doc = 0.0;
    for (Index l = 0; l < scores[i].size(); ++l) {
      const double f = scores[i][l];
      const double y = targets[i][l];
      if (y != 0.0 && y != 1.0) throw Error("bce_loss: non-binary label " + format_double(y));
      doc += std::max(f, 0.0) - f * y + std::log1p(std::exp(-std::abs(f)));
    }
    total += doc;
  }
  return total / static_cast<double>(scores.size());
}

LossAndGradient param_gradients(std::span<const Example> batch, const ModelParams& params) {
  if (batch.empty()) throw Error("param_gradients: empty batch");
  LossAndGradient out;
  out.gradient = ModelParams::zeros(params.dims);
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& example : batch) {
    check_labels(*example.labels, params.dims.labels);
    const auto cache = run_document(*example.document, params);
    out.loss += document_loss(cache.scores, *example.labels);
    Vec d_scores(cache.scores.size());
    for (Index l = 0; l < d_scores.size(); ++l) {
      const double y = example.labels->contains(static_cast<LabelId>(l)) ? 1.0 : 0.0;
      d_scores[l] = (sigmoid(cache.scores[l]) - y) * scale;
    }
    backward_document(*example.document, cache, d_scores, params, out.gradient);
  }
  out.loss *= scale;
  return out;
}

double batch_loss(std::span<const Example> batch, const ModelParams& params) {
  if (batch.empty()) throw Error("batch_loss: empty batch");
  double total = 0.0;
  for (const auto& example : batch) {
    check_labels(*example.labels, params.dims.labels);
    total += document_loss(run_document(*example.document, params).scores, *example.labels);
  }
  return total / static_cast<double>(batch.size());
}

Highlights attention_highlights(const corpus::Document& document, const ModelParams& params,
                                double threshold) {
  const auto encoding = encode_document(document, params);
  Highlights out;
  for (std::size_t i = 0; i < document.sentences.size(); ++i) {
    const Vec& weights = encoding.attention.word_weights[i];
    for (std::size_t t = 0; t < document.sentences[i].size(); ++t) {
      const double w = weights[static_cast<Index>(t)];
      out.tokens.push_back({i, t, document.sentences[i][t], w, w > threshold});
    }
    const double sw = encoding.attention.sentence_weights[static_cast<Index>(i)];
    out.sentences.push_back({i, sw, sw > threshold});
  }
  // Stable sort keeps document order among equal weights.
  std::stable_sort(out.tokens.begin(), out.tokens.end(),
                   [](const auto& a, const auto& b) { return a.weight > b.weight; });
  std::stable_sort(out.sentences.begin(), out.sentences.end(),
                   [](const auto& a, const auto& b) { return a.weight > b.weight; });
  return out;
}

void write_attention_trace(std::ostream& out, const corpus::Document& document,
                           const AttentionTrace& trace, const corpus::Vocabulary& vocabulary) {
  for (std::size_t i = 0; i < document.sentences.size(); ++i) {
    for (std::size_t t = 0; t < document.sentences[i].size(); ++t) {
      out << document.owner_id << '\t' << i << '\t' << vocabulary.token(document.sentences[i][t]) << '\t'
          << format_double(trace.word_weights[i][static_cast<Index>(t)]) << '\n';
    }
    out << document.owner_id << '\t' << i << '\t' << kSentenceMarker << '\t'
        << format_double(trace.sentence_weights[static_cast<Index>(i)]) << '\n';
  }
}

}  // namespace hiepar::encoder
