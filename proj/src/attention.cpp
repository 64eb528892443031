#include "hiepar/encoder.hpp"

namespace hiepar::encoder {

AttentionBlock::AttentionBlock(Index input_size, Index attention_size)
    : projection(Mat::Zero(attention_size, input_size)),
      bias(Vec::Zero(attention_size)),
      context(Vec::Zero(attention_size)) {}

Vec softmax(const Vec& scores) {
  if (scores.size() == 0) throw Error("softmax: empty input");
  const double max = scores.maxCoeff();
  Vec out = (scores.array() - max).exp();
  out /= out.sum();
  return out;
}

AttentionResult attention_forward(const Mat& states, const AttentionBlock& block) {
  if (states.cols() == 0) throw Error("attention: empty sequence");
  if (states.rows() != block.input_size()) throw Error("attention: dimension mismatch");
  AttentionResult result;
  result.hidden = ((block.projection * states).colwise() + block.bias).array().tanh();
  result.weights = softmax(result.hidden.transpose() * block.context);
  result.pooled = states * result.weights;
  return result;
}

Mat attention_backward(const Mat& states, const AttentionResult& result, const Vec& d_pooled,
                       const AttentionBlock& block, AttentionBlock& grad) {
  // pooled = H w  =>  dH += d_pooled w^T,  dw = H^T d_pooled
  Mat d_states = d_pooled * result.weights.transpose();
  const Vec d_weights = states.transpose() * d_pooled;
  // Softmax Jacobian.
  const double mean = result.weights.dot(d_weights);
  const Vec d_scores = result.weights.cwiseProduct((d_weights.array() - mean).matrix());
  // score_t = u_t . context
  grad.context.noalias() += result.hidden * d_scores;
  const Mat d_hidden = block.context * d_scores.transpose();
  const Mat d_pre = d_hidden.array() * (1.0 - result.hidden.array().square());
  grad.projection.noalias() += d_pre * states.transpose();
  grad.bias += d_pre.rowwise().sum();
  d_states.noalias() += block.projection.transpose() * d_pre;
  return d_states;
}

}  // namespace hiepar::encoder
