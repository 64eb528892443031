#include <cmath>

#include "hiepar/encoder.hpp"

namespace hiepar::encoder {

namespace {

Vec logistic(const Vec& a) { return a.unaryExpr([](double x) { return sigmoid(x); }); }

void check_dims(const Vec& x, const Vec& h_prev, const GruBlock& block) {
  if (x.size() != block.input_size() || h_prev.size() != block.hidden_size()) {
    throw Error("gru_cell: dimension mismatch (input " + std::to_string(x.size()) + " vs " +
                std::to_string(block.input_size()) + ", hidden " + std::to_string(h_prev.size()) +
                " vs " + std::to_string(block.hidden_size()) + ")");
  }
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

GruBlock::GruBlock(Index input_size, Index hidden_size)
    : w_update(Mat::Zero(hidden_size, input_size)),
      w_reset(Mat::Zero(hidden_size, input_size)),
      w_candidate(Mat::Zero(hidden_size, input_size)),
      u_update(Mat::Zero(hidden_size, hidden_size)),
      u_reset(Mat::Zero(hidden_size, hidden_size)),
      u_candidate(Mat::Zero(hidden_size, hidden_size)),
      b_update(Vec::Zero(hidden_size)),
      b_reset(Vec::Zero(hidden_size)),
      b_candidate(Vec::Zero(hidden_size)) {}

GruStep gru_step(const Vec& x, const Vec& h_prev, const GruBlock& block) {
  check_dims(x, h_prev, block);
  GruStep step;
  step.h_prev = h_prev;
  step.update = logistic(block.w_update * x + block.u_update * h_prev + block.b_update);
  step.reset = logistic(block.w_reset * x + block.u_reset * h_prev + block.b_reset);
  const Vec gated = step.reset.cwiseProduct(h_prev);
  step.candidate = (block.w_candidate * x + block.u_candidate * gated + block.b_candidate).array().tanh();
  step.h_next = (Vec::Ones(h_prev.size()) - step.update).cwiseProduct(h_prev) +
                step.update.cwiseProduct(step.candidate);
  return step;
}

Vec gru_cell(const Vec& x, const Vec& h_prev, const GruBlock& block) {
  return gru_step(x, h_prev, block).h_next;
}

Vec gru_step_backward(const Vec& x, const GruStep& step, const Vec& dh_next, const GruBlock& block,
                      GruBlock& grad, Eigen::Ref<Vec> dx) {
  const Vec& z = step.update;
  const Vec& r = step.reset;
  const Vec& h_prev = step.h_prev;
  const Vec& cand = step.candidate;

  Vec dh_prev = dh_next.cwiseProduct(Vec::Ones(z.size()) - z);
  const Vec dz = dh_next.cwiseProduct(cand - h_prev);
  const Vec dcand = dh_next.cwiseProduct(z);

  // Candidate pre-activation.
  const Vec da_cand = dcand.array() * (1.0 - cand.array().square());
  const Vec gated = r.cwiseProduct(h_prev);
  grad.w_candidate.noalias() += da_cand * x.transpose();
  grad.u_candidate.noalias() += da_cand * gated.transpose();
  grad.b_candidate += da_cand;
  dx.noalias() += block.w_candidate.transpose() * da_cand;
  const Vec dgated = block.u_candidate.transpose() * da_cand;
  const Vec dr = dgated.cwiseProduct(h_prev);
  dh_prev += dgated.cwiseProduct(r);

  // Update gate pre-activation.
  const Vec da_z = dz.array() * z.array() * (1.0 - z.array());
  grad.w_update.noalias() += da_z * x.transpose();
  grad.u_update.noalias() += da_z * h_prev.transpose();
  grad.b_update += da_z;
  dx.noalias() += block.w_update.transpose() * da_z;
  dh_prev.noalias() += block.u_update.transpose() * da_z;

  // Reset gate pre-activation.
  const Vec da_r = dr.array() * r.array() * (1.0 - r.array());
  grad.w_reset.noalias() += da_r * x.transpose();
  grad.u_reset.noalias() += da_r * h_prev.transpose();
  grad.b_reset += da_r;
  dx.noalias() += block.w_reset.transpose() * da_r;
  dh_prev.noalias() += block.u_reset.transpose() * da_r;

  return dh_prev;
}

BiGruTrace bigru_forward(const Mat& inputs, const GruBlock& forward, const GruBlock& backward) {
  const Index steps = inputs.cols();
  const Index hidden = forward.hidden_size();
  if (backward.hidden_size() != hidden) throw Error("bigru: direction hidden sizes differ");

  BiGruTrace trace;
  trace.forward.resize(static_cast<std::size_t>(steps));
  trace.backward.resize(static_cast<std::size_t>(steps));
  trace.states.resize(2 * hidden, steps);

  Vec h = Vec::Zero(hidden);
  for (Index t = 0; t < steps; ++t) {
    auto& step = trace.forward[static_cast<std::size_t>(t)];
    step = gru_step(inputs.col(t), h, forward);
    h = step.h_next;
    trace.states.col(t).head(hidden) = h;
  }
  h = Vec::Zero(hidden);
  for (Index t = steps - 1; t >= 0; --t) {
    auto& step = trace.backward[static_cast<std::size_t>(t)];
    step = gru_step(inputs.col(t), h, backward);
    h = step.h_next;
    trace.states.col(t).tail(hidden) = h;
  }
  return trace;
}

Mat bigru_backward(const Mat& inputs, const BiGruTrace& trace, const Mat& d_states,
                   const GruBlock& forward, const GruBlock& backward, GruBlock& grad_forward,
                   GruBlock& grad_backward) {
  const Index steps = inputs.cols();
  const Index hidden = forward.hidden_size();
  Mat d_inputs = Mat::Zero(inputs.rows(), steps);

  // Forward direction ran 0..T-1, so gradients flow T-1..0.
  Vec carry = Vec::Zero(hidden);
  for (Index t = steps - 1; t >= 0; --t) {
    const Vec dh = d_states.col(t).head(hidden) + carry;
    carry = gru_step_backward(inputs.col(t), trace.forward[static_cast<std::size_t>(t)], dh, forward,
                              grad_forward, d_inputs.col(t));
  }
  // Backward direction ran T-1..0, so gradients flow 0..T-1.
  carry = Vec::Zero(hidden);
  for (Index t = 0; t < steps; ++t) {
    const Vec dh = d_states.col(t).tail(hidden) + carry;
    carry = gru_step_backward(inputs.col(t), trace.backward[static_cast<std::size_t>(t)], dh, backward,
                              grad_backward, d_inputs.col(t));
  }
  return d_inputs;
}

}  // namespace hiepar::encoder
