#pragma once

#include <array>
#include <utility>

#include "veclstm/nn/activation.hpp"
#include "veclstm/nn/tensor.hpp"

namespace veclstm::nn {

enum class Gate { Input = 0, Forget = 1, Output = 2, Candidate = 3 };

/// One weight matrix per gate over the stacked input [x_t; h_{t-1}], so each
/// W is hidden x (input + hidden). The left `input` columns are the input
/// weights and the right `hidden` columns the recurrent weights.
template <typename Scalar>
struct LstmParams {
  Matrix<Scalar> W_i, W_f, W_o, W_g;
  Vector<Scalar> b_i, b_f, b_o, b_g;

  static LstmParams zeros(Eigen::Index input_size, Eigen::Index hidden_size) {
    const Eigen::Index cols = input_size + hidden_size;
    LstmParams p;
    for (Matrix<Scalar>* W : p.weights()) *W = Matrix<Scalar>::Zero(hidden_size, cols);
    for (Vector<Scalar>* b : p.biases()) *b = Vector<Scalar>::Zero(hidden_size);
    return p;
  }

  Eigen::Index hidden_size() const { return W_i.rows(); }
  Eigen::Index input_size() const { return W_i.cols() - W_i.rows(); }

  std::array<Matrix<Scalar>*, 4> weights() { return {&W_i, &W_f, &W_o, &W_g}; }
  std::array<const Matrix<Scalar>*, 4> weights() const { return {&W_i, &W_f, &W_o, &W_g}; }
  std::array<Vector<Scalar>*, 4> biases() { return {&b_i, &b_f, &b_o, &b_g}; }
  std::array<const Vector<Scalar>*, 4> biases() const { return {&b_i, &b_f, &b_o, &b_g}; }

  const Matrix<Scalar>& weight(Gate g) const { return *weights()[static_cast<int>(g)]; }
  const Vector<Scalar>& bias(Gate g) const { return *biases()[static_cast<int>(g)]; }

  auto input_weights(Gate g) const { return weight(g).leftCols(input_size()); }
  auto recurrent_weights(Gate g) const { return weight(g).rightCols(hidden_size()); }

  bool consistent() const {
    const Eigen::Index H = W_i.rows();
    const Eigen::Index cols = W_i.cols();
    if (H < 1 || cols <= H) return false;
    for (const auto* W : weights())
      if (W->rows() != H || W->cols() != cols) return false;
    for (const auto* b : biases())
      if (b->size() != H) return false;
    return true;
  }
};

template <typename Scalar>
struct LstmState {
  Matrix<Scalar> h;  // hidden x batch
  Matrix<Scalar> c;

  static LstmState zeros(Eigen::Index hidden_size, Eigen::Index batch) {
    return {Matrix<Scalar>::Zero(hidden_size, batch), Matrix<Scalar>::Zero(hidden_size, batch)};
  }
};

template <typename Scalar>
struct LstmCellCache {
  Matrix<Scalar> x, h_prev, c_prev;
  Matrix<Scalar> i, f, o, g;
  Matrix<Scalar> tanh_c;
  bool zero_history = false;  // h_prev is identically zero
};

namespace detail {

template <typename Scalar>
Matrix<Scalar> gate_preactivation(const LstmParams<Scalar>& p, Gate gate, const Matrix<Scalar>& x,
                                  const Matrix<Scalar>& h, bool zero_history) {
  Matrix<Scalar> z = p.input_weights(gate) * x;
  if (!zero_history) z.noalias() += p.recurrent_weights(gate) * h;
  z.colwise() += p.bias(gate);
  return z;
}

}  // namespace detail

/// i, f, o = sigmoid(W [x; h] + b); g = tanh(W_g [x; h] + b_g);
/// c_t = f * c_{t-1} + i * g; h_t = o * tanh(c_t).
template <typename Scalar>
std::pair<LstmState<Scalar>, LstmCellCache<Scalar>> lstm_cell_forward(const Matrix<Scalar>& x,
                                                                     const LstmState<Scalar>& state,
                                                                     const LstmParams<Scalar>& p) {
  require_shape(p.consistent(), "lstm_cell_forward: inconsistent parameters");
  const Eigen::Index H = p.hidden_size();
  require_shape(x.rows() == p.input_size(), "lstm_cell_forward: input width");
  require_shape(state.h.rows() == H && state.c.rows() == H && state.h.cols() == x.cols() &&
                    state.c.cols() == x.cols(),
                "lstm_cell_forward: state shape");
  require_finite(x, "lstm input");

  LstmCellCache<Scalar> cache;
  cache.zero_history = state.h.isZero(0);
  cache.x = x;
  cache.h_prev = state.h;
  cache.c_prev = state.c;
  cache.i = sigmoid(detail::gate_preactivation(p, Gate::Input, x, state.h, cache.zero_history));
  cache.f = sigmoid(detail::gate_preactivation(p, Gate::Forget, x, state.h, cache.zero_history));
  cache.o = sigmoid(detail::gate_preactivation(p, Gate::Output, x, state.h, cache.zero_history));
  cache.g = detail::gate_preactivation(p, Gate::Candidate, x, state.h, cache.zero_history)
                .array()
                .tanh()
                .matrix();

  LstmState<Scalar> next;
  next.c = (cache.f.array() * state.c.array() + cache.i.array() * cache.g.array()).matrix();
  cache.tanh_c = next.c.array().tanh().matrix();
  next.h = (cache.o.array() * cache.tanh_c.array()).matrix();
  require_finite(next.c, "lstm cell state");
  return {std::move(next), std::move(cache)};
}

template <typename Scalar>
struct LstmCellGrads {
  Matrix<Scalar> dx, dh_prev, dc_prev;
};

/// Accumulates parameter gradients into `grads` and returns gradients with
/// respect to the cell inputs.
template <typename Scalar>
LstmCellGrads<Scalar> lstm_cell_backward(const LstmCellCache<Scalar>& cache, const LstmParams<Scalar>& p,
                                         const Matrix<Scalar>& dh, const Matrix<Scalar>& dc,
                                         LstmParams<Scalar>& grads, bool need_state_grads = true) {
  const Eigen::Index F = p.input_size();
  const Eigen::Index H = p.hidden_size();
  require_shape(dh.rows() == H && dh.cols() == cache.x.cols() && dc.rows() == H &&
                    dc.cols() == cache.x.cols(),
                "lstm_cell_backward: upstream shape");

  const auto i = cache.i.array();
  const auto f = cache.f.array();
  const auto o = cache.o.array();
  const auto g = cache.g.array();
  const auto tc = cache.tanh_c.array();

  const Matrix<Scalar> dc_total = (dc.array() + dh.array() * o * (Scalar(1) - tc * tc)).matrix();
  const auto dct = dc_total.array();

  const std::array<Matrix<Scalar>, 4> dz = {
      (dct * g * i * (Scalar(1) - i)).matrix(),
      (dct * cache.c_prev.array() * f * (Scalar(1) - f)).matrix(),
      (dh.array() * tc * o * (Scalar(1) - o)).matrix(),
      (dct * i * (Scalar(1) - g * g)).matrix(),
  };

  LstmCellGrads<Scalar> out;
  out.dx = Matrix<Scalar>::Zero(F, cache.x.cols());
  out.dh_prev = Matrix<Scalar>::Zero(H, cache.x.cols());
  auto weight_grads = grads.weights();
  auto bias_grads = grads.biases();
  for (int k = 0; k < 4; ++k) {
    const Gate gate = static_cast<Gate>(k);
    weight_grads[k]->leftCols(F).noalias() += dz[k] * cache.x.transpose();
    if (!cache.zero_history)
      weight_grads[k]->rightCols(H).noalias() += dz[k] * cache.h_prev.transpose();
    *bias_grads[k] += dz[k].rowwise().sum();
    out.dx.noalias() += p.input_weights(gate).transpose() * dz[k];
    if (need_state_grads) out.dh_prev.noalias() += p.recurrent_weights(gate).transpose() * dz[k];
  }
  out.dc_prev = (dct * f).matrix();
  return out;
}

template <typename Scalar>
struct LstmSequenceCache {
  std::vector<LstmCellCache<Scalar>> steps;
  std::vector<Matrix<Scalar>> hidden;  // h_t before the emit activation
  bool return_sequences = false;
  Activation emit = Activation::Identity;

  bool empty() const { return steps.empty(); }
};

/// Runs the cell over every position from a zero state. With
/// `return_sequences` the result holds every h_t, otherwise only h_T. `emit`
/// is applied to the returned outputs only; the recurrence sees raw h_t.
template <typename Scalar>
std::pair<Sequence<Scalar>, LstmSequenceCache<Scalar>> lstm_sequence(const Sequence<Scalar>& inputs,
                                                                   const LstmParams<Scalar>& p,
                                                                   bool return_sequences,
                                                                   Activation emit = Activation::Identity) {
  if (inputs.empty()) throw Error(ErrorKind::ShapeMismatch, "lstm_sequence: empty sequence");
  const Eigen::Index batch = inputs.front().cols();
  LstmState<Scalar> state = LstmState<Scalar>::zeros(p.hidden_size(), batch);
  LstmSequenceCache<Scalar> cache;
  cache.return_sequences = return_sequences;
  cache.emit = emit;
  cache.steps.reserve(inputs.size());

  Sequence<Scalar> outputs;
  for (const auto& x : inputs) {
    require_shape(x.cols() == batch, "lstm_sequence: batch width changes across steps");
    auto [next, step] = lstm_cell_forward(x, state, p);
    state = std::move(next);
    cache.steps.push_back(std::move(step));
    cache.hidden.push_back(state.h);
    if (return_sequences) outputs.push_back(activate(emit, state.h));
  }
  if (!return_sequences) outputs.push_back(activate(emit, state.h));
  return {std::move(outputs), std::move(cache)};
}

template <typename Scalar>
struct LstmGradients {
  LstmParams<Scalar> params;
  Sequence<Scalar> inputs;
};

/// Backpropagation through time. `upstream` matches the shape of the
/// forward outputs: one matrix per step, or a single one for h_T.
template <typename Scalar>
LstmGradients<Scalar> lstm_backward(const LstmSequenceCache<Scalar>& cache, const LstmParams<Scalar>& p,
                                    const Sequence<Scalar>& upstream) {
  if (cache.empty()) throw Error(ErrorKind::StaleCache, "lstm_backward without a forward pass");
  const auto T = cache.steps.size();
  const Eigen::Index H = p.hidden_size();
  const Eigen::Index batch = cache.steps.front().x.cols();
  if (cache.steps.front().x.rows() != p.input_size() || cache.hidden.front().rows() != H)
    throw Error(ErrorKind::StaleCache, "lstm_backward: cache does not match parameters");
  require_shape(upstream.size() == (cache.return_sequences ? T : std::size_t{1}),
                "lstm_backward: upstream length");

  LstmGradients<Scalar> out;
  out.params = LstmParams<Scalar>::zeros(p.input_size(), H);
  out.inputs.resize(T);

  Matrix<Scalar> dh_next = Matrix<Scalar>::Zero(H, batch);
  Matrix<Scalar> dc_next = Matrix<Scalar>::Zero(H, batch);
  for (std::size_t k = T; k-- > 0;) {
    Matrix<Scalar> dh = dh_next;
    const Matrix<Scalar>* up = nullptr;
    if (cache.return_sequences) up = &upstream[k];
    else if (k == T - 1) up = &upstream.front();
    if (up) {
      require_shape(up->rows() == H && up->cols() == batch, "lstm_backward: upstream shape");
      dh += (up->array() * activation_derivative(cache.emit, cache.hidden[k]).array()).matrix();
    }
    // The initial state is a constant, so its gradient is never needed.
    auto step = lstm_cell_backward(cache.steps[k], p, dh, dc_next, out.params, k > 0);
    out.inputs[k] = std::move(step.dx);
    dh_next = std::move(step.dh_prev);
    dc_next = std::move(step.dc_prev);
  }
  return out;
}

}  // namespace veclstm::nn
