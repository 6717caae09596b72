#include "sefar/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sefar {

namespace {

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double scale, RngStream& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data) v = scale * rng.next_gaussian();
  return m;
}

}  // namespace

void add_mlp_params(ParamSet& params, const std::string& prefix, std::size_t in_dim,
                    std::size_t hidden_dim, std::size_t out_dim, RngStream init_rng) {
  RngStream r1 = init_rng.substream(1);
  RngStream r2 = init_rng.substream(2);
  // He init for the relu layer, Glorot-style for the linear output.
  params.add(prefix + ".w1", gaussian_matrix(in_dim, hidden_dim,
                                             std::sqrt(2.0 / static_cast<double>(in_dim)), r1));
  params.add(prefix + ".b1", Matrix(1, hidden_dim));
  params.add(prefix + ".w2",
             gaussian_matrix(hidden_dim, out_dim,
                             std::sqrt(1.0 / static_cast<double>(hidden_dim)), r2));
  params.add(prefix + ".b2", Matrix(1, out_dim));
}

void add_linear_params(ParamSet& params, const std::string& prefix, std::size_t in_dim,
                       std::size_t out_dim, RngStream init_rng) {
  RngStream r = init_rng.substream(1);
  params.add(prefix + ".w",
             gaussian_matrix(in_dim, out_dim, std::sqrt(1.0 / static_cast<double>(in_dim)), r));
  params.add(prefix + ".b", Matrix(1, out_dim));
}

Matrix mlp_forward(const ParamSet& params, const std::string& prefix, const Matrix& input,
                   double dropout_rate, Mode mode, RngStream rng, MlpCache& cache) {
  const Matrix& w1 = params.at(prefix + ".w1").value;
  const Matrix& b1 = params.at(prefix + ".b1").value;
  const Matrix& w2 = params.at(prefix + ".w2").value;
  const Matrix& b2 = params.at(prefix + ".b2").value;
  if (input.cols != w1.rows) {
    throw std::invalid_argument("mlp_forward(" + prefix + "): input width " +
                                std::to_string(input.cols) + " != " + std::to_string(w1.rows));
  }
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw std::invalid_argument("mlp_forward: dropout_rate must be in [0,1)");
  }

  cache = MlpCache{};
  cache.input = input;
  cache.pre_act = matmul(input, w1);
  add_row_vector(cache.pre_act, b1);

  Matrix hidden = cache.pre_act;
  for (double& v : hidden.data) v = v > 0.0 ? v : 0.0;

  if (mode == Mode::kTrain && dropout_rate > 0.0) {
    const double keep_scale = 1.0 / (1.0 - dropout_rate);
    cache.dropout_mask = Matrix(hidden.rows, hidden.cols);
    for (std::size_t i = 0; i < hidden.data.size(); ++i) {
      const double keep = rng.next_uniform() >= dropout_rate ? keep_scale : 0.0;
      cache.dropout_mask.data[i] = keep;
      hidden.data[i] *= keep;
    }
  }
  cache.hidden = hidden;
  cache.valid = true;

  Matrix out = matmul(hidden, w2);
  add_row_vector(out, b2);
  check_finite(out, "mlp_forward(" + prefix + ")");
  return out;
}

Matrix mlp_backward(ParamSet& params, const std::string& prefix, MlpCache& cache,
                    const Matrix& dout) {
  if (!cache.valid) throw std::runtime_error("mlp_backward(" + prefix + "): stale cache");
  const Matrix& w1 = params.at(prefix + ".w1").value;
  const Matrix& w2 = params.at(prefix + ".w2").value;

  axpy(params.at(prefix + ".w2").grad, 1.0, matmul_at_b(cache.hidden, dout));
  axpy(params.at(prefix + ".b2").grad, 1.0, column_sums(dout));

  Matrix dhidden = matmul_a_bt(dout, w2);
  if (cache.dropout_mask.data.size() == dhidden.data.size()) {
    for (std::size_t i = 0; i < dhidden.data.size(); ++i) {
      dhidden.data[i] *= cache.dropout_mask.data[i];
    }
  }
  for (std::size_t i = 0; i < dhidden.data.size(); ++i) {
    if (cache.pre_act.data[i] <= 0.0) dhidden.data[i] = 0.0;
  }

  axpy(params.at(prefix + ".w1").grad, 1.0, matmul_at_b(cache.input, dhidden));
  axpy(params.at(prefix + ".b1").grad, 1.0, column_sums(dhidden));

  return matmul_a_bt(dhidden, w1);
}

Matrix linear_forward(const ParamSet& params, const std::string& prefix, const Matrix& input,
                      LinearCache& cache) {
  const Matrix& w = params.at(prefix + ".w").value;
  const Matrix& b = params.at(prefix + ".b").value;
  if (input.cols != w.rows) {
    throw std::invalid_argument("linear_forward(" + prefix + "): input width " +
                                std::to_string(input.cols) + " != " + std::to_string(w.rows));
  }
  cache = LinearCache{};
  cache.input = input;
  cache.valid = true;
  Matrix out = matmul(input, w);
  add_row_vector(out, b);
  return out;
}

Matrix linear_backward(ParamSet& params, const std::string& prefix, LinearCache& cache,
                       const Matrix& dout) {
  if (!cache.valid) throw std::runtime_error("linear_backward(" + prefix + "): stale cache");
  const Matrix& w = params.at(prefix + ".w").value;
  axpy(params.at(prefix + ".w").grad, 1.0, matmul_at_b(cache.input, dout));
  axpy(params.at(prefix + ".b").grad, 1.0, column_sums(dout));
  return matmul_a_bt(dout, w);
}

Matrix softmax(const Matrix& logits) {
  check_finite(logits, "softmax input");
  Matrix probs(logits.rows, logits.cols);
  for (std::size_t i = 0; i < logits.rows; ++i) {
    const double* in = logits.row_ptr(i);
    double* out = probs.row_ptr(i);
    double mx = in[0];
    for (std::size_t j = 1; j < logits.cols; ++j) mx = std::max(mx, in[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < logits.cols; ++j) {
      out[j] = std::exp(in[j] - mx);
      sum += out[j];
    }
    for (std::size_t j = 0; j < logits.cols; ++j) out[j] /= sum;
  }
  return probs;
}

std::pair<double, Matrix> cross_entropy(const Matrix& probs, const Matrix& targets) {
  return cross_entropy_weighted(probs, targets, std::vector<double>(probs.rows, 1.0),
                                static_cast<double>(probs.rows));
}

std::pair<double, Matrix> cross_entropy_weighted(const Matrix& probs, const Matrix& targets,
                                                 const std::vector<double>& row_weights,
                                                 double denom) {
  check_same_shape(probs, targets, "cross_entropy");
  if (row_weights.size() != probs.rows) {
    throw std::invalid_argument("cross_entropy: weight count != row count");
  }
  if (denom <= 0.0) throw std::invalid_argument("cross_entropy: denom must be positive");

  double loss = 0.0;
  Matrix dlogits(probs.rows, probs.cols);
  for (std::size_t i = 0; i < probs.rows; ++i) {
    const double* p = probs.row_ptr(i);
    const double* t = targets.row_ptr(i);
    double* d = dlogits.row_ptr(i);
    const double w = row_weights[i];
    double row_loss = 0.0;
    for (std::size_t j = 0; j < probs.cols; ++j) {
      if (t[j] != 0.0) row_loss -= t[j] * std::log(std::max(p[j], kLogClamp));
      d[j] = w * (p[j] - t[j]) / denom;
    }
    loss += w * row_loss;
  }
  return {loss / denom, std::move(dlogits)};
}

void sgd_momentum_step(ParamSet& params, double lr, double momentum, double weight_decay) {
  if (lr < 0.0) throw std::invalid_argument("sgd_momentum_step: negative learning rate");
  for (std::size_t i = 0; i < params.size(); ++i) {
    ParamTensor& p = params[i];
    for (std::size_t k = 0; k < p.value.data.size(); ++k) {
      const double g = p.grad.data[k] + weight_decay * p.value.data[k];
      p.momentum_buf.data[k] = momentum * p.momentum_buf.data[k] + g;
      p.value.data[k] -= lr * p.momentum_buf.data[k];
    }
    check_finite(p.value, "sgd_momentum_step(" + params.names()[i] + ")");
    p.grad.fill(0.0);
  }
}

Matrix one_hot(const std::vector<int>& labels, std::size_t num_classes) {
  Matrix m(labels.size(), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int c = labels[i];
    if (c < 0 || static_cast<std::size_t>(c) >= num_classes) {
      throw std::invalid_argument("one_hot: label " + std::to_string(c) + " out of range");
    }
    m.at(i, static_cast<std::size_t>(c)) = 1.0;
  }
  return m;
}

}  // namespace sefar
