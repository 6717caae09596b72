#pragma once

#include <string>

#include "sefar/matrix.hpp"
#include "sefar/params.hpp"
#include "sefar/rng.hpp"

namespace sefar {

enum class Mode { kTrain, kEval };

/// Parameter names used by a two-layer perceptron registered under `prefix`:
/// prefix.w1 (in x hidden), prefix.b1, prefix.w2 (hidden x out), prefix.b2.
void add_mlp_params(ParamSet& params, const std::string& prefix, std::size_t in_dim,
                    std::size_t hidden_dim, std::size_t out_dim, RngStream init_rng);

/// prefix.w (in x out), prefix.b.
void add_linear_params(ParamSet& params, const std::string& prefix, std::size_t in_dim,
                       std::size_t out_dim, RngStream init_rng);

/// Forward record kept for the exact backward pass.
struct MlpCache {
  Matrix input;
  Matrix pre_act;       // input*w1 + b1
  Matrix dropout_mask;  // scaled inverted-dropout mask, empty in eval mode
  Matrix hidden;        // relu(pre_act) with dropout applied
  bool valid = false;
};

struct LinearCache {
  Matrix input;
  bool valid = false;
};

/// linear -> relu -> inverted dropout (train only) -> linear.
Matrix mlp_forward(const ParamSet& params, const std::string& prefix, const Matrix& input,
                   double dropout_rate, Mode mode, RngStream rng, MlpCache& cache);

/// Accumulates parameter gradients into params.grad; returns dL/dinput.
Matrix mlp_backward(ParamSet& params, const std::string& prefix, MlpCache& cache,
                    const Matrix& dout);

Matrix linear_forward(const ParamSet& params, const std::string& prefix, const Matrix& input,
                      LinearCache& cache);

Matrix linear_backward(ParamSet& params, const std::string& prefix, LinearCache& cache,
                       const Matrix& dout);

/// Row-wise softmax, stabilized by row-max subtraction.
Matrix softmax(const Matrix& logits);

/// Mean cross-entropy between probability rows and (soft or one-hot) target
/// rows. dlogits is the softmax-CE composite gradient (probs - targets)/rows.
/// log arguments are clamped at 1e-12.
std::pair<double, Matrix> cross_entropy(const Matrix& probs, const Matrix& targets);

/// Weighted variant used by the unlabeled and mixed loss terms:
/// loss = sum_i w_i * CE_i / denom, dlogits row i = w_i * (p_i - t_i) / denom.
std::pair<double, Matrix> cross_entropy_weighted(const Matrix& probs, const Matrix& targets,
                                                 const std::vector<double>& row_weights,
                                                 double denom);

constexpr double kLogClamp = 1e-12;

/// buf <- momentum*buf + (grad + weight_decay*value); value <- value - lr*buf.
/// Grads are zeroed afterwards.
void sgd_momentum_step(ParamSet& params, double lr, double momentum, double weight_decay);

Matrix one_hot(const std::vector<int>& labels, std::size_t num_classes);

}  // namespace sefar
