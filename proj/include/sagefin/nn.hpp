#pragma once

#include <vector>

#include "sagefin/errors.hpp"
#include "sagefin/types.hpp"

namespace sagefin {

// Dense affine layer with per-parameter Adam moment buffers.
struct LinearParams {
  Matrix w;      // in x out
  RowVector b;   // out
  Matrix m_w, v_w;
  RowVector m_b, v_b;

  Index in_dim() const { return w.rows(); }
  Index out_dim() const { return w.cols(); }
};

// Glorot-uniform weights, zero bias.
LinearParams make_linear(Index in, Index out, Rng& rng);
LinearParams make_linear_zero(Index in, Index out);

Matrix linear_forward(const Matrix& x, const LinearParams& p);

struct LinearGrads {
  Matrix w;
  RowVector b;
};

// Returns dL/dx; fills parameter gradients.
Matrix linear_backward(const Matrix& x, const LinearParams& p, const Matrix& gout,
                       LinearGrads& pg);

struct BatchNormParams {
  RowVector gamma, beta;
  RowVector running_mean, running_var;
  double momentum = 0.1;
  double epsilon = 1e-5;
  RowVector m_gamma, v_gamma, m_beta, v_beta;

  Index dim() const { return gamma.size(); }
};

BatchNormParams make_batchnorm(Index dim);

struct BatchNormCache {
  Matrix xhat;
  RowVector inv_std;
  RowVector batch_mean, batch_var;
  bool training = false;
  bool valid = false;
};

// Training mode normalizes with batch statistics (population variance) and,
// when `update_running` is set, folds them into the running estimates;
// inference mode uses the running estimates. Training needs >= 2 rows.
Matrix batchnorm_forward(const Matrix& x, BatchNormParams& p, bool training,
                         bool update_running = false,
                         BatchNormCache* cache = nullptr);

struct BatchNormGrads {
  RowVector gamma, beta;
};

// Training-mode backward through the batch statistics.
Matrix batchnorm_backward(const BatchNormCache& cache, const BatchNormParams& p,
                          const Matrix& gout, BatchNormGrads& pg);

Matrix relu(const Matrix& x);
// dL/dx given the forward *input* (gradient is zero where x <= 0).
Matrix relu_backward(const Matrix& x, const Matrix& gout);

double stable_sigmoid(double z);

// Mean binary cross-entropy on logits, in log-sum-exp form; finite for any
// finite logit. Targets must lie in [0, 1].
double bce_with_logits(const Matrix& logits, const Matrix& targets);
Matrix bce_with_logits_backward(const Matrix& logits, const Matrix& targets);

double mse(const Matrix& x, const Matrix& target);
Matrix mse_backward(const Matrix& x, const Matrix& target);

struct AdamState {
  double learning_rate = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long t = 0;  // completed steps
};

// One Adam update for a single tensor, using the bias correction for step
// `state.t` (the caller increments t once per optimizer step, before the
// per-tensor updates).
void adam_update(Matrix& param, const Matrix& grad, Matrix& m, Matrix& v,
                 const AdamState& state);
void adam_update(RowVector& param, const RowVector& grad, RowVector& m,
                 RowVector& v, const AdamState& state);

void adam_step(LinearParams& p, const LinearGrads& g, const AdamState& state);
void adam_step(BatchNormParams& p, const BatchNormGrads& g, const AdamState& state);

// Stack of dense layers with ReLU between them and a linear output.
struct Mlp {
  std::vector<LinearParams> layers;

  Index in_dim() const { return layers.front().in_dim(); }
  Index out_dim() const { return layers.back().out_dim(); }
};

// `depth` dense layers: in -> hidden -> ... -> hidden -> out.
Mlp make_mlp(Index in, Index hidden, Index out, int depth, Rng& rng);

struct MlpCache {
  std::vector<Matrix> inputs;  // input seen by each layer
  bool valid = false;
};

Matrix mlp_forward(const Mlp& mlp, const Matrix& x, MlpCache* cache = nullptr);

struct MlpGrads {
  std::vector<LinearGrads> layers;
};

MlpGrads make_mlp_grads(const Mlp& mlp);

// Returns dL/dx; accumulates parameter gradients into `pg`.
Matrix mlp_backward(const Mlp& mlp, const MlpCache& cache, const Matrix& gout,
                    MlpGrads& pg);

void adam_step(Mlp& mlp, const MlpGrads& g, const AdamState& state);

inline void check_finite(const Matrix& x, const char* what) {
  if (!x.allFinite()) throw NonFiniteLoss(std::string("non-finite values in ") + what);
}

}  // namespace sagefin
