#include "sagefin/nn.hpp"

#include <cmath>
#include <string>

namespace sagefin {

LinearParams make_linear(Index in, Index out, Rng& rng) {
  LinearParams p;
  p.w.resize(in, out);
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  for (Index i = 0; i < in; ++i) {
    for (Index j = 0; j < out; ++j) p.w(i, j) = rng.uniform(-bound, bound);
  }
  p.b = RowVector::Zero(out);
  p.m_w = Matrix::Zero(in, out);
  p.v_w = Matrix::Zero(in, out);
  p.m_b = RowVector::Zero(out);
  p.v_b = RowVector::Zero(out);
  return p;
}

LinearParams make_linear_zero(Index in, Index out) {
  LinearParams p;
  p.w = Matrix::Zero(in, out);
  p.b = RowVector::Zero(out);
  p.m_w = Matrix::Zero(in, out);
  p.v_w = Matrix::Zero(in, out);
  p.m_b = RowVector::Zero(out);
  p.v_b = RowVector::Zero(out);
  return p;
}

Matrix linear_forward(const Matrix& x, const LinearParams& p) {
  if (x.cols() != p.in_dim()) {
    throw DimensionMismatch("linear input width " + std::to_string(x.cols()) +
                            " != " + std::to_string(p.in_dim()));
  }
  return (x * p.w).rowwise() + p.b;
}

Matrix linear_backward(const Matrix& x, const LinearParams& p, const Matrix& gout,
                       LinearGrads& pg) {
  if (gout.rows() != x.rows() || gout.cols() != p.out_dim()) {
    throw DimensionMismatch("linear backward shape mismatch");
  }
  pg.w = x.transpose() * gout;
  pg.b = gout.colwise().sum();
  return gout * p.w.transpose();
}

BatchNormParams make_batchnorm(Index dim) {
  BatchNormParams p;
  p.gamma = RowVector::Ones(dim);
  p.beta = RowVector::Zero(dim);
  p.running_mean = RowVector::Zero(dim);
  p.running_var = RowVector::Ones(dim);
  p.m_gamma = RowVector::Zero(dim);
  p.v_gamma = RowVector::Zero(dim);
  p.m_beta = RowVector::Zero(dim);
  p.v_beta = RowVector::Zero(dim);
  return p;
}

Matrix batchnorm_forward(const Matrix& x, BatchNormParams& p, bool training,
                         bool update_running, BatchNormCache* cache) {
  if (x.cols() != p.dim()) {
    throw DimensionMismatch("batchnorm width " + std::to_string(x.cols()) +
                            " != " + std::to_string(p.dim()));
  }
  Matrix xhat;
  RowVector inv_std;
  RowVector mean, var;
  if (training) {
    if (x.rows() < 2) {
      throw DegenerateBatch("batch normalization needs >= 2 rows in training mode, got " +
                            std::to_string(x.rows()));
    }
    mean = x.colwise().mean();
    const Matrix centered = x.rowwise() - mean;
    var = centered.array().square().colwise().mean();
    inv_std = (var.array() + p.epsilon).sqrt().inverse();
    xhat = centered.array().rowwise() * inv_std.array();
    if (update_running) {
      p.running_mean = (1.0 - p.momentum) * p.running_mean + p.momentum * mean;
      p.running_var = (1.0 - p.momentum) * p.running_var + p.momentum * var;
    }
  } else {
    mean = p.running_mean;
    var = p.running_var;
    inv_std = (var.array() + p.epsilon).sqrt().inverse();
    xhat = (x.rowwise() - mean).array().rowwise() * inv_std.array();
  }
  if (cache) {
    cache->xhat = xhat;
    cache->inv_std = inv_std;
    cache->batch_mean = mean;
    cache->batch_var = var;
    cache->training = training;
    cache->valid = true;
  }
  return (xhat.array().rowwise() * p.gamma.array()).rowwise() + p.beta.array();
}

Matrix batchnorm_backward(const BatchNormCache& cache, const BatchNormParams& p,
                          const Matrix& gout, BatchNormGrads& pg) {
  if (!cache.valid) throw MissingForwardCache("batchnorm backward without forward cache");
  pg.gamma = (gout.array() * cache.xhat.array()).colwise().sum();
  pg.beta = gout.colwise().sum();
  if (!cache.training) {
    // Inference-mode stats are constants.
    return (gout.array().rowwise() * (p.gamma.array() * cache.inv_std.array())).matrix();
  }
  const double n = static_cast<double>(gout.rows());
  const Matrix dxhat = gout.array().rowwise() * p.gamma.array();
  const RowVector sum_dxhat = dxhat.colwise().sum();
  const RowVector sum_dxhat_xhat = (dxhat.array() * cache.xhat.array()).colwise().sum();
  Matrix dx = n * dxhat;
  dx.array().rowwise() -= sum_dxhat.array();
  dx.array() -= cache.xhat.array().rowwise() * sum_dxhat_xhat.array();
  dx.array().rowwise() *= (cache.inv_std.array() / n);
  return dx;
}

Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }

Matrix relu_backward(const Matrix& x, const Matrix& gout) {
  if (x.rows() != gout.rows() || x.cols() != gout.cols()) {
    throw DimensionMismatch("relu backward shape mismatch");
  }
  return (x.array() > 0.0).select(gout, Matrix::Zero(gout.rows(), gout.cols()));
}

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double bce_with_logits(const Matrix& logits, const Matrix& targets) {
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols()) {
    throw DimensionMismatch("bce logits/targets shape mismatch");
  }
  const auto z = logits.array();
  const auto t = targets.array();
  // max(z,0) - z*t + log(1 + exp(-|z|))
  const auto loss = z.max(0.0) - z * t + (1.0 + (-z.abs()).exp()).log();
  return loss.mean();
}

Matrix bce_with_logits_backward(const Matrix& logits, const Matrix& targets) {
  const double inv_n = 1.0 / static_cast<double>(logits.size());
  Matrix g(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    for (Index j = 0; j < logits.cols(); ++j) {
      g(i, j) = (stable_sigmoid(logits(i, j)) - targets(i, j)) * inv_n;
    }
  }
  return g;
}

double mse(const Matrix& x, const Matrix& target) {
  if (x.rows() != target.rows() || x.cols() != target.cols()) {
    throw DimensionMismatch("mse shape mismatch");
  }
  return (x - target).array().square().mean();
}

Matrix mse_backward(const Matrix& x, const Matrix& target) {
  return (2.0 / static_cast<double>(x.size())) * (x - target);
}

namespace {

template <typename T>
void adam_update_impl(T& param, const T& grad, T& m, T& v, const AdamState& s) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols()) {
    throw DimensionMismatch("adam parameter/gradient shape mismatch");
  }
  if (s.t < 1) throw InvalidConfig("adam step counter must be >= 1 at update time");
  m = s.beta1 * m + (1.0 - s.beta1) * grad;
  v = s.beta2 * v + (1.0 - s.beta2) * grad.array().square().matrix();
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  param.array() -= s.learning_rate * (m.array() / bc1) /
                   ((v.array() / bc2).sqrt() + s.epsilon);
}

}  // namespace

void adam_update(Matrix& param, const Matrix& grad, Matrix& m, Matrix& v,
                 const AdamState& state) {
  adam_update_impl(param, grad, m, v, state);
}

void adam_update(RowVector& param, const RowVector& grad, RowVector& m,
                 RowVector& v, const AdamState& state) {
  adam_update_impl(param, grad, m, v, state);
}

void adam_step(LinearParams& p, const LinearGrads& g, const AdamState& state) {
  adam_update(p.w, g.w, p.m_w, p.v_w, state);
  adam_update(p.b, g.b, p.m_b, p.v_b, state);
}

void adam_step(BatchNormParams& p, const BatchNormGrads& g, const AdamState& state) {
  adam_update(p.gamma, g.gamma, p.m_gamma, p.v_gamma, state);
  adam_update(p.beta, g.beta, p.m_beta, p.v_beta, state);
}

Mlp make_mlp(Index in, Index hidden, Index out, int depth, Rng& rng) {
  if (depth < 1) throw InvalidConfig("mlp depth must be >= 1");
  Mlp mlp;
  Index cur = in;
  for (int i = 0; i < depth - 1; ++i) {
    mlp.layers.push_back(make_linear(cur, hidden, rng));
    cur = hidden;
  }
  mlp.layers.push_back(make_linear(cur, out, rng));
  return mlp;
}

Matrix mlp_forward(const Mlp& mlp, const Matrix& x, MlpCache* cache) {
  if (cache) {
    cache->inputs.clear();
    cache->valid = true;
  }
  Matrix h = x;
  for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
    if (cache) cache->inputs.push_back(h);
    h = linear_forward(h, mlp.layers[i]);
    if (i + 1 < mlp.layers.size()) h = relu(h);
  }
  return h;
}

MlpGrads make_mlp_grads(const Mlp& mlp) {
  MlpGrads g;
  g.layers.resize(mlp.layers.size());
  for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
    g.layers[i].w = Matrix::Zero(mlp.layers[i].w.rows(), mlp.layers[i].w.cols());
    g.layers[i].b = RowVector::Zero(mlp.layers[i].b.size());
  }
  return g;
}

Matrix mlp_backward(const Mlp& mlp, const MlpCache& cache, const Matrix& gout,
                    MlpGrads& pg) {
  if (!cache.valid || cache.inputs.size() != mlp.layers.size()) {
    throw MissingForwardCache("mlp backward without matching forward cache");
  }
  Matrix g = gout;
  for (std::size_t i = mlp.layers.size(); i-- > 0;) {
    if (i + 1 < mlp.layers.size()) {
      // Pre-activation of layer i equals linear_forward(inputs[i], layer i).
      const Matrix pre = linear_forward(cache.inputs[i], mlp.layers[i]);
      g = relu_backward(pre, g);
    }
    LinearGrads lg;
    g = linear_backward(cache.inputs[i], mlp.layers[i], g, lg);
    pg.layers[i].w += lg.w;
    pg.layers[i].b += lg.b;
  }
  return g;
}

void adam_step(Mlp& mlp, const MlpGrads& g, const AdamState& state) {
  for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
    adam_step(mlp.layers[i], g.layers[i], state);
  }
}

}  // namespace sagefin
