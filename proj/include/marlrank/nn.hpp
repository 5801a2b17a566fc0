#pragma once

// Small dense neural-network engine used by the similarity and policy modules.
//
// Everything is column-major in the Eigen sense: a batch of inputs is a matrix
// whose columns are samples, so a layer computes Z = W X + b 1^T.

#include <marlrank/types.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace marlrank::nn {

enum class Activation { relu, tanh };

// How previous neighbour actions are presented to the policy.
enum class ActionEncoding {
  scalar,   // level / 2 in [0, 1]
  one_hot,  // one slot per level
};

template <class Scalar>
struct LayerParams {
  Matrix<Scalar> weights;  // out x in
  Vector<Scalar> bias;     // out

  Index in_dim() const { return weights.cols(); }
  Index out_dim() const { return weights.rows(); }

  static LayerParams zeros(Index out, Index in) {
    return {Matrix<Scalar>::Zero(out, in), Vector<Scalar>::Zero(out)};
  }

  friend bool operator==(const LayerParams& a, const LayerParams& b) {
    return a.weights.rows() == b.weights.rows() && a.weights.cols() == b.weights.cols() &&
           a.bias.size() == b.bias.size() && a.weights == b.weights && a.bias == b.bias;
  }
};

// Dimensions that determine every layer shape.
struct ModelShape {
  Index feature_dim = 0;
  Index neighbors = 2;
  Index hidden = 100;
  Activation activation = Activation::relu;
  ActionEncoding encoding = ActionEncoding::scalar;

  Index action_width() const { return encoding == ActionEncoding::scalar ? 1 : kNumLevels; }
  // [d_i | neighbour actions | neighbour similarities | weighted neighbour mean]
  Index observation_dim() const { return 2 * feature_dim + neighbors * action_width() + neighbors; }
  // [d_i | d_j | |d_i - d_j| | d_i * d_j]
  Index pair_dim() const { return 4 * feature_dim; }

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

template <class Scalar>
struct ModelParams {
  ModelShape shape;
  LayerParams<Scalar> similarity;  // 1 x pair_dim, sigmoid head
  LayerParams<Scalar> hidden1;     // hidden x observation_dim
  LayerParams<Scalar> hidden2;     // hidden x hidden
  LayerParams<Scalar> output;      // 3 x hidden, softmax head

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Accumulated d(objective)/d(theta), shaped like ModelParams.
template <class Scalar>
struct GradientBuffer {
  LayerParams<Scalar> similarity;
  LayerParams<Scalar> hidden1;
  LayerParams<Scalar> hidden2;
  LayerParams<Scalar> output;

  GradientBuffer& operator+=(const GradientBuffer& o) {
    similarity.weights += o.similarity.weights;
    similarity.bias += o.similarity.bias;
    hidden1.weights += o.hidden1.weights;
    hidden1.bias += o.hidden1.bias;
    hidden2.weights += o.hidden2.weights;
    hidden2.bias += o.hidden2.bias;
    output.weights += o.output.weights;
    output.bias += o.output.bias;
    return *this;
  }
};

// Applies fn(layer_a, layer_b, ...) to corresponding layers of each argument.
template <class Fn, class... Nets>
void for_each_layer(Fn&& fn, Nets&... nets) {
  fn(nets.similarity...);
  fn(nets.hidden1...);
  fn(nets.hidden2...);
  fn(nets.output...);
}

template <class Scalar>
ModelParams<Scalar> zero_params(const ModelShape& shape) {
  ModelParams<Scalar> p;
  p.shape = shape;
  p.similarity = LayerParams<Scalar>::zeros(1, shape.pair_dim());
  p.hidden1 = LayerParams<Scalar>::zeros(shape.hidden, shape.observation_dim());
  p.hidden2 = LayerParams<Scalar>::zeros(shape.hidden, shape.hidden);
  p.output = LayerParams<Scalar>::zeros(kNumLevels, shape.hidden);
  return p;
}

// Uniform(-b, b) weights with b = sqrt(6 / (fan_in + fan_out)); zero biases.
template <class Scalar>
ModelParams<Scalar> init_params(const ModelShape& shape, std::uint64_t seed) {
  auto p = zero_params<Scalar>(shape);
  std::mt19937_64 rng(seed);
  for_each_layer(
      [&](LayerParams<Scalar>& layer) {
        const Scalar bound = std::sqrt(Scalar(6) / Scalar(layer.in_dim() + layer.out_dim()));
        std::uniform_real_distribution<Scalar> dist(-bound, bound);
        for (Index j = 0; j < layer.weights.cols(); ++j)
          for (Index i = 0; i < layer.weights.rows(); ++i) layer.weights(i, j) = dist(rng);
      },
      p);
  return p;
}

template <class Scalar>
GradientBuffer<Scalar> zero_gradients(const ModelParams<Scalar>& p) {
  GradientBuffer<Scalar> g;
  for_each_layer(
      [](LayerParams<Scalar>& dst, const LayerParams<Scalar>& src) {
        dst = LayerParams<Scalar>::zeros(src.out_dim(), src.in_dim());
      },
      g, p);
  return g;
}

template <class Scalar>
void check_shape(const ModelParams<Scalar>& p) {
  const auto expect = [](const LayerParams<Scalar>& l, Index out, Index in, const char* name) {
    if (l.out_dim() != out || l.in_dim() != in || l.bias.size() != out) {
      throw ShapeError(std::string(name) + " layer is " + std::to_string(l.out_dim()) + "x" +
                       std::to_string(l.in_dim()) + ", expected " + std::to_string(out) + "x" +
                       std::to_string(in));
    }
  };
  const auto& s = p.shape;
  expect(p.similarity, 1, s.pair_dim(), "similarity");
  expect(p.hidden1, s.hidden, s.observation_dim(), "hidden1");
  expect(p.hidden2, s.hidden, s.hidden, "hidden2");
  expect(p.output, kNumLevels, s.hidden, "output");
}

// ---------------------------------------------------------------------------
// Elementwise pieces

template <class Derived>
auto sigmoid(const Eigen::MatrixBase<Derived>& z) {
  using S = typename Derived::Scalar;
  return z.unaryExpr([](S v) {
    // Split on sign so exp never overflows.
    if (v >= S(0)) return S(1) / (S(1) + std::exp(-v));
    const S e = std::exp(v);
    return e / (S(1) + e);
  });
}

template <class Scalar>
Matrix<Scalar> activate(const Matrix<Scalar>& z, Activation act) {
  if (act == Activation::relu) return z.cwiseMax(Scalar(0));
  return z.array().tanh().matrix();
}

// d activation / d z, evaluated from the pre-activation z and output a.
template <class Scalar>
Matrix<Scalar> activation_grad(const Matrix<Scalar>& z, const Matrix<Scalar>& a, Activation act) {
  if (act == Activation::relu) {
    return z.unaryExpr([](Scalar v) { return v > Scalar(0) ? Scalar(1) : Scalar(0); });
  }
  return (Scalar(1) - a.array().square()).matrix();
}

// Column-wise log-softmax with max subtraction.
template <class Scalar>
Matrix<Scalar> log_softmax(const Matrix<Scalar>& logits) {
  Matrix<Scalar> out(logits.rows(), logits.cols());
  for (Index c = 0; c < logits.cols(); ++c) {
    const Scalar m = logits.col(c).maxCoeff();
    const Scalar lse = m + std::log((logits.col(c).array() - m).exp().sum());
    out.col(c) = logits.col(c).array() - lse;
  }
  return out;
}

template <class Scalar>
Matrix<Scalar> softmax(const Matrix<Scalar>& logits) {
  return log_softmax(logits).array().exp().matrix();
}

// ---------------------------------------------------------------------------
// Dense layer

template <class Scalar>
Matrix<Scalar> dense_forward(const LayerParams<Scalar>& layer, const Matrix<Scalar>& x) {
  if (x.rows() != layer.in_dim()) {
    throw ShapeError("dense layer expects input of dimension " + std::to_string(layer.in_dim()) +
                     ", got " + std::to_string(x.rows()));
  }
  return (layer.weights * x).colwise() + layer.bias;
}

// Accumulates parameter gradients into `grad` and returns dL/dx.
template <class Scalar>
Matrix<Scalar> dense_backward(const LayerParams<Scalar>& layer, const Matrix<Scalar>& x,
                              const Matrix<Scalar>& dz, LayerParams<Scalar>& grad) {
  if (dz.rows() != layer.out_dim() || dz.cols() != x.cols()) {
    throw ShapeError("dense_backward: upstream gradient shape mismatch");
  }
  grad.weights.noalias() += dz * x.transpose();
  grad.bias += dz.rowwise().sum();
  return layer.weights.transpose() * dz;
}

// ---------------------------------------------------------------------------
// Policy subnet: obs -> hidden -> hidden -> softmax over levels

template <class Scalar>
struct PolicyCache {
  Matrix<Scalar> input;
  Matrix<Scalar> z1, h1;
  Matrix<Scalar> z2, h2;
  Matrix<Scalar> logits;
  Matrix<Scalar> log_probs;

  Matrix<Scalar> probs() const { return log_probs.array().exp().matrix(); }
};

template <class Scalar>
PolicyCache<Scalar> policy_forward(const ModelParams<Scalar>& p, Matrix<Scalar> inputs) {
  if (inputs.rows() != p.hidden1.in_dim()) {
    throw ShapeError("policy expects observations of length " + std::to_string(p.hidden1.in_dim()) +
                     ", got " + std::to_string(inputs.rows()));
  }
  PolicyCache<Scalar> c;
  c.input = std::move(inputs);
  c.z1 = dense_forward(p.hidden1, c.input);
  c.h1 = activate(c.z1, p.shape.activation);
  c.z2 = dense_forward(p.hidden2, c.h1);
  c.h2 = activate(c.z2, p.shape.activation);
  c.logits = dense_forward(p.output, c.h2);
  c.log_probs = log_softmax(c.logits);
  return c;
}

// `dlogits` is the gradient of the scalar objective w.r.t. the output logits.
// Accumulates into the policy layers of `grads` and returns d/d(input).
template <class Scalar>
Matrix<Scalar> policy_backward(const ModelParams<Scalar>& p, const PolicyCache<Scalar>& c,
                               const Matrix<Scalar>& dlogits, GradientBuffer<Scalar>& grads) {
  if (dlogits.rows() != kNumLevels || dlogits.cols() != c.logits.cols()) {
    throw ShapeError("policy_backward: upstream gradient shape mismatch");
  }
  const auto act = p.shape.activation;
  Matrix<Scalar> dh2 = dense_backward(p.output, c.h2, dlogits, grads.output);
  Matrix<Scalar> dz2 = dh2.cwiseProduct(activation_grad(c.z2, c.h2, act));
  Matrix<Scalar> dh1 = dense_backward(p.hidden2, c.h1, dz2, grads.hidden2);
  Matrix<Scalar> dz1 = dh1.cwiseProduct(activation_grad(c.z1, c.h1, act));
  return dense_backward(p.hidden1, c.input, dz1, grads.hidden1);
}

// d/d(logits) of sum_c coef_c * log softmax(logits_c)[action_c]: coef (onehot - p).
template <class Scalar>
Matrix<Scalar> log_prob_logit_grad(const PolicyCache<Scalar>& c, const std::vector<int>& actions,
                                   const Vector<Scalar>& coefficients) {
  Matrix<Scalar> g = -c.probs();
  for (Index col = 0; col < g.cols(); ++col) {
    g(actions[static_cast<std::size_t>(col)], col) += Scalar(1);
    g.col(col) *= coefficients(col);
  }
  return g;
}

// Mean cross-entropy of the policy's distribution against integer targets.
template <class Scalar>
Scalar cross_entropy(const PolicyCache<Scalar>& c, const std::vector<int>& targets) {
  Scalar total = 0;
  for (Index col = 0; col < c.log_probs.cols(); ++col) {
    total -= c.log_probs(targets[static_cast<std::size_t>(col)], col);
  }
  return total / Scalar(c.log_probs.cols());
}

// ---------------------------------------------------------------------------
// Similarity subnet: pair encoding -> affine -> sigmoid

template <class Scalar>
struct SimilarityCache {
  Matrix<Scalar> pairs;
  Matrix<Scalar> z;
  Matrix<Scalar> out;
};

template <class Scalar>
SimilarityCache<Scalar> similarity_forward(const LayerParams<Scalar>& layer, Matrix<Scalar> pairs) {
  SimilarityCache<Scalar> c;
  c.pairs = std::move(pairs);
  c.z = dense_forward(layer, c.pairs);
  c.out = sigmoid(c.z);
  return c;
}

template <class Scalar>
Matrix<Scalar> similarity_backward(const LayerParams<Scalar>& layer, const SimilarityCache<Scalar>& c,
                                   const Matrix<Scalar>& dout, LayerParams<Scalar>& grad) {
  const Matrix<Scalar> dz = dout.cwiseProduct(c.out.cwiseProduct((Scalar(1) - c.out.array()).matrix()));
  return dense_backward(layer, c.pairs, dz, grad);
}

// ---------------------------------------------------------------------------
// Updates and verification

// Gradient ascent: theta <- theta + lr * grad. Negate the gradient for descent.
template <class Scalar>
void sgd_step(ModelParams<Scalar>& p, const GradientBuffer<Scalar>& g, Scalar learning_rate) {
  if (!(learning_rate > Scalar(0))) throw ConfigError("learning rate must be positive");
  bool finite = true;
  for_each_layer(
      [&](const LayerParams<Scalar>& gl, const LayerParams<Scalar>& pl) {
        if (gl.weights.rows() != pl.weights.rows() || gl.weights.cols() != pl.weights.cols() ||
            gl.bias.size() != pl.bias.size()) {
          throw ShapeError("sgd_step: gradient and parameter shapes differ");
        }
        finite = finite && gl.weights.allFinite() && gl.bias.allFinite();
      },
      g, p);
  if (!finite) throw DivergenceError("non-finite gradient");
  for_each_layer(
      [&](LayerParams<Scalar>& pl, const LayerParams<Scalar>& gl) {
        pl.weights += learning_rate * gl.weights;
        pl.bias += learning_rate * gl.bias;
      },
      p, g);
}

// Relative error |a - n| / max(|a|, |n|, 1e-8) between an analytic gradient
// and central differences (f(theta+eps) - f(theta-eps)) / 2eps, maximised over
// every parameter. `objective` maps ModelParams to a scalar.
template <class Scalar, class Objective>
Scalar finite_difference_check(const ModelParams<Scalar>& params, const GradientBuffer<Scalar>& analytic,
                               Objective&& objective, Scalar epsilon) {
  if (epsilon < Scalar(1e-7) || epsilon > Scalar(1e-3)) {
    throw ConfigError("finite-difference epsilon must lie in [1e-7, 1e-3]");
  }
  ModelParams<Scalar> probe = params;
  Scalar worst = 0;
  auto check = [&](Scalar& slot, Scalar expected) {
    const Scalar saved = slot;
    slot = saved + epsilon;
    const Scalar up = objective(std::as_const(probe));
    slot = saved - epsilon;
    const Scalar down = objective(std::as_const(probe));
    slot = saved;
    const Scalar numeric = (up - down) / (Scalar(2) * epsilon);
    const Scalar denom = std::max({std::abs(expected), std::abs(numeric), Scalar(1e-8)});
    worst = std::max(worst, std::abs(expected - numeric) / denom);
  };
  for_each_layer(
      [&](LayerParams<Scalar>& pl, const LayerParams<Scalar>& gl) {
        for (Index j = 0; j < pl.weights.cols(); ++j)
          for (Index i = 0; i < pl.weights.rows(); ++i) check(pl.weights(i, j), gl.weights(i, j));
        for (Index i = 0; i < pl.bias.size(); ++i) check(pl.bias(i), gl.bias(i));
      },
      probe, analytic);
  return worst;
}

// Gradient check of the policy subnet alone under the loss
// sum_c log pi(action_c | input_c).
template <class Scalar>
Scalar grad_check(const ModelParams<Scalar>& params, const Matrix<Scalar>& inputs,
                  const std::vector<int>& actions, Scalar epsilon) {
  const Vector<Scalar> ones = Vector<Scalar>::Ones(inputs.cols());
  auto grads = zero_gradients(params);
  const auto cache = policy_forward(params, inputs);
  policy_backward(params, cache, log_prob_logit_grad(cache, actions, ones), grads);

  auto objective = [&](const ModelParams<Scalar>& p) {
    const auto c = policy_forward(p, inputs);
    Scalar total = 0;
    for (Index col = 0; col < inputs.cols(); ++col) {
      total += c.log_probs(actions[static_cast<std::size_t>(col)], col);
    }
    return total;
  };
  return finite_difference_check(params, grads, objective, epsilon);
}

}  // namespace marlrank::nn
