#include <doctest.h>

#include <marlrank/env.hpp>
#include <marlrank/nn.hpp>
#include <marlrank/serialize.hpp>
#include <marlrank/trainer.hpp>

#include <random>
#include <sstream>

using namespace marlrank;
using namespace marlrank::nn;

namespace {

ModelShape small_shape(Index f = 3, Index k = 2, Index hidden = 6) {
  ModelShape s;
  s.feature_dim = f;
  s.neighbors = k;
  s.hidden = hidden;
  return s;
}

// A bare 3-layer policy net with arbitrary widths; the similarity layer is unused.
ModelParams<Real> random_policy_net(Index in, Index hidden, std::uint64_t seed, Activation act) {
  ModelParams<Real> p;
  p.shape.hidden = hidden;
  p.shape.activation = act;
  std::mt19937_64 rng(seed);
  std::normal_distribution<Real> g(0.0, 0.7);
  auto fill = [&](Index out, Index inn) {
    LayerParams<Real> l = LayerParams<Real>::zeros(out, inn);
    for (Index j = 0; j < inn; ++j)
      for (Index i = 0; i < out; ++i) l.weights(i, j) = g(rng);
    for (Index i = 0; i < out; ++i) l.bias(i) = g(rng);
    return l;
  };
  p.similarity = LayerParams<Real>::zeros(1, 4);
  p.hidden1 = fill(hidden, in);
  p.hidden2 = fill(hidden, hidden);
  p.output = fill(kNumLevels, hidden);
  return p;
}

MatrixXr random_inputs(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<Real> g(0.0, 1.0);
  MatrixXr x(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) x(i, j) = g(rng);
  return x;
}

}  // namespace

TEST_CASE("zero network outputs the uniform distribution") {
  const auto p = zero_params<Real>(small_shape());
  const auto c = policy_forward(p, random_inputs(p.shape.observation_dim(), 4, 1));
  const MatrixXr probs = c.probs();
  for (Index j = 0; j < probs.cols(); ++j)
    for (Index i = 0; i < 3; ++i) CHECK(probs(i, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("zero similarity layer gives 0.5") {
  const auto p = zero_params<Real>(small_shape());
  const auto c = similarity_forward(p.similarity, random_inputs(p.shape.pair_dim(), 5, 2));
  CHECK(c.out.isConstant(0.5));
}

TEST_CASE("identity layer passes its input") {
  LayerParams<Real> l = LayerParams<Real>::zeros(1, 1);
  l.weights(0, 0) = 1.0;
  MatrixXr x(1, 1);
  x(0, 0) = 2.0;
  CHECK(dense_forward(l, x)(0, 0) == 2.0);
  CHECK_THROWS_AS(dense_forward(l, MatrixXr(MatrixXr::Zero(2, 1))), ShapeError);
}

TEST_CASE("policy input dimension is checked") {
  const auto p = zero_params<Real>(small_shape());
  CHECK_THROWS_AS(policy_forward(p, MatrixXr(MatrixXr::Zero(p.shape.observation_dim() + 1, 1))), ShapeError);
}

TEST_CASE("softmax rows are probability vectors") {
  MatrixXr logits = random_inputs(3, 50, 3) * 40.0;
  const MatrixXr probs = softmax(logits);
  CHECK((probs.array() >= 0.0).all());
  for (Index j = 0; j < probs.cols(); ++j) CHECK(std::abs(probs.col(j).sum() - 1.0) < 1e-9);
  MatrixXr huge(3, 1);
  huge << 1000.0, 999.0, -1000.0;
  CHECK(log_softmax(huge).allFinite());
}

TEST_CASE("log-probability gradient w.r.t. logits is onehot minus softmax") {
  const auto p = random_policy_net(4, 5, 7, Activation::relu);
  const auto c = policy_forward(p, random_inputs(4, 3, 8));
  const std::vector<int> actions{0, 2, 1};
  const MatrixXr g = log_prob_logit_grad(c, actions, VectorXr(VectorXr::Ones(3)));
  const MatrixXr probs = c.probs();
  for (Index j = 0; j < 3; ++j) {
    for (Index i = 0; i < 3; ++i) {
      const Real onehot = i == actions[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
      CHECK(g(i, j) == doctest::Approx(onehot - probs(i, j)).epsilon(1e-14));
    }
  }
}

TEST_CASE("policy gradients match finite differences over seeds") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    CAPTURE(seed);
    for (auto act : {Activation::relu, Activation::tanh}) {
      const auto p = random_policy_net(4, 3, seed, act);
      const auto x = random_inputs(4, 6, seed + 100);
      std::vector<int> actions;
      for (int i = 0; i < 6; ++i) actions.push_back(static_cast<int>((seed + i) % 3));
      CHECK(grad_check(p, x, actions, 1e-5) < 1e-4);
    }
  }
  CHECK(trainer::policy_grad_check(0) < 1e-4);
}

TEST_CASE("corrupted bias gradient is detected") {
  CHECK(trainer::policy_grad_check(0, true) > 1e-2);
  CHECK(trainer::end_to_end_grad_check(0, true) > 1e-2);
}

TEST_CASE("zero network has an exact gradient check") {
  auto p = zero_params<Real>(small_shape());
  const auto x = random_inputs(p.shape.observation_dim(), 4, 4);
  CHECK(grad_check(p, x, {0, 0, 0, 2}, 1e-5) < 1e-8);
}

TEST_CASE("zero upstream gradient leaves the buffer at zero") {
  const auto p = random_policy_net(4, 3, 1, Activation::relu);
  const auto c = policy_forward(p, random_inputs(4, 2, 5));
  auto g = zero_gradients(p);
  policy_backward(p, c, MatrixXr(MatrixXr::Zero(3, 2)), g);
  for_each_layer([](const LayerParams<Real>& l) { CHECK((l.weights.isZero() && l.bias.isZero())); }, g);
}

TEST_CASE("finite-difference epsilon range") {
  const auto p = zero_params<Real>(small_shape());
  const auto x = random_inputs(p.shape.observation_dim(), 1, 4);
  CHECK_THROWS_AS(grad_check(p, x, {0}, 1e-2), ConfigError);
  CHECK_THROWS_AS(grad_check(p, x, {0}, 1e-9), ConfigError);
}

TEST_CASE("sgd_step ascends") {
  auto p = zero_params<Real>(small_shape());
  auto g = zero_gradients(p);
  p.output.bias(0) = 1.0;
  g.output.bias(0) = 2.0;
  p.output.bias(1) = 0.5;
  g.output.bias(1) = 1.0;
  auto q = p;
  sgd_step(q, g, 0.1);
  CHECK(q.output.bias(0) == doctest::Approx(1.2).epsilon(1e-15));
  q = p;
  sgd_step(q, g, 4e-7);
  CHECK(q.output.bias(1) == doctest::Approx(0.5000004).epsilon(1e-15));

  auto fixed = p;
  sgd_step(fixed, zero_gradients(p), 0.3);
  CHECK(fixed == p);

  CHECK_THROWS_AS(sgd_step(fixed, g, 0.0), ConfigError);
  g.hidden2.weights(0, 0) = std::numeric_limits<Real>::infinity();
  CHECK_THROWS_AS(sgd_step(fixed, g, 0.1), DivergenceError);
  auto other = zero_gradients(zero_params<Real>(small_shape(4)));
  CHECK_THROWS_AS(sgd_step(fixed, other, 0.1), ShapeError);
}

TEST_CASE("init_params is seeded and bounded") {
  const auto shape = small_shape(5, 2, 10);
  const auto a = init_params<Real>(shape, 3);
  const auto b = init_params<Real>(shape, 3);
  const auto c = init_params<Real>(shape, 4);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  const Real bound = std::sqrt(6.0 / static_cast<Real>(shape.observation_dim() + shape.hidden));
  CHECK(a.hidden1.weights.cwiseAbs().maxCoeff() <= bound);
  CHECK(a.hidden1.bias.isZero());
}

TEST_CASE("checkpoint round trip is bit-exact") {
  auto shape = small_shape(7, 3, 9);
  shape.activation = Activation::tanh;
  shape.encoding = ActionEncoding::one_hot;
  const auto p = init_params<Real>(shape, 12);
  std::stringstream buf;
  save_params(buf, p);
  const auto q = load_params(buf);
  CHECK(q == p);
  CHECK(q.shape == p.shape);
}

TEST_CASE("truncated or foreign checkpoints are rejected") {
  const auto p = init_params<Real>(small_shape(), 1);
  std::stringstream buf;
  save_params(buf, p);
  const std::string bytes = buf.str();
  for (std::size_t cut : {std::size_t{0}, std::size_t{4}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
    std::stringstream partial(bytes.substr(0, cut));
    CHECK_THROWS(load_params(partial));
  }
  std::string bad = bytes;
  bad[0] = 'X';
  std::stringstream wrong(bad);
  CHECK_THROWS(load_params(wrong));
}

TEST_CASE("feature-width mismatch surfaces when the model is used") {
  const auto p = init_params<Real>(small_shape(46, 2, 8), 1);
  std::stringstream buf;
  save_params(buf, p);
  const auto q = load_params(buf);
  letor::QueryGroup g;
  g.query_id = "1";
  g.features = MatrixXr::Random(45, 4);
  g.labels = {0, 1, 2, 0};
  g.comments.resize(4);
  CHECK_THROWS_AS(env::build_neighbor_graph(q, g, 2), ShapeError);
}
