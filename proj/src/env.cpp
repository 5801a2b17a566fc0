#include <marlrank/env.hpp>
#include <marlrank/metrics.hpp>

#include <algorithm>
#include <numeric>

namespace marlrank::env {
namespace {

Real sigmoid(Real z) { return nn::sigmoid(Eigen::Matrix<Real, 1, 1>::Constant(z))(0, 0); }

void require_feature_dim(const Params& params, const letor::QueryGroup& group) {
  if (params.shape.feature_dim != group.feature_dim()) {
    throw ShapeError("model expects " + std::to_string(params.shape.feature_dim) +
                     " features, query " + group.query_id + " has " +
                     std::to_string(group.feature_dim()));
  }
}

Index action_slot(const nn::ModelShape& s, Index n) { return s.feature_dim + n * s.action_width(); }
Index similarity_slot(const nn::ModelShape& s, Index n) {
  return s.feature_dim + s.neighbors * s.action_width() + n;
}
Index weighted_block(const nn::ModelShape& s) {
  return s.feature_dim + s.neighbors * s.action_width() + s.neighbors;
}

}  // namespace

VectorXr pair_encoding(const Eigen::Ref<const VectorXr>& di, const Eigen::Ref<const VectorXr>& dj) {
  if (di.size() != dj.size()) throw ShapeError("pair_encoding: feature dimensions differ");
  const Index f = di.size();
  VectorXr e(4 * f);
  e << di, dj, (di - dj).cwiseAbs(), di.cwiseProduct(dj);
  return e;
}

Real similarity_score(const Params& params, const Eigen::Ref<const VectorXr>& di,
                      const Eigen::Ref<const VectorXr>& dj) {
  if (di.size() != params.shape.feature_dim || dj.size() != params.shape.feature_dim) {
    throw ShapeError("similarity_score: expected " + std::to_string(params.shape.feature_dim) +
                     " features");
  }
  const auto& layer = params.similarity;
  return sigmoid(layer.weights.row(0).dot(pair_encoding(di, dj)) + layer.bias(0));
}

MatrixXr similarity_matrix(const Params& params, const letor::QueryGroup& group) {
  require_feature_dim(params, group);
  const Index f = group.feature_dim();
  const Index n = group.size();
  const auto& d = group.features;
  const RowVector<Real> w = params.similarity.weights.row(0);
  const VectorXr w1 = w.segment(0, f).transpose();
  const VectorXr w2 = w.segment(f, f).transpose();
  const VectorXr w3 = w.segment(2 * f, f).transpose();
  const VectorXr w4 = w.segment(3 * f, f).transpose();

  const VectorXr own = d.transpose() * w1;
  const VectorXr other = d.transpose() * w2;
  const MatrixXr product = d.transpose() * w4.asDiagonal() * d;

  MatrixXr z(n, n);
  for (Index i = 0; i < n; ++i) {
    const RowVector<Real> absdiff = w3.transpose() * (d.colwise() - d.col(i)).cwiseAbs();
    z.row(i) = (own(i) + params.similarity.bias(0)) + other.transpose().array() + absdiff.array() +
               product.row(i).array();
  }
  const MatrixXr s = nn::sigmoid(z);
  return (s + s.transpose()) / 2.0;
}

NeighborGraph build_neighbor_graph(const Params& params, const letor::QueryGroup& group, Index k) {
  if (k < 1) throw ConfigError("neighbour count k must be positive");
  const Index n = group.size();
  const MatrixXr s = similarity_matrix(params, group);

  NeighborGraph graph;
  graph.k = k;
  graph.neighbors.resize(static_cast<std::size_t>(n));
  std::vector<Index> candidates;
  for (Index i = 0; i < n; ++i) {
    candidates.clear();
    for (Index j = 0; j < n; ++j)
      if (j != i) candidates.push_back(j);
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](Index a, Index b) { return s(i, a) > s(i, b); });
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), candidates.size());
    auto& list = graph.neighbors[static_cast<std::size_t>(i)];
    for (std::size_t c = 0; c < take; ++c) list.push_back({candidates[c], s(i, candidates[c])});
  }
  return graph;
}

NeighborGraph refresh_similarities(const Params& params, const letor::QueryGroup& group,
                                   const NeighborGraph& graph) {
  require_feature_dim(params, group);
  NeighborGraph out = graph;
  for (std::size_t i = 0; i < out.neighbors.size(); ++i) {
    for (auto& e : out.neighbors[i]) {
      const auto di = group.features.col(static_cast<Index>(i));
      const auto dj = group.features.col(e.index);
      e.similarity = (similarity_score(params, di, dj) + similarity_score(params, dj, di)) / 2.0;
    }
  }
  return out;
}

VectorXr encode_level(int level, nn::ActionEncoding encoding) {
  if (level < 0 || level >= kNumLevels) throw Error("action level out of range");
  if (encoding == nn::ActionEncoding::scalar) return VectorXr::Constant(1, level / 2.0);
  VectorXr code = VectorXr::Zero(kNumLevels);
  code(level) = 1.0;
  return code;
}

VectorXr encode_distribution(const Eigen::Ref<const VectorXr>& probs, nn::ActionEncoding encoding) {
  if (encoding == nn::ActionEncoding::one_hot) return probs;
  const Real expected = probs(1) + 2.0 * probs(2);
  return VectorXr::Constant(1, std::clamp(expected / 2.0, 0.0, 1.0));
}

MatrixXr base_observations(const letor::QueryGroup& group, const NeighborGraph& graph,
                           const nn::ModelShape& shape) {
  if (shape.feature_dim != group.feature_dim()) {
    throw ShapeError("model expects " + std::to_string(shape.feature_dim) + " features, query " +
                     group.query_id + " has " + std::to_string(group.feature_dim()));
  }
  if (graph.size() != group.size()) throw ShapeError("neighbour graph does not match query size");
  if (graph.k != shape.neighbors) {
    throw ShapeError("graph built with k=" + std::to_string(graph.k) + ", model expects k=" +
                     std::to_string(shape.neighbors));
  }
  const Index f = shape.feature_dim;
  const Index k = shape.neighbors;
  MatrixXr obs = MatrixXr::Zero(shape.observation_dim(), group.size());
  obs.topRows(f) = group.features;
  for (Index i = 0; i < group.size(); ++i) {
    const auto& list = graph.neighbors[static_cast<std::size_t>(i)];
    auto weighted = obs.col(i).segment(weighted_block(shape), f);
    for (std::size_t n = 0; n < list.size(); ++n) {
      obs(similarity_slot(shape, static_cast<Index>(n)), i) = list[n].similarity;
      weighted += list[n].similarity * group.features.col(list[n].index);
    }
    weighted /= static_cast<Real>(k);
  }
  return obs;
}

void fill_action_slots(MatrixXr& observations, const NeighborGraph& graph, const nn::ModelShape& shape,
                       const MatrixXr& last_actions) {
  const Index w = shape.action_width();
  for (Index i = 0; i < observations.cols(); ++i) {
    const auto& list = graph.neighbors[static_cast<std::size_t>(i)];
    for (std::size_t n = 0; n < list.size(); ++n) {
      observations.col(i).segment(action_slot(shape, static_cast<Index>(n)), w) =
          last_actions.col(list[n].index);
    }
  }
}

EnvState make_state(const letor::QueryGroup& group, NeighborGraph graph, const nn::ModelShape& shape,
                    Index horizon) {
  if (horizon < 1) throw ConfigError("episode length T must be at least 1");
  EnvState s;
  s.group = &group;
  s.shape = shape;
  s.horizon = horizon;
  s.base_observations = base_observations(group, graph, shape);
  s.graph = std::move(graph);
  s.last_actions = MatrixXr::Zero(shape.action_width(), group.size());
  return s;
}

MatrixXr build_observations(const EnvState& state) {
  MatrixXr obs = state.base_observations;
  fill_action_slots(obs, state.graph, state.shape, state.last_actions);
  return obs;
}

VectorXr build_observation(const EnvState& state, Index i) {
  if (i < 0 || i >= state.num_agents()) throw Error("agent index out of range");
  VectorXr obs = state.base_observations.col(i);
  const auto& list = state.graph.neighbors[static_cast<std::size_t>(i)];
  const Index w = state.shape.action_width();
  for (std::size_t n = 0; n < list.size(); ++n) {
    obs.segment(action_slot(state.shape, static_cast<Index>(n)), w) =
        state.last_actions.col(list[n].index);
  }
  return obs;
}

EnvState env_step_encoded(const EnvState& state, const MatrixXr& codes) {
  if (state.t >= state.horizon) {
    throw Error("env_step: episode already finished at t=" + std::to_string(state.t));
  }
  if (codes.cols() != state.num_agents() || codes.rows() != state.shape.action_width()) {
    throw ShapeError("env_step: expected " + std::to_string(state.num_agents()) + " actions, got " +
                     std::to_string(codes.cols()));
  }
  EnvState next = state;
  next.last_actions = codes;
  ++next.t;
  return next;
}

EnvState env_step(const EnvState& state, std::span<const ActionLevel> joint_actions) {
  if (static_cast<Index>(joint_actions.size()) != state.num_agents()) {
    throw ShapeError("env_step: expected " + std::to_string(state.num_agents()) + " actions, got " +
                     std::to_string(joint_actions.size()));
  }
  MatrixXr codes(state.shape.action_width(), state.num_agents());
  for (Index i = 0; i < state.num_agents(); ++i) {
    codes.col(i) = encode_level(joint_actions[static_cast<std::size_t>(i)].level, state.shape.encoding);
  }
  return env_step_encoded(state, codes);
}

void backprop_observation(const Params& params, const letor::QueryGroup& group,
                          const NeighborGraph& graph, Index i,
                          const Eigen::Ref<const VectorXr>& dobs, Gradients& grads) {
  const auto& shape = params.shape;
  const auto& layer = params.similarity;
  const auto dweighted = dobs.segment(weighted_block(shape), shape.feature_dim);
  const auto di = group.features.col(i);
  const auto& list = graph.neighbors[static_cast<std::size_t>(i)];
  for (std::size_t n = 0; n < list.size(); ++n) {
    const auto dj = group.features.col(list[n].index);
    const Real ds = dobs(similarity_slot(shape, static_cast<Index>(n))) +
                    dweighted.dot(dj) / static_cast<Real>(shape.neighbors);
    if (ds == 0.0) continue;
    // s = (sigmoid(z_ij) + sigmoid(z_ji)) / 2
    for (const auto& e : {pair_encoding(di, dj), pair_encoding(dj, di)}) {
      const Real sig = sigmoid(layer.weights.row(0).dot(e) + layer.bias(0));
      const Real dz = 0.5 * ds * sig * (1.0 - sig);
      grads.similarity.weights.row(0) += dz * e.transpose();
      grads.similarity.bias(0) += dz;
    }
  }
}

Real terminal_reward(const Eigen::Ref<const VectorXr>& final_scores, std::span<const int> labels,
                     Index cutoff) {
  const Real best = std::any_of(labels.begin(), labels.end(), [](int y) { return y > 0; }) ? 1.0 : 0.0;
  return metrics::ndcg_at_k(final_scores, labels, cutoff) - best;
}

Real individual_reward(ActionLevel action, int label, const RewardSchedule& schedule) {
  if (label < 0 || label >= kNumLevels) throw Error("label out of range");
  return action.level == label ? schedule.match[static_cast<std::size_t>(label)] : schedule.mismatch;
}

}  // namespace marlrank::env
