#include <marlrank/policy.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace marlrank::policy {
namespace {

Index effective_cutoff(Index cutoff, Index n) { return cutoff > 0 ? cutoff : std::max<Index>(n, 1); }

std::vector<int> argmax_levels(const MatrixXr& probs) {
  std::vector<int> levels(static_cast<std::size_t>(probs.cols()));
  for (Index c = 0; c < probs.cols(); ++c) {
    Index best = 0;
    probs.col(c).maxCoeff(&best);
    levels[static_cast<std::size_t>(c)] = static_cast<int>(best);
  }
  return levels;
}

VectorXr expected_scores(const MatrixXr& probs) {
  return (probs.row(1) + 2.0 * probs.row(2)).transpose();
}

// t = 0 observations: zero previous actions.
MatrixXr initial_observations(const Params& params, const letor::QueryGroup& group,
                              env::NeighborGraph& graph_out) {
  graph_out = env::build_neighbor_graph(params, group, params.shape.neighbors);
  return env::base_observations(group, graph_out, params.shape);
}

}  // namespace

void TrainConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(pretrain_lr > 0.0)) throw ConfigError("pretrain learning rate must be positive");
  if (train_steps < 1 || eval_steps < 1) throw ConfigError("episode length T must be at least 1");
  if (neighbors < 1) throw ConfigError("neighbour count k must be positive");
  if (reward_cutoff < 0) throw ConfigError("reward cutoff must be >= 0");
  if (hidden < 1) throw ConfigError("hidden width must be positive");
  if (epochs < 0 || pretrain_epochs < 0 || patience < 0) {
    throw ConfigError("epoch counts must be non-negative");
  }
}

nn::ModelShape TrainConfig::shape(Index feature_dim) const {
  nn::ModelShape s;
  s.feature_dim = feature_dim;
  s.neighbors = neighbors;
  s.hidden = hidden;
  s.activation = activation;
  s.encoding = encoding;
  return s;
}

PolicyOutput output_from_probs(const Eigen::Ref<const VectorXr>& probs) {
  if (probs.size() != kNumLevels) throw ShapeError("policy output must have three levels");
  PolicyOutput out;
  out.probs = probs;
  out.expected_score = probs(1) + 2.0 * probs(2);
  return out;
}

PolicyOutput policy_forward(const Params& params, const Eigen::Ref<const VectorXr>& observation) {
  const auto cache = nn::policy_forward(params, MatrixXr(observation));
  return output_from_probs(cache.probs().col(0));
}

ActionLevel sample_action(const PolicyOutput& output, Rng& rng) {
  std::uniform_real_distribution<Real> uniform(0.0, 1.0);
  const Real u = uniform(rng);
  Real cumulative = 0.0;
  int last_positive = 0;
  for (int level = 0; level < kNumLevels; ++level) {
    if (output.probs(level) <= 0.0) continue;
    last_positive = level;
    cumulative += output.probs(level);
    if (u < cumulative) return {level};
  }
  return {last_positive};
}

Real greedy_score(const PolicyOutput& output) { return output.expected_score; }

PolicyFn network_policy(const Params& params) {
  return [&params](const env::EnvState&, const MatrixXr& observations) {
    return nn::policy_forward(params, observations).probs();
  };
}

Trajectory rollout_from(env::EnvState state, const PolicyFn& policy, RolloutMode mode, Rng* rng) {
  if (mode == RolloutMode::sample && rng == nullptr) throw Error("sample rollout needs an rng");
  Trajectory traj;
  traj.graph = state.graph;
  const auto encoding = state.shape.encoding;
  while (state.t < state.horizon) {
    const MatrixXr obs = env::build_observations(state);
    StepRecord step;
    step.previous_actions = state.last_actions;
    step.probs = policy(state, obs);
    if (step.probs.rows() != kNumLevels || step.probs.cols() != state.num_agents()) {
      throw ShapeError("policy returned a distribution of the wrong shape");
    }
    step.scores = expected_scores(step.probs);

    if (mode == RolloutMode::sample) {
      std::vector<ActionLevel> joint;
      joint.reserve(static_cast<std::size_t>(state.num_agents()));
      for (Index i = 0; i < state.num_agents(); ++i) {
        joint.push_back(sample_action(output_from_probs(step.probs.col(i)), *rng));
        step.actions.push_back(joint.back().level);
      }
      state = env::env_step(state, joint);
    } else {
      step.actions = argmax_levels(step.probs);
      MatrixXr codes(state.shape.action_width(), state.num_agents());
      for (Index i = 0; i < state.num_agents(); ++i) {
        codes.col(i) = env::encode_distribution(step.probs.col(i), encoding);
      }
      state = env::env_step_encoded(state, codes);
    }
    traj.steps.push_back(std::move(step));
  }
  if (!traj.steps.empty()) traj.final_scores = traj.steps.back().scores;
  return traj;
}

Trajectory rollout(const Params& params, const letor::QueryGroup& group, Index steps, RolloutMode mode,
                   Rng* rng) {
  auto graph = env::build_neighbor_graph(params, group, params.shape.neighbors);
  auto state = env::make_state(group, std::move(graph), params.shape, steps);
  return rollout_from(std::move(state), network_policy(params), mode, rng);
}

MatrixXr step_observations(const Params& params, const letor::QueryGroup& group,
                           const Trajectory& trajectory, std::size_t step) {
  const auto graph = env::refresh_similarities(params, group, trajectory.graph);
  MatrixXr obs = env::base_observations(group, graph, params.shape);
  env::fill_action_slots(obs, graph, params.shape, trajectory.steps.at(step).previous_actions);
  return obs;
}

std::vector<Real> discounted_returns(std::span<const Real> rewards, Real gamma) {
  std::vector<Real> returns(rewards.size(), 0.0);
  Real running = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    running = rewards[t] + gamma * running;
    returns[t] = running;
  }
  return returns;
}

std::vector<Real> normalize_returns(std::span<const Real> returns) {
  std::vector<Real> out(returns.begin(), returns.end());
  if (out.size() < 2) return out;
  const auto [lo, hi] = std::minmax_element(out.begin(), out.end());
  if (*lo == *hi) return out;
  const Real n = static_cast<Real>(out.size());
  const Real mean = std::accumulate(out.begin(), out.end(), 0.0) / n;
  Real var = 0.0;
  for (Real r : out) var += (r - mean) * (r - mean);
  var /= n;
  if (!(var > 0.0)) return out;
  const Real sd = std::sqrt(var);
  for (Real& r : out) r = (r - mean) / sd;
  return out;
}

EpisodeBatch collect_episodes(const Params& params, const letor::Dataset& ds,
                              std::span<const std::size_t> group_indices, const TrainConfig& config,
                              Rng& rng) {
  EpisodeBatch batch;
  std::vector<Real> returns;
  std::vector<Real> individual;
  for (std::size_t gi : group_indices) {
    const auto& group = ds.groups.at(gi);
    auto traj = rollout(params, group, config.train_steps, RolloutMode::sample, &rng);
    traj.group_index = gi;

    VectorXr ranked = traj.final_scores;
    if (config.reward_scores == RewardScores::sampled) {
      const auto& last = traj.steps.back();
      // Levels dominate; expected scores in [0, 2] / 4 only order within a level.
      for (Index i = 0; i < group.size(); ++i) {
        ranked(i) = last.actions[static_cast<std::size_t>(i)] + last.scores(i) / 4.0;
      }
    }
    const Real terminal = env::terminal_reward(ranked, group.labels,
                                               effective_cutoff(config.reward_cutoff, group.size()));
    std::vector<Real> rewards(traj.steps.size(), 0.0);
    rewards.back() = terminal;
    const auto step_returns = discounted_returns(rewards, config.gamma);

    const std::size_t index = batch.trajectories.size();
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      for (Index i = 0; i < group.size(); ++i) {
        const int level = traj.steps[t].actions[static_cast<std::size_t>(i)];
        TrajectorySample s;
        s.trajectory = index;
        s.query_id = group.query_id;
        s.agent = i;
        s.step = static_cast<Index>(t);
        s.action = {level};
        batch.samples.push_back(std::move(s));
        returns.push_back(step_returns[t]);
        individual.push_back(env::individual_reward({level}, group.labels[static_cast<std::size_t>(i)],
                                                    config.schedule));
      }
    }
    batch.terminal_rewards.push_back(terminal);
    batch.trajectories.push_back(std::move(traj));
  }

  const auto normalized = normalize_returns(returns);
  for (std::size_t s = 0; s < batch.samples.size(); ++s) {
    batch.samples[s].advantage = normalized[s] + individual[s];
  }
  return batch;
}

namespace {

struct TrajectoryTerms {
  MatrixXr observations;        // obs_dim x (T*N), column t*N + i
  std::vector<int> actions;
  VectorXr coefficients;
};

std::vector<TrajectoryTerms> gather_terms(const Params& params, const letor::Dataset& ds,
                                          const EpisodeBatch& batch) {
  const Real scale = 1.0 / static_cast<Real>(batch.samples.size());
  std::vector<TrajectoryTerms> terms(batch.trajectories.size());
  for (std::size_t k = 0; k < batch.trajectories.size(); ++k) {
    const auto& traj = batch.trajectories[k];
    const auto& group = ds.groups.at(traj.group_index);
    const Index n = group.size();
    const Index steps = static_cast<Index>(traj.steps.size());
    auto& term = terms[k];
    term.observations.resize(params.shape.observation_dim(), steps * n);
    for (Index t = 0; t < steps; ++t) {
      term.observations.middleCols(t * n, n) = step_observations(params, group, traj, static_cast<std::size_t>(t));
    }
    term.actions.assign(static_cast<std::size_t>(steps * n), 0);
    term.coefficients = VectorXr::Zero(steps * n);
  }
  for (const auto& s : batch.samples) {
    const auto& group = ds.groups.at(batch.trajectories.at(s.trajectory).group_index);
    const Index col = s.step * group.size() + s.agent;
    auto& term = terms[s.trajectory];
    term.actions[static_cast<std::size_t>(col)] = s.action.level;
    term.coefficients(col) += scale * s.advantage;
  }
  return terms;
}

}  // namespace

Gradients reinforce_gradient(const Params& params, const letor::Dataset& ds, const EpisodeBatch& batch) {
  auto grads = nn::zero_gradients(params);
  if (batch.samples.empty()) return grads;
  const auto terms = gather_terms(params, ds, batch);
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const auto& term = terms[k];
    if (term.coefficients.isZero(0.0)) continue;
    const auto& traj = batch.trajectories[k];
    const auto& group = ds.groups.at(traj.group_index);
    const Index n = group.size();

    const auto cache = nn::policy_forward(params, term.observations);
    const MatrixXr dobs =
        nn::policy_backward(params, cache, nn::log_prob_logit_grad(cache, term.actions, term.coefficients), grads);

    // Similarities are constant over the episode, so per-agent observation
    // gradients can be summed over steps before routing.
    MatrixXr per_agent = MatrixXr::Zero(dobs.rows(), n);
    for (Index c = 0; c < dobs.cols(); ++c) per_agent.col(c % n) += dobs.col(c);
    const auto graph = env::refresh_similarities(params, group, traj.graph);
    for (Index i = 0; i < n; ++i) env::backprop_observation(params, group, graph, i, per_agent.col(i), grads);
  }
  return grads;
}

Real reinforce_objective(const Params& params, const letor::Dataset& ds, const EpisodeBatch& batch) {
  if (batch.samples.empty()) return 0.0;
  const auto terms = gather_terms(params, ds, batch);
  Real total = 0.0;
  for (const auto& term : terms) {
    const auto cache = nn::policy_forward(params, term.observations);
    for (Index c = 0; c < term.coefficients.size(); ++c) {
      if (term.coefficients(c) != 0.0) {
        total += term.coefficients(c) * cache.log_probs(term.actions[static_cast<std::size_t>(c)], c);
      }
    }
  }
  return total;
}

void reinforce_update(Params& params, const letor::Dataset& ds, const EpisodeBatch& batch,
                      Real learning_rate) {
  if (batch.samples.empty()) throw Error("reinforce_update: empty sample batch");
  nn::sgd_step(params, reinforce_gradient(params, ds, batch), learning_rate);
}

PretrainReport pretrain(Params& params, const letor::Dataset& train, const TrainConfig& config, Rng& rng) {
  if (train.empty()) throw DataError("pretrain: empty training set");
  PretrainReport report;
  std::vector<std::size_t> order(train.groups.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (Index epoch = 0; epoch < config.pretrain_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    Real loss_sum = 0.0;
    std::size_t docs = 0;
    for (std::size_t gi : order) {
      const auto& group = train.groups[gi];
      env::NeighborGraph graph;
      MatrixXr obs = initial_observations(params, group, graph);
      const auto cache = nn::policy_forward(params, std::move(obs));
      const Real ce = nn::cross_entropy(cache, group.labels);
      if (!std::isfinite(ce)) throw DivergenceError("pretrain: non-finite cross-entropy");
      loss_sum += ce * static_cast<Real>(group.size());
      docs += static_cast<std::size_t>(group.size());

      // Ascend the mean log-likelihood, i.e. descend cross-entropy.
      auto grads = nn::zero_gradients(params);
      const VectorXr coef = VectorXr::Constant(group.size(), 1.0 / static_cast<Real>(group.size()));
      const MatrixXr dobs =
          nn::policy_backward(params, cache, nn::log_prob_logit_grad(cache, group.labels, coef), grads);
      for (Index i = 0; i < group.size(); ++i) env::backprop_observation(params, group, graph, i, dobs.col(i), grads);
      nn::sgd_step(params, grads, config.pretrain_lr);
    }
    report.epoch_cross_entropy.push_back(loss_sum / static_cast<Real>(docs));
  }
  return report;
}

Real initial_cross_entropy(const Params& params, const letor::Dataset& ds, Index neighbors) {
  if (neighbors != params.shape.neighbors) throw ShapeError("neighbour count differs from model");
  Real total = 0.0;
  std::size_t docs = 0;
  for (const auto& group : ds.groups) {
    env::NeighborGraph graph;
    const auto cache = nn::policy_forward(params, initial_observations(params, group, graph));
    total += nn::cross_entropy(cache, group.labels) * static_cast<Real>(group.size());
    docs += static_cast<std::size_t>(group.size());
  }
  return docs == 0 ? 0.0 : total / static_cast<Real>(docs);
}

Real action_accuracy(const Params& params, const letor::Dataset& ds) {
  std::size_t hits = 0;
  std::size_t docs = 0;
  for (const auto& group : ds.groups) {
    env::NeighborGraph graph;
    const auto cache = nn::policy_forward(params, initial_observations(params, group, graph));
    const auto predicted = argmax_levels(cache.log_probs);
    for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == group.labels[i];
    docs += predicted.size();
  }
  return docs == 0 ? 0.0 : static_cast<Real>(hits) / static_cast<Real>(docs);
}

EvalResult evaluate_traces(const letor::Dataset& ds, Index steps, const ScoreTraceFn& traces) {
  if (ds.empty()) throw DataError("evaluate: empty dataset");
  EvalResult result;
  result.trace.assign(static_cast<std::size_t>(steps), metrics::NdcgSet{});
  for (const auto& group : ds.groups) {
    const auto scores = traces(group);
    if (static_cast<Index>(scores.size()) != steps) throw Error("evaluate: trace length differs from T");
    for (std::size_t t = 0; t < scores.size(); ++t) {
      const auto set = metrics::ndcg_set(scores[t], group.labels);
      for (std::size_t c = 0; c < set.size(); ++c) result.trace[t][c] += set[c];
    }
  }
  result.queries = static_cast<Index>(ds.groups.size());
  for (auto& set : result.trace)
    for (auto& v : set) v /= static_cast<Real>(result.queries);
  return result;
}

EvalResult evaluate(const Params& params, const letor::Dataset& ds, Index steps) {
  return evaluate_traces(ds, steps, [&](const letor::QueryGroup& group) {
    const auto traj = rollout(params, group, steps, RolloutMode::greedy, nullptr);
    std::vector<VectorXr> scores;
    for (const auto& s : traj.steps) scores.push_back(s.scores);
    return scores;
  });
}

}  // namespace marlrank::policy
