#pragma once

// Shared policy over three relevance levels, trajectory sampling, and the
// REINFORCE update.
//
// Per episode (one query) every agent acts for T synchronous steps. The only
// non-zero team reward is the terminal one, NDCG_T - NDCG_best, computed from
// the expected scores at the last step. Each agent-step sample is weighted by
// its normalised discounted return plus a small individual reward, and the
// update ascends
//
//   mean_samples[ advantage * grad log pi(a | o) ]
//
// where the gradient reaches the similarity layer through the similarity
// slots and the weighted neighbour block of the observation.

#include <marlrank/env.hpp>
#include <marlrank/metrics.hpp>

#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace marlrank::policy {

using Params = nn::ModelParams<Real>;
using Gradients = nn::GradientBuffer<Real>;
using Rng = std::mt19937_64;

enum class RolloutMode { sample, greedy };
enum class UpdateCadence { per_epoch, per_query };

// Scores ranked for the terminal NDCG during training.
enum class RewardScores {
  expected,  // expected level at the last step
  sampled,   // sampled level at the last step, ties broken by expected level
};

struct TrainConfig {
  Real gamma = 0.95;
  Real learning_rate = 4e-7;
  Index train_steps = 10;
  Index eval_steps = 10;
  Index neighbors = 2;
  Index reward_cutoff = 10;  // 0 means full-list NDCG
  Index hidden = 100;
  nn::Activation activation = nn::Activation::relu;
  nn::ActionEncoding encoding = nn::ActionEncoding::scalar;
  Index pretrain_epochs = 20;
  Real pretrain_lr = 0.05;
  Index epochs = 50;
  Index patience = 0;  // 0 disables early stopping
  env::RewardSchedule schedule = env::RewardSchedule::mq2007();
  UpdateCadence cadence = UpdateCadence::per_epoch;
  RewardScores reward_scores = RewardScores::expected;
  std::uint64_t seed = 0;

  void validate() const;
  nn::ModelShape shape(Index feature_dim) const;
};

struct PolicyOutput {
  Eigen::Matrix<Real, kNumLevels, 1> probs;
  Real expected_score = 0.0;  // 0*p0 + 1*p1 + 2*p2
};

PolicyOutput policy_forward(const Params& params, const Eigen::Ref<const VectorXr>& observation);
PolicyOutput output_from_probs(const Eigen::Ref<const VectorXr>& probs);

ActionLevel sample_action(const PolicyOutput& output, Rng& rng);
Real greedy_score(const PolicyOutput& output);

struct StepRecord {
  MatrixXr previous_actions;  // encoded codes the observations were built from
  std::vector<int> actions;   // sampled levels (argmax in greedy mode)
  MatrixXr probs;             // 3 x N
  VectorXr scores;            // expected score per agent
};

struct Trajectory {
  std::size_t group_index = 0;
  env::NeighborGraph graph;
  std::vector<StepRecord> steps;
  VectorXr final_scores;
};

// Maps the environment state and its observation matrix to a 3 x N
// distribution over levels. Lets fixed policies drive the same rollout loop.
using PolicyFn = std::function<MatrixXr(const env::EnvState&, const MatrixXr& observations)>;

PolicyFn network_policy(const Params& params);

// Runs state.horizon - state.t steps. Sample mode needs an rng; greedy mode
// feeds encoded distributions (expected/2 for scalar encoding) forward.
Trajectory rollout_from(env::EnvState state, const PolicyFn& policy, RolloutMode mode, Rng* rng);

Trajectory rollout(const Params& params, const letor::QueryGroup& group, Index steps, RolloutMode mode,
                   Rng* rng);

// Observation matrix (obs_dim x N) used at `step` of a trajectory under `params`.
MatrixXr step_observations(const Params& params, const letor::QueryGroup& group,
                           const Trajectory& trajectory, std::size_t step);

std::vector<Real> discounted_returns(std::span<const Real> rewards, Real gamma);

// (R - mean) / std with population std; passes through when fewer than two
// values or zero variance.
std::vector<Real> normalize_returns(std::span<const Real> returns);

struct TrajectorySample {
  std::size_t trajectory = 0;  // index into the batch's trajectories
  std::string query_id;
  Index agent = 0;
  Index step = 0;
  ActionLevel action;
  Real advantage = 0.0;  // normalised return + individual reward
};

struct EpisodeBatch {
  std::vector<Trajectory> trajectories;
  std::vector<TrajectorySample> samples;
  std::vector<Real> terminal_rewards;  // one per trajectory
};

// Samples one trajectory per listed group and assembles normalised samples.
EpisodeBatch collect_episodes(const Params& params, const letor::Dataset& ds,
                              std::span<const std::size_t> group_indices, const TrainConfig& config,
                              Rng& rng);

// Mean over samples of advantage * grad log pi(a | o).
Gradients reinforce_gradient(const Params& params, const letor::Dataset& ds, const EpisodeBatch& batch);

// The quantity reinforce_gradient differentiates, evaluated by forward passes
// only; neighbour indices and previous actions are held fixed.
Real reinforce_objective(const Params& params, const letor::Dataset& ds, const EpisodeBatch& batch);

void reinforce_update(Params& params, const letor::Dataset& ds, const EpisodeBatch& batch,
                      Real learning_rate);

struct PretrainReport {
  std::vector<Real> epoch_cross_entropy;
};

// Supervised warm start: cross-entropy of the t = 0 policy (zero previous
// actions) against labels, SGD over shuffled per-query batches.
PretrainReport pretrain(Params& params, const letor::Dataset& train, const TrainConfig& config, Rng& rng);

Real initial_cross_entropy(const Params& params, const letor::Dataset& ds, Index neighbors);
// Fraction of documents whose t = 0 argmax level equals the label.
Real action_accuracy(const Params& params, const letor::Dataset& ds);

struct EvalResult {
  std::vector<metrics::NdcgSet> trace;  // per-step means over queries, steps 1..T
  Index queries = 0;

  const metrics::NdcgSet& final() const { return trace.back(); }
};

// Per-step ranking scores for one query (T vectors of length N).
using ScoreTraceFn = std::function<std::vector<VectorXr>(const letor::QueryGroup&)>;

EvalResult evaluate_traces(const letor::Dataset& ds, Index steps, const ScoreTraceFn& traces);
EvalResult evaluate(const Params& params, const letor::Dataset& ds, Index steps);

}  // namespace marlrank::policy
