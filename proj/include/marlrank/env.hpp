#pragma once

// Multi-agent ranking environment. Every document of a query is an agent; at
// each step all agents simultaneously emit a relevance level given an
// observation built from their own features and their top-k neighbours.

#include <marlrank/letor.hpp>
#include <marlrank/nn.hpp>

#include <array>
#include <span>
#include <vector>

namespace marlrank::env {

using Params = nn::ModelParams<Real>;
using Gradients = nn::GradientBuffer<Real>;

struct NeighborEntry {
  Index index = 0;
  Real similarity = 0.0;
};

// neighbors[i] is sorted by similarity descending, ties by ascending index,
// and never contains i.
struct NeighborGraph {
  Index k = 0;
  std::vector<std::vector<NeighborEntry>> neighbors;

  Index size() const { return static_cast<Index>(neighbors.size()); }
};

// [d_i | d_j | |d_i - d_j| | d_i * d_j]
VectorXr pair_encoding(const Eigen::Ref<const VectorXr>& di, const Eigen::Ref<const VectorXr>& dj);

// Ordered score sigmoid(w . pair_encoding(di, dj) + b).
Real similarity_score(const Params& params, const Eigen::Ref<const VectorXr>& di,
                      const Eigen::Ref<const VectorXr>& dj);

// (s(i,j) + s(j,i)) / 2 for every pair; the diagonal is meaningless.
MatrixXr similarity_matrix(const Params& params, const letor::QueryGroup& group);

NeighborGraph build_neighbor_graph(const Params& params, const letor::QueryGroup& group, Index k);

// Same neighbour indices, similarities recomputed under `params`.
NeighborGraph refresh_similarities(const Params& params, const letor::QueryGroup& group,
                                   const NeighborGraph& graph);

// Column code fed to neighbours for a discrete level.
VectorXr encode_level(int level, nn::ActionEncoding encoding);
// Column code for a soft prediction (greedy mode): expected/2 or the distribution.
VectorXr encode_distribution(const Eigen::Ref<const VectorXr>& probs, nn::ActionEncoding encoding);

struct EnvState {
  const letor::QueryGroup* group = nullptr;
  NeighborGraph graph;
  nn::ModelShape shape;
  Index t = 0;
  Index horizon = 1;
  // action_width x N encoded previous actions; zero at t = 0.
  MatrixXr last_actions;
  // Observation columns with empty action slots. Fixed for the episode.
  MatrixXr base_observations;

  Index num_agents() const { return last_actions.cols(); }
};

EnvState make_state(const letor::QueryGroup& group, NeighborGraph graph, const nn::ModelShape& shape,
                    Index horizon);

// Observation blocks: d_i, neighbour actions, neighbour similarities, and
// (1/k) sum_n s_{i,n} d_{i,n}. Missing neighbours contribute zeros; the
// divisor stays k.
VectorXr build_observation(const EnvState& state, Index i);
MatrixXr build_observations(const EnvState& state);

// Static blocks of every observation for a group under `graph`.
MatrixXr base_observations(const letor::QueryGroup& group, const NeighborGraph& graph,
                           const nn::ModelShape& shape);

// Writes the action slots for every agent from encoded last actions.
void fill_action_slots(MatrixXr& observations, const NeighborGraph& graph, const nn::ModelShape& shape,
                       const MatrixXr& last_actions);

EnvState env_step(const EnvState& state, std::span<const ActionLevel> joint_actions);
// Greedy-mode transition with already-encoded action codes (action_width x N).
EnvState env_step_encoded(const EnvState& state, const MatrixXr& codes);

// Routes d(objective)/d(observation_i) into the similarity layer through the
// similarity slots and the weighted neighbour block.
void backprop_observation(const Params& params, const letor::QueryGroup& group,
                          const NeighborGraph& graph, Index i,
                          const Eigen::Ref<const VectorXr>& dobs, Gradients& grads);

// NDCG_T - NDCG_best, where NDCG_best is 1 if any label is relevant else 0.
Real terminal_reward(const Eigen::Ref<const VectorXr>& final_scores, std::span<const int> labels,
                     Index cutoff);

struct RewardSchedule {
  std::array<Real, kNumLevels> match{};
  Real mismatch = 0.0;

  static RewardSchedule mq2007() { return {{0.001, 0.003, 0.008}, -0.001}; }
  static RewardSchedule ohsumed() { return {{0.001, 0.003, 0.004}, -0.001}; }
  static RewardSchedule none() { return {{0.0, 0.0, 0.0}, 0.0}; }
};

Real individual_reward(ActionLevel action, int label, const RewardSchedule& schedule);

}  // namespace marlrank::env
