#pragma once

// Graded-relevance ranking metrics.
//
// Gain is 2^grade - 1 and the discount at 1-based position p is 1/log2(p+1).
// Ties in scores are broken by ascending document index, so every ranking is
// deterministic.

#include <marlrank/types.hpp>

#include <array>
#include <span>
#include <vector>

namespace marlrank::metrics {

struct Ranking {
  std::vector<Index> order;  // best first
  VectorXr source_scores;
};

Ranking rank_by_score(const Eigen::Ref<const VectorXr>& scores);

Real dcg_at_k(std::span<const int> ordered_labels, Index k);

// Returns 0 when no label is relevant.
Real ndcg_at_k(const Eigen::Ref<const VectorXr>& scores, std::span<const int> labels, Index k);

inline constexpr std::array<Index, 4> kReportedCutoffs = {1, 3, 5, 10};

using NdcgSet = std::array<Real, kReportedCutoffs.size()>;

NdcgSet ndcg_set(const Eigen::Ref<const VectorXr>& scores, std::span<const int> labels);

}  // namespace marlrank::metrics
