#include <marlrank/metrics.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace marlrank::metrics {

Ranking rank_by_score(const Eigen::Ref<const VectorXr>& scores) {
  if (scores.size() == 0) throw Error("rank_by_score: empty score vector");
  if (!scores.allFinite()) throw Error("rank_by_score: non-finite score");

  Ranking r;
  r.source_scores = scores;
  r.order.resize(static_cast<std::size_t>(scores.size()));
  std::iota(r.order.begin(), r.order.end(), Index{0});
  std::stable_sort(r.order.begin(), r.order.end(),
                   [&](Index a, Index b) { return scores(a) > scores(b); });
  return r;
}

Real dcg_at_k(std::span<const int> ordered_labels, Index k) {
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(k), ordered_labels.size());
  Real dcg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Real gain = std::exp2(static_cast<Real>(ordered_labels[i])) - 1.0;
    dcg += gain / std::log2(static_cast<Real>(i) + 2.0);
  }
  return dcg;
}

Real ndcg_at_k(const Eigen::Ref<const VectorXr>& scores, std::span<const int> labels, Index k) {
  if (static_cast<std::size_t>(scores.size()) != labels.size()) {
    throw ShapeError("ndcg_at_k: " + std::to_string(scores.size()) + " scores vs " +
                     std::to_string(labels.size()) + " labels");
  }
  std::vector<int> ideal(labels.begin(), labels.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const Real ideal_dcg = dcg_at_k(ideal, k);
  if (ideal_dcg <= 0.0) return 0.0;

  const auto ranking = rank_by_score(scores);
  std::vector<int> ordered;
  ordered.reserve(labels.size());
  for (Index i : ranking.order) ordered.push_back(labels[static_cast<std::size_t>(i)]);
  return dcg_at_k(ordered, k) / ideal_dcg;
}

NdcgSet ndcg_set(const Eigen::Ref<const VectorXr>& scores, std::span<const int> labels) {
  NdcgSet out{};
  for (std::size_t c = 0; c < kReportedCutoffs.size(); ++c) {
    out[c] = ndcg_at_k(scores, labels, kReportedCutoffs[c]);
  }
  return out;
}

}  // namespace marlrank::metrics
