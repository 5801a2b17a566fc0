#pragma once

// Training loop per fold: initialise, pre-train, then REINFORCE epochs with
// per-epoch evaluation and model selection on validation NDCG@10.

#include <marlrank/letor.hpp>
#include <marlrank/policy.hpp>

#include <optional>
#include <ostream>
#include <string>
#include <string_view>

namespace marlrank::trainer {

using Params = policy::Params;

// Rows of `fold,epoch,split,step,metric,value`.
class MetricsCsv {
 public:
  explicit MetricsCsv(std::ostream& out);

  void row(std::string_view fold, Index epoch, std::string_view split, Index step, std::string_view metric,
           Real value);
  void ndcg_rows(std::string_view fold, Index epoch, std::string_view split, Index step,
                 const metrics::NdcgSet& values);

 private:
  std::ostream& out_;
};

std::string ndcg_metric_name(std::size_t cutoff_index);
std::string format_value(Real v);

// One REINFORCE epoch over `train` under the configured update cadence.
// Returns the mean terminal reward of the sampled episodes.
Real reinforce_epoch(Params& params, const letor::Dataset& train, const policy::TrainConfig& config,
                     policy::Rng& rng);

struct FoldResult {
  int fold = 1;
  Params best;
  Index best_epoch = 0;
  Real best_validation_ndcg10 = 0.0;
  Real pretrain_accuracy = 0.0;
  Index epochs_run = 0;
};

FoldResult train_fold(const letor::FoldSplit& split, const policy::TrainConfig& config, MetricsCsv* csv);

// Writes the per-step trace of `result` for one fold.
void write_trace(MetricsCsv& csv, std::string_view fold, Index epoch, std::string_view split,
                 const policy::EvalResult& result);

// Finite-difference check of the per-sample REINFORCE gradient (policy and
// similarity paths) on a two-document, F = 3, k = 1 episode. `corrupt` adds
// 0.1 to one analytic bias gradient. Returns the max relative error.
Real end_to_end_grad_check(std::uint64_t seed, bool corrupt = false, Real epsilon = 1e-5);

// Policy-subnet-only check on a random 5 -> 4 -> 3 network.
Real policy_grad_check(std::uint64_t seed, bool corrupt = false, Real epsilon = 1e-5);

}  // namespace marlrank::trainer
