#include <marlrank/trainer.hpp>

#include <algorithm>
#include <charconv>
#include <numeric>

namespace marlrank::trainer {

MetricsCsv::MetricsCsv(std::ostream& out) : out_(out) { out_ << "fold,epoch,split,step,metric,value\n"; }

void MetricsCsv::row(std::string_view fold, Index epoch, std::string_view split, Index step,
                     std::string_view metric, Real value) {
  out_ << fold << ',' << epoch << ',' << split << ',' << step << ',' << metric << ',' << format_value(value)
       << '\n';
}

void MetricsCsv::ndcg_rows(std::string_view fold, Index epoch, std::string_view split, Index step,
                           const metrics::NdcgSet& values) {
  for (std::size_t c = 0; c < values.size(); ++c) row(fold, epoch, split, step, ndcg_metric_name(c), values[c]);
}

std::string ndcg_metric_name(std::size_t cutoff_index) {
  return "ndcg@" + std::to_string(metrics::kReportedCutoffs.at(cutoff_index));
}

std::string format_value(Real v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_trace(MetricsCsv& csv, std::string_view fold, Index epoch, std::string_view split,
                 const policy::EvalResult& result) {
  for (std::size_t t = 0; t < result.trace.size(); ++t) {
    csv.ndcg_rows(fold, epoch, split, static_cast<Index>(t + 1), result.trace[t]);
  }
}

Real reinforce_epoch(Params& params, const letor::Dataset& train, const policy::TrainConfig& config,
                     policy::Rng& rng) {
  std::vector<std::size_t> order(train.groups.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Real reward_sum = 0.0;

  if (config.cadence == policy::UpdateCadence::per_epoch) {
    const auto batch = policy::collect_episodes(params, train, order, config, rng);
    reward_sum = std::accumulate(batch.terminal_rewards.begin(), batch.terminal_rewards.end(), 0.0);
    policy::reinforce_update(params, train, batch, config.learning_rate);
  } else {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t gi : order) {
      const std::size_t one[] = {gi};
      const auto batch = policy::collect_episodes(params, train, one, config, rng);
      reward_sum += batch.terminal_rewards.front();
      policy::reinforce_update(params, train, batch, config.learning_rate);
    }
  }
  return reward_sum / static_cast<Real>(std::max<std::size_t>(order.size(), 1));
}

FoldResult train_fold(const letor::FoldSplit& split, const policy::TrainConfig& config, MetricsCsv* csv) {
  config.validate();
  if (split.train.empty()) throw DataError("fold " + std::to_string(split.fold_index) + ": empty train set");
  if (split.validation.empty()) {
    throw DataError("fold " + std::to_string(split.fold_index) + ": empty validation set");
  }
  const std::string fold = std::to_string(split.fold_index);
  std::seed_seq seq{config.seed, static_cast<std::uint64_t>(split.fold_index)};
  policy::Rng rng(seq);

  FoldResult result;
  result.fold = split.fold_index;
  Params params = nn::init_params<Real>(config.shape(split.train.feature_dim), rng());

  const auto report = policy::pretrain(params, split.train, config, rng);
  if (csv) {
    for (std::size_t e = 0; e < report.epoch_cross_entropy.size(); ++e) {
      csv->row(fold, static_cast<Index>(e + 1), "pretrain", 0, "pretrain_ce", report.epoch_cross_entropy[e]);
    }
  }
  result.pretrain_accuracy = policy::action_accuracy(params, split.train);

  auto record = [&](Index epoch, std::optional<Real> reward) {
    const auto train_eval = policy::evaluate(params, split.train, config.eval_steps);
    const auto vali_eval = policy::evaluate(params, split.validation, config.eval_steps);
    if (csv) {
      if (reward) csv->row(fold, epoch, "train", config.train_steps, "reward", *reward);
      csv->ndcg_rows(fold, epoch, "train", config.eval_steps, train_eval.final());
      csv->ndcg_rows(fold, epoch, "vali", config.eval_steps, vali_eval.final());
    }
    return vali_eval.final()[3];
  };

  result.best = params;
  result.best_validation_ndcg10 = record(0, std::nullopt);
  Index since_best = 0;
  for (Index epoch = 1; epoch <= config.epochs; ++epoch) {
    const Real reward = reinforce_epoch(params, split.train, config, rng);
    const Real vali = record(epoch, reward);
    result.epochs_run = epoch;
    if (vali > result.best_validation_ndcg10) {
      result.best_validation_ndcg10 = vali;
      result.best = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

namespace {

letor::QueryGroup two_document_group(std::mt19937_64& rng) {
  std::uniform_real_distribution<Real> uniform(0.0, 1.0);
  letor::QueryGroup g;
  g.query_id = "gradcheck";
  g.features.resize(3, 2);
  for (Index i = 0; i < g.features.size(); ++i) g.features.data()[i] = uniform(rng);
  g.labels = {2, 0};
  g.comments.resize(2);
  return g;
}

void corrupt_bias(policy::Gradients& grads) { grads.output.bias(0) += 0.1; }

}  // namespace

Real end_to_end_grad_check(std::uint64_t seed, bool corrupt, Real epsilon) {
  std::mt19937_64 rng(seed);
  letor::Dataset ds;
  ds.feature_dim = 3;
  ds.groups.push_back(two_document_group(rng));

  policy::TrainConfig config;
  config.neighbors = 1;
  config.hidden = 8;
  config.train_steps = 3;
  Params params = nn::init_params<Real>(config.shape(3), rng());
  // Non-zero biases so no unit sits exactly at a ReLU kink.
  std::uniform_real_distribution<Real> small(-0.1, 0.1);
  nn::for_each_layer([&](nn::LayerParams<Real>& l) { for (Index i = 0; i < l.bias.size(); ++i) l.bias(i) = small(rng); },
                     params);

  const std::size_t groups[] = {0};
  auto batch = policy::collect_episodes(params, ds, groups, config, rng);
  // Random advantages so every sample carries a well-scaled coefficient.
  std::normal_distribution<Real> gauss(0.0, 1.0);
  for (auto& s : batch.samples) s.advantage = gauss(rng);

  auto grads = policy::reinforce_gradient(params, ds, batch);
  if (corrupt) corrupt_bias(grads);
  return nn::finite_difference_check(
      params, grads, [&](const Params& p) { return policy::reinforce_objective(p, ds, batch); }, epsilon);
}

Real policy_grad_check(std::uint64_t seed, bool corrupt, Real epsilon) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> uniform(-1.0, 1.0);
  auto random_layer = [&](Index out, Index in) {
    nn::LayerParams<Real> l = nn::LayerParams<Real>::zeros(out, in);
    for (Index i = 0; i < l.weights.size(); ++i) l.weights.data()[i] = uniform(rng);
    for (Index i = 0; i < l.bias.size(); ++i) l.bias(i) = 0.1 * uniform(rng);
    return l;
  };
  Params p;
  p.similarity = nn::LayerParams<Real>::zeros(1, 1);
  p.hidden1 = random_layer(4, 5);
  p.hidden2 = random_layer(4, 4);
  p.output = random_layer(3, 4);

  const MatrixXr inputs = MatrixXr::NullaryExpr(5, 6, [&] { return uniform(rng); });
  const std::vector<int> actions = {0, 1, 2, 2, 1, 0};
  if (!corrupt) return nn::grad_check(p, inputs, actions, epsilon);

  auto grads = nn::zero_gradients(p);
  const auto cache = nn::policy_forward(p, inputs);
  nn::policy_backward(p, cache, nn::log_prob_logit_grad(cache, actions, VectorXr::Ones(6).eval()), grads);
  corrupt_bias(grads);
  return nn::finite_difference_check(
      p, grads,
      [&](const Params& q) {
        const auto c = nn::policy_forward(q, inputs);
        Real total = 0;
        for (Index col = 0; col < inputs.cols(); ++col) total += c.log_probs(actions[static_cast<std::size_t>(col)], col);
        return total;
      },
      epsilon);
}

}  // namespace marlrank::trainer
