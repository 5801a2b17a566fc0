#include <doctest.h>

#include <marlrank/synthetic.hpp>
#include <marlrank/trainer.hpp>

#include <map>
#include <sstream>

using namespace marlrank;

namespace {

letor::FoldSplit small_split() {
  synthetic::SyntheticSpec spec;
  spec.queries = 9;
  spec.docs_per_query = 6;
  spec.features = 4;
  spec.seed = 3;
  const auto ds = synthetic::generate(spec);
  letor::FoldSplit split;
  split.fold_index = 2;
  for (auto* part : {&split.train, &split.validation, &split.test}) part->feature_dim = ds.feature_dim;
  for (std::size_t q = 0; q < ds.groups.size(); ++q) {
    auto& part = q < 5 ? split.train : (q < 7 ? split.validation : split.test);
    part.groups.push_back(ds.groups[q]);
  }
  return split;
}

policy::TrainConfig quick_config() {
  policy::TrainConfig c;
  c.hidden = 8;
  c.train_steps = 3;
  c.eval_steps = 4;
  c.pretrain_epochs = 2;
  c.epochs = 3;
  c.learning_rate = 0.01;
  c.seed = 5;
  return c;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream cell_in(line);
    std::string cell;
    while (std::getline(cell_in, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("end-to-end gradient check over seeds") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CAPTURE(seed);
    CHECK(trainer::end_to_end_grad_check(seed) < 1e-4);
  }
}

TEST_CASE("metric names and value formatting") {
  CHECK(trainer::ndcg_metric_name(0) == "ndcg@1");
  CHECK(trainer::ndcg_metric_name(3) == "ndcg@10");
  CHECK(trainer::format_value(0.25) == "0.25");
  CHECK(std::stod(trainer::format_value(0.1 + 0.2)) == 0.1 + 0.2);
}

TEST_CASE("train_fold writes the metrics schema") {
  const auto split = small_split();
  const auto config = quick_config();
  std::ostringstream out;
  trainer::MetricsCsv csv(out);
  const auto result = trainer::train_fold(split, config, &csv);
  CHECK(result.fold == 2);
  CHECK(result.epochs_run == 3);
  CHECK(result.best_epoch >= 0);
  CHECK(result.best_epoch <= 3);
  CHECK(result.pretrain_accuracy >= 0.0);

  const auto rows = csv_rows(out.str());
  REQUIRE(!rows.empty());
  CHECK(rows[0] == std::vector<std::string>{"fold", "epoch", "split", "step", "metric", "value"});
  std::map<std::string, int> per_metric;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    REQUIRE(rows[r].size() == 6);
    CHECK(rows[r][0] == "2");
    ++per_metric[rows[r][2] + ":" + rows[r][4]];
  }
  CHECK(per_metric["pretrain:pretrain_ce"] == 2);
  CHECK(per_metric["train:reward"] == 3);
  CHECK(per_metric["train:ndcg@10"] == 4);
  CHECK(per_metric["vali:ndcg@1"] == 4);
}

TEST_CASE("training is reproducible from the seed") {
  const auto split = small_split();
  const auto config = quick_config();
  std::ostringstream a, b;
  trainer::MetricsCsv ca(a), cb(b);
  const auto ra = trainer::train_fold(split, config, &ca);
  const auto rb = trainer::train_fold(split, config, &cb);
  CHECK(a.str() == b.str());
  CHECK(ra.best == rb.best);
}

TEST_CASE("patience stops training early") {
  const auto split = small_split();
  auto config = quick_config();
  config.epochs = 50;
  config.patience = 1;
  config.learning_rate = 1e-9;
  const auto result = trainer::train_fold(split, config, nullptr);
  CHECK(result.epochs_run < 50);
}

TEST_CASE("per-query cadence runs") {
  const auto split = small_split();
  auto config = quick_config();
  config.cadence = policy::UpdateCadence::per_query;
  config.reward_scores = policy::RewardScores::sampled;
  const auto result = trainer::train_fold(split, config, nullptr);
  CHECK(result.epochs_run == 3);
}

TEST_CASE("synthetic fold layout loads back") {
  synthetic::SyntheticSpec spec;
  spec.queries = 10;
  spec.docs_per_query = 4;
  spec.features = 3;
  const auto ds = synthetic::generate(spec);
  CHECK(ds.groups.size() == 10);
  const auto root = std::filesystem::temp_directory_path() / "marlrank_synth_layout";
  std::filesystem::remove_all(root);
  synthetic::write_fold_layout(root, ds);
  letor::FoldLayout layout;
  layout.root = root;
  const auto folds = letor::load_folds(layout);
  REQUIRE(folds.size() == 5);
  for (const auto& f : folds) {
    CHECK(f.train.groups.size() == 6);
    CHECK(f.validation.groups.size() == 2);
    CHECK(f.test.groups.size() == 2);
    CHECK(f.train.feature_dim == 3);
  }
  CHECK(synthetic::grade_of(0.1) == 0);
  CHECK(synthetic::grade_of(0.5) == 1);
  CHECK(synthetic::grade_of(0.9) == 2);
}
