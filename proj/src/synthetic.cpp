#include <marlrank/synthetic.hpp>

#include <fstream>
#include <random>

namespace marlrank::synthetic {

int grade_of(Real latent, Real grade1_threshold, Real grade2_threshold) {
  if (latent < grade1_threshold) return 0;
  if (latent < grade2_threshold) return 1;
  return 2;
}

letor::Dataset generate(const SyntheticSpec& spec) {
  if (spec.features < 2) throw ConfigError("synthetic data needs at least two features");
  if (!(spec.grade1_threshold <= spec.grade2_threshold)) throw ConfigError("grade thresholds out of order");
  if (spec.queries < 1 || spec.docs_per_query < 1) throw ConfigError("synthetic data needs documents");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<Real> uniform(0.0, 1.0);
  std::normal_distribution<Real> gauss(0.0, 1.0);

  letor::Dataset ds;
  ds.feature_dim = spec.features;
  for (Index q = 0; q < spec.queries; ++q) {
    letor::QueryGroup g;
    g.query_id = spec.qid_prefix + std::to_string(q + 1);
    g.features.resize(spec.features, spec.docs_per_query);
    for (Index i = 0; i < spec.docs_per_query; ++i) {
      for (Index f = 0; f < spec.features; ++f) g.features(f, i) = uniform(rng);
      const Real latent = 0.6 * g.features(0, i) + 0.4 * g.features(1, i) + spec.noise * gauss(rng);
      g.labels.push_back(grade_of(latent, spec.grade1_threshold, spec.grade2_threshold));
      g.comments.push_back("doc" + std::to_string(i + 1));
    }
    ds.groups.push_back(std::move(g));
  }
  return ds;
}

void write_fold_layout(const std::filesystem::path& root, const letor::Dataset& ds, int folds) {
  if (folds < 3) throw ConfigError("fold layout needs at least three folds");
  if (static_cast<int>(ds.groups.size()) < folds) throw ConfigError("fewer queries than folds");
  std::vector<letor::Dataset> parts(static_cast<std::size_t>(folds));
  for (std::size_t q = 0; q < ds.groups.size(); ++q) {
    auto& part = parts[q % parts.size()];
    part.feature_dim = ds.feature_dim;
    part.groups.push_back(ds.groups[q]);
  }
  for (int k = 0; k < folds; ++k) {
    const auto dir = root / ("Fold" + std::to_string(k + 1));
    std::filesystem::create_directories(dir);
    const int vali = (k + 1) % folds;
    std::ofstream train(dir / "train.txt");
    std::ofstream validation(dir / "vali.txt");
    std::ofstream test(dir / "test.txt");
    for (int p = 0; p < folds; ++p) {
      auto& out = p == k ? test : (p == vali ? validation : train);
      letor::write_dataset(out, parts[static_cast<std::size_t>(p)]);
    }
    if (!train || !validation || !test) throw Error("failed writing fold " + dir.string());
  }
}

}  // namespace marlrank::synthetic
