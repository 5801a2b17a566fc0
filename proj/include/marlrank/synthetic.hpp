#pragma once

// Synthetic LETOR-shaped data: features ~ U[0,1], relevance grade from a noisy
// weighted sum of the first two features.

#include <marlrank/letor.hpp>

#include <filesystem>

namespace marlrank::synthetic {

struct SyntheticSpec {
  Index queries = 50;
  Index docs_per_query = 20;
  Index features = 10;
  Real noise = 0.03;  // std of the Gaussian added to the latent relevance
  Real grade1_threshold = 0.4;
  Real grade2_threshold = 0.7;
  std::uint64_t seed = 0;
  std::string qid_prefix = "q";
};

// latent = 0.6 x0 + 0.4 x1 + noise; grade 0 below the first threshold, 1
// below the second, else 2.
int grade_of(Real latent, Real grade1_threshold = 0.4, Real grade2_threshold = 0.7);

letor::Dataset generate(const SyntheticSpec& spec);

// Writes Fold1..Fold<folds> with LETOR rotation: fold K tests on part K,
// validates on part K+1, trains on the rest.
void write_fold_layout(const std::filesystem::path& root, const letor::Dataset& ds, int folds = 5);

}  // namespace marlrank::synthetic
