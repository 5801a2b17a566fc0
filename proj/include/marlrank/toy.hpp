#pragma once

// Six-document interaction example: three non-relevant documents (d1..d3) and
// three relevant ones (d4..d6). Under the naive policy every document's next
// score is the mean of its own previous score and those of its two fixed
// neighbours, all documents updating simultaneously.
//
// The reference table was produced from 2-decimal scores: each step averages
// the rounded values of the previous step. Arithmetic::rounded reproduces it
// cell for cell; Arithmetic::exact keeps full precision throughout.

#include <marlrank/types.hpp>

#include <array>
#include <iosfwd>
#include <optional>
#include <vector>

namespace marlrank::toy {

inline constexpr std::size_t kDocs = 6;
using Scores = std::array<Real, kDocs>;

struct ToyFixture {
  Scores initial_scores = {0.0, 1.0, 0.0, 0.1, 0.9, 0.9};
  std::array<int, kDocs> labels = {0, 0, 0, 1, 1, 1};
  // 0-based: d1->{d2,d4}, d2->{d1,d4}, d3->{d4,d5}, d4->{d5,d6}, d5->{d4,d6}, d6->{d4,d5}
  std::array<std::array<std::size_t, 2>, kDocs> neighbors = {{{1, 3}, {0, 3}, {3, 4}, {4, 5}, {3, 5}, {3, 4}}};
};

enum class Arithmetic { rounded, exact };

Scores naive_average_step(const Scores& scores, const ToyFixture& fixture = {});
Scores round_scores(const Scores& scores);

struct ToyRow {
  int step = 0;
  Scores scores{};
  Real ndcg_at_3 = 0.0;
};

std::vector<ToyRow> run_toy(int steps, Arithmetic arithmetic = Arithmetic::rounded,
                            const ToyFixture& fixture = {});

// Printed (2-decimal) scores for steps 0..3.
const std::array<Scores, 4>& reference_scores();

// Every score cell in rows 0..min(3, last) within `tolerance` of the reference.
bool matches_reference(const std::vector<ToyRow>& rows, Real tolerance = 0.005);

void print_table(std::ostream& out, const std::vector<ToyRow>& rows);
void write_csv(std::ostream& out, const std::vector<ToyRow>& rows);

}  // namespace marlrank::toy
