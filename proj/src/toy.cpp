#include <marlrank/metrics.hpp>
#include <marlrank/toy.hpp>

#include <cmath>
#include <iomanip>
#include <ostream>

namespace marlrank::toy {

Scores naive_average_step(const Scores& scores, const ToyFixture& fixture) {
  Scores next{};
  for (std::size_t i = 0; i < kDocs; ++i) {
    const auto& nb = fixture.neighbors[i];
    next[i] = (scores[i] + scores[nb[0]] + scores[nb[1]]) / 3.0;
  }
  return next;
}

Scores round_scores(const Scores& scores) {
  Scores out{};
  for (std::size_t i = 0; i < kDocs; ++i) out[i] = std::round(scores[i] * 100.0) / 100.0;
  return out;
}

std::vector<ToyRow> run_toy(int steps, Arithmetic arithmetic, const ToyFixture& fixture) {
  if (steps < 0) throw ConfigError("toy: steps must be non-negative");
  std::vector<ToyRow> rows;
  Scores current = fixture.initial_scores;
  for (int t = 0; t <= steps; ++t) {
    if (t > 0) {
      current = naive_average_step(current, fixture);
      if (arithmetic == Arithmetic::rounded) current = round_scores(current);
    }
    const VectorXr v = Eigen::Map<const VectorXr>(current.data(), kDocs);
    rows.push_back({t, current, metrics::ndcg_at_k(v, fixture.labels, 3)});
  }
  return rows;
}

const std::array<Scores, 4>& reference_scores() {
  static const std::array<Scores, 4> table = {{
      {0.0, 1.0, 0.0, 0.1, 0.9, 0.9},
      {0.37, 0.37, 0.33, 0.63, 0.63, 0.63},
      {0.46, 0.46, 0.53, 0.63, 0.63, 0.63},
      {0.52, 0.52, 0.6, 0.63, 0.63, 0.63},
  }};
  return table;
}

bool matches_reference(const std::vector<ToyRow>& rows, Real tolerance) {
  const auto& ref = reference_scores();
  for (const auto& row : rows) {
    if (row.step < 0 || row.step >= static_cast<int>(ref.size())) continue;
    for (std::size_t i = 0; i < kDocs; ++i) {
      if (std::abs(row.scores[i] - ref[static_cast<std::size_t>(row.step)][i]) > tolerance) return false;
    }
  }
  return true;
}

void print_table(std::ostream& out, const std::vector<ToyRow>& rows) {
  out << std::left << std::setw(6) << "step";
  for (std::size_t i = 0; i < kDocs; ++i) out << std::right << std::setw(8) << ("d" + std::to_string(i + 1));
  out << std::right << std::setw(10) << "NDCG@3" << '\n';
  out << std::fixed;
  for (const auto& row : rows) {
    out << std::left << std::setw(6) << row.step << std::right << std::setprecision(2);
    for (Real s : row.scores) out << std::setw(8) << s;
    out << std::setprecision(4) << std::setw(10) << row.ndcg_at_3 << '\n';
  }
  out << std::defaultfloat;
}

void write_csv(std::ostream& out, const std::vector<ToyRow>& rows) {
  out << "step,d1,d2,d3,d4,d5,d6,ndcg@3\n";
  out << std::setprecision(17);
  for (const auto& row : rows) {
    out << row.step;
    for (Real s : row.scores) out << ',' << s;
    out << ',' << row.ndcg_at_3 << '\n';
  }
  out << std::setprecision(6);
}

}  // namespace marlrank::toy
