#include <doctest.h>

#include <marlrank/letor.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace marlrank;
using namespace marlrank::letor;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("marlrank_letor_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file);
  out << text;
}

void write_fold(const std::filesystem::path& root, int k, const std::string& vali_text = "1 qid:9 1:0.5\n") {
  const auto dir = root / ("Fold" + std::to_string(k));
  std::filesystem::create_directories(dir);
  write_text(dir / "train.txt", "2 qid:1 1:0.1 2:0.2\n0 qid:1 1:0.3 2:0.4\n1 qid:2 1:0.5\n");
  write_text(dir / "vali.txt", vali_text);
  write_text(dir / "test.txt", "0 qid:3 1:0.9 3:0.1\n");
}

}  // namespace

TEST_CASE("parse_line reads label, qid, features and comment") {
  const auto r = parse_line("2 qid:10 1:0.5 3:0.25 #docGX01");
  CHECK(r.label == 2);
  CHECK(r.query_id == "10");
  REQUIRE(r.features.size() == 3);
  CHECK(r.features[0] == 0.5);
  CHECK(r.features[1] == 0.0);
  CHECK(r.features[2] == 0.25);
  REQUIRE(r.comment.has_value());
  CHECK(*r.comment == "docGX01");
}

TEST_CASE("parse_line all-zero features") {
  const auto r = parse_line("0 qid:7 1:0 2:0");
  CHECK(r.label == 0);
  CHECK(r.query_id == "7");
  CHECK(r.features == std::vector<Real>{0.0, 0.0});
  CHECK_FALSE(r.comment.has_value());
}

TEST_CASE("parse_line rejects malformed input and names the line") {
  for (const char* bad : {"1 qid:10 2:abc", "1 1:0.5 2:0.1", "3 qid:1 1:0.5", "x qid:1 1:0.5", "1 qid:1 0:0.5",
                          "1 qid:1 1-0.5", "-1 qid:1 1:0.5", ""}) {
    CAPTURE(bad);
    try {
      parse_line(bad);
      FAIL("expected a parse error");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find(std::string("'") + bad + "'") != std::string::npos);
    }
  }
}

TEST_CASE("clamp label policy") {
  CHECK(parse_line("4 qid:1 1:0.5", LabelPolicy::clamp).label == 2);
  CHECK_THROWS_AS(parse_line("-1 qid:1 1:0.5", LabelPolicy::clamp), DataError);
  CHECK_THROWS_AS(parse_line("4 qid:1 1:0.5"), DataError);
}

TEST_CASE("render_line round trip on random records") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> label(0, 2), width(1, 12), qid(1, 500);
  std::uniform_real_distribution<Real> value(-5.0, 5.0);
  for (int n = 0; n < 500; ++n) {
    DocumentRecord r;
    r.label = label(rng);
    r.query_id = std::to_string(qid(rng));
    r.features.resize(static_cast<std::size_t>(width(rng)));
    for (auto& f : r.features) f = value(rng);
    if (n % 3 == 0) r.comment = "doc" + std::to_string(n) + " extra # words";
    CHECK(parse_line(render_line(r)) == r);
  }
}

TEST_CASE("load_dataset groups by qid in first-appearance order") {
  std::istringstream in(
      "1 qid:5 1:0.1\n"
      "0 qid:3 1:0.2\n"
      "\n"
      "2 qid:5 1:0.3\n"
      "0 qid:3 1:0.4\n"
      "0 qid:5 2:0.5\n"
      "1 qid:3 1:0.6\n");
  const auto ds = load_dataset(in);
  REQUIRE(ds.groups.size() == 2);
  CHECK(ds.groups[0].query_id == "5");
  CHECK(ds.groups[1].query_id == "3");
  CHECK(ds.groups[0].size() == 3);
  CHECK(ds.groups[1].size() == 3);
  CHECK(ds.feature_dim == 2);
  CHECK(ds.groups[0].labels == std::vector<int>{1, 2, 0});
  CHECK(ds.groups[0].features(1, 0) == 0.0);
  CHECK(ds.groups[0].features(1, 2) == 0.5);
  CHECK(ds.num_documents() == 6);
}

TEST_CASE("load_dataset keeps duplicates and reports 46 features") {
  std::ostringstream text;
  for (int rep = 0; rep < 2; ++rep) {
    text << "1 qid:1";
    for (int f = 1; f <= 46; ++f) text << ' ' << f << ":0.5";
    text << '\n';
  }
  std::istringstream in(text.str());
  const auto ds = load_dataset(in);
  CHECK(ds.feature_dim == 46);
  REQUIRE(ds.groups.size() == 1);
  CHECK(ds.groups[0].size() == 2);
}

TEST_CASE("load_dataset errors carry line numbers") {
  std::istringstream in("1 qid:1 1:0.5\n1 qid:1 1:oops\n");
  try {
    load_dataset(in);
    FAIL("expected error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  std::istringstream empty("\n\n");
  CHECK_THROWS_AS(load_dataset(empty), DataError);
}

TEST_CASE("load_folds reads five folds") {
  const auto root = scratch_dir("five");
  for (int k = 1; k <= 5; ++k) write_fold(root, k);
  FoldLayout layout;
  layout.root = root;
  const auto folds = load_folds(layout);
  REQUIRE(folds.size() == 5);
  for (int k = 0; k < 5; ++k) {
    CHECK(folds[static_cast<std::size_t>(k)].fold_index == k + 1);
    CHECK(folds[static_cast<std::size_t>(k)].train.groups.size() == 2);
    CHECK(folds[static_cast<std::size_t>(k)].test.feature_dim == 3);
    CHECK(folds[static_cast<std::size_t>(k)].train.feature_dim == 3);
  }
}

TEST_CASE("load_folds names the missing fold") {
  const auto root = scratch_dir("four");
  for (int k = 1; k <= 4; ++k) write_fold(root, k);
  FoldLayout layout;
  layout.root = root;
  try {
    load_folds(layout);
    FAIL("expected error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("Fold5") != std::string::npos);
  }
}

TEST_CASE("empty validation file is an error") {
  const auto root = scratch_dir("emptyvali");
  write_fold(root, 1, "");
  FoldLayout layout;
  layout.root = root;
  CHECK_THROWS_AS(load_fold(layout, 1), DataError);
}

TEST_CASE("query_minmax rescales per query") {
  QueryGroup g;
  g.query_id = "1";
  g.features.resize(2, 3);
  g.features << 1.0, 3.0, 2.0,
                4.0, 4.0, 4.0;
  g.labels = {0, 1, 2};
  g.comments.resize(3);
  const auto n = normalize_group(g, Normalization::query_minmax);
  CHECK(n.features(0, 0) == 0.0);
  CHECK(n.features(0, 1) == 1.0);
  CHECK(n.features(0, 2) == 0.5);
  CHECK(n.features.row(1).isZero());
  CHECK(normalize_group(g, Normalization::none).features == g.features);
}

TEST_CASE("normalization names") {
  CHECK(parse_normalization("none") == Normalization::none);
  CHECK(parse_normalization("query_minmax") == Normalization::query_minmax);
  CHECK_THROWS_AS(parse_normalization("zscore"), ConfigError);
  CHECK(to_string(Normalization::query_minmax) == "query_minmax");
}

TEST_CASE("write_dataset output loads back") {
  std::istringstream in("2 qid:a 1:0.25 2:1 #x\n0 qid:b 2:0.75\n");
  const auto ds = load_dataset(in);
  std::ostringstream out;
  write_dataset(out, ds);
  std::istringstream again(out.str());
  const auto back = load_dataset(again);
  REQUIRE(back.groups.size() == 2);
  CHECK(back.groups[0].features == ds.groups[0].features);
  CHECK(back.groups[1].labels == ds.groups[1].labels);
  CHECK(back.groups[0].comments == ds.groups[0].comments);
}
