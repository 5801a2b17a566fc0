#pragma once

// LETOR / SVMlight-style ranking data:
//
//   <label> qid:<id> <fid>:<val> ... #<comment>
//
// Feature ids are 1-based in the file and mapped to dense 0-based positions.

#include <marlrank/types.hpp>

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace marlrank::letor {

enum class LabelPolicy {
  reject,  // grades outside {0,1,2} are a parse error
  clamp,   // grades above 2 map to 2
};

enum class Normalization { none, query_minmax };

struct DocumentRecord {
  int label = 0;
  std::string query_id;
  std::vector<Real> features;
  std::optional<std::string> comment;

  friend bool operator==(const DocumentRecord&, const DocumentRecord&) = default;
};

struct QueryGroup {
  std::string query_id;
  // features.col(i) is document i; order is file order.
  MatrixXr features;
  std::vector<int> labels;
  std::vector<std::optional<std::string>> comments;

  Index size() const { return features.cols(); }
  Index feature_dim() const { return features.rows(); }
  bool has_relevant() const;
};

struct Dataset {
  std::vector<QueryGroup> groups;
  Index feature_dim = 0;

  std::size_t num_documents() const;
  bool empty() const { return groups.empty(); }
};

struct FoldSplit {
  Dataset train;
  Dataset validation;
  Dataset test;
  int fold_index = 1;
};

struct FoldLayout {
  std::filesystem::path root;
  std::string train_file = "train.txt";
  std::string validation_file = "vali.txt";
  std::string test_file = "test.txt";
  int num_folds = 5;
  LabelPolicy labels = LabelPolicy::reject;
};

// Parses one record. `features` holds entries up to the largest feature id
// present on the line; load_dataset widens every record to the dataset's F.
DocumentRecord parse_line(std::string_view text,
                          LabelPolicy policy = LabelPolicy::reject);

// Canonical text form; parse_line(render_line(r)) == r for well-formed r.
std::string render_line(const DocumentRecord& record);

Dataset load_dataset(std::istream& in, LabelPolicy policy = LabelPolicy::reject);
Dataset load_dataset(const std::filesystem::path& file,
                     LabelPolicy policy = LabelPolicy::reject);

// Loads a single fold (1-based) of the Fold<K>/{train,vali,test} layout.
FoldSplit load_fold(const FoldLayout& layout, int fold_index);
std::vector<FoldSplit> load_folds(const FoldLayout& layout);

QueryGroup normalize_group(const QueryGroup& group, Normalization scheme);
Dataset normalize_features(const Dataset& ds, Normalization scheme);

void write_dataset(std::ostream& out, const Dataset& ds);

Normalization parse_normalization(std::string_view name);
std::string_view to_string(Normalization scheme);

}  // namespace marlrank::letor
