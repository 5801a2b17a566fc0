#pragma once

// Run configuration: flat `key = value` text, `#` comments, CLI overrides on
// top. Unknown keys are rejected.

#include <marlrank/letor.hpp>
#include <marlrank/policy.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace marlrank {

inline constexpr const char* kDataRootEnv = "MARLRANK_DATA";

struct RunConfig {
  std::filesystem::path data_root;
  int fold = 0;  // 1..5, or 0 for all folds
  std::string train_file = "train.txt";
  std::string validation_file = "vali.txt";
  std::string test_file = "test.txt";
  letor::Normalization normalization = letor::Normalization::query_minmax;
  letor::LabelPolicy labels = letor::LabelPolicy::reject;
  std::filesystem::path out_dir = "out";
  policy::TrainConfig train;

  void validate() const;
  std::vector<int> selected_folds() const;
  letor::FoldLayout layout() const;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

KeyValues parse_key_values(std::istream& in);
KeyValues read_config_file(const std::filesystem::path& file);

// Throws ConfigError on unknown keys or unparseable values.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);
void apply_settings(RunConfig& config, const KeyValues& settings);

// Fully-resolved config in the same key = value format.
std::string render_config(const RunConfig& config);

std::vector<std::string> config_keys();

}  // namespace marlrank
