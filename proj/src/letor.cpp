#include <marlrank/letor.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace marlrank::letor {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void fail(std::string_view line, const std::string& why) {
  throw DataError("malformed line '" + std::string(line) + "': " + why);
}

template <class T>
bool parse_number(std::string_view token, T& out) {
  const char* begin = token.data();
  const char* end = begin + token.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const auto start = s.find_first_not_of(" \t", pos);
    if (start == std::string_view::npos) break;
    auto stop = s.find_first_of(" \t", start);
    if (stop == std::string_view::npos) stop = s.size();
    tokens.push_back(s.substr(start, stop - start));
    pos = stop;
  }
  return tokens;
}

std::string format_real(Real v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

bool QueryGroup::has_relevant() const {
  return std::any_of(labels.begin(), labels.end(), [](int y) { return y > 0; });
}

std::size_t Dataset::num_documents() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += static_cast<std::size_t>(g.size());
  return n;
}

DocumentRecord parse_line(std::string_view text, LabelPolicy policy) {
  std::string_view line = text;
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (trim(line).empty()) fail(text, "empty line");

  DocumentRecord record;
  std::string_view body = line;
  if (const auto hash = line.find('#'); hash != std::string_view::npos) {
    record.comment = std::string(line.substr(hash + 1));
    body = line.substr(0, hash);
  }

  const auto tokens = split_ws(body);
  if (tokens.empty()) fail(text, "missing label");

  if (!parse_number(tokens[0], record.label)) fail(text, "label is not an integer");
  if (record.label < 0) fail(text, "negative label");
  if (record.label >= kNumLevels) {
    if (policy == LabelPolicy::reject) {
      fail(text, "label " + std::to_string(record.label) + " outside {0,1,2}");
    }
    record.label = kNumLevels - 1;
  }

  if (tokens.size() < 2 || tokens[1].substr(0, 4) != "qid:") fail(text, "missing qid:");
  record.query_id = std::string(tokens[1].substr(4));
  if (record.query_id.empty()) fail(text, "empty qid");

  std::vector<std::pair<long, Real>> pairs;
  pairs.reserve(tokens.size() - 2);
  long max_id = 0;
  for (std::size_t t = 2; t < tokens.size(); ++t) {
    const auto colon = tokens[t].find(':');
    if (colon == std::string_view::npos) fail(text, "token '" + std::string(tokens[t]) + "' is not fid:value");
    long fid = 0;
    Real value = 0.0;
    if (!parse_number(tokens[t].substr(0, colon), fid) || fid < 1) {
      fail(text, "bad feature id in '" + std::string(tokens[t]) + "'");
    }
    if (!parse_number(tokens[t].substr(colon + 1), value) || !std::isfinite(value)) {
      fail(text, "non-numeric feature value in '" + std::string(tokens[t]) + "'");
    }
    pairs.emplace_back(fid, value);
    max_id = std::max(max_id, fid);
  }

  record.features.assign(static_cast<std::size_t>(max_id), 0.0);
  for (const auto& [fid, value] : pairs) record.features[static_cast<std::size_t>(fid - 1)] = value;
  return record;
}

std::string render_line(const DocumentRecord& record) {
  std::string out = std::to_string(record.label) + " qid:" + record.query_id;
  for (std::size_t i = 0; i < record.features.size(); ++i) {
    out += ' ';
    out += std::to_string(i + 1);
    out += ':';
    out += format_real(record.features[i]);
  }
  if (record.comment) {
    out += " #";
    out += *record.comment;
  }
  return out;
}

Dataset load_dataset(std::istream& in, LabelPolicy policy) {
  std::vector<DocumentRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      records.push_back(parse_line(line, policy));
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (records.empty()) throw DataError("empty dataset");

  Dataset ds;
  for (const auto& r : records) {
    ds.feature_dim = std::max<Index>(ds.feature_dim, static_cast<Index>(r.features.size()));
  }

  std::unordered_map<std::string, std::size_t> slot;
  std::vector<std::vector<const DocumentRecord*>> members;
  for (const auto& r : records) {
    auto [it, inserted] = slot.try_emplace(r.query_id, members.size());
    if (inserted) members.emplace_back();
    members[it->second].push_back(&r);
  }

  ds.groups.reserve(members.size());
  for (const auto& docs : members) {
    QueryGroup g;
    g.query_id = docs.front()->query_id;
    g.features = MatrixXr::Zero(ds.feature_dim, static_cast<Index>(docs.size()));
    for (std::size_t i = 0; i < docs.size(); ++i) {
      const auto& f = docs[i]->features;
      for (std::size_t j = 0; j < f.size(); ++j) {
        g.features(static_cast<Index>(j), static_cast<Index>(i)) = f[j];
      }
      g.labels.push_back(docs[i]->label);
      g.comments.push_back(docs[i]->comment);
    }
    ds.groups.push_back(std::move(g));
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& file, LabelPolicy policy) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open " + file.string());
  try {
    return load_dataset(in, policy);
  } catch (const DataError& e) {
    throw DataError(file.string() + ": " + e.what());
  }
}

FoldSplit load_fold(const FoldLayout& layout, int fold_index) {
  const auto dir = layout.root / ("Fold" + std::to_string(fold_index));
  if (!std::filesystem::is_directory(dir)) {
    throw DataError("missing fold directory " + dir.string() + " (Fold" +
                    std::to_string(fold_index) + ")");
  }
  auto load = [&](const std::string& name) {
    const auto path = dir / name;
    if (!std::filesystem::exists(path)) throw DataError("missing file " + path.string());
    return load_dataset(path, layout.labels);
  };

  FoldSplit split;
  split.fold_index = fold_index;
  split.train = load(layout.train_file);
  split.validation = load(layout.validation_file);
  split.test = load(layout.test_file);

  // All partitions share the widest feature dimension.
  const Index dim = std::max({split.train.feature_dim, split.validation.feature_dim,
                              split.test.feature_dim});
  for (Dataset* ds : {&split.train, &split.validation, &split.test}) {
    if (ds->feature_dim == dim) continue;
    for (auto& g : ds->groups) {
      g.features.conservativeResize(dim, Eigen::NoChange);
      g.features.bottomRows(dim - ds->feature_dim).setZero();
    }
    ds->feature_dim = dim;
  }
  return split;
}

std::vector<FoldSplit> load_folds(const FoldLayout& layout) {
  std::vector<FoldSplit> folds;
  for (int k = 1; k <= layout.num_folds; ++k) folds.push_back(load_fold(layout, k));
  return folds;
}

QueryGroup normalize_group(const QueryGroup& group, Normalization scheme) {
  QueryGroup out = group;
  if (scheme == Normalization::none || group.size() == 0) return out;

  const VectorXr lo = group.features.rowwise().minCoeff();
  const VectorXr hi = group.features.rowwise().maxCoeff();
  for (Index f = 0; f < group.feature_dim(); ++f) {
    const Real range = hi(f) - lo(f);
    if (range > 0.0) {
      out.features.row(f) = (group.features.row(f).array() - lo(f)) / range;
    } else {
      out.features.row(f).setZero();
    }
  }
  return out;
}

Dataset normalize_features(const Dataset& ds, Normalization scheme) {
  Dataset out;
  out.feature_dim = ds.feature_dim;
  out.groups.reserve(ds.groups.size());
  for (const auto& g : ds.groups) out.groups.push_back(normalize_group(g, scheme));
  return out;
}

void write_dataset(std::ostream& out, const Dataset& ds) {
  for (const auto& g : ds.groups) {
    for (Index i = 0; i < g.size(); ++i) {
      DocumentRecord r;
      r.label = g.labels[static_cast<std::size_t>(i)];
      r.query_id = g.query_id;
      r.features.assign(g.features.col(i).data(), g.features.col(i).data() + g.feature_dim());
      r.comment = g.comments[static_cast<std::size_t>(i)];
      out << render_line(r) << '\n';
    }
  }
}

Normalization parse_normalization(std::string_view name) {
  if (name == "none") return Normalization::none;
  if (name == "query_minmax") return Normalization::query_minmax;
  throw ConfigError("unknown normalization '" + std::string(name) + "'");
}

std::string_view to_string(Normalization scheme) {
  return scheme == Normalization::none ? "none" : "query_minmax";
}

}  // namespace marlrank::letor
