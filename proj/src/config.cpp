#include <marlrank/config.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace marlrank {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw ConfigError("invalid value '" + std::string(value) + "' for key '" + std::string(key) + "'");
}

template <class T>
T parse_as(std::string_view key, std::string_view value) {
  T out{};
  const char* begin = value.data();
  const char* end = begin + value.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value);
  return out;
}

std::string format_real(Real v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

env::RewardSchedule parse_schedule(std::string_view key, std::string_view value) {
  if (value == "mq2007") return env::RewardSchedule::mq2007();
  if (value == "ohsumed") return env::RewardSchedule::ohsumed();
  if (value == "none") return env::RewardSchedule::none();
  // m0,m1,m2,mismatch
  env::RewardSchedule s;
  std::vector<Real> parts;
  std::size_t pos = 0;
  while (pos <= value.size()) {
    auto comma = value.find(',', pos);
    if (comma == std::string_view::npos) comma = value.size();
    parts.push_back(parse_as<Real>(key, trim(value.substr(pos, comma - pos))));
    pos = comma + 1;
  }
  if (parts.size() != 4) bad_value(key, value);
  s.match = {parts[0], parts[1], parts[2]};
  s.mismatch = parts[3];
  return s;
}

std::string render_schedule(const env::RewardSchedule& s) {
  return format_real(s.match[0]) + "," + format_real(s.match[1]) + "," + format_real(s.match[2]) + "," +
         format_real(s.mismatch);
}

}  // namespace

void RunConfig::validate() const {
  if (fold < 0 || fold > 5) throw ConfigError("fold must be 1..5 or all");
  train.validate();
}

std::vector<int> RunConfig::selected_folds() const {
  if (fold != 0) return {fold};
  return {1, 2, 3, 4, 5};
}

letor::FoldLayout RunConfig::layout() const {
  letor::FoldLayout l;
  l.root = data_root;
  l.train_file = train_file;
  l.validation_file = validation_file;
  l.test_file = test_file;
  l.labels = labels;
  return l;
}

KeyValues parse_key_values(std::istream& in) {
  KeyValues out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    out.emplace_back(std::string(trim(view.substr(0, eq))), std::string(trim(view.substr(eq + 1))));
  }
  return out;
}

KeyValues read_config_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config " + file.string());
  return parse_key_values(in);
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view value) {
  auto& t = c.train;
  if (key == "data") c.data_root = std::string(value);
  else if (key == "fold") c.fold = value == "all" ? 0 : parse_as<int>(key, value);
  else if (key == "train_file") c.train_file = std::string(value);
  else if (key == "vali_file") c.validation_file = std::string(value);
  else if (key == "test_file") c.test_file = std::string(value);
  else if (key == "norm") c.normalization = letor::parse_normalization(value);
  else if (key == "labels") {
    if (value == "reject") c.labels = letor::LabelPolicy::reject;
    else if (value == "clamp") c.labels = letor::LabelPolicy::clamp;
    else bad_value(key, value);
  } else if (key == "out") c.out_dir = std::string(value);
  else if (key == "gamma") t.gamma = parse_as<Real>(key, value);
  else if (key == "lr") t.learning_rate = parse_as<Real>(key, value);
  else if (key == "T") t.train_steps = parse_as<Index>(key, value);
  else if (key == "T_eval") t.eval_steps = parse_as<Index>(key, value);
  else if (key == "k") t.neighbors = parse_as<Index>(key, value);
  else if (key == "cutoff") t.reward_cutoff = parse_as<Index>(key, value);
  else if (key == "hidden") t.hidden = parse_as<Index>(key, value);
  else if (key == "activation") {
    if (value == "relu") t.activation = nn::Activation::relu;
    else if (value == "tanh") t.activation = nn::Activation::tanh;
    else bad_value(key, value);
  } else if (key == "action_encoding") {
    if (value == "scalar") t.encoding = nn::ActionEncoding::scalar;
    else if (value == "one_hot") t.encoding = nn::ActionEncoding::one_hot;
    else bad_value(key, value);
  } else if (key == "pretrain_epochs") t.pretrain_epochs = parse_as<Index>(key, value);
  else if (key == "pretrain_lr") t.pretrain_lr = parse_as<Real>(key, value);
  else if (key == "epochs") t.epochs = parse_as<Index>(key, value);
  else if (key == "patience") t.patience = parse_as<Index>(key, value);
  else if (key == "schedule") t.schedule = parse_schedule(key, value);
  else if (key == "update") {
    if (value == "epoch") t.cadence = policy::UpdateCadence::per_epoch;
    else if (value == "query") t.cadence = policy::UpdateCadence::per_query;
    else bad_value(key, value);
  } else if (key == "reward_scores") {
    if (value == "expected") t.reward_scores = policy::RewardScores::expected;
    else if (value == "sampled") t.reward_scores = policy::RewardScores::sampled;
    else bad_value(key, value);
  } else if (key == "seed") t.seed = parse_as<std::uint64_t>(key, value);
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void apply_settings(RunConfig& config, const KeyValues& settings) {
  for (const auto& [k, v] : settings) apply_setting(config, k, v);
}

std::vector<std::string> config_keys() {
  return {"data", "fold", "train_file", "vali_file", "test_file", "norm", "labels", "out",
          "gamma", "lr", "T", "T_eval", "k", "cutoff", "hidden", "activation", "action_encoding",
          "pretrain_epochs", "pretrain_lr", "epochs", "patience", "schedule", "update", "reward_scores", "seed"};
}

std::string render_config(const RunConfig& c) {
  const auto& t = c.train;
  std::ostringstream out;
  out << "data = " << c.data_root.string() << '\n'
      << "fold = " << (c.fold == 0 ? std::string("all") : std::to_string(c.fold)) << '\n'
      << "train_file = " << c.train_file << '\n'
      << "vali_file = " << c.validation_file << '\n'
      << "test_file = " << c.test_file << '\n'
      << "norm = " << letor::to_string(c.normalization) << '\n'
      << "labels = " << (c.labels == letor::LabelPolicy::reject ? "reject" : "clamp") << '\n'
      << "out = " << c.out_dir.string() << '\n'
      << "gamma = " << format_real(t.gamma) << '\n'
      << "lr = " << format_real(t.learning_rate) << '\n'
      << "T = " << t.train_steps << '\n'
      << "T_eval = " << t.eval_steps << '\n'
      << "k = " << t.neighbors << '\n'
      << "cutoff = " << t.reward_cutoff << '\n'
      << "hidden = " << t.hidden << '\n'
      << "activation = " << (t.activation == nn::Activation::relu ? "relu" : "tanh") << '\n'
      << "action_encoding = " << (t.encoding == nn::ActionEncoding::scalar ? "scalar" : "one_hot") << '\n'
      << "pretrain_epochs = " << t.pretrain_epochs << '\n'
      << "pretrain_lr = " << format_real(t.pretrain_lr) << '\n'
      << "epochs = " << t.epochs << '\n'
      << "patience = " << t.patience << '\n'
      << "schedule = " << render_schedule(t.schedule) << '\n'
      << "update = " << (t.cadence == policy::UpdateCadence::per_epoch ? "epoch" : "query") << '\n'
      << "reward_scores = " << (t.reward_scores == policy::RewardScores::expected ? "expected" : "sampled")
      << '\n'
      << "seed = " << t.seed << '\n';
  return out.str();
}

}  // namespace marlrank
