#include "maskmem/config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "maskmem/error.h"

namespace maskmem {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* expected) {
  throw ConfigError("bad value '" + value + "' for " + key + " (expected " +
                    expected + ")");
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = first + value.size();
  if constexpr (std::is_floating_point_v<T>) {
    // from_chars for doubles is fine with libstdc++ 11
    auto [p, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || p != last) bad_value(key, value, "a number");
  } else {
    auto [p, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || p != last) bad_value(key, value, "an integer");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value, "true or false");
}

template <typename T>
std::string show(const T& v) {
  if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else if constexpr (std::is_floating_point_v<T>) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);  // shortest round trip
    return std::string(buf, r.ptr);
  } else {
    return std::to_string(v);
  }
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field field(T RunConfig::*member) {
  Field f;
  f.set = [member](RunConfig& c, const std::string& key, const std::string& v) {
    if constexpr (std::is_same_v<T, bool>) {
      c.*member = parse_bool(key, v);
    } else if constexpr (std::is_same_v<T, std::string>) {
      c.*member = v;
    } else {
      c.*member = parse_number<T>(key, v);
    }
  };
  f.get = [member](const RunConfig& c) { return show(c.*member); };
  return f;
}

struct Registry {
  std::vector<std::string> order;
  std::map<std::string, Field> fields;

  template <typename T>
  void add(const std::string& key, T RunConfig::*member) {
    order.push_back(key);
    fields.emplace(key, field(member));
  }
};

const Registry& registry() {
  static const Registry r = [] {
    Registry g;
    g.add("seed", &RunConfig::seed);
    g.add("data_dir", &RunConfig::data_dir);
    g.add("mode", &RunConfig::mode);
    g.add("dialogs", &RunConfig::dialogs);
    g.add("subset", &RunConfig::subset);
    g.add("subset_seed", &RunConfig::subset_seed);
    g.add("cuisines", &RunConfig::cuisines);
    g.add("locations", &RunConfig::locations);
    g.add("rating_min", &RunConfig::rating_min);
    g.add("rating_max", &RunConfig::rating_max);
    g.add("tie_probability", &RunConfig::tie_probability);
    g.add("update_probability", &RunConfig::update_probability);
    g.add("variant", &RunConfig::variant);
    g.add("dataset", &RunConfig::dataset);
    g.add("model", &RunConfig::model);
    g.add("match_type", &RunConfig::match_type);
    g.add("embedding_size", &RunConfig::embedding_size);
    g.add("hops", &RunConfig::hops);
    g.add("memory_capacity", &RunConfig::memory_capacity);
    g.add("tying", &RunConfig::tying);
    g.add("position_encoding", &RunConfig::position_encoding);
    g.add("temporal", &RunConfig::temporal);
    g.add("init_stddev", &RunConfig::init_stddev);
    g.add("batch_size", &RunConfig::batch_size);
    g.add("learning_rate", &RunConfig::learning_rate);
    g.add("anneal_ratio", &RunConfig::anneal_ratio);
    g.add("anneal_period", &RunConfig::anneal_period);
    g.add("reduction", &RunConfig::reduction);
    g.add("max_grad_norm", &RunConfig::max_grad_norm);
    g.add("rl_reduction", &RunConfig::rl_reduction);
    g.add("rl_learning_rate", &RunConfig::rl_learning_rate);
    g.add("sl_epochs", &RunConfig::sl_epochs);
    g.add("rl_epochs", &RunConfig::rl_epochs);
    g.add("reward_correct", &RunConfig::reward_correct);
    g.add("reward_incorrect", &RunConfig::reward_incorrect);
    g.add("entropy_start", &RunConfig::entropy_start);
    g.add("entropy_end", &RunConfig::entropy_end);
    g.add("l2_coeff", &RunConfig::l2_coeff);
    g.add("no_entropy", &RunConfig::no_entropy);
    g.add("no_l2_pretrain", &RunConfig::no_l2_pretrain);
    g.add("rl_only", &RunConfig::rl_only);
    g.add("untie_state", &RunConfig::untie_state);
    g.add("collapsed", &RunConfig::collapsed);
    g.add("pretrain_scope", &RunConfig::pretrain_scope);
    g.add("checkpoint", &RunConfig::checkpoint);
    g.add("log", &RunConfig::log);
    g.add("resume", &RunConfig::resume);
    g.add("stop_after", &RunConfig::stop_after);
    g.add("quiet", &RunConfig::quiet);
    g.add("splits", &RunConfig::splits);
    g.add("metrics_csv", &RunConfig::metrics_csv);
    g.add("report_split", &RunConfig::report_split);
    return g;
  }();
  return r;
}

BatchReduction parse_reduction(const std::string& key, const std::string& v) {
  if (v == "mean") return BatchReduction::kMean;
  if (v == "sum") return BatchReduction::kSum;
  bad_value(key, v, "mean or sum");
}

}  // namespace

const std::vector<std::string>& config_keys() { return registry().order; }

void set_config_value(RunConfig& config, const std::string& key,
                      const std::string& value) {
  const auto& fields = registry().fields;
  const auto it = fields.find(key);
  if (it == fields.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.set(config, key, value);
}

std::string get_config_value(const RunConfig& config, const std::string& key) {
  const auto& fields = registry().fields;
  const auto it = fields.find(key);
  if (it == fields.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second.get(config);
}

void apply_config_text(RunConfig& config, const std::string& text,
                       const std::string& source) {
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      set_config_value(config, key, value);
    } catch (const ConfigError& e) {
      throw ParseError(source, lineno, e.what());
    }
  }
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  apply_config_text(config, ss.str(), path);
}

std::string dump_config(const RunConfig& config) {
  std::string out;
  for (const auto& key : config_keys()) {
    out += key + " = " + get_config_value(config, key) + "\n";
  }
  return out;
}

DialogMode RunConfig::dialog_mode() const {
  try {
    return parse_dialog_mode(mode);
  } catch (const Error&) {
    bad_value("mode", mode, "original or permuted");
  }
}

DataVariant RunConfig::data_variant() const {
  try {
    return parse_data_variant(variant);
  } catch (const Error&) {
    bad_value("variant", variant, "1000 or full");
  }
}

ModelKind RunConfig::model_kind() const { return parse_model_kind(model); }

std::string RunConfig::dataset_tag() const {
  if (!dataset.empty()) return dataset;
  return mode + "-" + to_string(data_variant());
}

std::string RunConfig::log_path() const {
  return log.empty() ? checkpoint + ".log" : log;
}

CorpusConfig RunConfig::corpus_config() const {
  CorpusConfig c;
  c.mode = dialog_mode();
  c.kb.n_cuisines = cuisines;
  c.kb.n_locations = locations;
  c.kb.rating_min = rating_min;
  c.kb.rating_max = rating_max;
  c.kb.allow_rating_ties = c.mode == DialogMode::kPermuted;
  c.tie_probability = tie_probability;
  c.update_probability = update_probability;
  return c;
}

SplitSizes RunConfig::split_sizes() const {
  SplitSizes s;
  s.train = s.val = s.test = s.test_oov = dialogs;
  return s;
}

ModelConfig RunConfig::model_config(int vocab_size) const {
  ModelConfig c;
  c.vocab_size = vocab_size;
  c.embedding_size = embedding_size;
  c.hops = hops;
  c.memory_capacity = static_cast<int>(memory_capacity);
  if (tying == "shared") {
    c.tying = WeightTying::kShared;
  } else if (tying == "adjacent") {
    c.tying = WeightTying::kAdjacent;
  } else {
    bad_value("tying", tying, "shared or adjacent");
  }
  c.position_encoding = position_encoding;
  c.temporal = temporal;
  c.init_stddev = init_stddev;
  return c;
}

MaskOptions RunConfig::mask_options() const {
  MaskOptions m;
  m.untie_state = untie_state;
  m.collapsed = collapsed;
  if (pretrain_scope == "encoder") {
    m.pretrain_reaches_encoder = true;
  } else if (pretrain_scope == "rl_head") {
    m.pretrain_reaches_encoder = false;
  } else {
    bad_value("pretrain_scope", pretrain_scope, "encoder or rl_head");
  }
  return m;
}

TrainingSchedule RunConfig::schedule() const {
  TrainingSchedule s;
  s.sl_epochs = sl_epochs;
  s.batch_size = batch_size;
  s.reduction = parse_reduction("reduction", reduction);
  s.max_grad_norm = max_grad_norm;
  s.base_lr = learning_rate;
  s.anneal_ratio = anneal_ratio;
  s.anneal_period = anneal_period;
  s.rl_reduction = parse_reduction("rl_reduction", rl_reduction);
  s.rl_base_lr = rl_learning_rate;
  return s;
}

RLConfig RunConfig::rl_config() const {
  RLConfig r;
  r.reward_correct = reward_correct;
  r.reward_incorrect = reward_incorrect;
  r.entropy_start = entropy_start;
  r.entropy_end = entropy_end;
  r.rl_epochs = rl_epochs;
  r.l2_coeff = l2_coeff;
  r.no_entropy = no_entropy;
  r.no_l2_pretrain = no_l2_pretrain;
  r.rl_only = rl_only;
  return r;
}

FeaturizeOptions RunConfig::featurize_options() const {
  FeaturizeOptions f;
  f.match_type = match_type;
  f.memory_capacity = memory_capacity;
  return f;
}

std::vector<std::string> RunConfig::split_list() const {
  std::vector<std::string> out;
  std::stringstream ss(splits);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    if (item != "train" && item != "val" && item != "test" && item != "test_oov") {
      bad_value("splits", splits, "a comma list of train, val, test, test_oov");
    }
    out.push_back(item);
  }
  if (out.empty()) bad_value("splits", splits, "at least one split");
  return out;
}

void RunConfig::validate() const {
  dialog_mode();
  data_variant();
  model_kind();
  model_config(1);
  mask_options();
  schedule();
  split_list();
  if (dialogs == 0) throw ConfigError("dialogs must be >= 1");
  if (subset == 0 || subset > dialogs) {
    throw ConfigError("subset must be between 1 and dialogs");
  }
  if (embedding_size < 1 || hops < 1 || memory_capacity < 1) {
    throw ConfigError("embedding_size, hops and memory_capacity must be >= 1");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (learning_rate <= 0 || rl_learning_rate <= 0) {
    throw ConfigError("learning rates must be positive");
  }
  if (anneal_period < 1 || anneal_ratio <= 0) {
    throw ConfigError("anneal_period must be >= 1 and anneal_ratio > 0");
  }
  if (sl_epochs < 0) throw ConfigError("sl_epochs must be >= 0");
  if (max_grad_norm < 0) throw ConfigError("max_grad_norm must be >= 0");
  if (stop_after < 0) throw ConfigError("stop_after must be >= 0");
  if (tie_probability < 0 || tie_probability > 1 || update_probability < 0 ||
      update_probability > 1) {
    throw ConfigError("probabilities must lie in [0, 1]");
  }
  if (report_split != "train" && report_split != "val" && report_split != "test" &&
      report_split != "test_oov") {
    bad_value("report_split", report_split, "train, val, test or test_oov");
  }
  rl_config().validate();
}

}  // namespace maskmem
