#ifndef MASKMEM_CONFIG_H_
#define MASKMEM_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "maskmem/corpus.h"
#include "maskmem/model.h"
#include "maskmem/trainer.h"
#include "maskmem/workspace.h"

namespace maskmem {

// Every setting any command reads. Config files and command-line flags use
// the field names as keys.
struct RunConfig {
  std::uint64_t seed = 599;
  std::string data_dir = "data";

  // generate
  std::string mode = "permuted";
  std::size_t dialogs = 11000;  // per split, full corpora
  std::size_t subset = 1000;
  std::uint64_t subset_seed = 599;
  int cuisines = 3;
  int locations = 3;
  int rating_min = 1;
  int rating_max = 3;
  double tie_probability = 0.5;
  double update_probability = 0.5;

  // train
  std::string variant = "1000";
  std::string dataset;  // report tag; empty: "<mode>-<variant>"
  std::string model = "memn2n";
  bool match_type = false;
  int embedding_size = 20;
  int hops = 3;
  std::size_t memory_capacity = 250;
  std::string tying = "shared";
  bool position_encoding = true;
  bool temporal = true;
  double init_stddev = 0.1;
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  double anneal_ratio = 0.5;
  int anneal_period = 25;
  std::string reduction = "sum";
  double max_grad_norm = 40.0;
  std::string rl_reduction = "mean";
  double rl_learning_rate = 0.01;
  int sl_epochs = 150;
  int rl_epochs = 100;
  double reward_correct = 5.0;
  double reward_incorrect = -0.5;
  double entropy_start = 1e-5;
  double entropy_end = 0.0;
  double l2_coeff = 0.1;
  bool no_entropy = false;
  bool no_l2_pretrain = false;
  bool rl_only = false;
  bool untie_state = false;
  bool collapsed = false;
  std::string pretrain_scope = "encoder";  // or "rl_head"
  std::string checkpoint = "model.ckpt";
  std::string log;  // empty: "<checkpoint>.log"
  bool resume = false;
  // Stop after this many epochs in this invocation (0: no limit); the run
  // can be continued with resume.
  int stop_after = 0;
  bool quiet = false;

  // eval / report
  std::string splits = "test,test_oov";
  std::string metrics_csv;  // append rows here when set
  std::string report_split = "test";

  // Derived views; throw ConfigError on invalid values.
  DialogMode dialog_mode() const;
  DataVariant data_variant() const;
  ModelKind model_kind() const;
  std::string dataset_tag() const;
  std::string log_path() const;
  CorpusConfig corpus_config() const;
  SplitSizes split_sizes() const;
  ModelConfig model_config(int vocab_size) const;
  MaskOptions mask_options() const;
  TrainingSchedule schedule() const;
  RLConfig rl_config() const;
  FeaturizeOptions featurize_options() const;
  std::vector<std::string> split_list() const;

  void validate() const;
};

// Key names in declaration order.
const std::vector<std::string>& config_keys();

// Sets one key from its text form. Throws ConfigError for unknown keys and
// malformed values.
void set_config_value(RunConfig& config, const std::string& key,
                      const std::string& value);
std::string get_config_value(const RunConfig& config, const std::string& key);

// Flat "key = value" lines; '#' starts a comment. Throws ParseError with
// the line number.
void apply_config_text(RunConfig& config, const std::string& text,
                       const std::string& source);
void apply_config_file(RunConfig& config, const std::string& path);
// Every key, one per line, in a form apply_config_text reads back.
std::string dump_config(const RunConfig& config);

}  // namespace maskmem

#endif  // MASKMEM_CONFIG_H_
