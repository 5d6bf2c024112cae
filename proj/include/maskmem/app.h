#ifndef MASKMEM_APP_H_
#define MASKMEM_APP_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "maskmem/checkpoint.h"
#include "maskmem/config.h"
#include "maskmem/evaluation.h"
#include "maskmem/workspace.h"

namespace maskmem {

// The command-line tool's commands. Each throws maskmem::Error for user
// errors; `out` receives the command's regular output.
void cmd_generate(const RunConfig& config, std::ostream& out);
// Writes the best checkpoint to config.checkpoint, the latest state to
// "<checkpoint>.state" after every epoch, and the run log. With
// config.resume it continues from the state file.
TrainResult cmd_train(const RunConfig& config, std::ostream& out);
std::vector<Metrics> cmd_eval(const RunConfig& config, std::ostream& out);
void cmd_report(const RunConfig& config, const std::vector<std::string>& csv_files,
                std::ostream& out);
// Reads user lines from `in` until EOF or /quit.
void cmd_chat(const RunConfig& config, std::istream& in, std::ostream& out);

std::string state_path(const RunConfig& config);

// A trained model with the data it needs, rebuilt from a checkpoint.
struct LoadedModel {
  Checkpoint checkpoint;
  Vocabulary vocab;
  ModelKind kind = ModelKind::kMemN2N;
  bool match_type = false;
  std::unique_ptr<MemN2N> model;
};

LoadedModel load_model(const std::string& checkpoint_path);

}  // namespace maskmem

#endif  // MASKMEM_APP_H_
