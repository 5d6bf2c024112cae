#include "maskmem/app.h"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "maskmem/chat.h"
#include "maskmem/error.h"

namespace maskmem {

namespace fs = std::filesystem;

namespace {

struct StopRequested {};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Round-trips through std::stod.
std::string exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join_lines(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += s + "\n";
  return out;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::uint64_t candidates_fingerprint(const CandidateSet& c) {
  return fnv1a64(c.to_text());
}

// The settings a resumed run must share with the original one.
std::string training_config_text(RunConfig config) {
  config.resume = false;
  config.stop_after = 0;
  config.quiet = false;
  return dump_config(config);
}

struct TrainContext {
  const RunConfig& config;
  const PreparedData& data;
  const MemN2N& model;
  ModelKind kind;
};

Checkpoint make_checkpoint(const TrainContext& ctx, const ModelParams& params,
                           const std::string& phase) {
  Checkpoint c;
  c.config = ctx.model.config();
  c.mask = ctx.model.mask_options();
  c.candidate_count = static_cast<std::uint32_t>(ctx.data.candidates.size());
  c.params = params;
  c.meta["model"] = to_string(ctx.kind);
  c.meta["phase"] = phase;
  c.meta["match_type"] = ctx.config.match_type ? "1" : "0";
  c.meta["vocab"] = join_lines(ctx.data.vocab.tokens());
  c.meta["vocab_fingerprint"] = hex64(ctx.data.vocab.fingerprint());
  c.meta["candidates_fingerprint"] = hex64(candidates_fingerprint(ctx.data.candidates));
  c.meta["seed"] = std::to_string(ctx.config.seed);
  c.meta["dataset"] = ctx.config.dataset_tag();
  c.meta["mode"] = ctx.config.mode;
  c.meta["config"] = training_config_text(ctx.config);
  return c;
}

void put_best(Checkpoint& c, const PhaseResult& best) {
  c.meta["best_epoch"] = std::to_string(best.best_epoch);
  c.meta["best_val_per_turn"] = exact(best.best_val.per_turn);
  c.meta["best_val_per_dialog"] = exact(best.best_val.per_dialog);
  c.meta["best_val_turns"] = std::to_string(best.best_val.n_turns);
  c.meta["best_val_dialogs"] = std::to_string(best.best_val.n_dialogs);
}

// Best-so-far bookkeeping stored next to a resumable state.
PhaseResult best_from(const Checkpoint& state, ModelParams best_params) {
  PhaseResult r;
  r.params = std::move(best_params);
  r.best_epoch = std::stoi(state.get("best_epoch"));
  r.best_val.per_turn = std::stod(state.get("best_val_per_turn"));
  r.best_val.per_dialog = std::stod(state.get("best_val_per_dialog"));
  r.best_val.n_turns = std::stoul(state.get("best_val_turns"));
  r.best_val.n_dialogs = std::stoul(state.get("best_val_dialogs"));
  return r;
}

std::unique_ptr<PreparedData> load_prepared(const RunConfig& config,
                                            const Vocabulary* vocab = nullptr) {
  const DataFiles files =
      load_data_dir(config.data_dir, config.data_variant(), config.dialog_mode());
  FeaturizeOptions opt = config.featurize_options();
  return prepare_data(files, opt, vocab);
}

}  // namespace

std::string state_path(const RunConfig& config) { return config.checkpoint + ".state"; }

void cmd_generate(const RunConfig& config, std::ostream& out) {
  config.validate();
  const Corpora corpora =
      generate_corpus(config.corpus_config(), config.split_sizes(), config.seed);
  if (config.dialog_mode() == DialogMode::kOriginal) {
    check_all_singleton(corpora.train, "train");
    check_all_singleton(corpora.val, "val");
    check_all_singleton(corpora.test, "test");
    check_all_singleton(corpora.test_oov, "test_oov");
  }
  write_data_dir(config.data_dir, corpora, config.subset, config.subset_seed);
  std::size_t multi = 0, turns = 0;
  for (const auto& d : corpora.train) {
    for (const auto* t : d.turns()) {
      ++turns;
      multi += t->answer_set.size() > 1;
    }
  }
  out << "wrote " << config.data_dir << ": " << corpora.train.size()
      << " dialogs per split (subset " << std::min(config.subset, corpora.train.size())
      << "), " << corpora.kb.restaurants().size() << " restaurants, "
      << multi << "/" << turns << " train turns with several valid answers\n";
}

TrainResult cmd_train(const RunConfig& config, std::ostream& out) {
  config.validate();
  const ModelKind kind = config.model_kind();
  const RLConfig rl = config.rl_config();
  const TrainingSchedule schedule = config.schedule();
  const auto data = load_prepared(config);
  const MemN2N model(config.model_config(static_cast<int>(data->vocab.size())),
                     config.mask_options());
  const TrainContext ctx{config, *data, model, kind};
  const TrainData td{data->train, data->val, &data->candidate_ids()};
  const bool two_phase = kind == ModelKind::kMaskMemN2N;
  const bool skip_sl = two_phase && rl.rl_only;

  // Where to pick up.
  std::string start_phase = skip_sl ? "rl" : "sl";
  int start_epoch = 0;
  ModelParams current = model.init_params(config.seed);
  std::optional<PhaseResult> resume_best;
  if (config.resume && fs::exists(state_path(config))) {
    const Checkpoint state = load_checkpoint(state_path(config));
    if (state.get("vocab_fingerprint") != hex64(data->vocab.fingerprint()) ||
        state.get("config") != training_config_text(config)) {
      throw CompatibilityError("cannot resume: " + state_path(config) +
                               " was written with a different data set or config");
    }
    start_phase = state.get("phase");
    start_epoch = std::stoi(state.get("epoch")) + 1;
    current = state.params;
    if (state.meta.count("best_epoch")) {
      resume_best = best_from(state, load_checkpoint(config.checkpoint).params);
    }
    out << "resuming " << start_phase << " phase at epoch " << start_epoch << "\n";
  }

  std::ofstream log;
  const bool append = config.resume && start_epoch > 0;
  log.open(config.log_path(), append ? std::ios::app : std::ios::trunc);
  if (!log) throw IoError("cannot write " + config.log_path());
  if (!append) log << run_log_header() << "\n";

  int epochs_run = 0;
  auto make_options = [&](const std::string& phase, int first_epoch) {
    PhaseOptions opt;
    opt.first_epoch = first_epoch;
    opt.on_epoch = [&, phase](const EpochLog& e, const ModelParams& params,
                              const PhaseResult& best) {
      log << format_epoch_log(e) << "\n";
      log.flush();
      if (best.best_epoch == e.epoch) {
        Checkpoint b = make_checkpoint(ctx, best.params, phase);
        put_best(b, best);
        save_checkpoint(b, config.checkpoint);
      }
      Checkpoint s = make_checkpoint(ctx, params, phase);
      s.meta["epoch"] = std::to_string(e.epoch);
      put_best(s, best);
      save_checkpoint(s, state_path(config));
      if (config.stop_after > 0 && ++epochs_run >= config.stop_after) throw StopRequested{};
    };
    if (!config.quiet) {
      opt.progress = [&out](const std::string& line) { out << line << "\n" << std::flush; };
    }
    return opt;
  };

  TrainResult result;
  try {
    if (start_phase == "sl") {
      PhaseOptions opt = make_options("sl", start_epoch);
      if (resume_best) opt.resume_best = &*resume_best;
      PhaseResult sl = train_supervised(model, std::move(current), td, kind, schedule,
                                        rl, config.seed, opt);
      // No epochs ran (sl_epochs = 0 or already complete): keep the start.
      if (sl.best_val.n_turns == 0) {
        sl.best_val = evaluate(model, sl.params, td.val, *td.candidates, eval_mask_mode(kind));
      }
      Checkpoint b = make_checkpoint(ctx, sl.params, "sl");
      put_best(b, sl);
      save_checkpoint(b, config.checkpoint);
      result.params = sl.params;
      result.best_val = sl.best_val;
      result.phase = "sl";
      result.log = sl.log;
      current = std::move(sl.params);
      start_epoch = 0;
      resume_best.reset();
    }
    if (two_phase) {
      PhaseOptions opt = make_options("rl", start_epoch);
      if (resume_best) opt.resume_best = &*resume_best;
      PhaseResult rlr =
          train_reinforce(model, std::move(current), td, schedule, rl, config.seed, opt);
      // best_epoch -1 is the warm start, i.e. the supervised phase's best.
      const std::string phase = rlr.best_epoch >= 0 || skip_sl ? "rl" : "sl";
      Checkpoint b = make_checkpoint(ctx, rlr.params, phase);
      put_best(b, rlr);
      save_checkpoint(b, config.checkpoint);
      result.params = rlr.params;
      result.best_val = rlr.best_val;
      result.phase = phase;
      result.log.insert(result.log.end(), rlr.log.begin(), rlr.log.end());
    }
  } catch (const StopRequested&) {
    out << "stopped after " << epochs_run << " epochs; continue with --resume\n";
    result.phase = "stopped";
    return result;
  }
  out << "best validation " << result.best_val.per_turn << " per-turn, "
      << result.best_val.per_dialog << " per-dialog (" << result.phase
      << " phase); checkpoint " << config.checkpoint << "\n";
  return result;
}

LoadedModel load_model(const std::string& checkpoint_path) {
  LoadedModel m;
  m.checkpoint = load_checkpoint(checkpoint_path);
  m.vocab = Vocabulary::from_tokens(split_lines(m.checkpoint.get("vocab")));
  if (hex64(m.vocab.fingerprint()) != m.checkpoint.get("vocab_fingerprint")) {
    throw CheckpointError(checkpoint_path + ": vocabulary fingerprint mismatch");
  }
  if (static_cast<int>(m.vocab.size()) != m.checkpoint.config.vocab_size) {
    throw CheckpointError(checkpoint_path + ": vocabulary size does not match the header");
  }
  m.kind = parse_model_kind(m.checkpoint.get("model"));
  m.match_type = m.checkpoint.get("match_type") == "1";
  m.model = std::make_unique<MemN2N>(m.checkpoint.config, m.checkpoint.mask);
  return m;
}

namespace {

LoadedModel load_compatible(const RunConfig& config, std::unique_ptr<PreparedData>& data) {
  LoadedModel m = load_model(config.checkpoint);
  if (config.match_type && !m.match_type) {
    throw CompatibilityError(config.checkpoint + " was trained without match-type features");
  }
  RunConfig c = config;
  c.match_type = m.match_type;
  c.memory_capacity = static_cast<std::size_t>(m.checkpoint.config.memory_capacity);
  data = load_prepared(c, &m.vocab);
  if (data->candidates.size() != m.checkpoint.candidate_count ||
      hex64(candidates_fingerprint(data->candidates)) !=
          m.checkpoint.get("candidates_fingerprint")) {
    throw CompatibilityError("candidate set in " + config.data_dir +
                             " differs from the one " + config.checkpoint +
                             " was trained with");
  }
  return m;
}

}  // namespace

std::vector<Metrics> cmd_eval(const RunConfig& config, std::ostream& out) {
  config.validate();
  std::unique_ptr<PreparedData> data;
  const LoadedModel m = load_compatible(config, data);
  const MaskMode mode = eval_mask_mode(m.kind);
  std::vector<Metrics> rows;
  for (const auto& split : config.split_list()) {
    const std::vector<FeaturizedExample>* ex = nullptr;
    const std::vector<TokenIds>* cands = &data->candidate_ids();
    if (split == "train") ex = &data->train;
    if (split == "val") ex = &data->val;
    if (split == "test") ex = &data->test;
    if (split == "test_oov") {
      ex = &data->test_oov;
      cands = &data->oov_candidate_ids();
    }
    if (ex->empty()) throw DatasetError("split " + split + " is empty or missing");
    Metrics mt = evaluate(*m.model, m.checkpoint.params, *ex, *cands, mode);
    mt.dataset = config.dataset.empty() ? m.checkpoint.get("dataset") : config.dataset;
    mt.model = to_string(m.kind);
    mt.split = split;
    mt.match_type = m.match_type;
    mt.seed = std::stoull(m.checkpoint.get("seed"));
    mt.checkpoint_path = config.checkpoint;
    rows.push_back(mt);
  }
  out << metrics_csv_header() << "\n";
  for (const auto& r : rows) out << metrics_csv_row(r) << "\n";
  if (!config.metrics_csv.empty()) {
    const bool fresh = !fs::exists(config.metrics_csv) || fs::file_size(config.metrics_csv) == 0;
    std::ofstream f(config.metrics_csv, std::ios::app);
    if (!f) throw IoError("cannot write " + config.metrics_csv);
    if (fresh) f << metrics_csv_header() << "\n";
    for (const auto& r : rows) f << metrics_csv_row(r) << "\n";
  }
  return rows;
}

void cmd_report(const RunConfig& config, const std::vector<std::string>& csv_files,
                std::ostream& out) {
  config.validate();
  std::vector<std::string> files = csv_files;
  if (files.empty() && !config.metrics_csv.empty()) files.push_back(config.metrics_csv);
  if (files.empty()) throw ConfigError("report needs at least one metrics CSV file");
  std::vector<Metrics> all;
  for (const auto& path : files) {
    auto rows = parse_metrics_csv(read_text_file(path));
    all.insert(all.end(), rows.begin(), rows.end());
  }
  out << report_grid(all, config.report_split);
}

void cmd_chat(const RunConfig& config, std::istream& in, std::ostream& out) {
  config.validate();
  const LoadedModel m = load_model(config.checkpoint);
  const auto cand_path = (fs::path(config.data_dir) / "candidates.txt").string();
  const auto kb_path = (fs::path(config.data_dir) / "kb.txt").string();
  const CandidateSet candidates = CandidateSet::load(cand_path);
  if (candidates.size() != m.checkpoint.candidate_count ||
      hex64(candidates_fingerprint(candidates)) != m.checkpoint.get("candidates_fingerprint")) {
    throw CompatibilityError(cand_path + " differs from the candidates " +
                             config.checkpoint + " was trained with");
  }
  const auto facts = parse_kb_text(read_text_file(kb_path), kb_path);
  FeaturizeOptions opt;
  opt.match_type = m.match_type;
  opt.memory_capacity = static_cast<std::size_t>(m.checkpoint.config.memory_capacity);
  const Featurizer featurizer(m.vocab, candidates, EntityLexicon::from_facts(facts), opt);
  ChatSession chat(*m.model, m.checkpoint.params, featurizer, eval_mask_mode(m.kind),
                   KbIndex(facts));
  const char* help =
      "commands: /reset clears the dialog, /kb <text> searches the KB, /quit exits;\n"
      "anything else is a user utterance (empty line = <SILENCE>)\n";
  out << "model " << to_string(m.kind) << ", " << candidates.size() << " candidates, "
      << chat.kb().num_restaurants() << " restaurants. /help for commands\n";
  std::string line;
  while (out << "> " << std::flush, std::getline(in, line)) {
    if (!line.empty() && line[0] == '/') {
      const auto space = line.find(' ');
      const std::string cmd = line.substr(0, space);
      const std::string arg = space == std::string::npos ? "" : line.substr(space + 1);
      if (cmd == "/quit") break;
      if (cmd == "/reset") {
        chat.reset();
        out << "(memory cleared)\n";
      } else if (cmd == "/kb") {
        const auto hits = chat.kb().search(arg);
        for (const auto& f : hits) out << f.entity << " " << relation_token(f.relation) << " " << f.value << "\n";
        out << "(" << hits.size() << " facts)\n";
      } else {
        if (cmd != "/help") out << "unknown command " << cmd << "\n";
        out << help;
      }
      continue;
    }
    const ChatReply r = chat.respond(line);
    out << "bot: " << r.text << "\n";
    for (const auto& f : r.injected) {
      out << "  " << f.entity << " " << relation_token(f.relation) << " " << f.value << "\n";
    }
  }
  out << "bye\n";
}

}  // namespace maskmem
