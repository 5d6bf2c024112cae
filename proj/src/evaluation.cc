#include "maskmem/evaluation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "maskmem/error.h"

namespace maskmem {

namespace {

std::string fixed1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

const char* kDash = "—";

}  // namespace

bool is_correct(int predicted, std::span<const int> valid) {
  return std::find(valid.begin(), valid.end(), predicted) != valid.end();
}

Metrics compute_metrics(std::span<const int> predictions,
                        std::span<const FeaturizedExample> examples) {
  if (predictions.size() != examples.size()) {
    throw ContractViolation("got " + std::to_string(predictions.size()) +
                            " predictions for " +
                            std::to_string(examples.size()) + " turns");
  }
  if (examples.empty()) throw ContractViolation("no turns to evaluate");
  std::map<std::size_t, bool> dialog_ok;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const bool ok = is_correct(predictions[i], examples[i].valid);
    correct += ok ? 1 : 0;
    auto [it, inserted] = dialog_ok.emplace(examples[i].dialog, ok);
    if (!inserted) it->second = it->second && ok;
  }
  std::size_t dialogs_ok = 0;
  for (const auto& [d, ok] : dialog_ok) dialogs_ok += ok ? 1 : 0;
  Metrics m;
  m.n_turns = examples.size();
  m.n_dialogs = dialog_ok.size();
  m.per_turn = 100.0 * static_cast<double>(correct) / static_cast<double>(m.n_turns);
  m.per_dialog =
      100.0 * static_cast<double>(dialogs_ok) / static_cast<double>(m.n_dialogs);
  return m;
}

std::vector<int> predict_all(const MemN2N& model, const ModelParams& params,
                             std::span<const FeaturizedExample> examples,
                             const std::vector<TokenIds>& candidates,
                             MaskMode mode) {
  const Matrix features = model.candidate_features(params, candidates);
  std::vector<int> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    out.push_back(model.predict(params, ex, features, mode));
  }
  return out;
}

Metrics evaluate(const MemN2N& model, const ModelParams& params,
                 std::span<const FeaturizedExample> examples,
                 const std::vector<TokenIds>& candidates, MaskMode mode) {
  const auto preds = predict_all(model, params, examples, candidates, mode);
  return compute_metrics(preds, examples);
}

std::size_t select_best(std::span<const RunResult> runs) {
  if (runs.empty()) throw std::invalid_argument("select_best: no runs");
  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    const double a = runs[i].validation.per_turn;
    const double b = runs[best].validation.per_turn;
    if (a > b || (a == b && runs[i].seed < runs[best].seed)) best = i;
  }
  return best;
}

std::string metrics_csv_header() {
  return "dataset,model,match_type,split,per_turn,per_dialog,seed,checkpoint_path";
}

std::string metrics_csv_row(const Metrics& m) {
  std::ostringstream os;
  os << m.dataset << ',' << m.model << ',' << (m.match_type ? 1 : 0) << ','
     << m.split << ',' << fixed1(m.per_turn) << ',' << fixed1(m.per_dialog)
     << ',' << m.seed << ',' << m.checkpoint_path;
  return os.str();
}

std::vector<Metrics> parse_metrics_csv(const std::string& text) {
  std::vector<Metrics> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line == metrics_csv_header()) continue;
    const auto f = split_csv(line);
    if (f.size() != 8) {
      throw ParseError("<metrics csv>", lineno, "expected 8 fields");
    }
    Metrics m;
    try {
      m.dataset = f[0];
      m.model = f[1];
      m.match_type = f[2] == "1";
      m.split = f[3];
      m.per_turn = std::stod(f[4]);
      m.per_dialog = std::stod(f[5]);
      m.seed = std::stoull(f[6]);
      m.checkpoint_path = f[7];
    } catch (const std::logic_error&) {
      throw ParseError("<metrics csv>", lineno, "malformed number");
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::string report_grid(std::span<const Metrics> results,
                        const std::string& split) {
  if (results.empty()) throw std::invalid_argument("report_grid: no results");
  struct Cell {
    std::optional<Metrics> plain, match;
  };
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, Cell> cells;
  for (const auto& m : results) {
    if (m.split != split) continue;
    const auto key = std::make_pair(m.dataset, m.model);
    if (!cells.count(key)) order.push_back(key);
    auto& cell = cells[key];
    (m.match_type ? cell.match : cell.plain) = m;
  }
  std::size_t w0 = 7, w1 = 5;
  for (const auto& [d, mo] : order) {
    w0 = std::max(w0, d.size());
    w1 = std::max(w1, mo.size());
  }
  auto pad = [](std::string s, std::size_t w) {
    // The dash placeholder is one column wide but three bytes long.
    const std::size_t len = s == kDash ? 1 : s.size();
    if (len < w) s.append(w - len, ' ');
    return s;
  };
  auto num = [](const std::optional<Metrics>& m, bool dialog) -> std::string {
    if (!m) return kDash;
    return fixed1(dialog ? m->per_dialog : m->per_turn);
  };
  std::ostringstream os;
  os << "split: " << split << "\n";
  os << pad("dataset", w0) << "  " << pad("model", w1)
     << "  no match-type        + match-type\n";
  os << pad("", w0) << "  " << pad("", w1)
     << "  per-turn  per-dialog  per-turn  per-dialog\n";
  for (const auto& key : order) {
    const auto& c = cells[key];
    os << pad(key.first, w0) << "  " << pad(key.second, w1) << "  "
       << pad(num(c.plain, false), 8) << "  " << pad(num(c.plain, true), 10)
       << "  " << pad(num(c.match, false), 8) << "  " << num(c.match, true)
       << "\n";
  }
  return os.str();
}

}  // namespace maskmem
