#include "maskmem/corpus.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

#include "maskmem/error.h"
#include "maskmem/rng.h"

namespace maskmem {

namespace {

Corpus generate_split(const KnowledgeBase& kb, const CorpusConfig& config,
                      std::size_t n, std::uint64_t seed,
                      std::string_view split) {
  Corpus out;
  out.reserve(n);
  GoalOptions goal_options;
  goal_options.update_probability = config.update_probability;
  SimulatorOptions sim;
  sim.tie_probability = config.tie_probability;
  sim.patterns = config.patterns;
  const std::string name = "dialog/" + std::string(split);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::stream(seed, name, i);
    const Goal goal = sample_goal(kb, rng, goal_options);
    out.push_back(simulate_dialog(goal, kb, config.mode, rng, sim));
  }
  return out;
}

}  // namespace

Corpora generate_corpus(const CorpusConfig& config, const SplitSizes& sizes,
                        std::uint64_t seed) {
  if (config.tie_probability < 0 || config.tie_probability > 1 ||
      config.update_probability < 0 || config.update_probability > 1) {
    throw ConfigError("probabilities must lie in [0, 1]");
  }
  Corpora c;
  KBConfig kb_config = config.kb;
  kb_config.oov_mode = false;
  c.kb = generate_kb(kb_config, mix64(seed ^ fnv1a64("kb")));
  kb_config.oov_mode = true;
  c.oov_kb = generate_kb(kb_config, mix64(seed ^ fnv1a64("kb/oov")));
  c.train = generate_split(c.kb, config, sizes.train, seed, "train");
  c.val = generate_split(c.kb, config, sizes.val, seed, "val");
  c.test = generate_split(c.kb, config, sizes.test, seed, "test");
  c.test_oov = generate_split(c.oov_kb, config, sizes.test_oov, seed, "test_oov");
  return c;
}

Corpus sample_subset(const Corpus& dialogs, std::size_t n, std::uint64_t seed) {
  if (n > dialogs.size()) {
    throw std::invalid_argument("cannot sample " + std::to_string(n) +
                                " dialogs from " +
                                std::to_string(dialogs.size()));
  }
  Corpus out;
  out.reserve(n);
  Rng rng = Rng::stream(seed, "subset");
  std::sample(dialogs.begin(), dialogs.end(), std::back_inserter(out), n,
              rng.engine());
  return out;
}

std::string emit_corpus(const Corpus& dialogs) {
  std::string out;
  for (const auto& dialog : dialogs) {
    std::size_t index = 0;
    for (const auto& line : dialog.lines) {
      out += std::to_string(++index);
      out.push_back(' ');
      if (line.is_turn()) {
        const Turn& t = line.turn();
        out += join(t.user);
        out.push_back('\t');
        for (std::size_t i = 0; i < t.answer_set.size(); ++i) {
          if (i) out.push_back('|');
          out += join(t.answer_set[i]);
        }
      } else {
        const KbFact& f = line.fact();
        out += f.entity;
        out.push_back(' ');
        out += relation_token(f.relation);
        out.push_back(' ');
        out += f.value;
      }
      out.push_back('\n');
    }
    out.push_back('\n');
  }
  return out;
}

void emit_corpus_file(const Corpus& dialogs, const std::string& path) {
  write_text_file(path, emit_corpus(dialogs));
}

Corpus parse_corpus(std::string_view text, DialogMode mode,
                    const std::string& source) {
  Corpus out;
  AnnotatedDialog current;
  current.mode = mode;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  auto flush = [&] {
    if (!current.lines.empty()) {
      out.push_back(std::move(current));
      current = AnnotatedDialog{};
      current.mode = mode;
    }
  };
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      flush();
      continue;
    }
    const std::size_t sp = line.find(' ');
    if (sp == std::string_view::npos || sp == 0) {
      throw ParseError(source, lineno, "expected '<index> <content>'");
    }
    std::size_t index = 0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + sp, index);
    if (ec != std::errc() || ptr != line.data() + sp) {
      throw ParseError(source, lineno, "bad line index");
    }
    if (index != current.lines.size() + 1) {
      throw ParseError(source, lineno,
                       "expected index " +
                           std::to_string(current.lines.size() + 1));
    }
    const std::string_view body = line.substr(sp + 1);
    const std::size_t tab = body.find('\t');
    if (tab != std::string_view::npos) {
      Turn turn;
      turn.user = tokenize(body.substr(0, tab));
      std::string_view sys = body.substr(tab + 1);
      std::size_t start = 0;
      while (true) {
        const std::size_t bar = sys.find('|', start);
        const auto alt = sys.substr(
            start, bar == std::string_view::npos ? sys.size() - start
                                                 : bar - start);
        Utterance u = tokenize(alt);
        if (u.empty()) throw ParseError(source, lineno, "empty system reply");
        if (turn.accepts(u)) {
          throw ParseError(source, lineno, "duplicate answer alternative");
        }
        turn.answer_set.push_back(std::move(u));
        if (bar == std::string_view::npos) break;
        start = bar + 1;
      }
      current.lines.push_back(DialogLine{std::move(turn)});
    } else {
      const Utterance tok = tokenize(body);
      if (tok.size() != 3) {
        throw ParseError(source, lineno,
                         "KB line must be '<restaurant> <relation> <value>'");
      }
      auto rel = parse_relation_token(tok[1]);
      if (!rel) throw ParseError(source, lineno, "unknown relation " + tok[1]);
      current.lines.push_back(DialogLine{KbFact{tok[0], *rel, tok[2]}});
    }
  }
  flush();
  return out;
}

Corpus parse_dialog_file(const std::string& path, DialogMode mode) {
  return parse_corpus(read_text_file(path), mode, path);
}

void check_all_singleton(const Corpus& dialogs, const std::string& name) {
  for (std::size_t d = 0; d < dialogs.size(); ++d) {
    for (const Turn* t : dialogs[d].turns()) {
      if (t->answer_set.size() != 1) {
        throw DatasetError(name + ": dialog " + std::to_string(d + 1) +
                           " has a multi-answer turn in original mode");
      }
    }
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace maskmem
