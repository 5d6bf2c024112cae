#include "maskmem/patterns.h"

#include <fstream>
#include <sstream>

#include "maskmem/error.h"

namespace maskmem {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) {
    --e;
  }
  return std::string(s.substr(b, e - b));
}

const char* const kRequiredSystem[] = {
    "greet",        "on_it",          "ask.cuisine", "ask.location",
    "ask.people",   "ask.price",      "look_options", "api_call",
    "confirm_update", "propose",      "next_option", "reserve",
    "give_phone",   "give_address",   "offer_help",  "farewell"};

const char* const kRequiredUser[] = {
    "silence",        "greeting",       "request",        "slot.cuisine",
    "slot.location",  "slot.people",    "slot.price",     "inform.cuisine",
    "inform.location", "inform.people", "inform.price",   "update.cuisine",
    "update.location", "update.people", "update.price",   "no_update",
    "reject",         "accept",         "ask_phone",      "ask_address",
    "thanks",         "no_more_help"};

}  // namespace

std::string expand_template(std::string_view pattern,
                            const Bindings& bindings) {
  std::string out;
  std::size_t i = 0;
  while (i < pattern.size()) {
    if (pattern[i] != '{') {
      out.push_back(pattern[i++]);
      continue;
    }
    const std::size_t close = pattern.find('}', i);
    if (close == std::string_view::npos) {
      throw ConfigError("unterminated placeholder in pattern '" +
                        std::string(pattern) + "'");
    }
    const std::string_view name = pattern.substr(i + 1, close - i - 1);
    auto it = bindings.find(name);
    if (it == bindings.end()) {
      throw ConfigError("no binding for {" + std::string(name) +
                        "} in pattern '" + std::string(pattern) + "'");
    }
    out += it->second;
    i = close + 1;
  }
  return out;
}

PatternSet PatternSet::parse(std::string_view text, const std::string& source) {
  PatternSet set;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ParseError(source, lineno, "expected '<role>.<key> = <template>'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string tmpl = trim(std::string_view(body).substr(eq + 1));
    if (tmpl.empty()) throw ParseError(source, lineno, "empty template");
    if (tmpl.find('|') != std::string::npos ||
        tmpl.find('\t') != std::string::npos) {
      throw ParseError(source, lineno, "templates may not contain '|' or tab");
    }
    if (key.rfind("system.", 0) == 0) {
      const std::string k = key.substr(7);
      if (!set.system_.emplace(k, tmpl).second) {
        throw ParseError(source, lineno, "system key '" + k + "' repeated");
      }
    } else if (key.rfind("user.", 0) == 0) {
      set.user_[key.substr(5)].push_back(tmpl);
    } else {
      throw ParseError(source, lineno, "key must start with system. or user.");
    }
  }
  for (const char* k : kRequiredSystem) {
    if (!set.system_.count(k)) {
      throw ConfigError(source + ": missing system." + k);
    }
  }
  for (const char* k : kRequiredUser) {
    if (!set.user_.count(k)) throw ConfigError(source + ": missing user." + k);
  }
  return set;
}

PatternSet PatternSet::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pattern file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

const PatternSet& PatternSet::defaults() {
  static const PatternSet set = parse(default_text(), "<builtin patterns>");
  return set;
}

Utterance PatternSet::system(std::string_view key,
                             const Bindings& bindings) const {
  auto it = system_.find(key);
  if (it == system_.end()) {
    throw ConfigError("unknown system pattern " + std::string(key));
  }
  return tokenize(expand_template(it->second, bindings));
}

const std::vector<std::string>& PatternSet::user_alternatives(
    std::string_view key) const {
  auto it = user_.find(key);
  if (it == user_.end()) {
    throw ConfigError("unknown user pattern " + std::string(key));
  }
  return it->second;
}

Utterance PatternSet::user(std::string_view key, const Bindings& bindings,
                           Rng& rng) const {
  const auto& alts = user_alternatives(key);
  return tokenize(expand_template(alts[rng.uniform_index(alts.size())],
                                  bindings));
}

std::size_t PatternSet::num_user_patterns() const {
  std::size_t n = 0;
  for (const auto& [k, v] : user_) n += v.size();
  return n;
}

}  // namespace maskmem
