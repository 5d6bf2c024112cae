#include "maskmem/simulator.h"

#include <algorithm>
#include <map>

#include "maskmem/error.h"

namespace maskmem {

namespace {

void expect(const DialogState& state, Stage stage, const char* event) {
  if (state.stage != stage) {
    throw ContractViolation(std::string("user event '") + event +
                            "' not expected in stage " +
                            std::to_string(static_cast<int>(state.stage)));
  }
}

Stage after_slot_collection(const DialogState& state) {
  return state.missing().empty() ? Stage::kSayLookOptions : Stage::kSayAsk;
}

std::string ask_key(Slot slot) { return "ask." + std::string(to_string(slot)); }

Bindings slot_bindings(const std::array<std::string, kNumSlots>& v) {
  return Bindings{{"cuisine", v[0]},
                  {"location", v[1]},
                  {"people", v[2]},
                  {"price", v[3]}};
}

const Restaurant& current_option(const DialogState& state) {
  if (!state.current || *state.current >= state.results.size()) {
    throw ContractViolation("no restaurant under discussion");
  }
  return state.results[*state.current];
}

}  // namespace

int Goal::num_given() const {
  return static_cast<int>(std::count(given.begin(), given.end(), true));
}

Goal sample_goal(const KnowledgeBase& kb, Rng& rng, const GoalOptions& options) {
  Goal goal;
  for (Slot s : kSlotOrder) {
    const auto& vocab = kb.values(s);
    goal.values[static_cast<std::size_t>(s)] =
        vocab[rng.uniform_index(vocab.size())];
  }
  int count = options.given_count ? *options.given_count
                                  : rng.uniform_int(0, static_cast<int>(kNumSlots));
  if (count < 0 || count > static_cast<int>(kNumSlots)) {
    throw ConfigError("given_count must be in 0..4");
  }
  std::array<std::size_t, kNumSlots> order = {0, 1, 2, 3};
  std::shuffle(order.begin(), order.end(), rng.engine());
  for (int i = 0; i < count; ++i) goal.given[order[i]] = true;

  if (rng.bernoulli(options.update_probability)) {
    // Only slots with an alternative value can be revised.
    std::vector<Slot> revisable;
    for (Slot s : kSlotOrder) {
      if (kb.values(s).size() > 1) revisable.push_back(s);
    }
    if (!revisable.empty()) {
      const Slot slot = revisable[rng.uniform_index(revisable.size())];
      const auto& vocab = kb.values(slot);
      const auto& old = goal.values[static_cast<std::size_t>(slot)];
      std::string value;
      do {
        value = vocab[rng.uniform_index(vocab.size())];
      } while (value == old);
      goal.update = std::make_pair(slot, value);
    }
  }
  return goal;
}

std::vector<Slot> DialogState::missing() const {
  std::vector<Slot> out;
  for (Slot s : kSlotOrder) {
    if (!slots[static_cast<std::size_t>(s)]) out.push_back(s);
  }
  return out;
}

void observe_greeting(DialogState& state) {
  expect(state, Stage::kAwaitGreeting, "greeting");
  state.stage = Stage::kSayGreeting;
}

void observe_request(DialogState& state, const Goal& goal) {
  expect(state, Stage::kAwaitRequest, "request");
  for (std::size_t i = 0; i < kNumSlots; ++i) {
    if (goal.given[i]) state.slots[i] = goal.values[i];
  }
  state.stage = Stage::kSayOnIt;
}

void observe_inform(DialogState& state, Slot slot, const std::string& value) {
  expect(state, Stage::kAwaitAnswer, "inform");
  auto& cur = state.slots[static_cast<std::size_t>(slot)];
  if (cur) throw ContractViolation("slot already filled");
  cur = value;
  state.stage = after_slot_collection(state);
}

void observe_update(DialogState& state, Slot slot, const std::string& value) {
  expect(state, Stage::kAwaitApiOutcome, "update");
  state.slots[static_cast<std::size_t>(slot)] = value;
  state.stage = Stage::kSayConfirmUpdate;
}

void observe_no_update(DialogState& state) {
  expect(state, Stage::kAwaitMoreUpdates, "no_update");
  state.stage = Stage::kSayLookOptions;
}

void observe_results(DialogState& state, std::vector<Restaurant> results) {
  expect(state, Stage::kAwaitApiOutcome, "results");
  if (results.empty()) throw ContractViolation("empty api_call result");
  state.results = std::move(results);
  state.proposed.assign(state.results.size(), false);
  state.current.reset();
  state.stage = Stage::kSayPropose;
}

void observe_reject(DialogState& state) {
  expect(state, Stage::kAwaitFeedback, "reject");
  state.stage = Stage::kSayNextOption;
}

void observe_accept(DialogState& state) {
  expect(state, Stage::kAwaitFeedback, "accept");
  state.stage = Stage::kSayReserve;
}

void observe_ask_phone(DialogState& state) {
  expect(state, Stage::kAwaitInfoRequest, "ask_phone");
  state.stage = Stage::kSayPhone;
}

void observe_ask_address(DialogState& state) {
  expect(state, Stage::kAwaitInfoRequest, "ask_address");
  state.stage = Stage::kSayAddress;
}

void observe_thanks(DialogState& state) {
  expect(state, Stage::kAwaitInfoRequest, "thanks");
  state.stage = Stage::kSayOfferHelp;
}

void observe_no_more_help(DialogState& state) {
  expect(state, Stage::kAwaitClosing, "no_more_help");
  state.stage = Stage::kSayFarewell;
}

std::vector<SystemAction> valid_actions(const DialogState& state) {
  auto single = [](SystemAct act) {
    return std::vector<SystemAction>{SystemAction{act}};
  };
  switch (state.stage) {
    case Stage::kSayGreeting:
      return single(SystemAct::kGreet);
    case Stage::kSayOnIt:
      return single(SystemAct::kOnIt);
    case Stage::kSayAsk: {
      const auto missing = state.missing();
      if (missing.empty()) {
        throw ContractViolation("asking for a slot with none missing");
      }
      std::vector<SystemAction> out;
      for (Slot s : missing) {
        out.push_back(SystemAction{SystemAct::kAsk, s});
        if (state.mode == DialogMode::kOriginal) break;  // fixed order
      }
      return out;
    }
    case Stage::kSayLookOptions:
      return single(SystemAct::kLookOptions);
    case Stage::kSayApiCall:
      if (!state.missing().empty()) {
        throw ContractViolation("api_call with missing slots");
      }
      return single(SystemAct::kApiCall);
    case Stage::kSayConfirmUpdate:
      return single(SystemAct::kConfirmUpdate);
    case Stage::kSayPropose: {
      int best = -1;
      for (std::size_t i = 0; i < state.results.size(); ++i) {
        if (!state.proposed[i]) best = std::max(best, state.results[i].rating);
      }
      if (best < 0) throw ContractViolation("no restaurant left to propose");
      std::vector<SystemAction> out;
      for (std::size_t i = 0; i < state.results.size(); ++i) {
        if (!state.proposed[i] && state.results[i].rating == best) {
          out.push_back(SystemAction{SystemAct::kPropose, Slot::kCuisine, i});
          if (state.mode == DialogMode::kOriginal) break;
        }
      }
      return out;
    }
    case Stage::kSayNextOption:
      return single(SystemAct::kNextOption);
    case Stage::kSayReserve:
      return single(SystemAct::kReserve);
    case Stage::kSayPhone:
      current_option(state);
      return single(SystemAct::kGivePhone);
    case Stage::kSayAddress:
      current_option(state);
      return single(SystemAct::kGiveAddress);
    case Stage::kSayOfferHelp:
      return single(SystemAct::kOfferHelp);
    case Stage::kSayFarewell:
      return single(SystemAct::kFarewell);
    default:
      throw ContractViolation("the system has no turn in stage " +
                              std::to_string(static_cast<int>(state.stage)));
  }
}

void apply(DialogState& state, const SystemAction& action) {
  const auto actions = valid_actions(state);
  if (std::find(actions.begin(), actions.end(), action) == actions.end()) {
    throw ContractViolation("system action not valid in this state");
  }
  switch (action.act) {
    case SystemAct::kGreet:
      state.stage = Stage::kAwaitRequest;
      break;
    case SystemAct::kOnIt:
      state.stage = after_slot_collection(state);
      break;
    case SystemAct::kAsk:
      state.stage = Stage::kAwaitAnswer;
      break;
    case SystemAct::kLookOptions:
      state.stage = Stage::kSayApiCall;
      break;
    case SystemAct::kApiCall:
      ++state.api_calls;
      state.stage = Stage::kAwaitApiOutcome;
      break;
    case SystemAct::kConfirmUpdate:
      state.stage = Stage::kAwaitMoreUpdates;
      break;
    case SystemAct::kPropose:
      state.proposed[action.option] = true;
      state.current = action.option;
      state.stage = Stage::kAwaitFeedback;
      break;
    case SystemAct::kNextOption:
      state.stage = Stage::kSayPropose;
      break;
    case SystemAct::kReserve:
    case SystemAct::kGivePhone:
    case SystemAct::kGiveAddress:
      state.stage = Stage::kAwaitInfoRequest;
      break;
    case SystemAct::kOfferHelp:
      state.stage = Stage::kAwaitClosing;
      break;
    case SystemAct::kFarewell:
      state.stage = Stage::kDone;
      break;
  }
}

Utterance render(const SystemAction& action, const DialogState& state,
                 const PatternSet& patterns) {
  switch (action.act) {
    case SystemAct::kGreet:
      return patterns.system("greet", {});
    case SystemAct::kOnIt:
      return patterns.system("on_it", {});
    case SystemAct::kAsk:
      return patterns.system(ask_key(action.slot), {});
    case SystemAct::kLookOptions:
      return patterns.system("look_options", {});
    case SystemAct::kApiCall: {
      std::array<std::string, kNumSlots> v;
      for (std::size_t i = 0; i < kNumSlots; ++i) v[i] = state.slots[i].value();
      return patterns.system("api_call", slot_bindings(v));
    }
    case SystemAct::kConfirmUpdate:
      return patterns.system("confirm_update", {});
    case SystemAct::kPropose:
      return patterns.system("propose",
                             {{"name", state.results.at(action.option).name}});
    case SystemAct::kNextOption:
      return patterns.system("next_option", {});
    case SystemAct::kReserve:
      return patterns.system("reserve", {});
    case SystemAct::kGivePhone:
      return patterns.system("give_phone",
                             {{"phone", current_option(state).phone}});
    case SystemAct::kGiveAddress:
      return patterns.system("give_address",
                             {{"address", current_option(state).address}});
    case SystemAct::kOfferHelp:
      return patterns.system("offer_help", {});
    case SystemAct::kFarewell:
      return patterns.system("farewell", {});
  }
  return {};
}

std::vector<Utterance> enumerate_valid_next(const DialogState& state,
                                            const PatternSet& patterns) {
  std::vector<Utterance> out;
  for (const auto& action : valid_actions(state)) {
    Utterance u = render(action, state, patterns);
    if (std::find(out.begin(), out.end(), u) == out.end()) {
      out.push_back(std::move(u));
    }
  }
  return out;
}

std::vector<Restaurant> choose_results(const KnowledgeBase& kb,
                                       const DialogState& state,
                                       double tie_probability, Rng& rng) {
  const auto cell = kb.cell(state.slots[0].value(), state.slots[1].value(),
                            state.slots[3].value());
  if (cell.empty()) throw GenerationError("api_call cell has no restaurants");
  std::vector<std::size_t> picked;
  bool forced = false;
  if (state.mode == DialogMode::kPermuted && rng.bernoulli(tie_probability)) {
    std::map<int, int> per_rating;
    for (auto i : cell) ++per_rating[kb.restaurants()[i].rating];
    std::vector<int> tied;
    for (auto [rating, n] : per_rating) {
      if (n >= 2) tied.push_back(rating);
    }
    if (!tied.empty()) {
      const int top = tied[rng.uniform_index(tied.size())];
      for (auto i : cell) {
        const int r = kb.restaurants()[i].rating;
        if (r == top || (r < top && rng.bernoulli(0.5))) picked.push_back(i);
      }
      forced = true;
    }
  }
  if (!forced) {
    for (auto i : cell) {
      if (rng.bernoulli(0.5)) picked.push_back(i);
    }
    if (picked.empty()) picked.push_back(cell[rng.uniform_index(cell.size())]);
  }
  std::shuffle(picked.begin(), picked.end(), rng.engine());
  std::vector<Restaurant> out;
  out.reserve(picked.size());
  for (auto i : picked) out.push_back(kb.restaurants()[i]);
  return out;
}

AnnotatedDialog simulate_dialog(const Goal& goal, const KnowledgeBase& kb,
                                DialogMode mode, Rng& rng,
                                const SimulatorOptions& options) {
  for (Slot s : kSlotOrder) {
    const auto& v = goal.values[static_cast<std::size_t>(s)];
    if (!kb.has_value(s, v)) {
      throw GenerationError("goal value '" + v + "' for slot " +
                            std::string(to_string(s)) + " is not in the KB");
    }
  }
  if (goal.update && !kb.has_value(goal.update->first, goal.update->second)) {
    throw GenerationError("goal update value '" + goal.update->second +
                          "' is not in the KB");
  }
  const PatternSet& patterns =
      options.patterns ? *options.patterns : PatternSet::defaults();

  AnnotatedDialog dialog;
  dialog.mode = mode;
  DialogState state;
  state.mode = mode;

  const Utterance silence = patterns.user("silence", {}, rng);
  auto system_turn = [&](Utterance user) {
    const auto actions = valid_actions(state);
    const std::size_t pick =
        actions.size() > 1 ? rng.uniform_index(actions.size()) : 0;
    std::vector<Utterance> answers;
    answers.push_back(render(actions[pick], state, patterns));
    for (std::size_t i = 0; i < actions.size(); ++i) {
      if (i == pick) continue;
      Utterance u = render(actions[i], state, patterns);
      if (std::find(answers.begin(), answers.end(), u) == answers.end()) {
        answers.push_back(std::move(u));
      }
    }
    dialog.lines.push_back(DialogLine{Turn{std::move(user), std::move(answers)}});
    const SystemAction chosen = actions[pick];
    apply(state, chosen);
    return chosen;
  };
  auto bindings = [&](Slot slot, const std::string& value) {
    return Bindings{{std::string(to_string(slot)), value}};
  };

  observe_greeting(state);
  system_turn(patterns.user("greeting", {}, rng));

  // Request with the initially given slots, phrased in random order.
  std::vector<Slot> given;
  for (Slot s : kSlotOrder) {
    if (goal.given[static_cast<std::size_t>(s)]) given.push_back(s);
  }
  std::shuffle(given.begin(), given.end(), rng.engine());
  std::string slot_text;
  for (Slot s : given) {
    slot_text += ' ';
    slot_text += join(patterns.user(
        "slot." + std::string(to_string(s)),
        bindings(s, goal.values[static_cast<std::size_t>(s)]), rng));
  }
  observe_request(state, goal);
  system_turn(patterns.user("request", {{"slots", slot_text}}, rng));

  Utterance next_user = silence;
  while (state.stage == Stage::kSayAsk) {
    const SystemAction asked = system_turn(next_user);
    const Slot s = asked.slot;
    const auto& value = goal.values[static_cast<std::size_t>(s)];
    next_user =
        patterns.user("inform." + std::string(to_string(s)), bindings(s, value), rng);
    observe_inform(state, s, value);
  }
  system_turn(next_user);  // look_options
  system_turn(silence);    // api_call

  if (goal.update) {
    const auto& [slot, value] = *goal.update;
    observe_update(state, slot, value);
    system_turn(patterns.user("update." + std::string(to_string(slot)),
                              bindings(slot, value), rng));
    observe_no_update(state);
    system_turn(patterns.user("no_update", {}, rng));
    system_turn(silence);
  }

  auto results = choose_results(kb, state, options.tie_probability, rng);
  for (const auto& r : results) {
    for (Relation rel : kAllRelations) {
      dialog.lines.push_back(DialogLine{KbFact{r.name, rel, r.value_of(rel)}});
    }
  }
  const std::size_t rejections = rng.uniform_index(results.size());
  observe_results(state, std::move(results));

  next_user = silence;
  for (std::size_t i = 0;; ++i) {
    system_turn(next_user);  // propose
    if (i < rejections) {
      observe_reject(state);
      system_turn(patterns.user("reject", {}, rng));
      next_user = silence;
    } else {
      observe_accept(state);
      system_turn(patterns.user("accept", {}, rng));
      break;
    }
  }

  std::vector<int> info;
  if (rng.bernoulli(0.5)) info.push_back(0);
  if (rng.bernoulli(0.5)) info.push_back(1);
  std::shuffle(info.begin(), info.end(), rng.engine());
  for (int kind : info) {
    if (kind == 0) {
      observe_ask_phone(state);
      system_turn(patterns.user("ask_phone", {}, rng));
    } else {
      observe_ask_address(state);
      system_turn(patterns.user("ask_address", {}, rng));
    }
  }
  observe_thanks(state);
  system_turn(patterns.user("thanks", {}, rng));
  observe_no_more_help(state);
  system_turn(patterns.user("no_more_help", {}, rng));
  return dialog;
}

}  // namespace maskmem
