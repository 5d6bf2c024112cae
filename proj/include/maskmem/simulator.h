#ifndef MASKMEM_SIMULATOR_H_
#define MASKMEM_SIMULATOR_H_

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "maskmem/dialog.h"
#include "maskmem/kb.h"
#include "maskmem/patterns.h"
#include "maskmem/rng.h"

namespace maskmem {

struct Goal {
  std::array<std::string, kNumSlots> values;
  std::array<bool, kNumSlots> given{};
  // Task-2 style revision issued after the first api_call.
  std::optional<std::pair<Slot, std::string>> update;

  int num_given() const;
};

struct GoalOptions {
  double update_probability = 0.5;
  // Forces |initially_given| instead of drawing it uniformly from 0..4.
  std::optional<int> given_count;
};

Goal sample_goal(const KnowledgeBase& kb, Rng& rng,
                 const GoalOptions& options = {});

// What the system has to do next (the kSay* stages) or what it waits for.
enum class Stage {
  kAwaitGreeting,
  kSayGreeting,
  kAwaitRequest,
  kSayOnIt,
  kSayAsk,
  kAwaitAnswer,
  kSayLookOptions,
  kSayApiCall,
  kAwaitApiOutcome,
  kSayConfirmUpdate,
  kAwaitMoreUpdates,
  kSayPropose,
  kAwaitFeedback,
  kSayNextOption,
  kSayReserve,
  kAwaitInfoRequest,
  kSayPhone,
  kSayAddress,
  kSayOfferHelp,
  kAwaitClosing,
  kSayFarewell,
  kDone,
};

enum class SystemAct {
  kGreet,
  kOnIt,
  kAsk,
  kLookOptions,
  kApiCall,
  kConfirmUpdate,
  kPropose,
  kNextOption,
  kReserve,
  kGivePhone,
  kGiveAddress,
  kOfferHelp,
  kFarewell,
};

struct SystemAction {
  SystemAct act = SystemAct::kGreet;
  Slot slot = Slot::kCuisine;  // kAsk
  std::size_t option = 0;      // kPropose: index into DialogState::results

  friend bool operator==(const SystemAction&, const SystemAction&) = default;
};

// Everything the simulator knows about a dialog prefix.
struct DialogState {
  DialogMode mode = DialogMode::kOriginal;
  Stage stage = Stage::kAwaitGreeting;
  std::array<std::optional<std::string>, kNumSlots> slots;
  std::vector<Restaurant> results;
  std::vector<bool> proposed;
  std::optional<std::size_t> current;  // option being discussed / booked
  int api_calls = 0;

  // Missing slots in api_call order.
  std::vector<Slot> missing() const;
};

// User-side transitions. Each throws ContractViolation when the state is
// not waiting for that event.
void observe_greeting(DialogState& state);
void observe_request(DialogState& state, const Goal& goal);
void observe_inform(DialogState& state, Slot slot, const std::string& value);
void observe_update(DialogState& state, Slot slot, const std::string& value);
void observe_no_update(DialogState& state);
void observe_results(DialogState& state, std::vector<Restaurant> results);
void observe_reject(DialogState& state);
void observe_accept(DialogState& state);
void observe_ask_phone(DialogState& state);
void observe_ask_address(DialogState& state);
void observe_thanks(DialogState& state);
void observe_no_more_help(DialogState& state);

// Every action the simulator could take next. Singleton except while
// collecting slots in permuted mode and while proposing tied restaurants.
std::vector<SystemAction> valid_actions(const DialogState& state);
void apply(DialogState& state, const SystemAction& action);
Utterance render(const SystemAction& action, const DialogState& state,
                 const PatternSet& patterns);

// The rendered answer set of valid_actions, deduplicated, in action order.
std::vector<Utterance> enumerate_valid_next(const DialogState& state,
                                            const PatternSet& patterns);

struct SimulatorOptions {
  double tie_probability = 0.5;
  const PatternSet* patterns = nullptr;  // null: PatternSet::defaults()
};

// Picks the api_call result list for a cell. In permuted mode, with
// probability tie_probability, the list starts with at least two restaurants
// sharing its top rating.
std::vector<Restaurant> choose_results(const KnowledgeBase& kb,
                                       const DialogState& state,
                                       double tie_probability, Rng& rng);

AnnotatedDialog simulate_dialog(const Goal& goal, const KnowledgeBase& kb,
                                DialogMode mode, Rng& rng,
                                const SimulatorOptions& options = {});

}  // namespace maskmem

#endif  // MASKMEM_SIMULATOR_H_
