#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tot/backend.hpp"
#include "tot/types.hpp"

namespace tot {

// How the next thought step is generated from a state.
struct GenStrategy {
  GenKind kind = GenKind::Propose;
  std::string prompt_template_id;
};

enum class ValueLabelKind { Sure, Maybe, Impossible };

struct ValueLabel {
  ValueLabelKind label = ValueLabelKind::Maybe;
  std::string raw;
};

struct VoteTally {
  std::vector<int> counts; // one per candidate
  int discarded = 0;       // unparseable ballots
  // Majority candidate, lowest index on ties.
  int winner() const;
};

// Backends plus the usage ledger threaded through every model call.
struct CallContext {
  Backend* gen = nullptr;
  Backend* eval = nullptr;
  CostLedger* ledger = nullptr;

  CompletionResponse call(Backend& backend, const CompletionRequest& request);
  CompletionResponse call_gen(const CompletionRequest& request);
  CompletionResponse call_eval(const CompletionRequest& request);
};

// Task hooks consumed by generate_thoughts: prompt rendering and completion
// parsing for one generation strategy.
class ThoughtSource {
 public:
  virtual ~ThoughtSource() = default;
  virtual GenStrategy strategy(const State& state) const = 0;
  virtual std::string prompt(const State& state, int k) const = 0;
  // Split one completion into candidate thought texts, dropping anything the
  // task's validator rejects. Sample-style tasks return the completion whole.
  virtual std::vector<std::string> parse(const State& state, const std::string& completion,
                                         int k) const = 0;
};

// The generation primitive: sample issues k independent completions (one
// thought each), propose issues one completion parsed into up to k candidate
// lines, refine issues one completion conditioned on the prior attempts.
// Unparseable or whitespace-only candidates are dropped, order preserved.
std::vector<Thought> generate_thoughts(const ThoughtSource& source, const State& state, int k,
                                       double temperature, CallContext& ctx);

// Scans the final non-empty line for exactly one of sure / likely / maybe /
// impossible (word-boundary, case-insensitive); "likely" normalizes to maybe.
// No label or more than one distinct label is a parse failure.
std::optional<ValueLabel> parse_value_label(std::string_view response);

// Extracts s from the last "best choice is s" occurrence; nullopt unless
// 1 <= s <= n_choices.
std::optional<int> parse_vote(std::string_view response, int n_choices);

double label_value(ValueLabelKind label);

using ValuePromptFn = std::function<std::string(const State&)>;
using VotePromptFn = std::function<std::string(std::span<const State>)>;

// Values each state independently: m completions apiece, labels mapped
// sure=20 / maybe=1 / impossible=0.001 and summed. An unparseable sample
// contributes 0 and counts as a parse failure.
std::vector<Score> evaluate_value(std::span<const State> states, int m,
                                  const ValuePromptFn& value_prompt, double temperature,
                                  CallContext& ctx);

// Votes across states: one prompt presenting all candidates, m ballots,
// Score.value is each candidate's vote count.
struct VoteResult {
  std::vector<Score> scores;
  VoteTally tally;
};
VoteResult evaluate_vote(std::span<const State> states, int m, const VotePromptFn& vote_prompt,
                         double temperature, CallContext& ctx);

} // namespace tot
