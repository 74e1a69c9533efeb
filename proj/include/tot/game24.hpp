#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tot/backends.hpp"
#include "tot/prompts.hpp"
#include "tot/rational.hpp"
#include "tot/task.hpp"

namespace tot::game24 {

struct Puzzle {
  std::vector<long long> numbers; // exactly 4, each >= 1
  std::optional<int> index;

  std::string numbers_text() const; // "4 9 10 13" (input order)
};

// One accepted intermediate equation consuming two remaining numbers.
struct ArithmeticStep {
  Rational lhs;
  char op = '+';
  Rational rhs;
  Rational result;
  std::vector<Rational> remaining; // after the step, sorted ascending

  // "a op b = c (left: ...)" with the recomputed remaining numbers.
  std::string canonical_text() const;
};

enum class StepError {
  MalformedText,
  OperandNotAvailable,
  ArithmeticMismatch,
  DivisionByZero,
};

struct StepParse {
  std::optional<ArithmeticStep> step;
  StepError error = StepError::MalformedText;
  bool ok() const { return step.has_value(); }
};

// A parsed equation: operand multiset comes from the parse tree, value from
// exact rational evaluation.
struct Expression {
  std::string text;
  std::vector<Rational> operands; // sorted ascending
  Rational value;
};

// Parses "a op b = c (left: ...)" against the current remaining multiset.
// Operands must both be present (multiset semantics), the stated result must
// match exact recomputation, and the recomputed remaining set is
// authoritative over the "(left: ...)" annotation.
StepParse apply_step(const std::vector<Rational>& remaining, std::string_view step_text);

// Infix expression with parentheses and an optional "= value" suffix, which
// is checked when present. Malformed text yields nullopt.
std::optional<Expression> parse_expression(std::string_view equation);

// True iff the equation parses, uses puzzle.numbers each exactly once, and
// equals exactly 24 under rational arithmetic.
bool validate_solution(std::string_view equation, const Puzzle& puzzle);

// Exhaustive search over all binary reduction orders and operators. Returns
// the first witness in a fixed enumeration order, rendered with explicit
// parentheses and an "= 24" suffix, or nullopt when unreachable.
std::optional<Expression> brute_force_solve(const std::vector<Rational>& numbers);
std::optional<Expression> brute_force_solve(const Puzzle& puzzle);

// Reachability of 24; accepts 1-4 numbers ({x} is solvable iff x == 24).
bool solvable(const std::vector<Rational>& numbers);

// 1-based index of the first invalid or fatal step (fatal: 24 was reachable
// before the step but not after). A chain of fewer than 3 viable steps fails
// at its first missing step. nullopt iff three accepted steps end at 24.
std::optional<int> classify_failure_step(const Puzzle& puzzle,
                                         const std::vector<std::string>& steps);

// Lines of a sampled chain that look like intermediate equations.
std::vector<std::string> extract_step_lines(std::string_view sample);

// Text after the final "Answer:" marker, whitespace-trimmed; the whole
// sample when no marker exists.
std::string extract_answer(std::string_view sample);

// Canonical equation string for majority voting: parse + re-render of the
// extracted answer; falls back to the trimmed raw answer when unparseable.
std::string normalize_answer(const std::string& sample);

enum class PromptKind { Io, Cot, Propose, Value, ValueLastStep };

std::vector<Rational> puzzle_rationals(const Puzzle& puzzle);

class Game24Task : public TaskAdapter {
 public:
  Game24Task(Puzzle puzzle, const PromptLibrary& prompts);

  std::string task_id() const override;
  State root() const override;
  std::vector<Thought> expand(const State& state, const SearchConfig& cfg,
                              CallContext& ctx) const override;
  std::vector<Score> evaluate(const std::vector<State>& states, const SearchConfig& cfg,
                              CallContext& ctx) const override;
  bool is_terminal(const State& state) const override;
  std::string finalize(const State& state, CallContext& ctx) const override;
  std::optional<bool> judge(const State& final_state, const std::string& output) const override;
  SearchConfig default_config() const override;

  // Remaining numbers after replaying the state's accepted steps.
  std::vector<Rational> remaining(const State& state) const;
  std::string render_prompt(PromptKind kind, const State& state) const;
  // Deterministic answer synthesis from the step chain (no model call).
  std::string synthesize_equation(const State& state) const;

  const Puzzle& puzzle() const { return puzzle_; }

 private:
  Puzzle puzzle_;
  const PromptLibrary& prompts_;
};

// Exact policies standing in for the model. The generator proposes every
// valid next step for the numbers quoted in the prompt; the evaluator labels
// states sure/impossible by brute-force reachability and final answers by
// validation.
OraclePolicy oracle_gen_policy();
OraclePolicy oracle_eval_policy();

} // namespace tot::game24
