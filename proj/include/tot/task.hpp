#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tot/thought_engine.hpp"
#include "tot/types.hpp"

namespace tot {

// What the search algorithms need from a task: expansion, evaluation,
// terminal detection and output rendering. Adapters own their prompts,
// parsers and validators; the search layer stays model- and task-agnostic.
class TaskAdapter {
 public:
  virtual ~TaskAdapter() = default;

  virtual std::string task_id() const = 0;
  virtual State root() const = 0;

  // Up to cfg.k validated candidate thoughts, best first where the task
  // defines a ranking, proposal order otherwise.
  virtual std::vector<Thought> expand(const State& state, const SearchConfig& cfg,
                                      CallContext& ctx) const = 0;

  // Scores for a batch of sibling candidate states, same order as input.
  virtual std::vector<Score> evaluate(const std::vector<State>& states, const SearchConfig& cfg,
                                      CallContext& ctx) const = 0;

  virtual bool is_terminal(const State& state) const = 0;

  // Maximum tree depth; defaults to the configured step limit.
  virtual int max_depth(const SearchConfig& cfg) const { return cfg.T; }

  // Whether later thoughts may overwrite earlier content (greedy ablation).
  virtual bool allows_overwrite() const { return false; }

  // Final answer rendered from a state. May issue one generation call or be
  // purely deterministic when the thought chain fixes the answer.
  virtual std::string finalize(const State& state, CallContext& ctx) const = 0;

  // Task judgement of an output; nullopt when no ground truth exists.
  virtual std::optional<bool> judge(const State& final_state, const std::string& output) const = 0;

  // Search defaults appropriate for this task (depth, breadth, samples).
  virtual SearchConfig default_config() const { return SearchConfig{}; }
};

} // namespace tot
