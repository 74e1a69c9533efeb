#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "tot/backends.hpp"
#include "tot/prompts.hpp"
#include "tot/search.hpp"
#include "tot/task.hpp"

namespace tot::writing {

struct WritingTask {
  std::array<std::string, 4> endings;

  std::string endings_text() const; // numbered list, one sentence per line
};

struct Passage {
  std::vector<std::string> paragraphs;

  // Blank-line split of the raw text.
  static Passage split(std::string_view text);
};

struct CoherencyScore {
  double mean = 0.0;
  std::vector<double> samples;
  double stddev = 0.0;
};

// True iff the passage has exactly 4 paragraphs and paragraph i ends with
// ending sentence i (case- and whitespace-insensitive suffix match).
bool check_constraints(const Passage& passage, const WritingTask& task);

// Last number in [1,10] on the final non-empty line.
std::optional<double> parse_score(std::string_view response);

// m scoring completions averaged; unparseable samples are dropped and an
// all-unparseable batch yields nullopt.
std::optional<CoherencyScore> score_coherency(const std::string& passage_text, int m,
                                              double temperature, const PromptLibrary& prompts,
                                              CallContext& ctx);

// The "Passage:" section of a completion, or the whole text when unmarked.
std::string extract_passage(std::string_view completion);
// The "Plan:" section of a completion, or the whole text when unmarked.
std::string extract_plan(std::string_view completion);

// Two-level search: sample k plans, vote, keep one; sample k passages under
// the winning plan, vote, emit the winner.
class WritingTaskAdapter : public TaskAdapter {
 public:
  WritingTaskAdapter(WritingTask task, const PromptLibrary& prompts, int item_index = 0);

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

  const WritingTask& task() const { return task_; }

 private:
  std::string vote_prompt(std::span<const State> candidates) const;

  WritingTask task_;
  const PromptLibrary& prompts_;
  int item_index_;
};

SearchOutcome run_writing_tot(const WritingTask& task, Backend& gen, Backend& eval,
                              const SearchConfig& cfg, const PromptLibrary& prompts);

struct RefineResult {
  std::vector<std::string> attempts; // every passage produced, in order
  std::string final_passage;
  int rounds = 0;
  bool judged_coherent = false; // stopped because the model said so
};

// Round loop: the model either declares the current passage perfectly
// coherent or produces a refined one, for at most k_max rounds.
RefineResult iterative_refine(const WritingTask& task, Backend& backend, int k_max,
                              double temperature, const PromptLibrary& prompts,
                              CostLedger& ledger);

} // namespace tot::writing
