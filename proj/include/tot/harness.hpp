#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tot/backends.hpp"
#include "tot/baselines.hpp"
#include "tot/crosswords.hpp"
#include "tot/game24.hpp"
#include "tot/prompts.hpp"
#include "tot/search.hpp"
#include "tot/writing.hpp"

namespace tot::harness {

enum class TaskKind { Game24, Crosswords, Writing, GenericQa };
enum class Method { Io, Cot, CotSc, Refine, TotBfs, TotDfs, GreedyOverwrite };

std::string task_kind_name(TaskKind t);
std::optional<TaskKind> task_kind_from_name(std::string_view name);
std::string method_name(Method m);
std::optional<Method> method_from_name(std::string_view name);

struct RunConfig {
  TaskKind task = TaskKind::Game24;
  Method method = Method::TotBfs;
  SearchConfig search;
  BackendSpec gen_backend;
  std::optional<BackendSpec> eval_backend; // defaults to gen_backend
  std::string dataset_path;                // or "generate:<n>" for game24
  std::string output_dir;
  int n_samples = 10;   // io / cot / cot_sc samples per item
  int refine_k = 10;    // refinement rounds cap
  int parallel = 1;     // concurrent items
  bool record = false;  // wrap gen/eval in a recording cache
  bool replay = false;  // serve entirely from the cache
  std::string cache_dir = "replay_cache";
  std::string prompt_dir;       // empty: default library
  bool score_coherency = false; // writing: sample 1-10 scores via eval backend

  const BackendSpec& eval_or_gen() const { return eval_backend ? *eval_backend : gen_backend; }
};

RunConfig run_config_from_json(const Json& j);
Json run_config_to_json(const RunConfig& cfg);
RunConfig load_run_config(const std::filesystem::path& path);

struct ItemResult {
  std::string task_id;
  std::optional<bool> success;
  std::string output;
  long long nodes_visited = 0;
  // Crossword scores: raw board metrics for search runs, plus rates in [0,1]
  // (averaged over samples for the sampled baselines).
  std::optional<crosswords::CrosswordMetrics> crossword;
  std::optional<crosswords::CrosswordMetrics> crossword_best_state;
  std::optional<double> letter_rate;
  std::optional<double> word_rate;
  std::optional<double> game_rate;
  std::optional<double> coherency;
  // Failure-step classification; 0 = failed despite a viable chain. One entry
  // per failed chain sample, or a single entry for a failed search run.
  std::vector<int> failure_steps;
  int samples = 0;
  int correct_samples = 0;
  CostLedger usage;
  std::string error; // non-empty when the item errored and was skipped
};

struct MetricsReport {
  std::string task;
  std::string method;
  std::vector<ItemResult> items;

  // Aggregates, all recomputable from items.
  double success_rate = 0.0;
  double letters_rate = 0.0;
  double words_rate = 0.0;
  double games_rate = 0.0;
  double best_state_letters_rate = 0.0;
  double best_state_words_rate = 0.0;
  double best_state_games_rate = 0.0;
  std::optional<double> coherency_mean;
  double nodes_visited_mean = 0.0;
  std::vector<std::pair<int, int>> failure_step_histogram; // (step, count)
  int errored_items = 0;
  CostLedger ledger;

  Json to_json() const;
  std::string to_text() const;
};

MetricsReport metrics_report_from_json(const Json& j);

// Runs every dataset item through the configured method, writes per-item
// JSONL, trajectory logs and the report into output_dir, and returns the
// report. Per-item failures are recorded, not fatal.
MetricsReport run_experiment(const RunConfig& cfg);

struct CostRow {
  std::string label;
  long long completion_tokens = 0;
  long long prompt_tokens = 0;
  double cost = 0.0;
  int n_cases = 1;
};

// Aligned table: per-method generate/prompt tokens and cost per case.
std::string cost_report(const std::vector<CostRow>& rows);

// Seeded draws of 4 numbers from 1..13, kept iff exactly solvable.
std::vector<game24::Puzzle> generate_puzzles(int n, unsigned seed);

// Dataset loaders (formats documented in README).
std::vector<game24::Puzzle> load_game24_csv(const std::filesystem::path& path);
void write_game24_csv(const std::vector<game24::Puzzle>& puzzles,
                      const std::filesystem::path& path);
std::vector<crosswords::CrosswordPuzzle> load_crosswords_json(const std::filesystem::path& path);
std::vector<writing::WritingTask> load_writing_json(const std::filesystem::path& path);

struct QaItem {
  std::string question;
  std::string answer;
  std::string answer_format; // e.g. "\"the answer is n\" where n is a number"
};
std::vector<QaItem> load_qa_jsonl(const std::filesystem::path& path);

// Zero-shot strategy->answer search: sample 5 strategies, vote, sample 5
// answers under the best strategy, vote, emit.
SearchOutcome generic_zero_shot_tot(const std::string& question, const std::string& answer_format,
                                    Backend& gen, Backend& eval, const SearchConfig& cfg,
                                    const PromptLibrary& prompts);

// Normalized tail of the last "the answer is ..." occurrence; empty when the
// marker is absent.
std::string extract_generic_answer(std::string_view text);

class GenericQaTask : public TaskAdapter {
 public:
  GenericQaTask(QaItem item, const PromptLibrary& prompts, int item_index = 0);

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

 private:
  QaItem item_;
  const PromptLibrary& prompts_;
  int item_index_;
};

} // namespace tot::harness
