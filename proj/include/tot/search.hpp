#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tot/backend.hpp"
#include "tot/task.hpp"
#include "tot/trajectory.hpp"
#include "tot/types.hpp"

namespace tot {

struct SearchOutcome {
  std::string output; // empty marker when the search produced nothing
  State final_state;
  long long nodes_visited = 0; // distinct states an expansion was requested for
  std::optional<bool> success;
  std::vector<TrajectoryEvent> trajectory;
  CostLedger usage;
};

// Breadth-first search: expands every frontier state with up to k candidates,
// scores the pooled children, keeps the top b, and renders the output from
// the best final state. An empty candidate pool at any step yields a failed
// outcome with the trajectory intact rather than an error.
SearchOutcome tot_bfs(const TaskAdapter& task, const SearchConfig& cfg, Backend& gen,
                      Backend& eval);

// Depth-first search over ranked candidates. A child is entered only if its
// evaluation passes (no veto and value > v_th); exhausted subtrees backtrack
// to the parent. Expansions are capped by cfg.dfs_step_limit and the output
// comes from the deepest explored state, first-explored on ties.
SearchOutcome tot_dfs(const TaskAdapter& task, const SearchConfig& cfg, Backend& gen,
                      Backend& eval);

// Breadth-1 ablation without backtracking: takes the single top-ranked
// proposal each step, allowing overwrites of earlier content, for at most
// kGreedyStepLimit steps.
SearchOutcome greedy_overwrite(const TaskAdapter& task, const SearchConfig& cfg, Backend& gen,
                               Backend& eval);

inline constexpr int kGreedyStepLimit = 20;

// The b highest-scoring states, in score order; ties keep the earlier input
// position. Returns everything when fewer than b states exist.
std::vector<State> select_top_b(const std::vector<std::pair<State, double>>& scored, int b);

// Index view of the same selection, used internally and by tests.
std::vector<int> select_top_b_indices(const std::vector<double>& scores, int b);

// Dispatch on cfg.method.
SearchOutcome run_search(const TaskAdapter& task, const SearchConfig& cfg, Backend& gen,
                         Backend& eval);

} // namespace tot
