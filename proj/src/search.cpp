#include "tot/search.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace tot {
namespace {

Json thoughts_payload(const State& state) {
  Json arr = Json::array();
  for (const Thought& t : state.thoughts) arr.push_back(t.text);
  return arr;
}

Json candidates_payload(const std::vector<Thought>& thoughts) {
  Json arr = Json::array();
  for (const Thought& t : thoughts) arr.push_back(t.text);
  return arr;
}

struct SearchRun {
  const TaskAdapter& task;
  const SearchConfig& cfg;
  CallContext ctx;
  TrajectoryRecorder trace;
  long long nodes_visited = 0;

  SearchRun(const TaskAdapter& task, const SearchConfig& cfg, Backend& gen, Backend& eval,
            CostLedger& ledger)
      : task(task), cfg(cfg), ctx{&gen, &eval, &ledger} {}

  std::vector<Thought> expand(const State& state) {
    ++nodes_visited;
    std::vector<Thought> thoughts = task.expand(state, cfg, ctx);
    trace.record(EventKind::Expand, state,
                 Json{{"thoughts", thoughts_payload(state)},
                      {"candidates", candidates_payload(thoughts)}});
    return thoughts;
  }

  std::vector<Score> evaluate(const std::vector<State>& states) {
    std::vector<Score> scores = task.evaluate(states, cfg, ctx);
    if (scores.size() != states.size()) {
      throw std::runtime_error("task evaluate returned a mismatched score count");
    }
    for (size_t i = 0; i < states.size(); ++i) {
      trace.record(EventKind::Evaluate, states[i],
                   Json{{"value", scores[i].value},
                        {"veto", scores[i].veto},
                        {"samples_used", scores[i].samples_used},
                        {"parse_failures", scores[i].parse_failures},
                        {"detail", scores[i].detail}});
    }
    return scores;
  }

  void select(const State& state, double score) {
    trace.record(EventKind::Select, state,
                 Json{{"thoughts", thoughts_payload(state)}, {"score", score}});
  }

  SearchOutcome emit(const State& state, std::string output, std::optional<bool> success,
                     CostLedger usage) {
    trace.record(EventKind::Emit, state,
                 Json{{"output", output},
                      {"success", success ? Json(*success) : Json(nullptr)}});
    SearchOutcome outcome;
    outcome.output = std::move(output);
    outcome.final_state = state;
    outcome.nodes_visited = nodes_visited;
    outcome.success = success;
    outcome.trajectory = trace.take();
    outcome.usage = usage;
    return outcome;
  }
};

} // namespace

std::vector<int> select_top_b_indices(const std::vector<double>& scores, int b) {
  if (b < 1) throw std::invalid_argument("select_top_b: b must be >= 1");
  std::vector<int> order(scores.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(),
                   [&scores](int a, int c) { return scores[a] > scores[c]; });
  if (static_cast<int>(order.size()) > b) order.resize(b);
  return order;
}

std::vector<State> select_top_b(const std::vector<std::pair<State, double>>& scored, int b) {
  std::vector<double> scores;
  scores.reserve(scored.size());
  for (const auto& [state, score] : scored) scores.push_back(score);
  std::vector<State> out;
  for (int i : select_top_b_indices(scores, b)) out.push_back(scored[i].first);
  return out;
}

SearchOutcome tot_bfs(const TaskAdapter& task, const SearchConfig& cfg, Backend& gen,
                      Backend& eval) {
  cfg.validate();
  if (cfg.method != SearchMethod::Bfs) {
    throw std::invalid_argument("tot_bfs: config method is not bfs");
  }
  CostLedger ledger;
  SearchRun run(task, cfg, gen, eval, ledger);

  std::vector<State> frontier{task.root()};
  for (int t = 1; t <= cfg.T; ++t) {
    std::vector<State> pool;
    std::set<std::string> seen; // dedupe by textual rendering before evaluation
    for (const State& state : frontier) {
      for (Thought& thought : run.expand(state)) {
        State child = state.child(std::move(thought));
        if (seen.insert(child.render()).second) pool.push_back(std::move(child));
      }
    }
    if (pool.empty()) {
      return run.emit(frontier.front(), "", false, ledger);
    }

    const std::vector<Score> scores = run.evaluate(pool);
    std::vector<double> values;
    values.reserve(scores.size());
    for (const Score& s : scores) values.push_back(s.veto ? 0.0 : s.value);

    std::vector<State> next;
    for (int idx : select_top_b_indices(values, cfg.b)) {
      run.select(pool[idx], values[idx]);
      next.push_back(std::move(pool[idx]));
    }
    frontier = std::move(next);
  }

  // Frontier is in score order, so the best final state leads it.
  const State& best = frontier.front();
  std::string output = task.finalize(best, run.ctx);
  std::optional<bool> success = task.judge(best, output);
  return run.emit(best, std::move(output), success, ledger);
}

namespace {

struct DfsDriver {
  SearchRun& run;
  const TaskAdapter& task;
  const SearchConfig& cfg;
  int max_depth;
  int steps_used = 0;
  bool stopped = false;
  State deepest;

  DfsDriver(SearchRun& run, const TaskAdapter& task, const SearchConfig& cfg)
      : run(run), task(task), cfg(cfg), max_depth(task.max_depth(cfg)), deepest(task.root()) {}

  void visit(const State& state, int t) {
    if (task.is_terminal(state) || t > max_depth) return;
    if (steps_used >= cfg.dfs_step_limit) {
      stopped = true;
      return;
    }
    ++steps_used;
    std::vector<Thought> thoughts = run.expand(state);

    for (Thought& thought : thoughts) {
      if (stopped) return;
      State child = state.child(std::move(thought));
      if (!cfg.disable_prune) {
        const std::vector<Score> scores = run.evaluate({child});
        const Score& score = scores.front();
        if (score.veto || !(score.value > cfg.v_th)) {
          run.trace.record(EventKind::Prune, child,
                           Json{{"value", score.value}, {"veto", score.veto}});
          continue;
        }
        run.select(child, score.value);
      } else {
        run.select(child, 0.0);
      }
      // Strictly-deeper comparison keeps the first explored state on ties.
      if (child.depth() > deepest.depth()) deepest = child;
      visit(child, t + 1);
      if (stopped) return;
      run.trace.record(EventKind::Backtrack, state,
                       Json{{"from", child.id()}, {"from_depth", child.depth()}});
    }
  }
};

} // namespace

SearchOutcome tot_dfs(const TaskAdapter& task, const SearchConfig& cfg, Backend& gen,
                      Backend& eval) {
  cfg.validate();
  if (cfg.method != SearchMethod::Dfs) {
    throw std::invalid_argument("tot_dfs: config method is not dfs");
  }
  CostLedger ledger;
  SearchRun run(task, cfg, gen, eval, ledger);

  DfsDriver driver(run, task, cfg);
  driver.visit(task.root(), 1);

  std::string output = task.finalize(driver.deepest, run.ctx);
  std::optional<bool> success = task.judge(driver.deepest, output);
  return run.emit(driver.deepest, std::move(output), success, ledger);
}

SearchOutcome greedy_overwrite(const TaskAdapter& task, const SearchConfig& cfg, Backend& gen,
                               Backend& eval) {
  cfg.validate();
  if (cfg.method != SearchMethod::GreedyOverwrite) {
    throw std::invalid_argument("greedy_overwrite: config method is not greedy_overwrite");
  }
  if (!task.allows_overwrite()) {
    throw std::invalid_argument("greedy_overwrite: task does not permit overwrites");
  }
  CostLedger ledger;
  SearchRun run(task, cfg, gen, eval, ledger);

  State state = task.root();
  for (int step = 0; step < kGreedyStepLimit; ++step) {
    std::vector<Thought> thoughts = run.expand(state);
    if (thoughts.empty()) break;
    state = state.child(std::move(thoughts.front()));
    run.select(state, 0.0);
  }

  std::string output = task.finalize(state, run.ctx);
  std::optional<bool> success = task.judge(state, output);
  return run.emit(state, std::move(output), success, ledger);
}

SearchOutcome run_search(const TaskAdapter& task, const SearchConfig& cfg, Backend& gen,
                         Backend& eval) {
  switch (cfg.method) {
    case SearchMethod::Bfs: return tot_bfs(task, cfg, gen, eval);
    case SearchMethod::Dfs: return tot_dfs(task, cfg, gen, eval);
    case SearchMethod::GreedyOverwrite: return greedy_overwrite(task, cfg, gen, eval);
  }
  throw std::invalid_argument("run_search: unknown method");
}

} // namespace tot
