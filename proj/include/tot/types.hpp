#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "tot/hash.hpp"

namespace tot {

using Json = nlohmann::ordered_json;

enum class GenKind { Sample, Propose, Refine };

std::string gen_kind_name(GenKind kind);

// One intermediate text unit: a tree edge.
struct Thought {
  std::string text;
  int step_index = 0;
  GenKind strategy = GenKind::Propose;
  int candidate_index = 0;
};

// One tree node: the problem input plus the ordered thoughts taken so far.
// depth() always equals the number of thoughts; the textual rendering is a
// pure function of (input, thoughts) and backs the stable state id.
struct State {
  std::string task_id;
  std::string input;
  std::vector<Thought> thoughts;

  int depth() const { return static_cast<int>(thoughts.size()); }
  std::string render() const;
  std::string id() const { return content_hash(render()); }
  // Id of the state with the last thought removed; empty for the root.
  std::string parent_id() const;
  State child(Thought next) const;
  const Thought& last_thought() const { return thoughts.back(); }
};

enum class SearchMethod { Bfs, Dfs, GreedyOverwrite };

std::string search_method_name(SearchMethod m);

// Free parameters of the search algorithms.
struct SearchConfig {
  SearchMethod method = SearchMethod::Bfs;
  int k = 5;                // candidates per expansion
  int b = 5;                // breadth kept per BFS step
  int T = 3;                // step limit (max tree depth)
  double v_th = 0.0;        // DFS prune threshold
  int value_samples = 3;    // completions per value evaluation
  int vote_samples = 5;     // completions per vote evaluation
  int dfs_step_limit = 100; // global cap on DFS expansions
  double temperature = 0.7;
  unsigned seed = 0;
  bool disable_prune = false; // DFS ablation: enter children regardless of evaluation

  // Throws std::invalid_argument on an out-of-range field.
  void validate() const;
};

// Result of evaluating one candidate state.
struct Score {
  double value = 0.0;
  int samples_used = 0;
  int parse_failures = 0;
  bool veto = false; // hard prune signal, independent of value
  Json detail;       // labels / votes / per-clue verdicts, for trajectories
};

} // namespace tot
