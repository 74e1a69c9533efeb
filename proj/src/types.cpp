#include "tot/types.hpp"

#include <stdexcept>

namespace tot {

std::string gen_kind_name(GenKind kind) {
  switch (kind) {
    case GenKind::Sample: return "sample";
    case GenKind::Propose: return "propose";
    case GenKind::Refine: return "refine";
  }
  return "unknown";
}

std::string State::render() const {
  std::string out = input;
  for (const Thought& t : thoughts) {
    out.push_back('\n');
    out += t.text;
  }
  return out;
}

std::string State::parent_id() const {
  if (thoughts.empty()) return "";
  State parent = *this;
  parent.thoughts.pop_back();
  return parent.id();
}

State State::child(Thought next) const {
  State out = *this;
  next.step_index = depth() + 1;
  out.thoughts.push_back(std::move(next));
  return out;
}

std::string search_method_name(SearchMethod m) {
  switch (m) {
    case SearchMethod::Bfs: return "bfs";
    case SearchMethod::Dfs: return "dfs";
    case SearchMethod::GreedyOverwrite: return "greedy_overwrite";
  }
  return "unknown";
}

void SearchConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("SearchConfig: ") + what);
  };
  require(k >= 1, "k must be >= 1");
  require(b >= 1, "b must be >= 1");
  require(T >= 1, "T must be >= 1");
  require(value_samples >= 1, "value_samples must be >= 1");
  require(vote_samples >= 1, "vote_samples must be >= 1");
  require(dfs_step_limit >= 1, "dfs_step_limit must be >= 1");
  require(temperature >= 0.0, "temperature must be >= 0");
}

} // namespace tot
