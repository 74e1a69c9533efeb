#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tot/types.hpp"

namespace tot {

enum class EventKind { Expand, Evaluate, Select, Prune, Backtrack, Emit };

std::string event_kind_name(EventKind kind);
std::optional<EventKind> event_kind_from_name(std::string_view name);

// Append-only record of one search action. state_id is the content hash of
// the subject state's rendering, so logs replay and diff across runs.
struct TrajectoryEvent {
  long long seq = 0;
  EventKind kind = EventKind::Expand;
  std::string state_id;
  std::string parent_id;
  int depth = 0;
  Json payload;
};

class TrajectoryRecorder {
 public:
  void record(EventKind kind, const State& state, Json payload);
  const std::vector<TrajectoryEvent>& events() const { return events_; }
  std::vector<TrajectoryEvent> take() { return std::move(events_); }

 private:
  std::vector<TrajectoryEvent> events_;
  long long seq_ = 0;
};

// One JSON object per line: {seq, kind, state_id, parent_id, depth, payload}.
void write_trajectory_jsonl(const std::vector<TrajectoryEvent>& events, std::ostream& out);
std::string trajectory_to_jsonl(const std::vector<TrajectoryEvent>& events);
std::vector<TrajectoryEvent> read_trajectory_jsonl(std::istream& in);

} // namespace tot
