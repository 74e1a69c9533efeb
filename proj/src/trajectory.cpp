#include "tot/trajectory.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace tot {

std::string event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::Expand: return "expand";
    case EventKind::Evaluate: return "evaluate";
    case EventKind::Select: return "select";
    case EventKind::Prune: return "prune";
    case EventKind::Backtrack: return "backtrack";
    case EventKind::Emit: return "emit";
  }
  return "unknown";
}

std::optional<EventKind> event_kind_from_name(std::string_view name) {
  if (name == "expand") return EventKind::Expand;
  if (name == "evaluate") return EventKind::Evaluate;
  if (name == "select") return EventKind::Select;
  if (name == "prune") return EventKind::Prune;
  if (name == "backtrack") return EventKind::Backtrack;
  if (name == "emit") return EventKind::Emit;
  return std::nullopt;
}

void TrajectoryRecorder::record(EventKind kind, const State& state, Json payload) {
  TrajectoryEvent e;
  e.seq = seq_++;
  e.kind = kind;
  e.state_id = state.id();
  e.parent_id = state.parent_id();
  e.depth = state.depth();
  e.payload = std::move(payload);
  events_.push_back(std::move(e));
}

void write_trajectory_jsonl(const std::vector<TrajectoryEvent>& events, std::ostream& out) {
  for (const TrajectoryEvent& e : events) {
    Json j;
    j["seq"] = e.seq;
    j["kind"] = event_kind_name(e.kind);
    j["state_id"] = e.state_id;
    j["parent_id"] = e.parent_id;
    j["depth"] = e.depth;
    j["payload"] = e.payload;
    out << j.dump() << '\n';
  }
}

std::string trajectory_to_jsonl(const std::vector<TrajectoryEvent>& events) {
  std::ostringstream s;
  write_trajectory_jsonl(events, s);
  return s.str();
}

std::vector<TrajectoryEvent> read_trajectory_jsonl(std::istream& in) {
  std::vector<TrajectoryEvent> events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Json j = Json::parse(line);
    TrajectoryEvent e;
    e.seq = j.at("seq").get<long long>();
    auto kind = event_kind_from_name(j.at("kind").get<std::string>());
    if (!kind) throw std::runtime_error("trajectory: unknown event kind in log");
    e.kind = *kind;
    e.state_id = j.at("state_id").get<std::string>();
    e.parent_id = j.at("parent_id").get<std::string>();
    e.depth = j.at("depth").get<int>();
    e.payload = j.at("payload");
    events.push_back(std::move(e));
  }
  return events;
}

} // namespace tot
