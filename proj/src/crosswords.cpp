#include "tot/crosswords.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <stdexcept>

namespace tot::crosswords {
namespace {

std::string_view trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  size_t pos = 0;
  while (pos <= text.size()) {
    const size_t nl = text.find('\n', pos);
    lines.push_back(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos
                                                                  : nl - pos));
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return lines;
}

// Cell coordinates along a slot.
std::pair<int, int> slot_cell(const SlotId& slot, int offset) {
  return slot.horizontal ? std::make_pair(slot.index, offset)
                         : std::make_pair(offset, slot.index);
}

} // namespace

std::string CrosswordPuzzle::clues_text() const {
  std::ostringstream s;
  for (int i = 0; i < kSize; ++i) s << "h" << (i + 1) << ". " << h_clues[i] << '\n';
  for (int i = 0; i < kSize; ++i) s << "v" << (i + 1) << ". " << v_clues[i] << '\n';
  std::string out = s.str();
  out.pop_back();
  return out;
}

Board Board::empty() {
  Board b;
  for (auto& row : b.cells) row.fill(kBlank);
  return b;
}

std::optional<Board> Board::from_rows(const std::array<std::string, kSize>& rows) {
  Board b = Board::empty();
  for (int r = 0; r < kSize; ++r) {
    if (rows[r].size() != kSize) return std::nullopt;
    for (int c = 0; c < kSize; ++c) {
      const char ch = rows[r][c];
      if (!std::isalpha(static_cast<unsigned char>(ch))) return std::nullopt;
      b.cells[r][c] = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    }
  }
  return b;
}

std::string Board::text() const {
  std::string out;
  for (int r = 0; r < kSize; ++r) {
    for (int c = 0; c < kSize; ++c) out.push_back(cells[r][c]);
    if (r + 1 < kSize) out.push_back('\n');
  }
  return out;
}

std::string Board::row_word(int r) const {
  return std::string(cells[r].begin(), cells[r].end());
}

std::string Board::col_word(int c) const {
  std::string out;
  for (int r = 0; r < kSize; ++r) out.push_back(cells[r][c]);
  return out;
}

bool Board::full() const {
  for (const auto& row : cells) {
    for (char c : row) {
      if (c == kBlank) return false;
    }
  }
  return true;
}

std::string SlotId::name() const {
  return std::string(horizontal ? "h" : "v") + std::to_string(index + 1);
}

std::optional<SlotId> parse_slot_id(std::string_view name) {
  if (name.size() != 2) return std::nullopt;
  const char kind = static_cast<char>(std::tolower(static_cast<unsigned char>(name[0])));
  if (kind != 'h' && kind != 'v') return std::nullopt;
  if (name[1] < '1' || name[1] > '5') return std::nullopt;
  return SlotId{kind == 'h', name[1] - '1'};
}

std::string ClueSlot::pattern_text() const {
  std::string out;
  for (char c : pattern) {
    out.push_back(c == kBlank ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

int confidence_weight(Confidence c) {
  switch (c) {
    case Confidence::Certain: return 4;
    case Confidence::High: return 3;
    case Confidence::Medium: return 2;
    case Confidence::Low: return 1;
  }
  return 1;
}

std::optional<Confidence> parse_confidence(std::string_view word) {
  const std::string w = lower(trim(word));
  if (w == "certain") return Confidence::Certain;
  if (w == "high") return Confidence::High;
  if (w == "medium") return Confidence::Medium;
  if (w == "low") return Confidence::Low;
  return std::nullopt;
}

std::string confidence_name(Confidence c) {
  switch (c) {
    case Confidence::Certain: return "certain";
    case Confidence::High: return "high";
    case Confidence::Medium: return "medium";
    case Confidence::Low: return "low";
  }
  return "low";
}

std::string WordProposal::thought_text() const {
  return slot.name() + ". " + lower(word);
}

std::optional<std::pair<SlotId, std::string>> parse_slot_thought(std::string_view text) {
  const std::string_view t = trim(text);
  if (t.size() < 4) return std::nullopt;
  auto slot = parse_slot_id(t.substr(0, 2));
  if (!slot || t[2] != '.') return std::nullopt;
  const std::string word = upper(trim(t.substr(3)));
  if (word.size() != kSize) return std::nullopt;
  for (char c : word) {
    if (c < 'A' || c > 'Z') return std::nullopt;
  }
  return std::make_pair(*slot, word);
}

std::optional<ParsedProposal> parse_proposal_line(std::string_view line) {
  std::string_view t = trim(line);
  while (!t.empty() && (t.front() == '-' || t.front() == '*')) t = trim(t.substr(1));
  const size_t open = t.rfind('(');
  const size_t close = t.rfind(')');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    return std::nullopt;
  }
  auto confidence = parse_confidence(t.substr(open + 1, close - open - 1));
  if (!confidence) return std::nullopt;
  auto slot_word = parse_slot_thought(t.substr(0, open));
  if (!slot_word) return std::nullopt;
  return ParsedProposal{slot_word->first, slot_word->second, *confidence};
}

ApplyResult apply_word(const Board& board, const SlotId& slot, const std::string& word,
                       bool allow_overwrite) {
  if (word.size() != kSize) return {std::nullopt, -1, -1};
  Board out = board;
  for (int i = 0; i < kSize; ++i) {
    const auto [r, c] = slot_cell(slot, i);
    const char ch = static_cast<char>(std::toupper(static_cast<unsigned char>(word[i])));
    if (!allow_overwrite && out.cells[r][c] != kBlank && out.cells[r][c] != ch) {
      return {std::nullopt, r, c};
    }
    out.cells[r][c] = ch;
  }
  return {out, -1, -1};
}

ApplyResult replay_board(const std::vector<Thought>& thoughts, bool allow_overwrite) {
  Board board = Board::empty();
  for (const Thought& t : thoughts) {
    auto parsed = parse_slot_thought(t.text);
    if (!parsed) return {std::nullopt, -1, -1};
    ApplyResult applied = apply_word(board, parsed->first, parsed->second, allow_overwrite);
    if (!applied.ok()) return applied;
    board = *applied.board;
  }
  return {board, -1, -1};
}

std::set<SlotId> filled_slots(const std::vector<Thought>& thoughts) {
  std::set<SlotId> filled;
  for (const Thought& t : thoughts) {
    if (auto parsed = parse_slot_thought(t.text)) filled.insert(parsed->first);
  }
  return filled;
}

CrosswordMetrics score_metrics(const Board& board,
                               const std::array<std::string, kSize>& solution) {
  CrosswordMetrics m;
  std::array<std::string, kSize> sol;
  for (int r = 0; r < kSize; ++r) sol[r] = upper(solution[r]);
  for (int r = 0; r < kSize; ++r) {
    for (int c = 0; c < kSize; ++c) {
      if (board.cells[r][c] != kBlank && board.cells[r][c] == sol[r][c]) ++m.letters_correct;
    }
  }
  for (int r = 0; r < kSize; ++r) {
    if (board.row_word(r) == sol[r]) ++m.words_correct;
  }
  for (int c = 0; c < kSize; ++c) {
    std::string col;
    for (int r = 0; r < kSize; ++r) col.push_back(sol[r][c]);
    if (board.col_word(c) == col) ++m.words_correct;
  }
  m.game_solved = m.letters_correct == kSize * kSize;
  return m;
}

std::optional<Board> parse_board_text(std::string_view text) {
  std::vector<std::string> rows;
  for (std::string_view line : split_lines(text)) {
    std::string cells;
    for (char c : line) {
      if (std::isalpha(static_cast<unsigned char>(c)) || c == kBlank) cells.push_back(c);
    }
    if (cells.size() == kSize) rows.push_back(upper(cells));
  }
  if (rows.size() < kSize) return std::nullopt;
  // The board is conventionally the last thing printed.
  Board board = Board::empty();
  for (int r = 0; r < kSize; ++r) {
    const std::string& row = rows[rows.size() - kSize + r];
    for (int c = 0; c < kSize; ++c) {
      board.cells[r][c] = row[c] == kBlank ? kBlank : row[c];
    }
  }
  return board;
}

std::vector<WordProposal> rank_proposals(
    const std::vector<ParsedProposal>& proposals, const Board& board,
    const std::set<SlotId>& filled, bool allow_overwrite,
    const std::set<std::pair<SlotId, std::string>>& exclude) {
  struct Entry {
    WordProposal proposal;
    size_t first_seen;
  };
  std::map<std::pair<SlotId, std::string>, Entry> merged;
  size_t order = 0;
  for (const ParsedProposal& p : proposals) {
    const auto key = std::make_pair(p.slot, p.word);
    if (exclude.count(key)) continue;
    if (!allow_overwrite) {
      if (filled.count(p.slot)) continue;
      bool fits = true;
      for (int i = 0; i < kSize && fits; ++i) {
        const auto [r, c] = slot_cell(p.slot, i);
        fits = board.cells[r][c] == kBlank || board.cells[r][c] == p.word[i];
      }
      if (!fits) continue;
    }
    auto it = merged.find(key);
    if (it == merged.end()) {
      merged.emplace(key, Entry{WordProposal{p.slot, p.word, p.confidence,
                                             static_cast<double>(confidence_weight(p.confidence))},
                                order++});
    } else {
      it->second.proposal.weight += confidence_weight(p.confidence);
    }
  }
  std::vector<Entry> entries;
  entries.reserve(merged.size());
  for (auto& [key, entry] : merged) entries.push_back(std::move(entry));
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.proposal.weight != b.proposal.weight) return a.proposal.weight > b.proposal.weight;
    return a.first_seen < b.first_seen;
  });
  std::vector<WordProposal> out;
  out.reserve(entries.size());
  for (Entry& e : entries) out.push_back(std::move(e.proposal));
  return out;
}

// ---------------------------------------------------------------------------
// Task adapter

CrosswordTask::CrosswordTask(CrosswordPuzzle puzzle, const PromptLibrary& prompts,
                             int proposal_samples)
    : puzzle_(std::move(puzzle)), prompts_(prompts), proposal_samples_(proposal_samples) {
  if (puzzle_.solution) {
    for (auto& row : *puzzle_.solution) {
      row = upper(row);
      if (row.size() != kSize) {
        throw std::invalid_argument("crosswords: solution rows must have 5 letters");
      }
    }
  }
}

std::string CrosswordTask::task_id() const {
  return "crosswords:" + (puzzle_.index ? std::to_string(*puzzle_.index) : "0");
}

State CrosswordTask::root() const {
  State s;
  s.task_id = task_id();
  s.input = puzzle_.clues_text();
  return s;
}

Board CrosswordTask::board_of(const State& state, bool allow_overwrite) const {
  ApplyResult replayed = replay_board(state.thoughts, allow_overwrite);
  if (!replayed.ok()) {
    throw std::runtime_error("crosswords: conflicting fill at cell (" +
                             std::to_string(replayed.conflict_row + 1) + "," +
                             std::to_string(replayed.conflict_col + 1) + ")");
  }
  return *replayed.board;
}

std::vector<ClueSlot> CrosswordTask::render_constraints(const State& state,
                                                        bool allow_overwrite) const {
  const Board board = board_of(state, allow_overwrite);
  const std::set<SlotId> filled = filled_slots(state.thoughts);
  std::vector<ClueSlot> out;
  for (int h = 0; h < 2; ++h) {
    for (int i = 0; i < kSize; ++i) {
      const SlotId slot{h == 0, i};
      if (filled.count(slot)) continue;
      ClueSlot cs;
      cs.id = slot;
      cs.clue = slot.horizontal ? puzzle_.h_clues[i] : puzzle_.v_clues[i];
      for (int off = 0; off < kSize; ++off) {
        const auto [r, c] = slot_cell(slot, off);
        cs.pattern[off] = board.cells[r][c];
      }
      out.push_back(std::move(cs));
    }
  }
  return out;
}

namespace {

std::string constraint_line(const ClueSlot& slot) {
  return slot.id.name() + ". " + slot.clue + ": " + slot.pattern_text();
}

} // namespace

std::vector<WordProposal> CrosswordTask::propose_and_rank(
    const State& state, CallContext& ctx, int samples, double temperature, bool allow_overwrite,
    const std::set<std::pair<SlotId, std::string>>& exclude) const {
  const std::vector<ClueSlot> constraints = render_constraints(state, allow_overwrite);
  if (constraints.empty()) return {};
  std::string block;
  for (const ClueSlot& c : constraints) {
    block += constraint_line(c);
    block.push_back('\n');
  }
  block.pop_back();

  CompletionRequest request;
  request.prompt = prompts_.render("crosswords/propose", {{"constraints", block}});
  request.n = samples;
  request.temperature = temperature;
  const CompletionResponse response = ctx.call_gen(request);

  std::vector<ParsedProposal> parsed;
  for (const std::string& text : response.texts) {
    for (std::string_view line : split_lines(text)) {
      if (auto p = parse_proposal_line(line)) parsed.push_back(std::move(*p));
    }
  }
  const Board board = board_of(state, allow_overwrite);
  return rank_proposals(parsed, board, filled_slots(state.thoughts), allow_overwrite, exclude);
}

Score CrosswordTask::clue_feasibility(const State& state, CallContext& ctx,
                                      double temperature) const {
  const std::vector<ClueSlot> constraints = render_constraints(state, false);
  Score score;
  score.value = 1.0;
  Json verdicts = Json::object();
  for (const ClueSlot& c : constraints) {
    CompletionRequest request;
    request.prompt = prompts_.render("crosswords/value", {{"constraint", constraint_line(c)}});
    request.n = 1;
    request.temperature = temperature;
    const CompletionResponse response = ctx.call_eval(request);

    auto label = parse_value_label(response.texts.front());
    // An unparseable verdict is treated as maybe: garbage must not prune.
    ValueLabelKind kind = label ? label->label : ValueLabelKind::Maybe;
    if (label) {
      ++score.samples_used;
    } else {
      ++score.parse_failures;
    }
    const char* name = kind == ValueLabelKind::Sure        ? "sure"
                       : kind == ValueLabelKind::Impossible ? "impossible"
                                                            : "maybe";
    verdicts[c.id.name()] = name;
    if (kind == ValueLabelKind::Impossible) score.veto = true;
  }
  if (score.veto) score.value = 0.0;
  score.detail = Json{{"clues", verdicts}};
  return score;
}

std::vector<Thought> CrosswordTask::expand(const State& state, const SearchConfig& cfg,
                                           CallContext& ctx) const {
  const bool overwrite = cfg.method == SearchMethod::GreedyOverwrite;
  std::vector<WordProposal> proposals =
      propose_and_rank(state, ctx, proposal_samples_, cfg.temperature, overwrite);
  std::vector<Thought> thoughts;
  for (const WordProposal& p : proposals) {
    if (static_cast<int>(thoughts.size()) >= cfg.k) break;
    Thought t;
    t.text = p.thought_text();
    t.step_index = state.depth() + 1;
    t.strategy = GenKind::Propose;
    t.candidate_index = static_cast<int>(thoughts.size());
    thoughts.push_back(std::move(t));
  }
  return thoughts;
}

std::vector<Score> CrosswordTask::evaluate(const std::vector<State>& states,
                                           const SearchConfig& cfg, CallContext& ctx) const {
  std::vector<Score> scores;
  scores.reserve(states.size());
  for (const State& state : states) {
    scores.push_back(clue_feasibility(state, ctx, cfg.temperature));
  }
  return scores;
}

bool CrosswordTask::is_terminal(const State& state) const {
  return static_cast<int>(filled_slots(state.thoughts).size()) == 2 * kSize;
}

std::string CrosswordTask::finalize(const State& state, CallContext&) const {
  return board_of(state, true).text();
}

std::optional<bool> CrosswordTask::judge(const State&, const std::string& output) const {
  if (!puzzle_.solution) return std::nullopt;
  auto board = parse_board_text(output);
  if (!board) return false;
  return score_metrics(*board, *puzzle_.solution).game_solved;
}

SearchConfig CrosswordTask::default_config() const {
  SearchConfig cfg;
  cfg.method = SearchMethod::Dfs;
  cfg.T = 10; // one word per step, no overwrites
  cfg.k = 20;
  cfg.dfs_step_limit = 100;
  cfg.v_th = 0.0;
  return cfg;
}

CrosswordMetrics best_dfs_state(const std::vector<TrajectoryEvent>& trajectory,
                                const CrosswordPuzzle& puzzle) {
  if (!puzzle.solution) {
    throw std::invalid_argument("best_dfs_state: puzzle has no solution grid");
  }
  CrosswordMetrics best;
  auto consider = [&best, &puzzle](const std::vector<Thought>& thoughts) {
    ApplyResult replayed = replay_board(thoughts, true);
    if (!replayed.ok()) return;
    const CrosswordMetrics m = score_metrics(*replayed.board, *puzzle.solution);
    const auto key = [](const CrosswordMetrics& x) {
      return std::make_tuple(x.letters_correct, x.words_correct, x.game_solved);
    };
    if (key(m) > key(best)) best = m;
  };
  for (const TrajectoryEvent& e : trajectory) {
    if (e.kind != EventKind::Expand && e.kind != EventKind::Select) continue;
    if (!e.payload.contains("thoughts")) continue;
    std::vector<Thought> thoughts;
    for (const auto& t : e.payload["thoughts"]) {
      Thought thought;
      thought.text = t.get<std::string>();
      thoughts.push_back(std::move(thought));
    }
    consider(thoughts);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Oracle policies

namespace {

struct ConstraintLine {
  SlotId slot;
  std::string pattern; // 5 chars, '_' or lowercase letters
};

std::vector<ConstraintLine> constraints_from_prompt(const std::string& prompt) {
  std::vector<ConstraintLine> out;
  for (std::string_view line : split_lines(prompt)) {
    const std::string_view t = trim(line);
    if (t.size() < 4) continue;
    auto slot = parse_slot_id(t.substr(0, 2));
    if (!slot || t[2] != '.') continue;
    const size_t colon = t.rfind(':');
    if (colon == std::string_view::npos) continue;
    const std::string pattern = lower(trim(t.substr(colon + 1)));
    if (pattern.size() != kSize) continue;
    bool ok = true;
    for (char c : pattern) {
      if (c != '_' && (c < 'a' || c > 'z')) ok = false;
    }
    if (!ok) continue;
    out.push_back(ConstraintLine{*slot, pattern});
  }
  return out;
}

std::string solution_word(const CrosswordPuzzle& puzzle, const SlotId& slot) {
  const auto& sol = *puzzle.solution;
  if (slot.horizontal) return upper(sol[slot.index]);
  std::string out;
  for (int r = 0; r < kSize; ++r) out.push_back(sol[r][slot.index]);
  return upper(out);
}

bool pattern_matches_word(const std::string& pattern, const std::string& word) {
  for (int i = 0; i < kSize; ++i) {
    if (pattern[i] == '_') continue;
    if (std::toupper(static_cast<unsigned char>(pattern[i])) != word[i]) return false;
  }
  return true;
}

} // namespace

OraclePolicy oracle_gen_policy(const CrosswordPuzzle& puzzle) {
  if (!puzzle.solution) {
    throw std::invalid_argument("crosswords oracle: puzzle has no solution grid");
  }
  return [puzzle](const CompletionRequest& request) -> std::vector<std::string> {
    std::string lines;
    for (const ConstraintLine& c : constraints_from_prompt(request.prompt)) {
      const std::string word = solution_word(puzzle, c.slot);
      if (!pattern_matches_word(c.pattern, word)) continue;
      lines += c.slot.name() + ". " + lower(word) + " (certain)\n";
    }
    return {lines};
  };
}

OraclePolicy oracle_eval_policy(const CrosswordPuzzle& puzzle) {
  if (!puzzle.solution) {
    throw std::invalid_argument("crosswords oracle: puzzle has no solution grid");
  }
  return [puzzle](const CompletionRequest& request) -> std::vector<std::string> {
    const auto constraints = constraints_from_prompt(request.prompt);
    if (constraints.empty()) return {std::string("maybe")};
    const ConstraintLine& c = constraints.back();
    const bool feasible = pattern_matches_word(c.pattern, solution_word(puzzle, c.slot));
    return {feasible ? std::string("sure") : std::string("impossible")};
  };
}

} // namespace tot::crosswords
