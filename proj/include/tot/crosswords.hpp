#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tot/backends.hpp"
#include "tot/prompts.hpp"
#include "tot/task.hpp"
#include "tot/trajectory.hpp"

namespace tot::crosswords {

inline constexpr int kSize = 5;
inline constexpr char kBlank = '_';

struct CrosswordPuzzle {
  std::array<std::string, kSize> h_clues;
  std::array<std::string, kSize> v_clues;
  std::optional<std::array<std::string, kSize>> solution; // 5 rows of 5 letters
  std::optional<int> index;

  std::string clues_text() const; // the task input block
};

struct Board {
  // Row-major letters 'A'..'Z', kBlank for empty.
  std::array<std::array<char, kSize>, kSize> cells;

  static Board empty();
  static std::optional<Board> from_rows(const std::array<std::string, kSize>& rows);
  std::string text() const; // 5 rows of 5 characters, '\n'-separated
  std::string row_word(int r) const;
  std::string col_word(int c) const;
  bool full() const;
};

// h1..h5 fill rows 0..4, v1..v5 fill columns 0..4.
struct SlotId {
  bool horizontal = true;
  int index = 0; // 0..4

  std::string name() const;
  friend bool operator==(const SlotId&, const SlotId&) = default;
  friend auto operator<=>(const SlotId&, const SlotId&) = default;
};

std::optional<SlotId> parse_slot_id(std::string_view name);

struct ClueSlot {
  SlotId id;
  std::string clue;
  std::array<char, kSize> pattern; // derived from the board, never stored
  std::string pattern_text() const; // lowercase letters, '_' blanks
};

enum class Confidence { Certain, High, Medium, Low };

int confidence_weight(Confidence c); // certain=4 high=3 medium=2 low=1
std::optional<Confidence> parse_confidence(std::string_view word);
std::string confidence_name(Confidence c);

struct WordProposal {
  SlotId slot;
  std::string word; // 5 uppercase letters
  Confidence confidence = Confidence::Low;
  double weight = 0.0; // aggregate over identical (slot, word) proposals

  std::string thought_text() const; // "h1. shown"
};

struct CrosswordMetrics {
  int letters_correct = 0; // 0..25
  int words_correct = 0;   // 0..10
  bool game_solved = false;

  friend bool operator==(const CrosswordMetrics&, const CrosswordMetrics&) = default;
};

// "h2. motor" / "h2.motor" -> (slot, WORD); nullopt when malformed.
std::optional<std::pair<SlotId, std::string>> parse_slot_thought(std::string_view text);

// One line of a proposal completion: "slot. word (confidence)".
struct ParsedProposal {
  SlotId slot;
  std::string word;
  Confidence confidence;
};
std::optional<ParsedProposal> parse_proposal_line(std::string_view line);

struct ApplyResult {
  std::optional<Board> board;
  int conflict_row = -1;
  int conflict_col = -1;
  bool ok() const { return board.has_value(); }
};

// Writes word along slot. Without overwrite, changing any existing letter is
// rejected and the conflicting cell reported.
ApplyResult apply_word(const Board& board, const SlotId& slot, const std::string& word,
                       bool allow_overwrite);

// Replays "slot. word" thoughts onto an empty board.
ApplyResult replay_board(const std::vector<Thought>& thoughts, bool allow_overwrite);

// Slots directly filled by a thought (under overwrite, the later fill wins).
std::set<SlotId> filled_slots(const std::vector<Thought>& thoughts);

CrosswordMetrics score_metrics(const Board& board, const std::array<std::string, kSize>& solution);

// Lenient parse of a model-emitted board: first 5 lines containing exactly 5
// letters each (separators ignored). nullopt when no such block exists.
std::optional<Board> parse_board_text(std::string_view text);

// Aggregates proposal lines into a ranked candidate list: weights summed over
// identical (slot, word), sorted descending, ties by first appearance.
// Drops proposals that violate the current pattern or re-fill a filled slot
// unless overwrites are allowed, plus any (slot, word) in `exclude`.
std::vector<WordProposal> rank_proposals(const std::vector<ParsedProposal>& proposals,
                                         const Board& board, const std::set<SlotId>& filled,
                                         bool allow_overwrite,
                                         const std::set<std::pair<SlotId, std::string>>& exclude = {});

class CrosswordTask : public TaskAdapter {
 public:
  CrosswordTask(CrosswordPuzzle puzzle, const PromptLibrary& prompts, int proposal_samples = 5);

  std::string task_id() const override;
  State root() const override;
  std::vector<Thought> expand(const State& state, const SearchConfig& cfg,
                              CallContext& ctx) const override;
  std::vector<Score> evaluate(const std::vector<State>& states, const SearchConfig& cfg,
                              CallContext& ctx) const override;
  bool is_terminal(const State& state) const override;
  bool allows_overwrite() const override { return true; }
  std::string finalize(const State& state, CallContext& ctx) const override;
  std::optional<bool> judge(const State& final_state, const std::string& output) const override;
  SearchConfig default_config() const override;

  // Letter constraints for every unfilled slot of the state's board.
  std::vector<ClueSlot> render_constraints(const State& state, bool allow_overwrite = false) const;

  // `samples` proposal completions aggregated into a ranked list.
  std::vector<WordProposal> propose_and_rank(
      const State& state, CallContext& ctx, int samples, double temperature,
      bool allow_overwrite,
      const std::set<std::pair<SlotId, std::string>>& exclude = {}) const;

  // Per-clue feasibility of every remaining slot; veto iff any clue is
  // impossible. Unparseable verdicts count as maybe.
  Score clue_feasibility(const State& state, CallContext& ctx, double temperature) const;

  Board board_of(const State& state, bool allow_overwrite) const;
  const CrosswordPuzzle& puzzle() const { return puzzle_; }

 private:
  CrosswordPuzzle puzzle_;
  const PromptLibrary& prompts_;
  int proposal_samples_;
};

// Scores every state explored in a DFS trajectory against the solution and
// returns the best by (letters, words, solved) lexicographic order.
CrosswordMetrics best_dfs_state(const std::vector<TrajectoryEvent>& trajectory,
                                const CrosswordPuzzle& puzzle);

// Solution-aware policies for deterministic end-to-end runs: the generator
// proposes the solution word of each open slot, the evaluator vetoes any
// board that deviates from the solution.
OraclePolicy oracle_gen_policy(const CrosswordPuzzle& puzzle);
OraclePolicy oracle_eval_policy(const CrosswordPuzzle& puzzle);

} // namespace tot::crosswords
