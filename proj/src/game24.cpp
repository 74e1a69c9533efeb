#include "tot/game24.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

namespace tot::game24 {
namespace {

const Rational kTarget{24, 1};

std::string_view trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Display forms of the operators normalize to ASCII before parsing.
std::string normalize_ops(std::string_view text) {
  std::string out(text);
  auto replace_all = [&out](std::string_view from, char to) {
    size_t pos = 0;
    while ((pos = out.find(from, pos)) != std::string::npos) {
      out.replace(pos, from.size(), 1, to);
      ++pos;
    }
  };
  replace_all("×", '*'); // multiplication sign
  replace_all("÷", '/'); // division sign
  replace_all("−", '-'); // minus sign
  replace_all("x", '*');
  replace_all("X", '*');
  return out;
}

bool is_op(char c) { return c == '+' || c == '-' || c == '*' || c == '/'; }

std::vector<Rational> sorted(std::vector<Rational> values) {
  std::sort(values.begin(), values.end(), rat_less);
  return values;
}

// Removes one occurrence of value; false when absent.
bool remove_one(std::vector<Rational>& values, const Rational& value) {
  auto it = std::find(values.begin(), values.end(), value);
  if (it == values.end()) return false;
  values.erase(it);
  return true;
}

std::string join_rationals(const std::vector<Rational>& values) {
  std::string out;
  for (size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += rat_to_string(values[i]);
  }
  return out;
}

// "a op b" with operands that may themselves contain '/': prefer the
// space-delimited three-token form, then fall back to scanning operator
// positions where both sides parse as numbers. Ambiguous scans are rejected.
struct BinaryParse {
  Rational lhs, rhs;
  char op;
};

std::optional<BinaryParse> parse_binary(std::string_view text) {
  std::vector<std::string_view> tokens;
  size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == text.size()) break;
    size_t end = pos;
    while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
    tokens.push_back(text.substr(pos, end - pos));
    pos = end;
  }
  if (tokens.size() == 3 && tokens[1].size() == 1 && is_op(tokens[1][0])) {
    auto lhs = parse_rational(tokens[0]);
    auto rhs = parse_rational(tokens[2]);
    if (lhs && rhs) return BinaryParse{*lhs, *rhs, tokens[1][0]};
  }

  std::string_view flat = trim(text);
  std::optional<BinaryParse> found;
  int matches = 0;
  for (size_t i = 1; i + 1 < flat.size(); ++i) {
    if (!is_op(flat[i])) continue;
    auto lhs = parse_rational(flat.substr(0, i));
    auto rhs = parse_rational(flat.substr(i + 1));
    if (lhs && rhs) {
      ++matches;
      found = BinaryParse{*lhs, *rhs, flat[i]};
    }
  }
  if (matches == 1) return found;
  return std::nullopt;
}

} // namespace

std::string Puzzle::numbers_text() const {
  std::string out;
  for (size_t i = 0; i < numbers.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += std::to_string(numbers[i]);
  }
  return out;
}

std::vector<Rational> puzzle_rationals(const Puzzle& puzzle) {
  std::vector<Rational> out;
  out.reserve(puzzle.numbers.size());
  for (long long n : puzzle.numbers) out.push_back(Rational{n, 1});
  return out;
}

std::string ArithmeticStep::canonical_text() const {
  std::ostringstream s;
  s << rat_to_string(lhs) << ' ' << op << ' ' << rat_to_string(rhs) << " = "
    << rat_to_string(result) << " (left: " << join_rationals(remaining) << ")";
  return s.str();
}

StepParse apply_step(const std::vector<Rational>& remaining, std::string_view step_text) {
  const std::string text = normalize_ops(step_text);

  const size_t eq = text.find('=');
  if (eq == std::string::npos) return {std::nullopt, StepError::MalformedText};

  std::string_view rhs_part = trim(std::string_view(text).substr(eq + 1));
  std::string_view stated_result = rhs_part;
  const size_t paren = rhs_part.find('(');
  if (paren != std::string::npos) {
    // "(left: ...)" annotation; the recomputed multiset below is authoritative.
    stated_result = trim(rhs_part.substr(0, paren));
  }

  auto binary = parse_binary(std::string_view(text).substr(0, eq));
  if (!binary) return {std::nullopt, StepError::MalformedText};
  auto stated = parse_rational(stated_result);
  if (!stated) return {std::nullopt, StepError::MalformedText};

  std::vector<Rational> rest = remaining;
  if (!remove_one(rest, binary->lhs) || !remove_one(rest, binary->rhs)) {
    return {std::nullopt, StepError::OperandNotAvailable};
  }

  if (binary->op == '/' && binary->rhs.num == 0) {
    return {std::nullopt, StepError::DivisionByZero};
  }
  auto result = rat_apply(binary->op, binary->lhs, binary->rhs);
  if (!result) return {std::nullopt, StepError::DivisionByZero};
  if (*result != *stated) return {std::nullopt, StepError::ArithmeticMismatch};

  rest.push_back(*result);
  ArithmeticStep step;
  step.lhs = binary->lhs;
  step.op = binary->op;
  step.rhs = binary->rhs;
  step.result = *result;
  step.remaining = sorted(std::move(rest));
  return {step, StepError::MalformedText};
}

// ---------------------------------------------------------------------------
// Expression parsing

namespace {

struct ExprParser {
  std::string_view text;
  size_t pos = 0;
  std::vector<Rational> operands;
  bool failed = false;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  std::optional<char> peek_op(std::string_view ops) {
    skip_ws();
    if (pos < text.size() && ops.find(text[pos]) != std::string_view::npos) return text[pos];
    return std::nullopt;
  }

  struct Node {
    Rational value;
    std::string canon;
    bool leaf = true;
  };

  std::optional<Node> factor() {
    skip_ws();
    if (pos >= text.size()) return std::nullopt;
    if (text[pos] == '(') {
      ++pos;
      auto inner = expr();
      if (!inner || !eat(')')) return std::nullopt;
      return inner;
    }
    const size_t start = pos;
    while (pos < text.size() &&
           (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.')) {
      ++pos;
    }
    if (pos == start) return std::nullopt;
    auto value = parse_rational(text.substr(start, pos - start));
    if (!value) return std::nullopt;
    operands.push_back(*value);
    return Node{*value, rat_to_string(*value), true};
  }

  std::optional<Node> combine(const Node& a, char op, const Node& b) {
    auto value = rat_apply(op, a.value, b.value);
    if (!value) return std::nullopt;
    Node out;
    out.value = *value;
    out.canon = "(" + a.canon + " " + op + " " + b.canon + ")";
    out.leaf = false;
    return out;
  }

  std::optional<Node> term() {
    auto left = factor();
    if (!left) return std::nullopt;
    while (auto op = peek_op("*/")) {
      ++pos;
      auto right = factor();
      if (!right) return std::nullopt;
      left = combine(*left, *op, *right);
      if (!left) return std::nullopt;
    }
    return left;
  }

  std::optional<Node> expr() {
    auto left = term();
    if (!left) return std::nullopt;
    while (auto op = peek_op("+-")) {
      ++pos;
      auto right = term();
      if (!right) return std::nullopt;
      left = combine(*left, *op, *right);
      if (!left) return std::nullopt;
    }
    return left;
  }
};

std::string strip_outer_parens(std::string canon) {
  if (canon.size() >= 2 && canon.front() == '(' && canon.back() == ')') {
    // Only strip if the parens actually wrap the whole string.
    int depth = 0;
    for (size_t i = 0; i + 1 < canon.size(); ++i) {
      if (canon[i] == '(') ++depth;
      if (canon[i] == ')') --depth;
      if (depth == 0) return canon;
    }
    return canon.substr(1, canon.size() - 2);
  }
  return canon;
}

} // namespace

std::optional<Expression> parse_expression(std::string_view equation) {
  const std::string text = normalize_ops(equation);

  std::string_view expr_part = text;
  std::optional<std::string_view> suffix;
  const size_t eq = text.find('=');
  if (eq != std::string::npos) {
    if (text.find('=', eq + 1) != std::string::npos) return std::nullopt;
    expr_part = trim(std::string_view(text).substr(0, eq));
    suffix = trim(std::string_view(text).substr(eq + 1));
  }

  ExprParser parser{expr_part};
  auto node = parser.expr();
  if (!node) return std::nullopt;
  parser.skip_ws();
  if (parser.pos != parser.text.size()) return std::nullopt;

  if (suffix) {
    auto stated = parse_rational(*suffix);
    if (!stated || *stated != node->value) return std::nullopt;
  }

  Expression out;
  out.text = strip_outer_parens(node->canon);
  out.operands = sorted(std::move(parser.operands));
  out.value = node->value;
  return out;
}

bool validate_solution(std::string_view equation, const Puzzle& puzzle) {
  auto expr = parse_expression(equation);
  if (!expr) return false;
  if (expr->value != kTarget) return false;
  return expr->operands == sorted(puzzle_rationals(puzzle));
}

// ---------------------------------------------------------------------------
// Brute-force reachability

namespace {

struct Slot {
  Rational value;
  std::string expr;
};

// Fixed enumeration: pairs (i, j) with i < j in list order, operations in the
// order a+b, a-b, b-a, a*b, a/b, b/a. First witness wins.
bool solve_slots(std::vector<Slot>& slots, std::string* witness) {
  if (slots.size() == 1) {
    if (slots[0].value == kTarget) {
      if (witness) *witness = slots[0].expr;
      return true;
    }
    return false;
  }
  for (size_t i = 0; i + 1 < slots.size(); ++i) {
    for (size_t j = i + 1; j < slots.size(); ++j) {
      const Slot a = slots[i];
      const Slot b = slots[j];
      struct Combo {
        std::optional<Rational> value;
        const Slot* lhs;
        const Slot* rhs;
        char op;
      };
      const Combo combos[] = {
          {rat_add(a.value, b.value), &a, &b, '+'}, {rat_sub(a.value, b.value), &a, &b, '-'},
          {rat_sub(b.value, a.value), &b, &a, '-'}, {rat_mul(a.value, b.value), &a, &b, '*'},
          {rat_div(a.value, b.value), &a, &b, '/'}, {rat_div(b.value, a.value), &b, &a, '/'},
      };
      std::vector<Slot> rest;
      rest.reserve(slots.size() - 1);
      for (size_t m = 0; m < slots.size(); ++m) {
        if (m != i && m != j) rest.push_back(slots[m]);
      }
      for (const Combo& combo : combos) {
        if (!combo.value) continue;
        rest.push_back(Slot{*combo.value, witness ? "(" + combo.lhs->expr + " " + combo.op + " " +
                                                        combo.rhs->expr + ")"
                                                  : std::string()});
        if (solve_slots(rest, witness)) return true;
        rest.pop_back();
      }
    }
  }
  return false;
}

std::vector<Slot> make_slots(const std::vector<Rational>& numbers, bool with_expr) {
  std::vector<Slot> slots;
  slots.reserve(numbers.size());
  for (const Rational& r : numbers) {
    slots.push_back(Slot{r, with_expr ? rat_to_string(r) : std::string()});
  }
  return slots;
}

} // namespace

std::optional<Expression> brute_force_solve(const std::vector<Rational>& numbers) {
  if (numbers.empty() || numbers.size() > 4) {
    throw std::invalid_argument("brute_force_solve: expected 1-4 numbers");
  }
  std::vector<Slot> slots = make_slots(numbers, true);
  std::string witness;
  if (!solve_slots(slots, &witness)) return std::nullopt;
  Expression out;
  out.text = strip_outer_parens(witness) + " = 24";
  out.operands = sorted(numbers);
  out.value = kTarget;
  return out;
}

std::optional<Expression> brute_force_solve(const Puzzle& puzzle) {
  return brute_force_solve(puzzle_rationals(puzzle));
}

bool solvable(const std::vector<Rational>& numbers) {
  if (numbers.empty()) return false;
  std::vector<Slot> slots = make_slots(numbers, false);
  return solve_slots(slots, nullptr);
}

std::optional<int> classify_failure_step(const Puzzle& puzzle,
                                         const std::vector<std::string>& steps) {
  std::vector<Rational> remaining = puzzle_rationals(puzzle);
  for (size_t i = 0; i < steps.size(); ++i) {
    const bool reachable_before = solvable(remaining);
    StepParse parsed = apply_step(remaining, steps[i]);
    if (!parsed.ok()) return static_cast<int>(i) + 1;
    remaining = parsed.step->remaining;
    if (reachable_before && !solvable(remaining)) return static_cast<int>(i) + 1;
  }
  // A viable chain has exactly 3 accepted steps and ends at 24; anything
  // shorter fails at its first missing step.
  if (steps.size() < 3) return static_cast<int>(steps.size()) + 1;
  if (remaining.size() == 1 && remaining.front() == kTarget) return std::nullopt;
  return 3;
}

std::vector<std::string> extract_step_lines(std::string_view sample) {
  std::vector<std::string> lines;
  size_t pos = 0;
  while (pos <= sample.size()) {
    const size_t nl = sample.find('\n', pos);
    const std::string_view line =
        sample.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    const std::string_view t = trim(line);
    if (t.find("(left") != std::string_view::npos && t.find('=') != std::string_view::npos) {
      lines.emplace_back(t);
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return lines;
}

std::string extract_answer(std::string_view sample) {
  const std::string needle = "answer:";
  std::string haystack(sample);
  std::transform(haystack.begin(), haystack.end(), haystack.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  size_t pos = std::string::npos;
  size_t search = 0;
  while (true) {
    const size_t found = haystack.find(needle, search);
    if (found == std::string::npos) break;
    pos = found;
    search = found + needle.size();
  }
  std::string_view rest = pos == std::string::npos ? sample : sample.substr(pos + needle.size());
  const size_t nl = rest.find('\n');
  std::string_view line = trim(nl == std::string_view::npos ? rest : rest.substr(0, nl));
  if (line.empty()) line = trim(rest);
  return std::string(line);
}

std::string normalize_answer(const std::string& sample) {
  const std::string answer = extract_answer(sample);
  if (auto expr = parse_expression(answer)) {
    return expr->text + " = " + rat_to_string(expr->value);
  }
  return answer;
}

// ---------------------------------------------------------------------------
// Task adapter

Game24Task::Game24Task(Puzzle puzzle, const PromptLibrary& prompts)
    : puzzle_(std::move(puzzle)), prompts_(prompts) {
  if (puzzle_.numbers.size() != 4) {
    throw std::invalid_argument("game24: a puzzle needs exactly 4 numbers");
  }
  for (long long n : puzzle_.numbers) {
    if (n < 1) throw std::invalid_argument("game24: puzzle numbers must be >= 1");
  }
}

std::string Game24Task::task_id() const {
  return "game24:" + (puzzle_.index ? std::to_string(*puzzle_.index) : puzzle_.numbers_text());
}

State Game24Task::root() const {
  State s;
  s.task_id = task_id();
  s.input = puzzle_.numbers_text();
  return s;
}

std::vector<Rational> Game24Task::remaining(const State& state) const {
  std::vector<Rational> remaining = sorted(puzzle_rationals(puzzle_));
  for (const Thought& t : state.thoughts) {
    StepParse parsed = apply_step(remaining, t.text);
    if (!parsed.ok()) {
      throw std::logic_error("game24: state holds a step its own history rejects: " + t.text);
    }
    remaining = parsed.step->remaining;
  }
  return remaining;
}

std::string Game24Task::render_prompt(PromptKind kind, const State& state) const {
  switch (kind) {
    case PromptKind::Io:
      return prompts_.render("game24/io", {{"input", puzzle_.numbers_text()}});
    case PromptKind::Cot:
      return prompts_.render("game24/cot", {{"input", puzzle_.numbers_text()}});
    case PromptKind::Propose:
      return prompts_.render("game24/propose", {{"input", join_rationals(remaining(state))}});
    case PromptKind::Value:
      return prompts_.render("game24/value", {{"input", join_rationals(remaining(state))}});
    case PromptKind::ValueLastStep:
      return prompts_.render("game24/value_last", {{"input", puzzle_.numbers_text()},
                                                   {"answer", synthesize_equation(state)}});
  }
  throw std::invalid_argument("game24: unknown prompt kind");
}

namespace {

struct ProposeSource final : ThoughtSource {
  const Game24Task& task;
  explicit ProposeSource(const Game24Task& task) : task(task) {}

  GenStrategy strategy(const State&) const override {
    return GenStrategy{GenKind::Propose, "game24/propose"};
  }
  std::string prompt(const State& state, int) const override {
    return task.render_prompt(PromptKind::Propose, state);
  }
  std::vector<std::string> parse(const State& state, const std::string& completion,
                                 int) const override {
    const std::vector<Rational> remaining = task.remaining(state);
    std::vector<std::string> out;
    size_t pos = 0;
    while (pos <= completion.size()) {
      const size_t nl = completion.find('\n', pos);
      const std::string line =
          completion.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
      StepParse parsed = apply_step(remaining, line);
      if (parsed.ok()) out.push_back(parsed.step->canonical_text());
      if (nl == std::string::npos) break;
      pos = nl + 1;
    }
    return out;
  }
};

} // namespace

std::vector<Thought> Game24Task::expand(const State& state, const SearchConfig& cfg,
                                        CallContext& ctx) const {
  if (is_terminal(state)) return {};
  ProposeSource source(*this);
  return generate_thoughts(source, state, cfg.k, cfg.temperature, ctx);
}

std::vector<Score> Game24Task::evaluate(const std::vector<State>& states, const SearchConfig& cfg,
                                        CallContext& ctx) const {
  ValuePromptFn prompt = [this](const State& s) {
    return remaining(s).size() <= 1 ? render_prompt(PromptKind::ValueLastStep, s)
                                    : render_prompt(PromptKind::Value, s);
  };
  return evaluate_value(states, cfg.value_samples, prompt, cfg.temperature, ctx);
}

bool Game24Task::is_terminal(const State& state) const { return state.depth() >= 3; }

std::string Game24Task::synthesize_equation(const State& state) const {
  struct Prov {
    Rational value;
    std::string expr;
  };
  std::vector<Prov> slots;
  for (long long n : puzzle_.numbers) {
    slots.push_back(Prov{Rational{n, 1}, std::to_string(n)});
  }
  std::vector<Rational> remaining = sorted(puzzle_rationals(puzzle_));
  for (const Thought& t : state.thoughts) {
    StepParse parsed = apply_step(remaining, t.text);
    if (!parsed.ok()) {
      throw std::logic_error("game24: state holds a step its own history rejects: " + t.text);
    }
    const ArithmeticStep& step = *parsed.step;
    auto take = [&slots](const Rational& v) {
      auto it = std::find_if(slots.begin(), slots.end(),
                             [&v](const Prov& p) { return p.value == v; });
      std::string expr = it->expr;
      slots.erase(it);
      return expr;
    };
    const std::string lhs = take(step.lhs);
    const std::string rhs = take(step.rhs);
    slots.push_back(Prov{step.result, "(" + lhs + " " + step.op + " " + rhs + ")"});
    remaining = step.remaining;
  }
  if (slots.size() != 1) return "";
  return strip_outer_parens(slots.front().expr) + " = " + rat_to_string(slots.front().value);
}

std::string Game24Task::finalize(const State& state, CallContext&) const {
  // The three accepted steps fully determine the answer; no model call needed.
  return synthesize_equation(state);
}

std::optional<bool> Game24Task::judge(const State&, const std::string& output) const {
  return validate_solution(output, puzzle_);
}

SearchConfig Game24Task::default_config() const {
  SearchConfig cfg;
  cfg.method = SearchMethod::Bfs;
  cfg.k = 64; // propose parses every valid line; no practical cap
  cfg.b = 5;
  cfg.T = 3;
  cfg.value_samples = 3;
  return cfg;
}

// ---------------------------------------------------------------------------
// Oracle policies

namespace {

std::vector<Rational> numbers_from_prompt(const std::string& prompt) {
  const std::string needle = "Input:";
  size_t pos = std::string::npos;
  size_t search = 0;
  while (true) {
    const size_t found = prompt.find(needle, search);
    if (found == std::string::npos) break;
    pos = found;
    search = found + needle.size();
  }
  if (pos == std::string::npos) return {};
  const size_t end = prompt.find('\n', pos);
  std::string line = prompt.substr(pos + needle.size(),
                                   end == std::string::npos ? std::string::npos
                                                            : end - pos - needle.size());
  std::vector<Rational> numbers;
  std::istringstream in(line);
  std::string token;
  while (in >> token) {
    if (auto r = parse_rational(token)) numbers.push_back(*r);
  }
  return numbers;
}

std::string answer_from_prompt(const std::string& prompt) {
  const std::string needle = "Answer:";
  const size_t pos = prompt.rfind(needle);
  if (pos == std::string::npos) return "";
  const size_t end = prompt.find('\n', pos);
  return std::string(trim(prompt.substr(pos + needle.size(),
                                        end == std::string::npos ? std::string::npos
                                                                 : end - pos - needle.size())));
}

} // namespace

OraclePolicy oracle_gen_policy() {
  return [](const CompletionRequest& request) -> std::vector<std::string> {
    const std::vector<Rational> numbers = numbers_from_prompt(request.prompt);
    std::string lines;
    if (numbers.size() >= 2) {
      for (size_t i = 0; i + 1 < numbers.size(); ++i) {
        for (size_t j = i + 1; j < numbers.size(); ++j) {
          const Rational a = numbers[i];
          const Rational b = numbers[j];
          const std::pair<std::optional<Rational>, std::array<Rational, 2>> combos[] = {
              {rat_add(a, b), {a, b}}, {rat_sub(a, b), {a, b}}, {rat_sub(b, a), {b, a}},
              {rat_mul(a, b), {a, b}}, {rat_div(a, b), {a, b}}, {rat_div(b, a), {b, a}},
          };
          const char ops[] = {'+', '-', '-', '*', '/', '/'};
          for (size_t c = 0; c < 6; ++c) {
            if (!combos[c].first) continue;
            std::vector<Rational> rest = numbers;
            remove_one(rest, a);
            remove_one(rest, b);
            rest.push_back(*combos[c].first);
            ArithmeticStep step;
            step.lhs = combos[c].second[0];
            step.op = ops[c];
            step.rhs = combos[c].second[1];
            step.result = *combos[c].first;
            step.remaining = sorted(std::move(rest));
            lines += step.canonical_text();
            lines.push_back('\n');
          }
        }
      }
    }
    return {lines};
  };
}

OraclePolicy oracle_eval_policy() {
  return [](const CompletionRequest& request) -> std::vector<std::string> {
    const std::vector<Rational> numbers = numbers_from_prompt(request.prompt);
    const std::string answer = answer_from_prompt(request.prompt);
    bool ok = false;
    if (!answer.empty()) {
      Puzzle puzzle;
      for (const Rational& r : numbers) puzzle.numbers.push_back(r.num);
      ok = numbers.size() == 4 && validate_solution(answer, puzzle);
    } else {
      ok = !numbers.empty() && solvable(numbers);
    }
    return {ok ? "sure" : "impossible"};
  };
}

} // namespace tot::game24
