#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "tot/game24.hpp"
#include "tot/prompts.hpp"

using namespace tot;
using namespace tot::game24;

namespace {

std::vector<Rational> rats(std::initializer_list<long long> values) {
  std::vector<Rational> out;
  for (long long v : values) out.push_back(Rational{v, 1});
  return out;
}

Puzzle puzzle(std::initializer_list<long long> values) {
  Puzzle p;
  p.numbers.assign(values);
  return p;
}

const PromptLibrary& prompts() {
  static PromptLibrary lib{TOT_PROMPT_SOURCE_DIR};
  return lib;
}

} // namespace

TEST_CASE("apply_step accepts the worked chain") {
  auto step = apply_step(rats({4, 9, 10, 13}), "13 - 9 = 4 (left: 4 4 10)");
  REQUIRE(step.ok());
  CHECK(step.step->remaining == rats({4, 4, 10}));
  CHECK(step.step->canonical_text() == "13 - 9 = 4 (left: 4 4 10)");

  step = apply_step(rats({4, 6}), "4 * 6 = 24 (left: 24)");
  REQUIRE(step.ok());
  CHECK(step.step->remaining == rats({24}));
}

TEST_CASE("apply_step distinct rejection reasons") {
  auto mismatch = apply_step(rats({4, 9, 10, 13}), "13 - 9 = 5 (left: 5 4 10)");
  CHECK_FALSE(mismatch.ok());
  CHECK(mismatch.error == StepError::ArithmeticMismatch);

  auto missing = apply_step(rats({4, 6}), "4 + 9 = 13 (left: 6 13)");
  CHECK_FALSE(missing.ok());
  CHECK(missing.error == StepError::OperandNotAvailable);

  auto malformed = apply_step(rats({4, 6}), "what is this");
  CHECK_FALSE(malformed.ok());
  CHECK(malformed.error == StepError::MalformedText);

  // 4 - 4 leaves a zero that the next step divides by.
  auto zero_step = apply_step(rats({4, 4, 6}), "4 - 4 = 0 (left: 0 6)");
  REQUIRE(zero_step.ok());
  auto div_zero = apply_step(zero_step.step->remaining, "6 / 0 = 0 (left: 0)");
  CHECK_FALSE(div_zero.ok());
  CHECK(div_zero.error == StepError::DivisionByZero);
}

TEST_CASE("apply_step handles fractional operands and loose spacing") {
  // 8 / (3 - 8/3) = 24 from {3,3,8,8}, step by step.
  auto step = apply_step(rats({3, 3, 8, 8}), "8 / 3 = 8/3 (left: 8/3 3 8)");
  REQUIRE(step.ok());
  CHECK(step.step->remaining ==
        std::vector<Rational>{*make_rational(8, 3), Rational{3, 1}, Rational{8, 1}});

  auto next = apply_step(step.step->remaining, "3 - 8/3 = 1/3 (left: 1/3 8)");
  REQUIRE(next.ok());
  CHECK(next.step->remaining == std::vector<Rational>{*make_rational(1, 3), Rational{8, 1}});

  auto last = apply_step(next.step->remaining, "8 / 1/3 = 24 (left: 24)");
  REQUIRE(last.ok());
  CHECK(last.step->remaining == rats({24}));

  auto unspaced = apply_step(rats({4, 9, 10, 13}), "13-9=4 (left: 4 4 10)");
  REQUIRE(unspaced.ok());
  CHECK(unspaced.step->canonical_text() == "13 - 9 = 4 (left: 4 4 10)");

  // The recomputed remaining set wins over a wrong annotation.
  auto annotated = apply_step(rats({4, 9, 10, 13}), "13 - 9 = 4 (left: 9 9 9)");
  REQUIRE(annotated.ok());
  CHECK(annotated.step->remaining == rats({4, 4, 10}));
}

TEST_CASE("apply_step decreases the multiset size by one") {
  std::vector<Rational> remaining = rats({4, 9, 10, 13});
  const char* chain[] = {"13 - 9 = 4 (left: 4 4 10)", "10 - 4 = 6 (left: 4 6)",
                         "4 * 6 = 24 (left: 24)"};
  size_t expected = 4;
  for (const char* text : chain) {
    auto step = apply_step(remaining, text);
    REQUIRE(step.ok());
    --expected;
    CHECK(step.step->remaining.size() == expected);
    remaining = step.step->remaining;
  }
  CHECK(remaining == rats({24}));
}

TEST_CASE("validate_solution exact semantics") {
  CHECK(validate_solution("(10 - 4) * (13 - 9) = 24", puzzle({4, 9, 10, 13})));
  CHECK(validate_solution("(10 - 4) * (13 - 9)", puzzle({4, 9, 10, 13})));
  CHECK_FALSE(validate_solution("(10 - 4) * (13 - 9) = 24", puzzle({4, 9, 10, 10})));
  CHECK_FALSE(validate_solution("4 * 6 = 24", puzzle({4, 9, 10, 13})));
  CHECK_FALSE(validate_solution("(10 - 4) * (13 - 9) = 25", puzzle({4, 9, 10, 13})));
  CHECK_FALSE(validate_solution("garbage", puzzle({4, 9, 10, 13})));
  // Exact rational arithmetic: 8 / (3 - 8/3) = 24.
  CHECK(validate_solution("8 / (3 - 8 / 3) = 24", puzzle({3, 3, 8, 8})));
  CHECK_FALSE(validate_solution("8 / (3 - 8 / 3) = 24", puzzle({3, 8, 8, 8})));
}

TEST_CASE("brute force facts") {
  CHECK(brute_force_solve(rats({4, 9, 10, 13})).has_value());
  CHECK(brute_force_solve(rats({5, 5, 14})).has_value());
  CHECK(brute_force_solve(rats({24, 1, 1, 1})).has_value());
  CHECK_FALSE(brute_force_solve(rats({1, 2, 3})).has_value());
  CHECK_FALSE(brute_force_solve(rats({10, 13, 13})).has_value());
  CHECK(solvable(rats({24})));
  CHECK_FALSE(solvable(rats({23})));
}

TEST_CASE("witnesses validate against their own puzzle") {
  auto witness = brute_force_solve(rats({4, 9, 10, 13}));
  REQUIRE(witness.has_value());
  CHECK(validate_solution(witness->text, puzzle({4, 9, 10, 13})));
}

TEST_CASE("solvability is order-invariant") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Rational> numbers;
    for (int i = 0; i < 4; ++i) numbers.push_back(Rational{1 + (long long)(rng() % 13), 1});
    const bool base = solvable(numbers);
    std::vector<Rational> shuffled = numbers;
    for (int perm = 0; perm < 5; ++perm) {
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      CHECK(solvable(shuffled) == base);
    }
  }
}

TEST_CASE("round trip over random solvable puzzles") {
  std::mt19937 rng(11);
  int found = 0;
  while (found < 200) {
    Puzzle p;
    for (int i = 0; i < 4; ++i) p.numbers.push_back(1 + (long long)(rng() % 13));
    auto witness = brute_force_solve(p);
    if (!witness) {
      continue;
    }
    ++found;
    CHECK(validate_solution(witness->text, p));
  }
}

TEST_CASE("classify_failure_step") {
  const Puzzle p = puzzle({4, 9, 10, 13});
  CHECK(classify_failure_step(p, {"4 + 9 = 13 (left: 10 13 13)"}) == 1);
  CHECK(classify_failure_step(p, {"13 - 9 = 4 (left: 4 4 10)", "10 - 4 = 6 (left: 4 6)",
                                  "4 * 6 = 24 (left: 24)"}) == std::nullopt);
  CHECK(classify_failure_step(p, {"13 - 9 = 4 (left: 4 4 10)", "4 + 4 = 8 (left: 8 10)"}) == 2);
  // Invalid first step.
  CHECK(classify_failure_step(p, {"13 - 9 = 5 (left: 5 4 10)"}) == 1);
  // Incomplete but viable chains fail at the first missing step.
  CHECK(classify_failure_step(p, {"13 - 9 = 4 (left: 4 4 10)"}) == 2);
  CHECK(classify_failure_step(p, {}) == 1);
}

TEST_CASE("extract_step_lines and extract_answer") {
  const std::string sample =
      "Steps:\n13 - 9 = 4 (left: 4 4 10)\n10 - 4 = 6 (left: 4 6)\n4 * 6 = 24 (left: 24)\n"
      "Answer: (13 - 9) * (10 - 4) = 24\n";
  auto lines = extract_step_lines(sample);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "13 - 9 = 4 (left: 4 4 10)");
  CHECK(extract_answer(sample) == "(13 - 9) * (10 - 4) = 24");
  CHECK(extract_answer("no marker here") == "no marker here");
}

TEST_CASE("normalize_answer canonicalizes textual variants") {
  const std::string a = normalize_answer("Answer: (10-4)*(13-9)=24");
  const std::string b = normalize_answer("Answer: (10 - 4) * (13 - 9) = 24");
  CHECK(a == b);
  CHECK(normalize_answer("Answer: gibberish") == "gibberish");
}

TEST_CASE("prompt rendering") {
  Game24Task task(puzzle({4, 9, 10, 13}), prompts());
  const State root = task.root();

  const std::string propose = task.render_prompt(PromptKind::Propose, root);
  CHECK(propose.find("4 9 10 13") != std::string::npos);

  State mid = root.child(Thought{"13 - 9 = 4 (left: 4 4 10)", 1, GenKind::Propose, 0});
  const std::string propose_mid = task.render_prompt(PromptKind::Propose, mid);
  CHECK(propose_mid.find("4 4 10") != std::string::npos);

  const std::string io = task.render_prompt(PromptKind::Io, root);
  // 5 worked examples plus the input itself.
  size_t count = 0, pos = 0;
  while ((pos = io.find("Input:", pos)) != std::string::npos) {
    ++count;
    pos += 6;
  }
  CHECK(count == 6);

  const std::string cot = task.render_prompt(PromptKind::Cot, root);
  CHECK(cot.find("(left:") != std::string::npos);
  CHECK_THROWS(task.render_prompt(static_cast<PromptKind>(99), root));
}

TEST_CASE("task remaining/terminal/finalize") {
  Game24Task task(puzzle({4, 9, 10, 13}), prompts());
  State s = task.root();
  CHECK(task.remaining(s) == rats({4, 9, 10, 13}));
  s = s.child(Thought{"13 - 9 = 4 (left: 4 4 10)", 1, GenKind::Propose, 0});
  s = s.child(Thought{"10 - 4 = 6 (left: 4 6)", 2, GenKind::Propose, 0});
  CHECK_FALSE(task.is_terminal(s));
  s = s.child(Thought{"4 * 6 = 24 (left: 24)", 3, GenKind::Propose, 0});
  CHECK(task.is_terminal(s));
  CHECK(task.remaining(s) == rats({24}));

  CallContext ctx{};
  const std::string equation = task.finalize(s, ctx);
  CHECK(validate_solution(equation, task.puzzle()));
  CHECK(task.judge(s, equation) == true);
}

TEST_CASE("oracle generator proposes exactly the valid children") {
  auto policy = oracle_gen_policy();
  CompletionRequest request;
  request.prompt = prompts().render("game24/propose", {{"input", "1 1 4"}});
  request.n = 1;
  auto texts = policy(request);
  REQUIRE(texts.size() == 1);

  std::set<std::string> lines;
  std::istringstream in(texts[0]);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto step = apply_step(rats({1, 1, 4}), line);
    REQUIRE(step.ok());
    lines.insert(line);
  }
  CHECK(lines.count("1 + 1 = 2 (left: 2 4)") == 1);
  CHECK(lines.count("1 * 4 = 4 (left: 1 4)") == 1);
  CHECK(lines.count("4 - 1 = 3 (left: 1 3)") == 1);
  CHECK(lines.count("1 / 4 = 1/4 (left: 1/4 1)") == 1);
}

TEST_CASE("oracle evaluator labels by reachability and validation") {
  auto policy = oracle_eval_policy();
  CompletionRequest request;
  request.prompt = prompts().render("game24/value", {{"input", "5 5 14"}});
  CHECK(policy(request).front() == "sure");
  request.prompt = prompts().render("game24/value", {{"input", "1 2 3"}});
  CHECK(policy(request).front() == "impossible");
  request.prompt = prompts().render(
      "game24/value_last",
      {{"input", "4 9 10 13"}, {"answer", "(10 - 4) * (13 - 9) = 24"}});
  CHECK(policy(request).front() == "sure");
  request.prompt = prompts().render(
      "game24/value_last", {{"input", "4 9 10 13"}, {"answer", "4 * 6 = 24"}});
  CHECK(policy(request).front() == "impossible");
}
