#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>

#include "tot/backends.hpp"
#include "tot/thought_engine.hpp"

using namespace tot;

namespace {

State state_of(const std::string& input) {
  State s;
  s.task_id = "test";
  s.input = input;
  return s;
}

State with_thought(State s, const std::string& text) {
  return s.child(Thought{text, 0, GenKind::Sample, 0});
}

// Minimal task hooks: propose splits lines, sample keeps the completion.
struct LineSource final : ThoughtSource {
  GenKind kind;
  explicit LineSource(GenKind kind) : kind(kind) {}

  GenStrategy strategy(const State&) const override { return {kind, "test/template"}; }
  std::string prompt(const State& s, int) const override { return "expand: " + s.render(); }
  std::vector<std::string> parse(const State&, const std::string& completion,
                                 int) const override {
    if (kind == GenKind::Sample || kind == GenKind::Refine) return {completion};
    std::vector<std::string> lines;
    size_t pos = 0;
    while (pos <= completion.size()) {
      const size_t nl = completion.find('\n', pos);
      std::string line = completion.substr(pos, nl == std::string::npos ? std::string::npos
                                                                        : nl - pos);
      if (line.find("ok") != std::string::npos) lines.push_back(line); // task validator
      if (nl == std::string::npos) break;
      pos = nl + 1;
    }
    return lines;
  }
};

} // namespace

TEST_CASE("parse_value_label") {
  CHECK(parse_value_label("reasoning...\nsure")->label == ValueLabelKind::Sure);
  CHECK(parse_value_label("the numbers are too big\nimpossible")->label ==
        ValueLabelKind::Impossible);
  CHECK(parse_value_label("it is likely")->label == ValueLabelKind::Maybe);
  CHECK(parse_value_label("MAYBE")->label == ValueLabelKind::Maybe);
  CHECK(parse_value_label("Sure.")->label == ValueLabelKind::Sure);
  // Trailing blank lines are skipped.
  CHECK(parse_value_label("sure\n\n  \n")->label == ValueLabelKind::Sure);
  // Word boundaries: "unsure" is not "sure".
  CHECK_FALSE(parse_value_label("unsure").has_value());
  // Multiple distinct labels on the final line fail.
  CHECK_FALSE(parse_value_label("sure or impossible").has_value());
  CHECK_FALSE(parse_value_label("no verdict here").has_value());
  CHECK_FALSE(parse_value_label("").has_value());
}

TEST_CASE("parse_vote") {
  CHECK(parse_vote("analysis...\nThe best choice is 4", 5) == 4);
  CHECK(parse_vote("The best choice is 9", 5) == std::nullopt);
  CHECK(parse_vote("no conclusion", 5) == std::nullopt);
  // Last occurrence wins.
  CHECK(parse_vote("The best choice is 1... wait. The best choice is 2", 5) == 2);
  CHECK(parse_vote("the BEST CHOICE IS (3)", 5) == 3);
  CHECK(parse_vote("The best choice is zero", 5) == std::nullopt);
  CHECK(parse_vote("The best choice is 0", 5) == std::nullopt);
}

TEST_CASE("label mapping dominance: one sure beats nineteen maybes") {
  CHECK(label_value(ValueLabelKind::Sure) == doctest::Approx(20.0));
  CHECK(label_value(ValueLabelKind::Maybe) == doctest::Approx(1.0));
  CHECK(label_value(ValueLabelKind::Impossible) == doctest::Approx(0.001));
  for (int maybes = 0; maybes <= 19; ++maybes) {
    CHECK(label_value(ValueLabelKind::Sure) > maybes * label_value(ValueLabelKind::Maybe));
  }
}

TEST_CASE("evaluate_value maps and sums labels per state") {
  auto gen = std::make_shared<ScriptedBackend>();
  auto eval = std::make_shared<ScriptedBackend>();
  eval->add("state-a", std::vector<std::string>{"sure", "maybe", "impossible"});
  eval->add("state-b", std::vector<std::string>{"garbage", "garbage", "garbage"});
  CostLedger ledger;
  CallContext ctx{gen.get(), eval.get(), &ledger};

  std::vector<State> states{state_of("state-a"), state_of("state-b")};
  auto scores = evaluate_value(states, 3, [](const State& s) { return "value " + s.input; },
                               0.7, ctx);
  REQUIRE(scores.size() == 2);
  CHECK(scores[0].value == doctest::Approx(21.001));
  CHECK(scores[0].samples_used == 3);
  CHECK(scores[0].parse_failures == 0);
  CHECK(scores[1].value == doctest::Approx(0.0));
  CHECK(scores[1].samples_used == 0);
  CHECK(scores[1].parse_failures == 3);
  CHECK(ledger.completion_tokens > 0);
}

TEST_CASE("value aggregation is permutation-invariant in the samples") {
  std::vector<std::string> labels{"sure", "maybe", "impossible", "maybe"};
  std::mt19937 rng(3);
  double reference = -1.0;
  for (int perm = 0; perm < 6; ++perm) {
    std::shuffle(labels.begin(), labels.end(), rng);
    auto eval = std::make_shared<ScriptedBackend>();
    eval->add("state", labels);
    CostLedger ledger;
    CallContext ctx{eval.get(), eval.get(), &ledger};
    std::vector<State> states{state_of("state")};
    auto scores = evaluate_value(states, 4, [](const State&) { return "value state"; }, 0.7, ctx);
    if (reference < 0) {
      reference = scores[0].value;
    } else {
      CHECK(scores[0].value == doctest::Approx(reference));
    }
  }
}

TEST_CASE("evaluate_vote tallies ballots and majority with low-index ties") {
  {
    auto eval = std::make_shared<ScriptedBackend>();
    eval->add("vote", std::vector<std::string>{"The best choice is 2", "The best choice is 2",
                                               "The best choice is 5", "The best choice is 3",
                                               "The best choice is 2"});
    CostLedger ledger;
    CallContext ctx{eval.get(), eval.get(), &ledger};
    std::vector<State> states;
    for (int i = 0; i < 5; ++i) states.push_back(state_of("cand" + std::to_string(i)));
    auto result = evaluate_vote(states, 5, [](std::span<const State>) { return "vote"; }, 0.7, ctx);
    CHECK(result.tally.counts == std::vector<int>{0, 3, 1, 0, 1});
    CHECK(result.tally.winner() == 1);
    CHECK(result.scores[1].value == doctest::Approx(3.0));
    CHECK(result.tally.discarded == 0);
  }
  {
    // Votes [1, 2] tie; candidate 1 wins by lowest index.
    auto eval = std::make_shared<ScriptedBackend>();
    eval->add("vote", std::vector<std::string>{"The best choice is 1", "The best choice is 2"});
    CostLedger ledger;
    CallContext ctx{eval.get(), eval.get(), &ledger};
    std::vector<State> states{state_of("a"), state_of("b")};
    auto result = evaluate_vote(states, 2, [](std::span<const State>) { return "vote"; }, 0.7, ctx);
    CHECK(result.tally.winner() == 0);
  }
  {
    // Garbage ballots are discarded, not counted.
    auto eval = std::make_shared<ScriptedBackend>();
    eval->add("vote", std::vector<std::string>{"The best choice is 3", "garbage",
                                               "The best choice is 3"});
    CostLedger ledger;
    CallContext ctx{eval.get(), eval.get(), &ledger};
    std::vector<State> states;
    for (int i = 0; i < 5; ++i) states.push_back(state_of("cand" + std::to_string(i)));
    auto result = evaluate_vote(states, 3, [](std::span<const State>) { return "vote"; }, 0.7, ctx);
    CHECK(result.tally.winner() == 2);
    CHECK(result.tally.discarded == 1);
    int total = result.tally.discarded;
    for (int c : result.tally.counts) total += c;
    CHECK(total == 3);
  }
  {
    // All ballots unparseable: all-zero scores, winner defaults to index 0.
    auto eval = std::make_shared<ScriptedBackend>();
    eval->add("vote", std::vector<std::string>{"x", "y"});
    CostLedger ledger;
    CallContext ctx{eval.get(), eval.get(), &ledger};
    std::vector<State> states{state_of("a"), state_of("b")};
    auto result = evaluate_vote(states, 2, [](std::span<const State>) { return "vote"; }, 0.7, ctx);
    CHECK(result.tally.winner() == 0);
    CHECK(result.scores[0].value == doctest::Approx(0.0));
    CHECK(result.tally.discarded == 2);
  }
}

TEST_CASE("generate_thoughts sample strategy asks for k completions") {
  auto gen = std::make_shared<ScriptedBackend>();
  gen->add("expand", std::vector<std::string>{"plan one", "plan two", "plan three"});
  CostLedger ledger;
  CallContext ctx{gen.get(), gen.get(), &ledger};
  LineSource source(GenKind::Sample);
  auto thoughts = generate_thoughts(source, state_of("expand me"), 3, 0.7, ctx);
  REQUIRE(thoughts.size() == 3);
  CHECK(thoughts[0].text == "plan one");
  CHECK(thoughts[0].strategy == GenKind::Sample);
  CHECK(thoughts[0].candidate_index == 0);
  CHECK(thoughts[2].candidate_index == 2);
  CHECK(thoughts[0].step_index == 1);
}

TEST_CASE("generate_thoughts propose strategy filters and caps candidates") {
  auto gen = std::make_shared<ScriptedBackend>();
  gen->add("expand", "ok line 1\ngarbage\nok line 2\nnoise\nok line 3");
  CostLedger ledger;
  CallContext ctx{gen.get(), gen.get(), &ledger};
  LineSource source(GenKind::Propose);
  auto thoughts = generate_thoughts(source, state_of("expand me"), 5, 0.7, ctx);
  REQUIRE(thoughts.size() == 3); // 3 valid lines out of 5
  CHECK(thoughts[0].text == "ok line 1");
  CHECK(thoughts[1].text == "ok line 2");

  // k caps the parse.
  gen->add("expand", "ok a\nok b\nok c\nok d");
  auto capped = generate_thoughts(source, state_of("expand me"), 2, 0.7, ctx);
  CHECK(capped.size() == 2);
}

TEST_CASE("generate_thoughts refine requires a prior attempt") {
  auto gen = std::make_shared<ScriptedBackend>();
  gen->add("expand", "refined text");
  CostLedger ledger;
  CallContext ctx{gen.get(), gen.get(), &ledger};
  LineSource source(GenKind::Refine);
  CHECK_THROWS_AS(generate_thoughts(source, state_of("expand me"), 1, 0.7, ctx),
                  std::invalid_argument);
  auto thoughts =
      generate_thoughts(source, with_thought(state_of("expand me"), "first try"), 1, 0.7, ctx);
  REQUIRE(thoughts.size() == 1);
  CHECK(thoughts[0].text == "refined text");
  CHECK(thoughts[0].strategy == GenKind::Refine);
}

TEST_CASE("whitespace-only candidates are dropped") {
  auto gen = std::make_shared<ScriptedBackend>();
  gen->add("expand", std::vector<std::string>{"   \n  ", "real plan"});
  CostLedger ledger;
  CallContext ctx{gen.get(), gen.get(), &ledger};
  LineSource source(GenKind::Sample);
  auto thoughts = generate_thoughts(source, state_of("expand me"), 2, 0.7, ctx);
  REQUIRE(thoughts.size() == 1);
  CHECK(thoughts[0].text == "real plan");
}
