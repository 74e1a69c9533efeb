#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "tot/backends.hpp"
#include "tot/writing.hpp"

using namespace tot;
using namespace tot::writing;

namespace {

const PromptLibrary& prompts() {
  static PromptLibrary lib{TOT_PROMPT_SOURCE_DIR};
  return lib;
}

WritingTask task4() {
  return WritingTask{{"The rain had stopped.", "He sold the car.", "Nothing moved.",
                      "She laughed at last."}};
}

std::string passage_for(const WritingTask& t, const std::string& tag) {
  std::string out;
  for (size_t i = 0; i < t.endings.size(); ++i) {
    out += "Paragraph " + std::to_string(i + 1) + " (" + tag + "). " + t.endings[i];
    if (i + 1 < t.endings.size()) out += "\n\n";
  }
  return out;
}

} // namespace

TEST_CASE("passage split on blank lines") {
  auto p = Passage::split("one line\nsame paragraph\n\n  \nsecond\n\nthird");
  REQUIRE(p.paragraphs.size() == 3);
  CHECK(p.paragraphs[0] == "one line\nsame paragraph");
  CHECK(p.paragraphs[1] == "second");
}

TEST_CASE("check_constraints") {
  const WritingTask t = task4();
  CHECK(check_constraints(Passage::split(passage_for(t, "x")), t));

  // Wrong paragraph count.
  CHECK_FALSE(check_constraints(Passage::split("a\n\nb\n\nc"), t));

  // Trailing whitespace and case differences are tolerated.
  std::string sloppy = passage_for(t, "y");
  sloppy += "   ";
  for (char& c : sloppy) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  CHECK(check_constraints(Passage::split(sloppy), t));

  // A paragraph that does not end with its sentence fails.
  std::string wrong = passage_for(t, "z") + " And then some more.";
  CHECK_FALSE(check_constraints(Passage::split(wrong), t));

  // Paragraph-internal edits that keep the final sentence stay true.
  std::string edited = passage_for(t, "completely different body text");
  CHECK(check_constraints(Passage::split(edited), t));
}

TEST_CASE("parse_score takes the last in-range number on the final line") {
  CHECK(parse_score("analysis\nThus the coherency score is 8") == 8.0);
  CHECK(parse_score("Thus the coherency score is 7.5") == 7.5);
  CHECK(parse_score("scores 3 then 9") == 9.0);
  CHECK(parse_score("the score is 42") == std::nullopt); // out of range
  CHECK(parse_score("no numbers") == std::nullopt);
  CHECK(parse_score("") == std::nullopt);
  CHECK(parse_score("early 5\nfinal line without digits") == std::nullopt);
}

TEST_CASE("score_coherency averages parsed samples and drops garbage") {
  auto eval = std::make_shared<ScriptedBackend>();
  eval->add("coherency score", std::vector<std::string>{
      "Thus the coherency score is 7", "Thus the coherency score is 8",
      "Thus the coherency score is 7", "Thus the coherency score is 8",
      "Thus the coherency score is 8"});
  CostLedger ledger;
  CallContext ctx{eval.get(), eval.get(), &ledger};
  auto score = score_coherency("a passage", 5, 0.7, prompts(), ctx);
  REQUIRE(score.has_value());
  CHECK(score->mean == doctest::Approx(7.6));
  CHECK(score->samples.size() == 5);

  auto eval2 = std::make_shared<ScriptedBackend>();
  eval2->add("coherency score", std::vector<std::string>{"Thus the coherency score is 10"});
  CallContext ctx2{eval2.get(), eval2.get(), &ledger};
  auto single = score_coherency("a passage", 1, 0.7, prompts(), ctx2);
  REQUIRE(single.has_value());
  CHECK(single->mean == doctest::Approx(10.0));
  CHECK(single->stddev == doctest::Approx(0.0));

  auto eval3 = std::make_shared<ScriptedBackend>();
  eval3->add("coherency score", std::vector<std::string>{"junk", "more junk"});
  CallContext ctx3{eval3.get(), eval3.get(), &ledger};
  CHECK_FALSE(score_coherency("a passage", 2, 0.7, prompts(), ctx3).has_value());
}

TEST_CASE("plan and passage extraction") {
  CHECK(extract_plan("Plan:\n1. do a\n2. do b\n\nPassage:\nbody") == "1. do a\n2. do b");
  CHECK(extract_passage("Plan:\nstuff\n\nPassage:\nthe body\nrest") == "the body\nrest");
  CHECK(extract_passage("just text") == "just text");
  CHECK(extract_plan("just text") == "just text");
}

TEST_CASE("run_writing_tot emits the passage conditioned on the majority plan") {
  const WritingTask t = task4();
  auto gen = std::make_shared<ScriptedBackend>();
  auto eval = std::make_shared<ScriptedBackend>();

  // 5 plans; votes pick plan 3.
  gen->add("Make a brief plan", std::vector<std::string>{
      "Plan:\nplan one", "Plan:\nplan two", "Plan:\nplan three", "Plan:\nplan four",
      "Plan:\nplan five"});
  eval->add("most promising", std::vector<std::string>{
      "The best choice is 3", "The best choice is 3", "The best choice is 1",
      "The best choice is 3", "The best choice is 2"});
  // 5 passages conditioned on the winning plan; votes pick passage 2.
  gen->add("plan three", std::vector<std::string>{
      "Passage:\n" + passage_for(t, "p1"), "Passage:\n" + passage_for(t, "p2"),
      "Passage:\n" + passage_for(t, "p3"), "Passage:\n" + passage_for(t, "p4"),
      "Passage:\n" + passage_for(t, "p5")});
  eval->add("most promising", std::vector<std::string>{
      "The best choice is 2", "The best choice is 5", "The best choice is 2",
      "The best choice is 2", "garbage"});

  SearchConfig cfg;
  cfg.k = 5;
  cfg.b = 1;
  cfg.T = 2;
  cfg.vote_samples = 5;
  auto outcome = run_writing_tot(t, *gen, *eval, cfg, prompts());

  CHECK(outcome.success == true);
  CHECK(outcome.output == passage_for(t, "p2"));
  CHECK(outcome.final_state.thoughts[0].text == "plan three");

  // Exactly 2 generation batches and 2 vote batches.
  int expands = 0, evaluates = 0, selects_depth1 = 0;
  for (const auto& e : outcome.trajectory) {
    if (e.kind == EventKind::Expand) ++expands;
    if (e.kind == EventKind::Evaluate) ++evaluates;
    if (e.kind == EventKind::Select && e.depth == 1) ++selects_depth1;
  }
  CHECK(expands == 2);
  CHECK(evaluates == 10); // 5 plan states + 5 passage states, one event each
  CHECK(selects_depth1 == 1); // b=1: one plan survives
}

TEST_CASE("the writing vote prompt carries the comparison instruction") {
  const std::string text = prompts().get("writing/vote");
  CHECK(text.find("analyze choices") != std::string::npos);
  CHECK(text.find("most promising") != std::string::npos);
  CHECK(text.find("The best choice is {s}") != std::string::npos);
}

TEST_CASE("iterative refine stops when the model declares coherence") {
  const WritingTask t = task4();
  auto gen = std::make_shared<ScriptedBackend>();
  gen->add("end sentence of each paragraph", passage_for(t, "v1")); // initial io sample
  gen->add("refined passage", "Passage:\n" + passage_for(t, "v2"));
  gen->add("refined passage", "perfectly coherent");

  CostLedger ledger;
  auto result = iterative_refine(t, *gen, 5, 0.7, prompts(), ledger);
  CHECK(result.judged_coherent);
  CHECK(result.rounds == 2);
  REQUIRE(result.attempts.size() == 2);
  CHECK(result.final_passage == passage_for(t, "v2"));
}

TEST_CASE("iterative refine respects the round cap") {
  const WritingTask t = task4();
  auto gen = std::make_shared<ScriptedBackend>();
  gen->add("end sentence of each paragraph", passage_for(t, "v1"));
  for (int i = 0; i < 3; ++i) {
    gen->add("refined passage", "Passage:\n" + passage_for(t, "r" + std::to_string(i)));
  }
  CostLedger ledger;
  auto result = iterative_refine(t, *gen, 3, 0.7, prompts(), ledger);
  CHECK_FALSE(result.judged_coherent);
  CHECK(result.rounds == 3);
  CHECK(result.attempts.size() == 4); // initial + 3 refinements
  CHECK(result.final_passage == passage_for(t, "r2"));
}
