#include "tot/writing.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace tot::writing {
namespace {

std::string_view trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Lowercase with whitespace runs collapsed to single spaces.
std::string squash(std::string_view s) {
  std::string out;
  bool in_space = false;
  for (char raw : trim(s)) {
    const unsigned char c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) out.push_back(' ');
    in_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

bool ends_with(const std::string& text, const std::string& suffix) {
  return text.size() >= suffix.size() &&
         text.compare(text.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string section_after(std::string_view text, std::string_view marker) {
  std::string haystack(text);
  std::string lower_haystack = haystack;
  std::transform(lower_haystack.begin(), lower_haystack.end(), lower_haystack.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  const size_t pos = lower_haystack.rfind(std::string(marker));
  if (pos == std::string::npos) return "";
  return std::string(trim(haystack.substr(pos + marker.size())));
}

} // namespace

std::string WritingTask::endings_text() const {
  std::ostringstream s;
  for (size_t i = 0; i < endings.size(); ++i) {
    s << (i + 1) << ". " << endings[i];
    if (i + 1 < endings.size()) s << '\n';
  }
  return s.str();
}

Passage Passage::split(std::string_view text) {
  Passage out;
  std::string current;
  size_t pos = 0;
  auto flush = [&out, &current]() {
    const std::string_view t = trim(current);
    if (!t.empty()) out.paragraphs.emplace_back(t);
    current.clear();
  };
  while (pos <= text.size()) {
    const size_t nl = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    if (trim(line).empty()) {
      flush();
    } else {
      if (!current.empty()) current.push_back('\n');
      current.append(line);
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  flush();
  return out;
}

bool check_constraints(const Passage& passage, const WritingTask& task) {
  if (passage.paragraphs.size() != task.endings.size()) return false;
  for (size_t i = 0; i < task.endings.size(); ++i) {
    const std::string paragraph = squash(passage.paragraphs[i]);
    std::string ending = squash(task.endings[i]);
    if (ending.empty()) return false;
    if (!ends_with(paragraph, ending)) return false;
  }
  return true;
}

std::optional<double> parse_score(std::string_view response) {
  // Last non-empty line.
  std::string_view text = trim(response);
  const size_t nl = text.rfind('\n');
  std::string_view line = nl == std::string_view::npos ? text : trim(text.substr(nl + 1));
  if (line.empty()) return std::nullopt;

  std::optional<double> found;
  size_t i = 0;
  while (i < line.size()) {
    if (std::isdigit(static_cast<unsigned char>(line[i]))) {
      size_t end = i;
      bool dot = false;
      while (end < line.size() &&
             (std::isdigit(static_cast<unsigned char>(line[end])) ||
              (line[end] == '.' && !dot && (dot = true)))) {
        ++end;
      }
      const double value = std::strtod(std::string(line.substr(i, end - i)).c_str(), nullptr);
      if (value >= 1.0 && value <= 10.0) found = value;
      i = end;
    } else {
      ++i;
    }
  }
  return found;
}

std::optional<CoherencyScore> score_coherency(const std::string& passage_text, int m,
                                              double temperature, const PromptLibrary& prompts,
                                              CallContext& ctx) {
  CompletionRequest request;
  request.prompt = prompts.render("writing/score", {{"passage", passage_text}});
  request.n = m;
  request.temperature = temperature;
  const CompletionResponse response = ctx.call_eval(request);

  CoherencyScore score;
  for (const std::string& text : response.texts) {
    if (auto v = parse_score(text)) score.samples.push_back(*v);
  }
  if (score.samples.empty()) return std::nullopt;
  double sum = 0.0;
  for (double v : score.samples) sum += v;
  score.mean = sum / static_cast<double>(score.samples.size());
  double var = 0.0;
  for (double v : score.samples) var += (v - score.mean) * (v - score.mean);
  score.stddev = std::sqrt(var / static_cast<double>(score.samples.size()));
  return score;
}

std::string extract_passage(std::string_view completion) {
  const std::string section = section_after(completion, "passage:");
  return section.empty() ? std::string(trim(completion)) : section;
}

std::string extract_plan(std::string_view completion) {
  std::string haystack(completion);
  std::string lower_haystack = haystack;
  std::transform(lower_haystack.begin(), lower_haystack.end(), lower_haystack.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  const size_t plan = lower_haystack.find("plan:");
  if (plan == std::string::npos) return std::string(trim(completion));
  const size_t passage = lower_haystack.find("passage:", plan);
  const size_t begin = plan + 5;
  const size_t len = passage == std::string::npos ? std::string::npos : passage - begin;
  return std::string(trim(haystack.substr(begin, len)));
}

// ---------------------------------------------------------------------------
// Task adapter

WritingTaskAdapter::WritingTaskAdapter(WritingTask task, const PromptLibrary& prompts,
                                       int item_index)
    : task_(std::move(task)), prompts_(prompts), item_index_(item_index) {
  for (const std::string& e : task_.endings) {
    if (trim(e).empty()) throw std::invalid_argument("writing: endings must be non-empty");
  }
}

std::string WritingTaskAdapter::task_id() const {
  return "writing:" + std::to_string(item_index_);
}

State WritingTaskAdapter::root() const {
  State s;
  s.task_id = task_id();
  s.input = task_.endings_text();
  return s;
}

namespace {

struct WritingSource final : ThoughtSource {
  const WritingTask& task;
  const PromptLibrary& prompts;
  WritingSource(const WritingTask& task, const PromptLibrary& prompts)
      : task(task), prompts(prompts) {}

  GenStrategy strategy(const State& state) const override {
    return GenStrategy{GenKind::Sample,
                       state.depth() == 0 ? "writing/plan" : "writing/passage"};
  }
  std::string prompt(const State& state, int) const override {
    if (state.depth() == 0) {
      return prompts.render("writing/plan", {{"endings", task.endings_text()}});
    }
    return prompts.render("writing/passage", {{"endings", task.endings_text()},
                                              {"plan", state.thoughts.front().text}});
  }
  std::vector<std::string> parse(const State& state, const std::string& completion,
                                 int) const override {
    const std::string text =
        state.depth() == 0 ? extract_plan(completion) : extract_passage(completion);
    if (text.empty()) return {};
    return {text};
  }
};

} // namespace

std::vector<Thought> WritingTaskAdapter::expand(const State& state, const SearchConfig& cfg,
                                                CallContext& ctx) const {
  if (is_terminal(state)) return {};
  WritingSource source(task_, prompts_);
  return generate_thoughts(source, state, cfg.k, cfg.temperature, ctx);
}

std::string WritingTaskAdapter::vote_prompt(std::span<const State> candidates) const {
  std::string choices;
  for (size_t i = 0; i < candidates.size(); ++i) {
    choices += "Choice " + std::to_string(i + 1) + ":\n";
    choices += candidates[i].thoughts.back().text;
    choices += "\n\n";
  }
  const std::string instruction =
      "Write a coherent passage of 4 short paragraphs. The end sentence of each paragraph must "
      "be:\n" +
      task_.endings_text();
  return prompts_.render("writing/vote", {{"instruction", instruction}, {"choices", choices}});
}

std::vector<Score> WritingTaskAdapter::evaluate(const std::vector<State>& states,
                                                const SearchConfig& cfg, CallContext& ctx) const {
  VotePromptFn prompt = [this](std::span<const State> candidates) {
    return vote_prompt(candidates);
  };
  return evaluate_vote(states, cfg.vote_samples, prompt, cfg.temperature, ctx).scores;
}

bool WritingTaskAdapter::is_terminal(const State& state) const { return state.depth() >= 2; }

std::string WritingTaskAdapter::finalize(const State& state, CallContext&) const {
  if (state.depth() < 2) return "";
  return state.thoughts.back().text;
}

std::optional<bool> WritingTaskAdapter::judge(const State&, const std::string& output) const {
  if (output.empty()) return false;
  return check_constraints(Passage::split(output), task_);
}

SearchConfig WritingTaskAdapter::default_config() const {
  SearchConfig cfg;
  cfg.method = SearchMethod::Bfs;
  cfg.k = 5;
  cfg.b = 1;
  cfg.T = 2;
  cfg.vote_samples = 5;
  return cfg;
}

SearchOutcome run_writing_tot(const WritingTask& task, Backend& gen, Backend& eval,
                              const SearchConfig& cfg, const PromptLibrary& prompts) {
  WritingTaskAdapter adapter(task, prompts);
  SearchConfig run_cfg = cfg;
  run_cfg.method = SearchMethod::Bfs;
  return tot_bfs(adapter, run_cfg, gen, eval);
}

RefineResult iterative_refine(const WritingTask& task, Backend& backend, int k_max,
                              double temperature, const PromptLibrary& prompts,
                              CostLedger& ledger) {
  CallContext ctx{&backend, &backend, &ledger};

  CompletionRequest initial;
  initial.prompt = prompts.render("writing/io", {{"endings", task.endings_text()}});
  initial.temperature = temperature;
  RefineResult result;
  result.final_passage = extract_passage(ctx.call_gen(initial).texts.front());
  result.attempts.push_back(result.final_passage);

  for (int round = 0; round < k_max; ++round) {
    CompletionRequest request;
    request.prompt = prompts.render(
        "writing/refine", {{"endings", task.endings_text()}, {"passage", result.final_passage}});
    request.temperature = temperature;
    const std::string response = ctx.call_gen(request).texts.front();
    ++result.rounds;

    // First non-empty line decides: a coherence verdict stops the loop.
    std::string_view head = trim(response);
    const size_t nl = head.find('\n');
    std::string first_line(head.substr(0, nl == std::string_view::npos ? head.size() : nl));
    std::transform(first_line.begin(), first_line.end(), first_line.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (first_line.find("perfectly coherent") != std::string::npos) {
      result.judged_coherent = true;
      break;
    }
    result.final_passage = extract_passage(response);
    result.attempts.push_back(result.final_passage);
  }
  return result;
}

} // namespace tot::writing
