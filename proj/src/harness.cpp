#include "tot/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

namespace tot::harness {
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

} // namespace

std::string task_kind_name(TaskKind t) {
  switch (t) {
    case TaskKind::Game24: return "game24";
    case TaskKind::Crosswords: return "crosswords";
    case TaskKind::Writing: return "writing";
    case TaskKind::GenericQa: return "generic_qa";
  }
  return "unknown";
}

std::optional<TaskKind> task_kind_from_name(std::string_view name) {
  if (name == "game24") return TaskKind::Game24;
  if (name == "crosswords") return TaskKind::Crosswords;
  if (name == "writing") return TaskKind::Writing;
  if (name == "generic_qa") return TaskKind::GenericQa;
  return std::nullopt;
}

std::string method_name(Method m) {
  switch (m) {
    case Method::Io: return "io";
    case Method::Cot: return "cot";
    case Method::CotSc: return "cot_sc";
    case Method::Refine: return "refine";
    case Method::TotBfs: return "tot_bfs";
    case Method::TotDfs: return "tot_dfs";
    case Method::GreedyOverwrite: return "greedy_overwrite";
  }
  return "unknown";
}

std::optional<Method> method_from_name(std::string_view name) {
  if (name == "io") return Method::Io;
  if (name == "cot") return Method::Cot;
  if (name == "cot_sc") return Method::CotSc;
  if (name == "refine") return Method::Refine;
  if (name == "tot_bfs") return Method::TotBfs;
  if (name == "tot_dfs") return Method::TotDfs;
  if (name == "greedy_overwrite") return Method::GreedyOverwrite;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Config serialization

namespace {

Json backend_spec_to_json(const BackendSpec& spec) {
  Json j;
  j["kind"] = backend_kind_name(spec.kind);
  j["endpoint"] = spec.endpoint;
  j["model"] = spec.model;
  j["price_prompt_per_1k"] = spec.price_prompt_per_1k;
  j["price_completion_per_1k"] = spec.price_completion_per_1k;
  j["retry_limit"] = spec.retry_limit;
  j["retry_backoff_ms"] = spec.retry_backoff_ms;
  j["api_key_env"] = spec.api_key_env;
  j["script_path"] = spec.script_path;
  j["cache_dir"] = spec.cache_dir;
  j["oracle_policy"] = spec.oracle_policy;
  return j;
}

BackendSpec backend_spec_from_json(const Json& j) {
  BackendSpec spec;
  const std::string kind = j.value("kind", "scripted");
  if (kind == "remote") {
    spec.kind = BackendKind::Remote;
  } else if (kind == "replay") {
    spec.kind = BackendKind::Replay;
  } else if (kind == "scripted") {
    spec.kind = BackendKind::Scripted;
  } else if (kind == "oracle") {
    spec.kind = BackendKind::Oracle;
  } else {
    throw std::invalid_argument("unknown backend kind: " + kind);
  }
  spec.endpoint = j.value("endpoint", "");
  spec.model = j.value("model", "");
  spec.price_prompt_per_1k = j.value("price_prompt_per_1k", 0.03);
  spec.price_completion_per_1k = j.value("price_completion_per_1k", 0.06);
  spec.retry_limit = j.value("retry_limit", 3);
  spec.retry_backoff_ms = j.value("retry_backoff_ms", 250);
  spec.api_key_env = j.value("api_key_env", "TOT_API_KEY");
  spec.script_path = j.value("script_path", "");
  spec.cache_dir = j.value("cache_dir", "");
  spec.oracle_policy = j.value("oracle_policy", "");
  if (spec.kind == BackendKind::Remote && (spec.endpoint.empty() || spec.model.empty())) {
    throw std::invalid_argument("remote backend requires endpoint and model");
  }
  return spec;
}

Json search_config_to_json(const SearchConfig& cfg) {
  Json j;
  j["method"] = search_method_name(cfg.method);
  j["k"] = cfg.k;
  j["b"] = cfg.b;
  j["T"] = cfg.T;
  j["v_th"] = cfg.v_th;
  j["value_samples"] = cfg.value_samples;
  j["vote_samples"] = cfg.vote_samples;
  j["dfs_step_limit"] = cfg.dfs_step_limit;
  j["temperature"] = cfg.temperature;
  j["seed"] = cfg.seed;
  j["disable_prune"] = cfg.disable_prune;
  return j;
}

SearchConfig search_config_from_json(const Json& j, SearchConfig cfg) {
  if (j.contains("method")) {
    const std::string m = j["method"].get<std::string>();
    if (m == "bfs") {
      cfg.method = SearchMethod::Bfs;
    } else if (m == "dfs") {
      cfg.method = SearchMethod::Dfs;
    } else if (m == "greedy_overwrite") {
      cfg.method = SearchMethod::GreedyOverwrite;
    } else {
      throw std::invalid_argument("unknown search method: " + m);
    }
  }
  cfg.k = j.value("k", cfg.k);
  cfg.b = j.value("b", cfg.b);
  cfg.T = j.value("T", cfg.T);
  cfg.v_th = j.value("v_th", cfg.v_th);
  cfg.value_samples = j.value("value_samples", cfg.value_samples);
  cfg.vote_samples = j.value("vote_samples", cfg.vote_samples);
  cfg.dfs_step_limit = j.value("dfs_step_limit", cfg.dfs_step_limit);
  cfg.temperature = j.value("temperature", cfg.temperature);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.disable_prune = j.value("disable_prune", cfg.disable_prune);
  return cfg;
}

} // namespace

RunConfig run_config_from_json(const Json& j) {
  RunConfig cfg;
  if (j.contains("task")) {
    auto task = task_kind_from_name(j["task"].get<std::string>());
    if (!task) throw std::invalid_argument("unknown task: " + j["task"].get<std::string>());
    cfg.task = *task;
  }
  if (j.contains("method")) {
    auto method = method_from_name(j["method"].get<std::string>());
    if (!method) throw std::invalid_argument("unknown method: " + j["method"].get<std::string>());
    cfg.method = *method;
  }
  if (j.contains("search")) cfg.search = search_config_from_json(j["search"], cfg.search);
  if (j.contains("gen_backend")) cfg.gen_backend = backend_spec_from_json(j["gen_backend"]);
  if (j.contains("eval_backend") && !j["eval_backend"].is_null()) {
    cfg.eval_backend = backend_spec_from_json(j["eval_backend"]);
  }
  cfg.dataset_path = j.value("dataset_path", "");
  cfg.output_dir = j.value("output_dir", "");
  cfg.n_samples = j.value("n_samples", 10);
  cfg.refine_k = j.value("refine_k", 10);
  cfg.parallel = j.value("parallel", 1);
  cfg.record = j.value("record", false);
  cfg.replay = j.value("replay", false);
  cfg.cache_dir = j.value("cache_dir", "replay_cache");
  cfg.prompt_dir = j.value("prompt_dir", "");
  cfg.score_coherency = j.value("score_coherency", false);
  return cfg;
}

Json run_config_to_json(const RunConfig& cfg) {
  Json j;
  j["task"] = task_kind_name(cfg.task);
  j["method"] = method_name(cfg.method);
  j["search"] = search_config_to_json(cfg.search);
  j["gen_backend"] = backend_spec_to_json(cfg.gen_backend);
  j["eval_backend"] = cfg.eval_backend ? backend_spec_to_json(*cfg.eval_backend) : Json(nullptr);
  j["dataset_path"] = cfg.dataset_path;
  j["output_dir"] = cfg.output_dir;
  j["n_samples"] = cfg.n_samples;
  j["refine_k"] = cfg.refine_k;
  j["parallel"] = cfg.parallel;
  j["record"] = cfg.record;
  j["replay"] = cfg.replay;
  j["cache_dir"] = cfg.cache_dir;
  j["prompt_dir"] = cfg.prompt_dir;
  j["score_coherency"] = cfg.score_coherency;
  return j;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open run config: " + path.string());
  return run_config_from_json(Json::parse(in));
}

// ---------------------------------------------------------------------------
// Datasets

std::vector<game24::Puzzle> generate_puzzles(int n, unsigned seed) {
  if (n < 1) throw std::invalid_argument("generate_puzzles: n must be >= 1");
  std::mt19937 rng(seed);
  std::vector<game24::Puzzle> out;
  while (static_cast<int>(out.size()) < n) {
    game24::Puzzle p;
    for (int i = 0; i < 4; ++i) {
      p.numbers.push_back(1 + static_cast<long long>(rng() % 13));
    }
    if (!game24::solvable(game24::puzzle_rationals(p))) continue;
    p.index = static_cast<int>(out.size()) + 1;
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<game24::Puzzle> load_game24_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open puzzle file: " + path.string());
  std::vector<game24::Puzzle> out;
  std::string line;
  while (std::getline(in, line)) {
    const std::string_view t = trim(line);
    if (t.empty()) continue;
    const size_t comma = t.find(',');
    if (comma == std::string_view::npos) continue;
    const std::string_view rank_text = trim(t.substr(0, comma));
    if (rank_text.empty() || !std::isdigit(static_cast<unsigned char>(rank_text[0]))) {
      continue; // header row
    }
    game24::Puzzle p;
    p.index = std::stoi(std::string(rank_text));
    std::istringstream numbers{std::string(t.substr(comma + 1))};
    long long v = 0;
    while (numbers >> v) p.numbers.push_back(v);
    if (p.numbers.size() != 4) {
      throw std::runtime_error("puzzle file: expected 4 numbers per row: " + line);
    }
    out.push_back(std::move(p));
  }
  return out;
}

void write_game24_csv(const std::vector<game24::Puzzle>& puzzles,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write puzzle file: " + path.string());
  out << "rank,numbers\n";
  for (const game24::Puzzle& p : puzzles) {
    out << (p.index ? *p.index : 0) << ',' << p.numbers_text() << '\n';
  }
}

std::vector<crosswords::CrosswordPuzzle> load_crosswords_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open crossword file: " + path.string());
  Json doc = Json::parse(in);
  std::vector<crosswords::CrosswordPuzzle> out;
  int index = 0;
  for (const auto& item : doc) {
    crosswords::CrosswordPuzzle p;
    for (int i = 0; i < crosswords::kSize; ++i) {
      p.h_clues[i] = item.at("h_clues").at(i).get<std::string>();
      p.v_clues[i] = item.at("v_clues").at(i).get<std::string>();
    }
    if (item.contains("solution") && !item["solution"].is_null()) {
      std::array<std::string, crosswords::kSize> sol;
      for (int i = 0; i < crosswords::kSize; ++i) {
        sol[i] = item["solution"].at(i).get<std::string>();
      }
      p.solution = sol;
    }
    p.index = item.value("index", index);
    ++index;
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<writing::WritingTask> load_writing_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open writing file: " + path.string());
  Json doc = Json::parse(in);
  std::vector<writing::WritingTask> out;
  for (const auto& item : doc) {
    writing::WritingTask task;
    for (int i = 0; i < 4; ++i) task.endings[i] = item.at("endings").at(i).get<std::string>();
    out.push_back(std::move(task));
  }
  return out;
}

std::vector<QaItem> load_qa_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open QA file: " + path.string());
  std::vector<QaItem> out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    Json j = Json::parse(line);
    QaItem item;
    item.question = j.at("question").get<std::string>();
    item.answer = j.value("answer", "");
    item.answer_format = j.value("answer_format", "\"the answer is n\" where n is a number");
    out.push_back(std::move(item));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generic QA task

std::string extract_generic_answer(std::string_view text) {
  const std::string haystack = lower(text);
  const std::string needle = "the answer is";
  size_t pos = std::string::npos;
  size_t search = 0;
  while (true) {
    const size_t found = haystack.find(needle, search);
    if (found == std::string::npos) break;
    pos = found;
    search = found + needle.size();
  }
  if (pos == std::string::npos) return "";
  std::string_view rest = std::string_view(haystack).substr(pos + needle.size());
  const size_t nl = rest.find('\n');
  if (nl != std::string_view::npos) rest = rest.substr(0, nl);
  std::string answer(trim(rest));
  while (!answer.empty() &&
         (answer.back() == '.' || answer.back() == '!' || answer.back() == '"' ||
          answer.back() == '\'' || answer.back() == ')')) {
    answer.pop_back();
  }
  return std::string(trim(answer));
}

GenericQaTask::GenericQaTask(QaItem item, const PromptLibrary& prompts, int item_index)
    : item_(std::move(item)), prompts_(prompts), item_index_(item_index) {}

std::string GenericQaTask::task_id() const { return "generic_qa:" + std::to_string(item_index_); }

State GenericQaTask::root() const {
  State s;
  s.task_id = task_id();
  s.input = item_.question;
  return s;
}

namespace {

struct QaSource final : ThoughtSource {
  const QaItem& item;
  const PromptLibrary& prompts;
  QaSource(const QaItem& item, const PromptLibrary& prompts) : item(item), prompts(prompts) {}

  GenStrategy strategy(const State& state) const override {
    return GenStrategy{GenKind::Sample, state.depth() == 0 ? "generic/cot" : "generic/answer"};
  }
  std::string prompt(const State& state, int) const override {
    if (state.depth() == 0) {
      return prompts.render("generic/cot",
                            {{"input", item.question}, {"format", item.answer_format}});
    }
    return prompts.render("generic/answer", {{"input", item.question},
                                             {"strategy", state.thoughts.front().text},
                                             {"format", item.answer_format}});
  }
  std::vector<std::string> parse(const State& state, const std::string& completion,
                                 int) const override {
    if (state.depth() == 0) {
      // Keep the strategy section only; the answer is regenerated later.
      std::string text = completion;
      const std::string low = lower(text);
      const size_t strategy = low.find("strategy:");
      const size_t answer = low.find("answer:", strategy == std::string::npos ? 0 : strategy);
      if (strategy != std::string::npos) {
        const size_t begin = strategy + 9;
        const size_t len = answer == std::string::npos ? std::string::npos : answer - begin;
        text = text.substr(begin, len);
      }
      const std::string_view t = trim(text);
      if (t.empty()) return {};
      return {std::string(t)};
    }
    const std::string_view t = trim(completion);
    if (t.empty()) return {};
    return {std::string(t)};
  }
};

} // namespace

std::vector<Thought> GenericQaTask::expand(const State& state, const SearchConfig& cfg,
                                           CallContext& ctx) const {
  if (is_terminal(state)) return {};
  QaSource source(item_, prompts_);
  return generate_thoughts(source, state, cfg.k, cfg.temperature, ctx);
}

std::vector<Score> GenericQaTask::evaluate(const std::vector<State>& states,
                                           const SearchConfig& cfg, CallContext& ctx) const {
  VotePromptFn prompt = [this](std::span<const State> candidates) {
    std::string choices;
    for (size_t i = 0; i < candidates.size(); ++i) {
      choices += "Choice " + std::to_string(i + 1) + ":\n";
      choices += candidates[i].thoughts.back().text;
      choices += "\n\n";
    }
    const std::string instruction =
        "Answer the following question with " + item_.answer_format + ": " + item_.question;
    return prompts_.render("generic/vote", {{"instruction", instruction}, {"choices", choices}});
  };
  return evaluate_vote(states, cfg.vote_samples, prompt, cfg.temperature, ctx).scores;
}

bool GenericQaTask::is_terminal(const State& state) const { return state.depth() >= 2; }

std::string GenericQaTask::finalize(const State& state, CallContext&) const {
  if (state.depth() < 2) return "";
  return state.thoughts.back().text;
}

std::optional<bool> GenericQaTask::judge(const State&, const std::string& output) const {
  if (item_.answer.empty()) return std::nullopt;
  return extract_generic_answer(output) == lower(trim(item_.answer));
}

SearchConfig GenericQaTask::default_config() const {
  SearchConfig cfg;
  cfg.method = SearchMethod::Bfs;
  cfg.k = 5;
  cfg.b = 1;
  cfg.T = 2;
  cfg.vote_samples = 5;
  return cfg;
}

SearchOutcome generic_zero_shot_tot(const std::string& question, const std::string& answer_format,
                                    Backend& gen, Backend& eval, const SearchConfig& cfg,
                                    const PromptLibrary& prompts) {
  QaItem item;
  item.question = question;
  item.answer_format = answer_format;
  GenericQaTask task(std::move(item), prompts);
  SearchConfig run_cfg = cfg;
  run_cfg.method = SearchMethod::Bfs;
  return tot_bfs(task, run_cfg, gen, eval);
}

// ---------------------------------------------------------------------------
// Cost report

std::string cost_report(const std::vector<CostRow>& rows) {
  auto fmt_tokens = [](double tokens) {
    char buf[32];
    if (tokens >= 1000.0) {
      std::snprintf(buf, sizeof buf, "%.1fk", tokens / 1000.0);
    } else {
      std::snprintf(buf, sizeof buf, "%.0f", tokens);
    }
    return std::string(buf);
  };

  std::vector<std::array<std::string, 4>> table;
  table.push_back({"method", "generate tokens", "prompt tokens", "cost per case"});
  for (const CostRow& row : rows) {
    const double cases = std::max(1, row.n_cases);
    char cost[32];
    std::snprintf(cost, sizeof cost, "$%.2f", row.cost / cases);
    table.push_back({row.label, fmt_tokens(static_cast<double>(row.completion_tokens) / cases),
                     fmt_tokens(static_cast<double>(row.prompt_tokens) / cases),
                     std::string(cost)});
  }

  std::array<size_t, 4> widths{};
  for (const auto& row : table) {
    for (int c = 0; c < 4; ++c) widths[c] = std::max(widths[c], row[c].size());
  }
  std::ostringstream out;
  for (const auto& row : table) {
    for (int c = 0; c < 4; ++c) {
      out << row[c];
      if (c + 1 < 4) out << std::string(widths[c] - row[c].size() + 2, ' ');
    }
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Metrics report

namespace {

Json metrics_to_json(const crosswords::CrosswordMetrics& m) {
  return Json{{"letters", m.letters_correct}, {"words", m.words_correct},
              {"solved", m.game_solved}};
}

crosswords::CrosswordMetrics metrics_from_json(const Json& j) {
  crosswords::CrosswordMetrics m;
  m.letters_correct = j.at("letters").get<int>();
  m.words_correct = j.at("words").get<int>();
  m.game_solved = j.at("solved").get<bool>();
  return m;
}

} // namespace

Json MetricsReport::to_json() const {
  Json j;
  j["task"] = task;
  j["method"] = method;
  Json items_json = Json::array();
  for (const ItemResult& item : items) {
    Json ji;
    ji["task_id"] = item.task_id;
    ji["success"] = item.success ? Json(*item.success) : Json(nullptr);
    ji["output"] = item.output;
    ji["nodes_visited"] = item.nodes_visited;
    if (item.crossword) ji["crossword"] = metrics_to_json(*item.crossword);
    if (item.crossword_best_state) {
      ji["crossword_best_state"] = metrics_to_json(*item.crossword_best_state);
    }
    if (item.letter_rate) ji["letter_rate"] = *item.letter_rate;
    if (item.word_rate) ji["word_rate"] = *item.word_rate;
    if (item.game_rate) ji["game_rate"] = *item.game_rate;
    if (item.coherency) ji["coherency"] = *item.coherency;
    if (!item.failure_steps.empty()) ji["failure_steps"] = item.failure_steps;
    ji["samples"] = item.samples;
    ji["correct_samples"] = item.correct_samples;
    ji["usage"] = {{"prompt_tokens", item.usage.prompt_tokens},
                   {"completion_tokens", item.usage.completion_tokens},
                   {"cost", item.usage.cost}};
    if (!item.error.empty()) ji["error"] = item.error;
    items_json.push_back(std::move(ji));
  }
  j["items"] = std::move(items_json);
  Json agg;
  agg["success_rate"] = success_rate;
  agg["letters_rate"] = letters_rate;
  agg["words_rate"] = words_rate;
  agg["games_rate"] = games_rate;
  agg["best_state_letters_rate"] = best_state_letters_rate;
  agg["best_state_words_rate"] = best_state_words_rate;
  agg["best_state_games_rate"] = best_state_games_rate;
  agg["coherency_mean"] = coherency_mean ? Json(*coherency_mean) : Json(nullptr);
  agg["nodes_visited_mean"] = nodes_visited_mean;
  Json hist = Json::array();
  for (const auto& [step, count] : failure_step_histogram) {
    hist.push_back({{"step", step}, {"count", count}});
  }
  agg["failure_step_histogram"] = std::move(hist);
  agg["errored_items"] = errored_items;
  agg["ledger"] = {{"prompt_tokens", ledger.prompt_tokens},
                   {"completion_tokens", ledger.completion_tokens},
                   {"cost", ledger.cost}};
  j["aggregates"] = std::move(agg);
  return j;
}

MetricsReport metrics_report_from_json(const Json& j) {
  MetricsReport r;
  r.task = j.value("task", "");
  r.method = j.value("method", "");
  for (const auto& ji : j.at("items")) {
    ItemResult item;
    item.task_id = ji.value("task_id", "");
    if (ji.contains("success") && !ji["success"].is_null()) {
      item.success = ji["success"].get<bool>();
    }
    item.output = ji.value("output", "");
    item.nodes_visited = ji.value("nodes_visited", 0LL);
    if (ji.contains("crossword")) item.crossword = metrics_from_json(ji["crossword"]);
    if (ji.contains("crossword_best_state")) {
      item.crossword_best_state = metrics_from_json(ji["crossword_best_state"]);
    }
    if (ji.contains("letter_rate")) item.letter_rate = ji["letter_rate"].get<double>();
    if (ji.contains("word_rate")) item.word_rate = ji["word_rate"].get<double>();
    if (ji.contains("game_rate")) item.game_rate = ji["game_rate"].get<double>();
    if (ji.contains("coherency")) item.coherency = ji["coherency"].get<double>();
    if (ji.contains("failure_steps")) {
      for (const auto& s : ji["failure_steps"]) item.failure_steps.push_back(s.get<int>());
    }
    item.samples = ji.value("samples", 0);
    item.correct_samples = ji.value("correct_samples", 0);
    item.usage.prompt_tokens = ji["usage"]["prompt_tokens"].get<long long>();
    item.usage.completion_tokens = ji["usage"]["completion_tokens"].get<long long>();
    item.usage.cost = ji["usage"]["cost"].get<double>();
    item.error = ji.value("error", "");
    r.items.push_back(std::move(item));
  }
  const Json& agg = j.at("aggregates");
  r.success_rate = agg.value("success_rate", 0.0);
  r.letters_rate = agg.value("letters_rate", 0.0);
  r.words_rate = agg.value("words_rate", 0.0);
  r.games_rate = agg.value("games_rate", 0.0);
  r.best_state_letters_rate = agg.value("best_state_letters_rate", 0.0);
  r.best_state_words_rate = agg.value("best_state_words_rate", 0.0);
  r.best_state_games_rate = agg.value("best_state_games_rate", 0.0);
  if (agg.contains("coherency_mean") && !agg["coherency_mean"].is_null()) {
    r.coherency_mean = agg["coherency_mean"].get<double>();
  }
  r.nodes_visited_mean = agg.value("nodes_visited_mean", 0.0);
  for (const auto& h : agg.at("failure_step_histogram")) {
    r.failure_step_histogram.emplace_back(h.at("step").get<int>(), h.at("count").get<int>());
  }
  r.errored_items = agg.value("errored_items", 0);
  r.ledger.prompt_tokens = agg["ledger"]["prompt_tokens"].get<long long>();
  r.ledger.completion_tokens = agg["ledger"]["completion_tokens"].get<long long>();
  r.ledger.cost = agg["ledger"]["cost"].get<double>();
  return r;
}

std::string MetricsReport::to_text() const {
  std::ostringstream out;
  out << "task: " << task << "  method: " << method << "  items: " << items.size() << '\n';
  char buf[160];
  std::snprintf(buf, sizeof buf, "success_rate: %.3f", success_rate);
  out << buf << '\n';
  if (task == "crosswords") {
    std::snprintf(buf, sizeof buf,
                  "letters: %.3f  words: %.3f  games: %.3f  (best state: %.3f / %.3f / %.3f)",
                  letters_rate, words_rate, games_rate, best_state_letters_rate,
                  best_state_words_rate, best_state_games_rate);
    out << buf << '\n';
  }
  if (coherency_mean) {
    std::snprintf(buf, sizeof buf, "coherency_mean: %.2f", *coherency_mean);
    out << buf << '\n';
  }
  std::snprintf(buf, sizeof buf, "nodes_visited_mean: %.2f", nodes_visited_mean);
  out << buf << '\n';
  if (!failure_step_histogram.empty()) {
    out << "failure steps:";
    for (const auto& [step, count] : failure_step_histogram) {
      out << "  step " << step << ": " << count;
    }
    out << '\n';
  }
  std::snprintf(buf, sizeof buf, "tokens: %lld prompt / %lld completion  cost: $%.4f",
                ledger.prompt_tokens, ledger.completion_tokens, ledger.cost);
  out << buf << '\n';
  if (errored_items > 0) out << "errored items: " << errored_items << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Experiment runner

namespace {

struct Dataset {
  std::vector<game24::Puzzle> puzzles;
  std::vector<crosswords::CrosswordPuzzle> crosswords;
  std::vector<writing::WritingTask> writings;
  std::vector<QaItem> qa;

  size_t size(TaskKind task) const {
    switch (task) {
      case TaskKind::Game24: return puzzles.size();
      case TaskKind::Crosswords: return crosswords.size();
      case TaskKind::Writing: return writings.size();
      case TaskKind::GenericQa: return qa.size();
    }
    return 0;
  }
};

Dataset load_dataset(const RunConfig& cfg) {
  Dataset data;
  const std::string& path = cfg.dataset_path;
  switch (cfg.task) {
    case TaskKind::Game24:
      if (path.rfind("generate:", 0) == 0) {
        data.puzzles = generate_puzzles(std::stoi(path.substr(9)), cfg.search.seed);
      } else if (path.empty()) {
        data.puzzles = generate_puzzles(20, cfg.search.seed);
      } else {
        data.puzzles = load_game24_csv(path);
      }
      break;
    case TaskKind::Crosswords:
      data.crosswords = load_crosswords_json(path);
      break;
    case TaskKind::Writing:
      data.writings = load_writing_json(path);
      break;
    case TaskKind::GenericQa:
      data.qa = load_qa_jsonl(path);
      break;
  }
  if (data.size(cfg.task) == 0) throw std::runtime_error("dataset is empty");
  return data;
}

std::unique_ptr<TaskAdapter> make_adapter(const RunConfig& cfg, const Dataset& data, size_t i,
                                          const PromptLibrary& prompts) {
  switch (cfg.task) {
    case TaskKind::Game24:
      return std::make_unique<game24::Game24Task>(data.puzzles[i], prompts);
    case TaskKind::Crosswords:
      return std::make_unique<crosswords::CrosswordTask>(data.crosswords[i], prompts);
    case TaskKind::Writing:
      return std::make_unique<writing::WritingTaskAdapter>(data.writings[i], prompts,
                                                           static_cast<int>(i));
    case TaskKind::GenericQa:
      return std::make_unique<GenericQaTask>(data.qa[i], prompts, static_cast<int>(i));
  }
  throw std::invalid_argument("unknown task");
}

OraclePolicy make_oracle_policy(const RunConfig& cfg, const Dataset& data, size_t i, bool eval) {
  switch (cfg.task) {
    case TaskKind::Game24:
      return eval ? game24::oracle_eval_policy() : game24::oracle_gen_policy();
    case TaskKind::Crosswords:
      return eval ? crosswords::oracle_eval_policy(data.crosswords[i])
                  : crosswords::oracle_gen_policy(data.crosswords[i]);
    default:
      throw std::invalid_argument("no oracle policy for task " + task_kind_name(cfg.task));
  }
}

struct BackendSet {
  std::shared_ptr<Backend> gen;
  std::shared_ptr<Backend> eval;
};

std::shared_ptr<Backend> base_backend(const BackendSpec& spec, const RunConfig& cfg,
                                      const Dataset& data, size_t item, bool eval_role) {
  switch (spec.kind) {
    case BackendKind::Scripted:
      if (!spec.script_path.empty()) return ScriptedBackend::from_file(spec.script_path);
      throw std::invalid_argument("scripted backend requires script_path");
    case BackendKind::Oracle: {
      BackendSpec named = spec;
      if (named.oracle_policy.empty()) {
        named.oracle_policy = task_kind_name(cfg.task) + (eval_role ? "-eval" : "-gen");
      }
      if (named.model.empty()) named.model = named.oracle_policy;
      return std::make_shared<OracleBackend>(named,
                                             make_oracle_policy(cfg, data, item, eval_role));
    }
    case BackendKind::Remote:
      return std::make_shared<RemoteBackend>(spec);
    case BackendKind::Replay:
      return std::make_shared<ReplayBackend>(
          ReplayBackend::Mode::Replay,
          spec.cache_dir.empty() ? cfg.cache_dir : spec.cache_dir, nullptr, spec);
  }
  throw std::invalid_argument("unknown backend kind");
}

std::shared_ptr<Backend> wrap_cache(std::shared_ptr<Backend> backend, const RunConfig& cfg) {
  if (backend->spec().kind == BackendKind::Replay) return backend;
  if (cfg.replay) {
    return std::make_shared<ReplayBackend>(ReplayBackend::Mode::Replay, cfg.cache_dir, nullptr,
                                           backend->spec());
  }
  if (cfg.record) {
    return std::make_shared<ReplayBackend>(ReplayBackend::Mode::Record, cfg.cache_dir, backend,
                                           backend->spec());
  }
  return backend;
}

// Non-oracle backends are shared across the whole run (scripted tables are
// consumed run-globally, one call ordinal sequence); oracle policies bind to
// the item, so they are rebuilt per item.
struct SharedBackends {
  std::shared_ptr<Backend> gen;  // null when the spec is oracle-kind
  std::shared_ptr<Backend> eval;
};

SharedBackends make_shared_backends(const RunConfig& cfg, const Dataset& data) {
  SharedBackends shared;
  if (cfg.gen_backend.kind != BackendKind::Oracle) {
    shared.gen = wrap_cache(base_backend(cfg.gen_backend, cfg, data, 0, false), cfg);
  }
  if (cfg.eval_or_gen().kind != BackendKind::Oracle) {
    shared.eval = wrap_cache(base_backend(cfg.eval_or_gen(), cfg, data, 0, true), cfg);
  }
  return shared;
}

BackendSet make_backends(const RunConfig& cfg, const Dataset& data, size_t item,
                         const SharedBackends& shared) {
  BackendSet set;
  set.gen = shared.gen ? shared.gen
                       : wrap_cache(base_backend(cfg.gen_backend, cfg, data, item, false), cfg);
  set.eval = shared.eval
                 ? shared.eval
                 : wrap_cache(base_backend(cfg.eval_or_gen(), cfg, data, item, true), cfg);
  return set;
}

bool judge_sample(const RunConfig& cfg, const Dataset& data, size_t item,
                  const std::string& output) {
  switch (cfg.task) {
    case TaskKind::Game24:
      return game24::validate_solution(game24::extract_answer(output), data.puzzles[item]);
    case TaskKind::Crosswords: {
      auto board = crosswords::parse_board_text(output);
      const auto& solution = data.crosswords[item].solution;
      return board.has_value() && solution.has_value() &&
             crosswords::score_metrics(*board, *solution).game_solved;
    }
    case TaskKind::Writing:
      return writing::check_constraints(writing::Passage::split(output), data.writings[item]);
    case TaskKind::GenericQa:
      return !data.qa[item].answer.empty() &&
             extract_generic_answer(output) == lower(trim(data.qa[item].answer));
  }
  return false;
}

std::string baseline_prompt(const RunConfig& cfg, const Dataset& data, size_t item,
                            const PromptLibrary& prompts, bool cot) {
  switch (cfg.task) {
    case TaskKind::Game24:
      return prompts.render(cot ? "game24/cot" : "game24/io",
                            {{"input", data.puzzles[item].numbers_text()}});
    case TaskKind::Crosswords:
      return prompts.render(cot ? "crosswords/cot" : "crosswords/io",
                            {{"input", data.crosswords[item].clues_text()}});
    case TaskKind::Writing:
      return prompts.render(cot ? "writing/cot" : "writing/io",
                            {{"endings", data.writings[item].endings_text()}});
    case TaskKind::GenericQa:
      return prompts.render(cot ? "generic/cot" : "generic/standard",
                            {{"input", data.qa[item].question},
                             {"format", data.qa[item].answer_format}});
  }
  throw std::invalid_argument("unknown task");
}

// The run fails at the first step where every kept frontier state is invalid
// or can no longer reach 24.
std::optional<int> tot_failure_step(const game24::Puzzle& puzzle,
                                    const std::vector<TrajectoryEvent>& trajectory) {
  std::map<int, bool> any_viable_at_depth;
  for (const TrajectoryEvent& e : trajectory) {
    if (e.kind != EventKind::Select || !e.payload.contains("thoughts")) continue;
    std::vector<Rational> remaining = game24::puzzle_rationals(puzzle);
    bool valid = true;
    for (const auto& t : e.payload["thoughts"]) {
      auto parsed = game24::apply_step(remaining, t.get<std::string>());
      if (!parsed.ok()) {
        valid = false;
        break;
      }
      remaining = parsed.step->remaining;
    }
    const bool viable = valid && game24::solvable(remaining);
    auto [it, inserted] = any_viable_at_depth.try_emplace(e.depth, viable);
    if (!inserted) it->second = it->second || viable;
  }
  for (int depth = 1; depth <= 3; ++depth) {
    auto it = any_viable_at_depth.find(depth);
    if (it == any_viable_at_depth.end() || !it->second) return depth;
  }
  return std::nullopt;
}

struct SampleRecord {
  std::string task_id;
  std::string output;
  bool correct = false;
  long long tokens = 0;
};

struct ItemRun {
  ItemResult result;
  std::vector<TrajectoryEvent> trajectory;
  std::vector<SampleRecord> samples;
};

void attach_crossword_scores(const Dataset& data, size_t item, ItemRun& run) {
  const auto& puzzle = data.crosswords[item];
  if (!puzzle.solution) return;
  crosswords::CrosswordMetrics m;
  if (auto board = crosswords::parse_board_text(run.result.output)) {
    m = crosswords::score_metrics(*board, *puzzle.solution);
  }
  run.result.crossword = m;
  run.result.letter_rate = m.letters_correct / 25.0;
  run.result.word_rate = m.words_correct / 10.0;
  run.result.game_rate = m.game_solved ? 1.0 : 0.0;
  run.result.crossword_best_state = crosswords::best_dfs_state(run.trajectory, puzzle);
}

ItemRun run_search_item(const RunConfig& cfg, const Dataset& data, size_t item,
                        const PromptLibrary& prompts, TaskAdapter& adapter,
                        BackendSet& backends) {
  ItemRun run;
  run.result.task_id = adapter.task_id();

  SearchConfig search = cfg.search;
  search.method = cfg.method == Method::TotBfs ? SearchMethod::Bfs
                  : cfg.method == Method::TotDfs ? SearchMethod::Dfs
                                                 : SearchMethod::GreedyOverwrite;
  SearchOutcome outcome = run_search(adapter, search, *backends.gen, *backends.eval);
  run.result.success = outcome.success;
  run.result.output = outcome.output;
  run.result.nodes_visited = outcome.nodes_visited;
  run.result.usage = outcome.usage;
  run.trajectory = std::move(outcome.trajectory);

  if (cfg.task == TaskKind::Crosswords) {
    attach_crossword_scores(data, item, run);
  }
  if (cfg.task == TaskKind::Game24 && run.result.success && !*run.result.success) {
    run.result.failure_steps.push_back(
        tot_failure_step(data.puzzles[item], run.trajectory).value_or(0));
  }
  if (cfg.task == TaskKind::Writing && cfg.score_coherency && !run.result.output.empty()) {
    CostLedger scoring;
    CallContext ctx{backends.gen.get(), backends.eval.get(), &scoring};
    if (auto score = writing::score_coherency(run.result.output, cfg.search.vote_samples,
                                              cfg.search.temperature, prompts, ctx)) {
      run.result.coherency = score->mean;
    }
    run.result.usage.merge(scoring);
  }
  return run;
}

ItemRun run_refine_item(const RunConfig& cfg, const Dataset& data, size_t item,
                        const PromptLibrary& prompts, TaskAdapter& adapter,
                        BackendSet& backends) {
  ItemRun run;
  run.result.task_id = adapter.task_id();
  CostLedger ledger;

  if (cfg.task == TaskKind::Writing) {
    writing::RefineResult refined =
        writing::iterative_refine(data.writings[item], *backends.gen, cfg.refine_k,
                                  cfg.search.temperature, prompts, ledger);
    run.result.output = refined.final_passage;
    run.result.samples = static_cast<int>(refined.attempts.size());
    run.result.success = judge_sample(cfg, data, item, refined.final_passage);
    for (const std::string& attempt : refined.attempts) {
      const bool correct = judge_sample(cfg, data, item, attempt);
      run.result.correct_samples += correct ? 1 : 0;
      run.samples.push_back(SampleRecord{run.result.task_id, attempt, correct,
                                         estimate_tokens(attempt)});
    }
  } else if (cfg.task == TaskKind::Game24 || cfg.task == TaskKind::GenericQa) {
    baselines::RefineHooks hooks;
    hooks.initial_prompt = [&]() { return baseline_prompt(cfg, data, item, prompts, false); };
    hooks.refine_prompt = [&](const std::vector<std::string>& attempts) {
      std::string history;
      for (size_t a = 0; a < attempts.size(); ++a) {
        history += "Attempt " + std::to_string(a + 1) + ":\n" + attempts[a] +
                   "\nJudgement: incorrect\n";
      }
      const std::string id = cfg.task == TaskKind::Game24 ? "game24/refine" : "generic/refine";
      return prompts.render(id, {{"input", cfg.task == TaskKind::Game24
                                               ? data.puzzles[item].numbers_text()
                                               : data.qa[item].question},
                                 {"history", history}});
    };
    hooks.feedback = [&](const std::string& output) {
      return judge_sample(cfg, data, item, output);
    };
    baselines::SampleSet set = baselines::iterative_refine(
        run.result.task_id, hooks, *backends.gen, cfg.refine_k, cfg.search.temperature, ledger);
    run.result.samples = set.size();
    run.result.correct_samples = set.correct_count();
    run.result.output = set.outputs.back();
    run.result.success = set.correct_flags.back();
    for (int s = 0; s < set.size(); ++s) {
      run.samples.push_back(SampleRecord{run.result.task_id, set.outputs[s],
                                         static_cast<bool>(set.correct_flags[s]),
                                         estimate_tokens(set.outputs[s])});
    }
  } else {
    throw std::invalid_argument("refine is not supported for task " + task_kind_name(cfg.task));
  }
  run.result.usage = ledger;
  return run;
}

ItemRun run_sampled_item(const RunConfig& cfg, const Dataset& data, size_t item,
                         const PromptLibrary& prompts, TaskAdapter& adapter,
                         BackendSet& backends) {
  if (cfg.method == Method::CotSc &&
      (cfg.task == TaskKind::Crosswords || cfg.task == TaskKind::Writing)) {
    throw std::invalid_argument("cot_sc needs a normalizable answer; unsupported for task " +
                                task_kind_name(cfg.task));
  }
  ItemRun run;
  run.result.task_id = adapter.task_id();
  CostLedger ledger;
  CallContext ctx{backends.gen.get(), backends.eval.get(), &ledger};

  const bool cot = cfg.method != Method::Io;
  CompletionRequest request;
  request.prompt = baseline_prompt(cfg, data, item, prompts, cot);
  request.n = cfg.n_samples;
  request.temperature = cfg.search.temperature;
  const CompletionResponse response = ctx.call_gen(request);

  double letters = 0.0, words = 0.0, games = 0.0;
  bool have_crossword = false;
  double coherency = 0.0;
  int coherency_n = 0;

  for (const std::string& text : response.texts) {
    const bool correct = judge_sample(cfg, data, item, text);
    run.samples.push_back(SampleRecord{run.result.task_id, text, correct,
                                       estimate_tokens(text)});
    run.result.correct_samples += correct ? 1 : 0;

    if (cfg.task == TaskKind::Crosswords && data.crosswords[item].solution) {
      have_crossword = true;
      crosswords::CrosswordMetrics m;
      if (auto board = crosswords::parse_board_text(text)) {
        m = crosswords::score_metrics(*board, *data.crosswords[item].solution);
      }
      letters += m.letters_correct / 25.0;
      words += m.words_correct / 10.0;
      games += m.game_solved ? 1.0 : 0.0;
    }
    if (cfg.task == TaskKind::Writing && cfg.score_coherency) {
      if (auto score = writing::score_coherency(text, cfg.search.vote_samples,
                                                cfg.search.temperature, prompts, ctx)) {
        coherency += score->mean;
        ++coherency_n;
      }
    }
    if (cfg.task == TaskKind::Game24 && cot && !correct) {
      auto steps = game24::extract_step_lines(text);
      run.result.failure_steps.push_back(
          game24::classify_failure_step(data.puzzles[item], steps).value_or(0));
    }
  }
  run.result.samples = cfg.n_samples;

  if (cfg.method == Method::CotSc) {
    auto normalizer = [&](const std::string& text) {
      return cfg.task == TaskKind::Game24 ? game24::normalize_answer(text)
                                          : extract_generic_answer(text);
    };
    const std::string majority = baselines::cot_sc_majority(response.texts, normalizer);
    run.result.output = majority;
    if (cfg.task == TaskKind::Game24) {
      run.result.success = game24::validate_solution(majority, data.puzzles[item]);
    } else if (!data.qa[item].answer.empty()) {
      run.result.success = majority == lower(trim(data.qa[item].answer));
    }
  } else {
    run.result.output = response.texts.empty() ? "" : response.texts.front();
    // success_rate for sampled baselines averages correct_samples/samples;
    // the boolean marks whether any sample succeeded.
    run.result.success = run.result.correct_samples > 0;
  }

  if (have_crossword && cfg.n_samples > 0) {
    run.result.letter_rate = letters / cfg.n_samples;
    run.result.word_rate = words / cfg.n_samples;
    run.result.game_rate = games / cfg.n_samples;
  }
  if (coherency_n > 0) run.result.coherency = coherency / coherency_n;

  run.result.usage = ledger;
  return run;
}

ItemRun run_item(const RunConfig& cfg, const Dataset& data, size_t item,
                 const PromptLibrary& prompts, const SharedBackends& shared) {
  auto adapter = make_adapter(cfg, data, item, prompts);
  BackendSet backends = make_backends(cfg, data, item, shared);

  switch (cfg.method) {
    case Method::TotBfs:
    case Method::TotDfs:
    case Method::GreedyOverwrite:
      return run_search_item(cfg, data, item, prompts, *adapter, backends);
    case Method::Refine:
      return run_refine_item(cfg, data, item, prompts, *adapter, backends);
    case Method::Io:
    case Method::Cot:
    case Method::CotSc:
      return run_sampled_item(cfg, data, item, prompts, *adapter, backends);
  }
  throw std::invalid_argument("unknown method");
}

} // namespace

MetricsReport run_experiment(const RunConfig& cfg) {
  cfg.search.validate();
  const Dataset data = load_dataset(cfg);
  PromptLibrary prompts =
      cfg.prompt_dir.empty() ? PromptLibrary::default_library() : PromptLibrary(cfg.prompt_dir);

  const size_t n_items = data.size(cfg.task);
  std::vector<ItemRun> runs(n_items);

  int parallel = std::max(1, cfg.parallel);
  const bool scripted = cfg.gen_backend.kind == BackendKind::Scripted ||
                        cfg.eval_or_gen().kind == BackendKind::Scripted;
  if (scripted && parallel > 1) {
    std::cerr << "note: scripted backends are ordinal-keyed; forcing --parallel 1\n";
    parallel = 1;
  }

  const SharedBackends shared = make_shared_backends(cfg, data);
  auto work = [&](size_t i) {
    try {
      runs[i] = run_item(cfg, data, i, prompts, shared);
    } catch (const std::exception& e) {
      runs[i] = ItemRun{};
      runs[i].result.task_id = task_kind_name(cfg.task) + ":" + std::to_string(i);
      runs[i].result.error = e.what();
    }
  };

  if (parallel <= 1) {
    for (size_t i = 0; i < n_items; ++i) work(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> workers;
    for (int w = 0; w < parallel; ++w) {
      workers.emplace_back([&]() {
        while (true) {
          const size_t i = next.fetch_add(1);
          if (i >= n_items) return;
          work(i);
        }
      });
    }
    for (auto& t : workers) t.join();
  }

  MetricsReport report;
  report.task = task_kind_name(cfg.task);
  report.method = method_name(cfg.method);

  const bool averaged_baseline = cfg.method == Method::Io || cfg.method == Method::Cot;
  double success_sum = 0.0;
  int success_n = 0;
  double letters_sum = 0.0, words_sum = 0.0, games_sum = 0.0;
  int rate_n = 0;
  double bs_letters = 0.0, bs_words = 0.0, bs_games = 0.0;
  int best_state_n = 0;
  double coherency_sum = 0.0;
  int coherency_n = 0;
  double nodes_sum = 0.0;
  std::map<int, int> histogram;

  for (ItemRun& run : runs) {
    const ItemResult& r = run.result;
    if (r.error.empty()) {
      if (averaged_baseline && r.samples > 0) {
        success_sum += static_cast<double>(r.correct_samples) / r.samples;
        ++success_n;
      } else if (r.success) {
        success_sum += *r.success ? 1.0 : 0.0;
        ++success_n;
      }
      if (r.letter_rate) {
        letters_sum += *r.letter_rate;
        words_sum += r.word_rate.value_or(0.0);
        games_sum += r.game_rate.value_or(0.0);
        ++rate_n;
      }
      if (r.crossword_best_state) {
        bs_letters += r.crossword_best_state->letters_correct / 25.0;
        bs_words += r.crossword_best_state->words_correct / 10.0;
        bs_games += r.crossword_best_state->game_solved ? 1.0 : 0.0;
        ++best_state_n;
      }
      if (r.coherency) {
        coherency_sum += *r.coherency;
        ++coherency_n;
      }
      nodes_sum += static_cast<double>(r.nodes_visited);
      for (int step : r.failure_steps) ++histogram[step];
    } else {
      ++report.errored_items;
    }
    report.ledger.merge(r.usage);
    report.items.push_back(std::move(run.result));
  }
  report.success_rate = success_n > 0 ? success_sum / success_n : 0.0;
  if (rate_n > 0) {
    report.letters_rate = letters_sum / rate_n;
    report.words_rate = words_sum / rate_n;
    report.games_rate = games_sum / rate_n;
  }
  if (best_state_n > 0) {
    report.best_state_letters_rate = bs_letters / best_state_n;
    report.best_state_words_rate = bs_words / best_state_n;
    report.best_state_games_rate = bs_games / best_state_n;
  }
  if (coherency_n > 0) report.coherency_mean = coherency_sum / coherency_n;
  report.nodes_visited_mean =
      report.items.empty() ? 0.0 : nodes_sum / static_cast<double>(report.items.size());
  for (const auto& [step, count] : histogram) {
    report.failure_step_histogram.emplace_back(step, count);
  }

  if (!cfg.output_dir.empty()) {
    const std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);

    std::ofstream items_out(dir / "items.jsonl");
    for (const ItemResult& r : report.items) {
      Json j;
      j["task_id"] = r.task_id;
      j["success"] = r.success ? Json(*r.success) : Json(nullptr);
      j["output"] = r.output;
      j["nodes_visited"] = r.nodes_visited;
      if (!r.error.empty()) j["error"] = r.error;
      items_out << j.dump() << '\n';
    }

    std::ofstream samples_out(dir / "samples.jsonl");
    for (const ItemRun& run : runs) {
      for (const SampleRecord& s : run.samples) {
        Json j;
        j["task_id"] = s.task_id;
        j["method"] = method_name(cfg.method);
        j["output"] = s.output;
        j["correct"] = s.correct;
        j["tokens"] = s.tokens;
        samples_out << j.dump() << '\n';
      }
    }

    for (size_t i = 0; i < runs.size(); ++i) {
      if (runs[i].trajectory.empty()) continue;
      std::ofstream traj_out(dir / ("trajectory_" + std::to_string(i) + ".jsonl"));
      write_trajectory_jsonl(runs[i].trajectory, traj_out);
    }

    std::ofstream report_out(dir / "report.json");
    report_out << report.to_json().dump(2) << '\n';
    std::ofstream text_out(dir / "report.txt");
    text_out << report.to_text();
  }

  return report;
}

} // namespace tot::harness
