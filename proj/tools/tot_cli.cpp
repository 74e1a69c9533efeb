#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "tot/harness.hpp"

namespace {

using namespace tot;
using namespace tot::harness;

// "oracle" | "scripted:<path>" | "replay:<dir>" | "remote:<endpoint>,<model>"
BackendSpec parse_backend_arg(const std::string& arg) {
  BackendSpec spec;
  const size_t colon = arg.find(':');
  const std::string kind = arg.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : arg.substr(colon + 1);
  if (kind == "oracle") {
    spec.kind = BackendKind::Oracle;
    spec.oracle_policy = rest;
  } else if (kind == "scripted") {
    spec.kind = BackendKind::Scripted;
    spec.script_path = rest;
  } else if (kind == "replay") {
    spec.kind = BackendKind::Replay;
    spec.cache_dir = rest;
  } else if (kind == "remote") {
    spec.kind = BackendKind::Remote;
    const size_t comma = rest.rfind(',');
    if (comma == std::string::npos) {
      throw CLI::ValidationError("--backend", "remote needs <endpoint>,<model>");
    }
    spec.endpoint = rest.substr(0, comma);
    spec.model = rest.substr(comma + 1);
  } else {
    throw CLI::ValidationError("--backend", "unknown backend kind: " + kind);
  }
  return spec;
}

int cmd_run(const std::string& config_path, const std::string& task, const std::string& method,
            const std::string& backend, const std::string& eval_backend,
            const std::string& dataset, const std::string& out_dir, int b, int k, int T,
            double v_th, int value_samples, int vote_samples, int dfs_steps, double temperature,
            unsigned seed, int n_samples, int refine_k, int parallel, bool record, bool replay,
            const std::string& cache_dir, bool no_prune, bool score_coherency,
            const std::string& prompt_dir) {
  RunConfig cfg;
  if (!config_path.empty()) cfg = load_run_config(config_path);

  if (!task.empty()) {
    auto t = task_kind_from_name(task);
    if (!t) throw CLI::ValidationError("--task", "unknown task: " + task);
    cfg.task = *t;
  }
  if (!method.empty()) {
    auto m = method_from_name(method);
    if (!m) throw CLI::ValidationError("--method", "unknown method: " + method);
    cfg.method = *m;
  }
  if (!backend.empty()) cfg.gen_backend = parse_backend_arg(backend);
  if (!eval_backend.empty()) cfg.eval_backend = parse_backend_arg(eval_backend);
  if (!dataset.empty()) cfg.dataset_path = dataset;
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  if (b > 0) cfg.search.b = b;
  if (k > 0) cfg.search.k = k;
  if (T > 0) cfg.search.T = T;
  if (v_th >= 0.0) cfg.search.v_th = v_th;
  if (value_samples > 0) cfg.search.value_samples = value_samples;
  if (vote_samples > 0) cfg.search.vote_samples = vote_samples;
  if (dfs_steps > 0) cfg.search.dfs_step_limit = dfs_steps;
  if (temperature >= 0.0) cfg.search.temperature = temperature;
  cfg.search.seed = seed;
  if (n_samples > 0) cfg.n_samples = n_samples;
  if (refine_k > 0) cfg.refine_k = refine_k;
  if (parallel > 0) cfg.parallel = parallel;
  if (record) cfg.record = true;
  if (replay) cfg.replay = true;
  if (!cache_dir.empty()) cfg.cache_dir = cache_dir;
  if (no_prune) cfg.search.disable_prune = true;
  if (score_coherency) cfg.score_coherency = true;
  if (!prompt_dir.empty()) cfg.prompt_dir = prompt_dir;

  // Task-appropriate search defaults for fields the user left untouched.
  if (cfg.task == TaskKind::Crosswords && cfg.method == Method::TotDfs && T == 0) {
    cfg.search.T = 10;
  }
  if (cfg.task == TaskKind::Game24 && k == 0) cfg.search.k = 64;
  if ((cfg.task == TaskKind::Writing || cfg.task == TaskKind::GenericQa)) {
    if (k == 0) cfg.search.k = 5;
    if (b == 0) cfg.search.b = 1;
    if (T == 0) cfg.search.T = 2;
  }

  MetricsReport report = run_experiment(cfg);
  std::cout << report.to_text();

  std::vector<CostRow> rows;
  rows.push_back(CostRow{method_name(cfg.method), report.ledger.completion_tokens,
                         report.ledger.prompt_tokens, report.ledger.cost,
                         static_cast<int>(report.items.size())});
  std::cout << '\n' << cost_report(rows);
  if (!cfg.output_dir.empty()) {
    std::cout << "\nwrote " << cfg.output_dir << "/report.json\n";
  }
  return report.errored_items == 0 ? 0 : 1;
}

int cmd_report(const std::string& run_dir) {
  std::ifstream in(std::filesystem::path(run_dir) / "report.json");
  if (!in) {
    std::cerr << "no report.json under " << run_dir << "\n";
    return 1;
  }
  MetricsReport report = metrics_report_from_json(Json::parse(in));
  std::cout << report.to_text();
  std::vector<CostRow> rows;
  rows.push_back(CostRow{report.method, report.ledger.completion_tokens,
                         report.ledger.prompt_tokens, report.ledger.cost,
                         static_cast<int>(report.items.size())});
  std::cout << '\n' << cost_report(rows);
  return 0;
}

int cmd_cache(const std::string& dir, bool clear) {
  const std::filesystem::path path(dir);
  if (!std::filesystem::is_directory(path)) {
    std::cout << "cache " << dir << ": empty (no directory)\n";
    return 0;
  }
  size_t count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(path)) {
    if (entry.path().extension() == ".json") {
      ++count;
      if (clear) std::filesystem::remove(entry.path());
    }
  }
  std::cout << "cache " << dir << ": " << count << (clear ? " entries removed" : " entries")
            << "\n";
  return 0;
}

int cmd_gen_puzzles(int n, unsigned seed, const std::string& out) {
  const auto puzzles = generate_puzzles(n, seed);
  if (out.empty()) {
    std::cout << "rank,numbers\n";
    for (const auto& p : puzzles) {
      std::cout << (p.index ? *p.index : 0) << ',' << p.numbers_text() << '\n';
    }
  } else {
    write_game24_csv(puzzles, out);
    std::cout << "wrote " << puzzles.size() << " puzzles to " << out << "\n";
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deliberate tree search over language-model thoughts"};
  app.require_subcommand(1);

  std::string config_path, task, method, backend, eval_backend, dataset, out_dir;
  std::string cache_dir, prompt_dir;
  int b = 0, k = 0, T = 0, value_samples = 0, vote_samples = 0, dfs_steps = 0;
  double v_th = -1.0, temperature = -1.0;
  unsigned seed = 0;
  int n_samples = 0, refine_k = 0, parallel = 0;
  bool record = false, replay = false, no_prune = false, score_coherency = false;

  auto* run = app.add_subcommand("run", "Run an experiment");
  run->add_option("--config", config_path, "Run config JSON file");
  run->add_option("--task", task, "game24 | crosswords | writing | generic_qa");
  run->add_option("--method", method,
                  "io | cot | cot_sc | refine | tot_bfs | tot_dfs | greedy_overwrite");
  run->add_option("--backend", backend,
                  "oracle | scripted:<path> | replay:<dir> | remote:<endpoint>,<model>");
  run->add_option("--eval-backend", eval_backend, "Evaluation backend (defaults to --backend)");
  run->add_option("--dataset", dataset, "Dataset path, or generate:<n> for game24");
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--b", b, "Breadth kept per BFS step");
  run->add_option("--k", k, "Candidates per expansion");
  run->add_option("--T", T, "Step limit");
  run->add_option("--v-th", v_th, "DFS prune threshold");
  run->add_option("--value-samples", value_samples, "Samples per value evaluation");
  run->add_option("--vote-samples", vote_samples, "Samples per vote evaluation");
  run->add_option("--dfs-steps", dfs_steps, "DFS expansion budget");
  run->add_option("--temperature", temperature, "Sampling temperature");
  run->add_option("--seed", seed, "Seed for generated datasets");
  run->add_option("--n-samples", n_samples, "Samples per item for io/cot/cot_sc");
  run->add_option("--refine-k", refine_k, "Refinement rounds cap");
  run->add_option("--parallel", parallel, "Concurrent items");
  run->add_flag("--record", record, "Record completions into the replay cache");
  run->add_flag("--replay", replay, "Serve completions from the replay cache only");
  run->add_option("--cache-dir", cache_dir, "Replay cache directory");
  run->add_flag("--no-prune", no_prune, "DFS ablation: ignore evaluation, enter all children");
  run->add_flag("--score-coherency", score_coherency, "Writing: sample 1-10 coherency scores");
  run->add_option("--prompts", prompt_dir, "Prompt template directory");

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Print a stored run report");
  report->add_option("--run-dir", report_dir, "Run output directory")->required();

  std::string cache_path = "replay_cache";
  bool cache_clear = false;
  auto* cache = app.add_subcommand("cache", "Inspect or clear the replay cache");
  cache->add_option("--dir", cache_path, "Cache directory");
  cache->add_flag("--clear", cache_clear, "Remove all cached entries");

  int gen_n = 50;
  unsigned gen_seed = 0;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-puzzles", "Generate solvable puzzles");
  gen->add_option("--n", gen_n, "Number of puzzles");
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("--out", gen_out, "Output CSV path (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(config_path, task, method, backend, eval_backend, dataset, out_dir, b, k, T,
                     v_th, value_samples, vote_samples, dfs_steps, temperature, seed, n_samples,
                     refine_k, parallel, record, replay, cache_dir, no_prune, score_coherency,
                     prompt_dir);
    }
    if (report->parsed()) return cmd_report(report_dir);
    if (cache->parsed()) return cmd_cache(cache_path, cache_clear);
    if (gen->parsed()) return cmd_gen_puzzles(gen_n, gen_seed, gen_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
