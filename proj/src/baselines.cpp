#include "tot/baselines.hpp"

#include <map>
#include <stdexcept>

#include "tot/thought_engine.hpp"

namespace tot::baselines {

int SampleSet::correct_count() const {
  int c = 0;
  for (bool flag : correct_flags) c += flag ? 1 : 0;
  return c;
}

std::string cot_sc_majority(const std::vector<std::string>& outputs,
                            const std::function<std::string(const std::string&)>& normalizer) {
  if (outputs.empty()) throw std::invalid_argument("cot_sc_majority: no outputs");
  struct Entry {
    int count = 0;
    size_t first_seen = 0;
  };
  std::map<std::string, Entry> tally;
  for (size_t i = 0; i < outputs.size(); ++i) {
    const std::string norm = normalizer ? normalizer(outputs[i]) : outputs[i];
    auto [it, inserted] = tally.try_emplace(norm, Entry{0, i});
    ++it->second.count;
  }
  const std::string* best = nullptr;
  Entry best_entry;
  for (const auto& [norm, entry] : tally) {
    if (!best || entry.count > best_entry.count ||
        (entry.count == best_entry.count && entry.first_seen < best_entry.first_seen)) {
      best = &norm;
      best_entry = entry;
    }
  }
  return *best;
}

SampleSet iterative_refine(const std::string& task_id, const RefineHooks& hooks, Backend& backend,
                           int k_max, double temperature, CostLedger& ledger) {
  if (k_max < 0) throw std::invalid_argument("iterative_refine: k_max must be >= 0");
  CallContext ctx{&backend, &backend, &ledger};
  SampleSet set;
  set.task_id = task_id;

  CompletionRequest initial;
  initial.prompt = hooks.initial_prompt();
  initial.temperature = temperature;
  std::string output = ctx.call_gen(initial).texts.front();
  set.outputs.push_back(output);
  set.correct_flags.push_back(hooks.feedback(output));
  if (set.correct_flags.back()) return set;

  for (int round = 0; round < k_max; ++round) {
    CompletionRequest request;
    request.prompt = hooks.refine_prompt(set.outputs);
    request.temperature = temperature;
    output = ctx.call_gen(request).texts.front();
    set.outputs.push_back(output);
    set.correct_flags.push_back(hooks.feedback(output));
    if (set.correct_flags.back()) break;
  }
  return set;
}

double best_of_k_success(const std::vector<SampleSet>& sample_sets, int k) {
  if (k < 1) throw std::invalid_argument("best_of_k_success: k must be >= 1");
  if (sample_sets.empty()) throw std::invalid_argument("best_of_k_success: no sample sets");
  double total = 0.0;
  for (const SampleSet& set : sample_sets) {
    const int n = set.size();
    const int c = set.correct_count();
    if (k > n) {
      throw std::invalid_argument("best_of_k_success: k exceeds the sample count of a set");
    }
    // 1 - C(n-c, k)/C(n, k), as a stable running product.
    double miss = 1.0;
    for (int i = 0; i < k; ++i) {
      const int numer = n - c - i;
      if (numer <= 0) {
        miss = 0.0;
        break;
      }
      miss *= static_cast<double>(numer) / static_cast<double>(n - i);
    }
    total += 1.0 - miss;
  }
  return total / static_cast<double>(sample_sets.size());
}

std::vector<BestOfKPoint> best_of_k_curve(const std::vector<SampleSet>& sample_sets,
                                          const std::vector<int>& ks) {
  std::vector<BestOfKPoint> out;
  out.reserve(ks.size());
  for (int k : ks) out.push_back(BestOfKPoint{k, best_of_k_success(sample_sets, k)});
  return out;
}

} // namespace tot::baselines
