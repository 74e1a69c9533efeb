#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tot/backend.hpp"

namespace tot::baselines {

struct SampleSet {
  std::string task_id;
  std::vector<std::string> outputs;
  std::vector<bool> correct_flags; // task-judged, same length as outputs

  int correct_count() const;
  int size() const { return static_cast<int>(outputs.size()); }
};

// Most frequent normalized output; ties broken by earliest first occurrence.
std::string cot_sc_majority(const std::vector<std::string>& outputs,
                            const std::function<std::string(const std::string&)>& normalizer);

struct RefineHooks {
  std::function<std::string()> initial_prompt;
  // Full history of prior attempts plus the reflect-and-retry instruction.
  std::function<std::string(const std::vector<std::string>& attempts)> refine_prompt;
  // Ground-truth correctness signal for an output.
  std::function<bool(const std::string& output)> feedback;
};

// One initial sample, then up to k_max refinement rounds, stopping as soon
// as feedback reports a correct output. Every attempt is recorded.
SampleSet iterative_refine(const std::string& task_id, const RefineHooks& hooks,
                           Backend& backend, int k_max, double temperature, CostLedger& ledger);

// Unbiased pass@k estimate 1 - C(n-c, k)/C(n, k) per set, averaged over
// sets. Throws std::invalid_argument when k exceeds a set's sample count.
double best_of_k_success(const std::vector<SampleSet>& sample_sets, int k);

struct BestOfKPoint {
  int k = 1;
  double success_estimate = 0.0;
};

std::vector<BestOfKPoint> best_of_k_curve(const std::vector<SampleSet>& sample_sets,
                                          const std::vector<int>& ks);

} // namespace tot::baselines
