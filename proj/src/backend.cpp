#include "tot/backend.hpp"

#include <cmath>
#include <sstream>

#include "tot/hash.hpp"

namespace tot {

std::string backend_kind_name(BackendKind kind) {
  switch (kind) {
    case BackendKind::Remote: return "remote";
    case BackendKind::Replay: return "replay";
    case BackendKind::Scripted: return "scripted";
    case BackendKind::Oracle: return "oracle";
  }
  return "unknown";
}

long long estimate_tokens(std::string_view text) {
  return static_cast<long long>((text.size() + 3) / 4);
}

std::string normalize_prompt(std::string_view prompt) {
  std::string out;
  out.reserve(prompt.size());
  for (size_t i = 0; i < prompt.size(); ++i) {
    if (prompt[i] == '\r' && i + 1 < prompt.size() && prompt[i + 1] == '\n') continue;
    out.push_back(prompt[i] == '\r' ? '\n' : prompt[i]);
  }
  while (!out.empty() && (out.back() == ' ' || out.back() == '\t' || out.back() == '\n')) {
    out.pop_back();
  }
  return out;
}

std::string cache_key(const CompletionRequest& request, const std::string& backend_model) {
  // Canonical field-by-field serialization; key order of any JSON the request
  // came from cannot matter because the fields are re-emitted here in a fixed
  // order. Lengths are prefixed so field boundaries never collide.
  std::ostringstream s;
  auto field = [&s](std::string_view name, std::string_view value) {
    s << name << ':' << value.size() << ':' << value << ';';
  };
  field("model", backend_model);
  field("prompt", normalize_prompt(request.prompt));
  field("system", request.system ? normalize_prompt(*request.system) : "<none>");
  field("n", std::to_string(request.n));
  char temp[32];
  std::snprintf(temp, sizeof temp, "%.6g", request.temperature);
  field("temperature", temp);
  field("max_tokens", request.max_tokens ? std::to_string(*request.max_tokens) : "<none>");
  std::string stops;
  for (const auto& stop : request.stop) {
    stops += std::to_string(stop.size()) + ':' + stop + ',';
  }
  field("stop", stops);
  return content_hash(s.str());
}

void validate_request(const CompletionRequest& request) {
  if (request.n < 1) throw std::invalid_argument("CompletionRequest: n must be >= 1");
  if (request.temperature < 0.0) {
    throw std::invalid_argument("CompletionRequest: temperature must be >= 0");
  }
  if (request.max_tokens && *request.max_tokens < 1) {
    throw std::invalid_argument("CompletionRequest: max_tokens must be >= 1");
  }
}

double compute_cost(long long prompt_tokens, long long completion_tokens,
                    double price_prompt_per_1k, double price_completion_per_1k) {
  return static_cast<double>(prompt_tokens) * price_prompt_per_1k / 1000.0 +
         static_cast<double>(completion_tokens) * price_completion_per_1k / 1000.0;
}

void CostLedger::add(const CompletionResponse& response, const BackendSpec& prices) {
  prompt_tokens += response.prompt_tokens;
  completion_tokens += response.completion_tokens;
  cost += compute_cost(response.prompt_tokens, response.completion_tokens,
                       prices.price_prompt_per_1k, prices.price_completion_per_1k);
}

void CostLedger::merge(const CostLedger& other) {
  prompt_tokens += other.prompt_tokens;
  completion_tokens += other.completion_tokens;
  cost += other.cost;
}

} // namespace tot
