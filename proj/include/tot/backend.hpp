#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tot {

// A single-turn completion request: one optional system message plus one
// user message, sampled n times.
struct CompletionRequest {
  std::string prompt;
  std::optional<std::string> system;
  int n = 1;
  double temperature = 0.7;
  std::optional<int> max_tokens;
  std::vector<std::string> stop;
};

struct CompletionResponse {
  std::vector<std::string> texts; // exactly request.n entries
  long long prompt_tokens = 0;
  long long completion_tokens = 0;
  std::string backend_id;
};

enum class BackendKind { Remote, Replay, Scripted, Oracle };

std::string backend_kind_name(BackendKind kind);

struct BackendSpec {
  BackendKind kind = BackendKind::Scripted;
  std::string endpoint; // remote: base URL, e.g. http://host:port/v1
  std::string model;    // remote model name; also keys replay cache entries
  double price_prompt_per_1k = 0.03;
  double price_completion_per_1k = 0.06;
  int retry_limit = 3;
  int retry_backoff_ms = 250;
  std::string api_key_env = "TOT_API_KEY";
  std::string script_path;   // scripted: response table file
  std::string cache_dir;     // replay: cache directory
  std::string oracle_policy; // oracle: registered policy name
};

class BackendError : public std::runtime_error {
 public:
  explicit BackendError(const std::string& what, int status = 0, std::string body = "")
      : std::runtime_error(what), status(status), body(std::move(body)) {}
  int status;
  std::string body;
};

// The completion primitive every method samples from. Implementations must
// return exactly request.n texts or throw BackendError.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual CompletionResponse complete(const CompletionRequest& request) = 0;
  virtual const BackendSpec& spec() const = 0;
  virtual std::string id() const = 0;
};

// ceil(bytes / 4); the usage approximation for backends without endpoint-
// reported token counts.
long long estimate_tokens(std::string_view text);

// CRLF -> LF and trailing-whitespace strip, applied before hashing prompts.
std::string normalize_prompt(std::string_view prompt);

// Stable content key over (model, normalized prompt, system, n, temperature,
// max_tokens, stop). Sensitive to every semantic field, independent of any
// serialization key order.
std::string cache_key(const CompletionRequest& request, const std::string& backend_model);

// Throws std::invalid_argument when request invariants are violated.
void validate_request(const CompletionRequest& request);

// Accumulated token usage and spend. Additive across runs; cost is always
// recomputable from the token counts and the prices they were booked at.
struct CostLedger {
  long long prompt_tokens = 0;
  long long completion_tokens = 0;
  double cost = 0.0;

  void add(const CompletionResponse& response, const BackendSpec& prices);
  void merge(const CostLedger& other);
};

double compute_cost(long long prompt_tokens, long long completion_tokens,
                    double price_prompt_per_1k, double price_completion_per_1k);

} // namespace tot
