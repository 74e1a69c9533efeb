#include "tot/backends.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "tot/types.hpp"

namespace tot {
namespace {

long long sum_text_tokens(const std::vector<std::string>& texts) {
  long long total = 0;
  for (const auto& t : texts) total += estimate_tokens(t);
  return total;
}

CompletionResponse local_response(const CompletionRequest& request,
                                  std::vector<std::string> texts, const std::string& backend_id) {
  CompletionResponse out;
  out.prompt_tokens = estimate_tokens(request.prompt) +
                      (request.system ? estimate_tokens(*request.system) : 0);
  out.completion_tokens = sum_text_tokens(texts);
  out.texts = std::move(texts);
  out.backend_id = backend_id;
  return out;
}

std::string prompt_head(const std::string& prompt) {
  std::string head = prompt.substr(0, 96);
  for (char& c : head) {
    if (c == '\n') c = ' ';
  }
  return head;
}

} // namespace

// ---------------------------------------------------------------------------
// ScriptedBackend

ScriptedBackend::ScriptedBackend() {
  spec_.kind = BackendKind::Scripted;
  spec_.model = "scripted";
}

ScriptedBackend::ScriptedBackend(BackendSpec spec) : spec_(std::move(spec)) {
  spec_.kind = BackendKind::Scripted;
  if (spec_.model.empty()) spec_.model = "scripted";
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw BackendError("scripted: cannot open script file " + path.string());
  Json doc = Json::parse(in);
  auto backend = std::make_shared<ScriptedBackend>();
  for (const auto& entry : doc) {
    const std::string pattern = entry.at("match").get<std::string>();
    for (const auto& call : entry.at("responses")) {
      std::vector<std::string> texts;
      if (call.is_string()) {
        texts.push_back(call.get<std::string>());
      } else {
        for (const auto& t : call) texts.push_back(t.get<std::string>());
      }
      backend->add(pattern, std::move(texts));
    }
  }
  return backend;
}

void ScriptedBackend::add(std::string pattern, std::vector<std::string> texts) {
  std::lock_guard lock(mu_);
  rows_.push_back(Row{std::move(pattern), std::move(texts), false});
}

void ScriptedBackend::add(std::string pattern, std::string text) {
  add(std::move(pattern), std::vector<std::string>{std::move(text)});
}

CompletionResponse ScriptedBackend::complete(const CompletionRequest& request) {
  validate_request(request);
  std::lock_guard lock(mu_);
  bool exhausted_match = false;
  for (Row& row : rows_) {
    if (request.prompt.find(row.pattern) == std::string::npos) continue;
    if (row.used) {
      exhausted_match = true;
      continue;
    }
    const int n = request.n;
    std::vector<std::string> texts;
    if (static_cast<int>(row.texts.size()) >= n) {
      texts.assign(row.texts.begin(), row.texts.begin() + n);
    } else if (row.texts.size() == 1) {
      texts.assign(n, row.texts.front());
    } else {
      throw BackendError("scripted: row for pattern \"" + row.pattern + "\" holds " +
                         std::to_string(row.texts.size()) + " texts but n=" + std::to_string(n) +
                         " requested");
    }
    row.used = true;
    return local_response(request, std::move(texts), id());
  }
  if (exhausted_match) {
    throw BackendError("scripted: all rows exhausted for prompt \"" + prompt_head(request.prompt) +
                       "\"");
  }
  throw BackendError("scripted: no row matches prompt \"" + prompt_head(request.prompt) + "\"");
}

// ---------------------------------------------------------------------------
// OracleBackend

OracleBackend::OracleBackend(std::string name, OraclePolicy policy)
    : id_("oracle:" + name), policy_(std::move(policy)) {
  spec_.kind = BackendKind::Oracle;
  spec_.model = name;
  spec_.oracle_policy = name;
}

OracleBackend::OracleBackend(BackendSpec spec, OraclePolicy policy)
    : spec_(std::move(spec)), policy_(std::move(policy)) {
  spec_.kind = BackendKind::Oracle;
  id_ = "oracle:" + spec_.oracle_policy;
}

CompletionResponse OracleBackend::complete(const CompletionRequest& request) {
  validate_request(request);
  std::vector<std::string> texts = policy_(request);
  if (texts.empty()) {
    throw BackendError(id_ + ": policy returned no texts");
  }
  if (static_cast<int>(texts.size()) != request.n) {
    if (texts.size() == 1) {
      texts.assign(request.n, texts.front());
    } else if (static_cast<int>(texts.size()) > request.n) {
      texts.resize(request.n);
    } else {
      throw BackendError(id_ + ": policy returned " + std::to_string(texts.size()) +
                         " texts for n=" + std::to_string(request.n));
    }
  }
  return local_response(request, std::move(texts), id_);
}

// ---------------------------------------------------------------------------
// ReplayBackend

ReplayBackend::ReplayBackend(Mode mode, std::filesystem::path dir, std::shared_ptr<Backend> inner,
                             BackendSpec spec)
    : mode_(mode), dir_(std::move(dir)), inner_(std::move(inner)), spec_(std::move(spec)) {
  spec_.kind = BackendKind::Replay;
  if (spec_.cache_dir.empty()) spec_.cache_dir = dir_.string();
  if (mode_ == Mode::Record && !inner_) {
    throw BackendError("replay: record mode requires an inner backend");
  }
  std::filesystem::create_directories(dir_);
}

std::string ReplayBackend::id() const {
  return mode_ == Mode::Record ? "replay-record" : "replay";
}

std::string ReplayBackend::key_model() const {
  if (!spec_.model.empty()) return spec_.model;
  if (inner_) return inner_->spec().model;
  return "";
}

std::filesystem::path ReplayBackend::entry_path(const std::string& key) const {
  return dir_ / (key + ".json");
}

CompletionResponse ReplayBackend::complete(const CompletionRequest& request) {
  validate_request(request);
  const std::string key = cache_key(request, key_model());
  const std::filesystem::path path = entry_path(key);

  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    Json doc = Json::parse(in);
    CompletionResponse out;
    for (const auto& t : doc.at("texts")) out.texts.push_back(t.get<std::string>());
    out.prompt_tokens = doc.at("usage").at("prompt_tokens").get<long long>();
    out.completion_tokens = doc.at("usage").at("completion_tokens").get<long long>();
    out.backend_id = doc.value("backend_id", id());
    hits_.fetch_add(1);
    return out;
  }

  if (mode_ == Mode::Replay) {
    throw BackendError("replay: cache miss for key " + key + " (prompt \"" +
                       prompt_head(request.prompt) + "\")");
  }

  misses_.fetch_add(1);
  CompletionResponse response = inner_->complete(request);

  Json doc;
  doc["key"] = key;
  doc["request"] = {
      {"model", key_model()},
      {"prompt", request.prompt},
      {"system", request.system ? Json(*request.system) : Json(nullptr)},
      {"n", request.n},
      {"temperature", request.temperature},
      {"max_tokens", request.max_tokens ? Json(*request.max_tokens) : Json(nullptr)},
      {"stop", request.stop},
  };
  doc["texts"] = response.texts;
  doc["usage"] = {{"prompt_tokens", response.prompt_tokens},
                  {"completion_tokens", response.completion_tokens}};
  doc["backend_id"] = response.backend_id;

  {
    std::lock_guard lock(write_mu_);
    std::ofstream out(path);
    out << doc.dump(2) << '\n';
  }
  return response;
}

// ---------------------------------------------------------------------------
// RemoteBackend

namespace {

struct ParsedUrl {
  std::string scheme_host_port; // e.g. "http://127.0.0.1:8080"
  std::string base_path;        // e.g. "/v1"
};

ParsedUrl parse_endpoint(const std::string& endpoint) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw BackendError("remote: endpoint must include a scheme: " + endpoint);
  }
  const auto path_start = endpoint.find('/', scheme_end + 3);
  ParsedUrl out;
  if (path_start == std::string::npos) {
    out.scheme_host_port = endpoint;
  } else {
    out.scheme_host_port = endpoint.substr(0, path_start);
    out.base_path = endpoint.substr(path_start);
    while (!out.base_path.empty() && out.base_path.back() == '/') out.base_path.pop_back();
  }
  return out;
}

bool retryable_status(int status) {
  return status == 429 || (status >= 500 && status < 600);
}

} // namespace

RemoteBackend::RemoteBackend(BackendSpec spec) : spec_(std::move(spec)) {
  spec_.kind = BackendKind::Remote;
  if (spec_.endpoint.empty() || spec_.model.empty()) {
    throw BackendError("remote: endpoint and model are required");
  }
}

CompletionResponse RemoteBackend::single_call(const CompletionRequest& request, int n) {
  const ParsedUrl url = parse_endpoint(spec_.endpoint);

  Json body;
  body["model"] = spec_.model;
  Json messages = Json::array();
  if (request.system) {
    messages.push_back({{"role", "system"}, {"content", *request.system}});
  }
  messages.push_back({{"role", "user"}, {"content", request.prompt}});
  body["messages"] = messages;
  body["n"] = n;
  body["temperature"] = request.temperature;
  if (request.max_tokens) body["max_tokens"] = *request.max_tokens;
  if (!request.stop.empty()) body["stop"] = request.stop;

  httplib::Headers headers;
  if (!spec_.api_key_env.empty()) {
    if (const char* key = std::getenv(spec_.api_key_env.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  std::string last_error;
  int last_status = 0;
  std::string last_body;
  for (int attempt = 0; attempt <= spec_.retry_limit; ++attempt) {
    if (attempt > 0) {
      const auto backoff = std::chrono::milliseconds(spec_.retry_backoff_ms) * (1LL << (attempt - 1));
      std::this_thread::sleep_for(backoff);
    }
    attempts_.fetch_add(1);
    httplib::Client client(url.scheme_host_port);
    client.set_read_timeout(600, 0);
    client.set_connection_timeout(10, 0);
    auto result = client.Post(url.base_path + "/chat/completions", headers, body.dump(),
                              "application/json");
    if (!result) {
      last_error = "transport error: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status != 200) {
      last_status = result->status;
      last_body = result->body;
      last_error = "HTTP " + std::to_string(result->status);
      if (retryable_status(result->status)) continue;
      break;
    }

    Json doc = Json::parse(result->body, nullptr, false);
    if (doc.is_discarded() || !doc.contains("choices")) {
      last_error = "unparseable response body";
      last_body = result->body;
      continue;
    }
    CompletionResponse out;
    for (const auto& choice : doc["choices"]) {
      out.texts.push_back(choice.at("message").at("content").get<std::string>());
    }
    if (doc.contains("usage")) {
      out.prompt_tokens = doc["usage"].value("prompt_tokens", 0LL);
      out.completion_tokens = doc["usage"].value("completion_tokens", 0LL);
    } else {
      out.prompt_tokens = estimate_tokens(request.prompt);
      for (const auto& t : out.texts) out.completion_tokens += estimate_tokens(t);
    }
    out.backend_id = id();
    return out;
  }
  throw BackendError("remote: " + last_error + " after " + std::to_string(spec_.retry_limit) +
                         " retries",
                     last_status, last_body);
}

CompletionResponse RemoteBackend::complete(const CompletionRequest& request) {
  validate_request(request);
  CompletionResponse out = single_call(request, request.n);
  // Endpoints that ignore n return fewer choices; top up one at a time.
  while (static_cast<int>(out.texts.size()) < request.n) {
    CompletionResponse extra = single_call(request, 1);
    if (extra.texts.empty()) {
      throw BackendError("remote: endpoint returned an empty choice list");
    }
    out.texts.push_back(std::move(extra.texts.front()));
    out.prompt_tokens += extra.prompt_tokens;
    out.completion_tokens += extra.completion_tokens;
  }
  if (static_cast<int>(out.texts.size()) > request.n) out.texts.resize(request.n);
  return out;
}

} // namespace tot
