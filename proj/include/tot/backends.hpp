#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <vector>

#include "tot/backend.hpp"

namespace tot {

// Replays a fixed response table. Rows are matched by substring against the
// incoming prompt and consumed in insertion order, so repeated calls against
// the same pattern walk its rows one by one (pattern + call ordinal keying).
class ScriptedBackend : public Backend {
 public:
  ScriptedBackend();
  explicit ScriptedBackend(BackendSpec spec);
  static std::shared_ptr<ScriptedBackend> from_file(const std::filesystem::path& path);

  // Enqueue one scripted call for prompts containing `pattern`. A row with a
  // single text serves any n (replicated); otherwise it must hold >= n texts.
  void add(std::string pattern, std::vector<std::string> texts);
  void add(std::string pattern, std::string text);

  CompletionResponse complete(const CompletionRequest& request) override;
  const BackendSpec& spec() const override { return spec_; }
  std::string id() const override { return "scripted"; }

 private:
  struct Row {
    std::string pattern;
    std::vector<std::string> texts;
    bool used = false;
  };
  BackendSpec spec_;
  std::vector<Row> rows_;
  std::mutex mu_;
};

// A programmable policy standing in for a model; used for exact task oracles
// and deterministic end-to-end runs. The policy may return either exactly
// request.n texts or a single text, which is replicated n times.
using OraclePolicy = std::function<std::vector<std::string>(const CompletionRequest&)>;

class OracleBackend : public Backend {
 public:
  OracleBackend(std::string name, OraclePolicy policy);
  OracleBackend(BackendSpec spec, OraclePolicy policy);

  CompletionResponse complete(const CompletionRequest& request) override;
  const BackendSpec& spec() const override { return spec_; }
  std::string id() const override { return id_; }

 private:
  BackendSpec spec_;
  std::string id_;
  OraclePolicy policy_;
};

// Content-addressed response cache. Record mode forwards misses to the inner
// backend and stores the result; replay mode never touches the inner backend
// and fails loudly on a miss.
class ReplayBackend : public Backend {
 public:
  enum class Mode { Record, Replay };

  ReplayBackend(Mode mode, std::filesystem::path dir,
                std::shared_ptr<Backend> inner = nullptr,
                BackendSpec spec = {});

  CompletionResponse complete(const CompletionRequest& request) override;
  const BackendSpec& spec() const override { return spec_; }
  std::string id() const override;

  long long hits() const { return hits_.load(); }
  long long misses() const { return misses_.load(); }

 private:
  std::string key_model() const;
  std::filesystem::path entry_path(const std::string& key) const;

  Mode mode_;
  std::filesystem::path dir_;
  std::shared_ptr<Backend> inner_;
  BackendSpec spec_;
  std::atomic<long long> hits_{0};
  std::atomic<long long> misses_{0};
  std::mutex write_mu_;
};

// Chat-completions client over HTTP(S). Sends one request with n samples and
// tops up with single calls if the endpoint returns fewer choices. Retries
// transport errors, 429 and 5xx with exponential backoff.
class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(BackendSpec spec);

  CompletionResponse complete(const CompletionRequest& request) override;
  const BackendSpec& spec() const override { return spec_; }
  std::string id() const override { return "remote:" + spec_.model; }

  // HTTP attempts issued, including retries; exposed so runs can assert
  // replay mode performs no network calls.
  long long network_attempts() const { return attempts_.load(); }

 private:
  CompletionResponse single_call(const CompletionRequest& request, int n);

  BackendSpec spec_;
  std::atomic<long long> attempts_{0};
};

// Counts complete() calls through to an inner backend; test/run plumbing.
class CountingBackend : public Backend {
 public:
  explicit CountingBackend(std::shared_ptr<Backend> inner) : inner_(std::move(inner)) {}

  CompletionResponse complete(const CompletionRequest& request) override {
    calls_.fetch_add(1);
    return inner_->complete(request);
  }
  const BackendSpec& spec() const override { return inner_->spec(); }
  std::string id() const override { return inner_->id(); }
  long long calls() const { return calls_.load(); }

 private:
  std::shared_ptr<Backend> inner_;
  std::atomic<long long> calls_{0};
};

} // namespace tot
