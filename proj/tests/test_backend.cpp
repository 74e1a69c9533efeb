#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <filesystem>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "tot/backends.hpp"
#include "tot/types.hpp"

using namespace tot;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("tot_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

} // namespace

TEST_CASE("estimate_tokens is ceil(bytes/4)") {
  CHECK(estimate_tokens("") == 0);
  CHECK(estimate_tokens("12345678") == 2);
  CHECK(estimate_tokens("123456789") == 3);
  CHECK(estimate_tokens("1") == 1);
}

TEST_CASE("cache_key semantics") {
  CompletionRequest a;
  a.prompt = "hello world";
  a.n = 3;
  a.temperature = 0.7;

  CompletionRequest b = a;
  CHECK(cache_key(a, "gpt-4") == cache_key(b, "gpt-4"));

  // Key order of a serialized request cannot matter: rebuild from JSON with
  // scrambled key order and compare.
  const std::string json_a = R"({"prompt":"hello world","n":3,"temperature":0.7})";
  const std::string json_b = R"({"temperature":0.7,"prompt":"hello world","n":3})";
  auto parse = [](const std::string& text) {
    Json j = Json::parse(text);
    CompletionRequest r;
    r.prompt = j.at("prompt").get<std::string>();
    r.n = j.at("n").get<int>();
    r.temperature = j.at("temperature").get<double>();
    return r;
  };
  CHECK(cache_key(parse(json_a), "gpt-4") == cache_key(parse(json_b), "gpt-4"));

  b.temperature = 0.0;
  CHECK(cache_key(a, "gpt-4") != cache_key(b, "gpt-4"));
  CHECK(cache_key(a, "gpt-4") != cache_key(a, "gpt-3.5"));

  b = a;
  b.n = 4;
  CHECK(cache_key(a, "gpt-4") != cache_key(b, "gpt-4"));
  b = a;
  b.max_tokens = 100;
  CHECK(cache_key(a, "gpt-4") != cache_key(b, "gpt-4"));
  b = a;
  b.stop = {"\n"};
  CHECK(cache_key(a, "gpt-4") != cache_key(b, "gpt-4"));

  // Prompt normalization: CRLF and trailing whitespace do not split keys.
  b = a;
  b.prompt = "hello world  \n";
  CHECK(cache_key(a, "gpt-4") == cache_key(b, "gpt-4"));
}

TEST_CASE("scripted backend returns table rows in order") {
  ScriptedBackend backend;
  backend.add("alpha", {"one", "two", "three"});
  backend.add("alpha", "later");

  CompletionRequest request;
  request.prompt = "prompt mentioning alpha";
  request.n = 3;
  auto response = backend.complete(request);
  REQUIRE(response.texts.size() == 3);
  CHECK(response.texts[0] == "one");
  CHECK(response.texts[1] == "two");
  CHECK(response.texts[2] == "three");

  request.n = 2;
  response = backend.complete(request);  // single text replicated
  CHECK(response.texts == std::vector<std::string>{"later", "later"});

  CHECK_THROWS_AS(backend.complete(request), BackendError); // exhausted
  request.prompt = "nothing matches";
  CHECK_THROWS_AS(backend.complete(request), BackendError); // no pattern

  // A multi-text row cannot serve a larger n.
  ScriptedBackend strict;
  strict.add("x", std::vector<std::string>{"a", "b"});
  CompletionRequest big;
  big.prompt = "x";
  big.n = 3;
  CHECK_THROWS_AS(strict.complete(big), BackendError);
}

TEST_CASE("scripted backend usage fields come from estimates") {
  ScriptedBackend backend;
  backend.add("q", "12345678"); // 8 bytes -> 2 tokens
  CompletionRequest request;
  request.prompt = "q"; // 1 byte -> 1 token
  auto response = backend.complete(request);
  CHECK(response.prompt_tokens == 1);
  CHECK(response.completion_tokens == 2);
}

TEST_CASE("oracle backend replicates single texts to n") {
  OracleBackend backend("echo", [](const CompletionRequest& r) {
    return std::vector<std::string>{"reply to " + std::to_string(r.n)};
  });
  CompletionRequest request;
  request.prompt = "anything";
  request.n = 4;
  auto response = backend.complete(request);
  REQUIRE(response.texts.size() == 4);
  CHECK(response.texts[0] == response.texts[3]);
}

TEST_CASE("replay cache records and replays byte-identically") {
  const auto dir = temp_dir("replay");
  auto inner = std::make_shared<ScriptedBackend>();
  inner->add("question", std::vector<std::string>{"answer A", "answer B"});
  auto counting = std::make_shared<CountingBackend>(inner);

  CompletionRequest request;
  request.prompt = "question";
  request.n = 2;

  ReplayBackend recorder(ReplayBackend::Mode::Record, dir, counting);
  auto first = recorder.complete(request);
  CHECK(counting->calls() == 1);
  CHECK(recorder.misses() == 1);

  // Same request hits the cache even in record mode.
  auto second = recorder.complete(request);
  CHECK(counting->calls() == 1);
  CHECK(second.texts == first.texts);

  // Replay mode: pure function of the cache, zero inner calls. The spec
  // carries the model the cache was recorded under.
  BackendSpec replay_spec;
  replay_spec.model = inner->spec().model;
  ReplayBackend replayer(ReplayBackend::Mode::Replay, dir, nullptr, replay_spec);
  auto third = replayer.complete(request);
  auto fourth = replayer.complete(request);
  CHECK(third.texts == first.texts);
  CHECK(third.texts == fourth.texts);
  CHECK(third.prompt_tokens == first.prompt_tokens);
  CHECK(counting->calls() == 1);

  // A miss in replay mode fails loudly and names the key.
  CompletionRequest other;
  other.prompt = "unseen prompt";
  try {
    replayer.complete(other);
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(std::string(e.what()).find(cache_key(other, inner->spec().model)) !=
          std::string::npos);
  }
}

TEST_CASE("request validation") {
  ScriptedBackend backend;
  CompletionRequest bad;
  bad.prompt = "x";
  bad.n = 0;
  CHECK_THROWS_AS(backend.complete(bad), std::invalid_argument);
  bad.n = 1;
  bad.temperature = -1.0;
  CHECK_THROWS_AS(backend.complete(bad), std::invalid_argument);
}

TEST_CASE("remote backend speaks the chat-completions wire format") {
  httplib::Server server;
  Json seen_body;
  std::string seen_auth;
  std::atomic<int> hits{0};

  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen_body = Json::parse(req.body);
    seen_auth = req.get_header_value("Authorization");
    hits.fetch_add(1);
    const int n = seen_body.value("n", 1);
    Json choices = Json::array();
    for (int i = 0; i < n; ++i) {
      choices.push_back({{"message", {{"role", "assistant"},
                                      {"content", "choice " + std::to_string(i)}}}});
    }
    Json body = {{"choices", choices},
                 {"usage", {{"prompt_tokens", 12}, {"completion_tokens", 34}}}};
    res.set_content(body.dump(), "application/json");
  });

  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&server]() { server.listen_after_bind(); });
  server.wait_until_ready();

  setenv("TOT_TEST_KEY", "secret-token", 1);
  BackendSpec spec;
  spec.kind = BackendKind::Remote;
  spec.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  spec.model = "test-model";
  spec.api_key_env = "TOT_TEST_KEY";
  RemoteBackend backend(spec);

  CompletionRequest request;
  request.prompt = "say something";
  request.system = "be terse";
  request.n = 5;
  request.temperature = 0.7;
  request.stop = {"\n\n"};

  auto response = backend.complete(request);
  REQUIRE(response.texts.size() == 5);
  CHECK(response.prompt_tokens == 12);
  CHECK(response.completion_tokens == 34);

  CHECK(seen_body["model"] == "test-model");
  CHECK(seen_body["n"] == 5);
  CHECK(seen_body["temperature"].get<double>() == doctest::Approx(0.7));
  REQUIRE(seen_body["messages"].size() == 2);
  CHECK(seen_body["messages"][0]["role"] == "system");
  CHECK(seen_body["messages"][1]["role"] == "user");
  CHECK(seen_body["messages"][1]["content"] == "say something");
  CHECK(seen_body["stop"][0] == "\n\n");
  CHECK(seen_auth == "Bearer secret-token");
  CHECK(backend.network_attempts() == 1);
  CHECK(hits.load() == 1);

  server.stop();
  server_thread.join();
}

TEST_CASE("remote backend retries 5xx then fails with status and body") {
  httplib::Server server;
  std::atomic<int> hits{0};
  server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    hits.fetch_add(1);
    res.status = 503;
    res.set_content("overloaded", "text/plain");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&server]() { server.listen_after_bind(); });
  server.wait_until_ready();

  BackendSpec spec;
  spec.kind = BackendKind::Remote;
  spec.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  spec.model = "test-model";
  spec.retry_limit = 2;
  spec.retry_backoff_ms = 1;
  RemoteBackend backend(spec);

  CompletionRequest request;
  request.prompt = "hi";
  try {
    backend.complete(request);
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(e.status == 503);
    CHECK(e.body == "overloaded");
  }
  CHECK(hits.load() == 3); // initial + 2 retries
  server.stop();
  server_thread.join();
}

TEST_CASE("cost ledger accumulates and recomputes") {
  BackendSpec prices;
  prices.price_prompt_per_1k = 0.03;
  prices.price_completion_per_1k = 0.06;

  CostLedger ledger;
  CompletionResponse r1;
  r1.prompt_tokens = 1000;
  r1.completion_tokens = 1800;
  ledger.add(r1, prices);
  CHECK(ledger.cost == doctest::Approx(0.138));

  CompletionResponse r2;
  r2.prompt_tokens = 2200;
  r2.completion_tokens = 6700;
  ledger.add(r2, prices);
  CHECK(ledger.prompt_tokens == 3200);
  CHECK(ledger.completion_tokens == 8500);
  CHECK(ledger.cost ==
        doctest::Approx(compute_cost(3200, 8500, 0.03, 0.06)));

  CostLedger other;
  other.add(r1, prices);
  CostLedger merged = ledger;
  merged.merge(other);
  CHECK(merged.prompt_tokens == ledger.prompt_tokens + 1000);
}
