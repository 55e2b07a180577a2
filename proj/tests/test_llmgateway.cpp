#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <mutex>

#include "fake_server.hpp"
#include "wordalise/llmgateway.hpp"

using namespace wordalise;
using nlohmann::json;

namespace {

constexpr const char* kKeyVar = "WORDALISE_TEST_API_KEY";

PromptBundle tiny_bundle() {
  PromptBundle b;
  b.messages = {{Role::system, "sys", Tag::system}, {Role::user, "hello", Tag::query}};
  return b;
}

std::string ok_completion(const std::string& text) {
  return json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}, {"finish_reason", "stop"}}}},
              {"usage", {{"prompt_tokens", 3}, {"completion_tokens", 2}, {"total_tokens", 5}}}}
      .dump();
}

ProviderConfig config_for(const testing::LoopbackServer& s) {
  ProviderConfig c;
  c.base_url = s.url("/v1");
  c.model_name = "test-model";
  c.api_key_env = kKeyVar;
  c.retry_base_delay = std::chrono::milliseconds(1);
  c.timeout = std::chrono::milliseconds(5000);
  c.max_retries = 2;
  return c;
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no wordalise::Error thrown");
  return Errc::BadRequest;
}

struct KeyGuard {
  explicit KeyGuard(const char* value) {
    if (value) {
      ::setenv(kKeyVar, value, 1);
    } else {
      ::unsetenv(kKeyVar);
    }
  }
  ~KeyGuard() { ::unsetenv(kKeyVar); }
};

}  // namespace

TEST_CASE("request body mirrors the bundle and options") {
  ProviderConfig c;
  c.model_name = "m";
  c.temperature = 0.3;
  HttpProvider p(c);
  auto body = p.chat_request_body(tiny_bundle(), {});
  CHECK(body["model"] == "m");
  CHECK(body["temperature"] == 0.3);
  CHECK(body["messages"].size() == 2);
  CHECK(body["messages"][1] == json{{"role", "user"}, {"content", "hello"}});
  CHECK_FALSE(body.contains("seed"));
  body = p.chat_request_body(tiny_bundle(), {0.0, 42u});
  CHECK(body["temperature"] == 0.0);
  CHECK(body["seed"] == 42);
  const std::string texts[] = {"a", "b"};
  CHECK(p.embedding_request_body(texts)["input"] == json{"a", "b"});
}

TEST_CASE("config validation") {
  ProviderConfig c;
  c.temperature = -1;
  CHECK(code_of([&] { validate(c); }) == Errc::InvalidConfig);
  c = {};
  c.timeout = std::chrono::milliseconds(0);
  CHECK(code_of([&] { validate(c); }) == Errc::InvalidConfig);
  c = {};
  c.base_url = "no-scheme";
  CHECK(code_of([&] { HttpProvider{c}; }) == Errc::InvalidConfig);
  const auto merged = provider_config_from_json(
      json{{"model_name", "x"}, {"timeout_ms", 1234}, {"temperature", 0.1}, {"retry_base_delay_ms", 7}});
  CHECK(merged.retry_base_delay.count() == 7);
  CHECK(merged.model_name == "x");
  CHECK(merged.timeout.count() == 1234);
  CHECK(merged.temperature == 0.1);
}

TEST_CASE("successful completion over loopback, with bearer auth") {
  testing::LoopbackServer s;
  std::string auth, seen_body;
  s.server().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    seen_body = req.body;
    res.set_content(ok_completion("hi there"), "application/json");
  });
  s.start();
  KeyGuard key("sk-test-123");
  HttpProvider p(config_for(s));
  const auto r = chat_complete(tiny_bundle(), p, {});
  CHECK(r.text == "hi there");
  CHECK(r.ok());
  CHECK(r.usage.total_tokens == 5);
  CHECK(auth == "Bearer sk-test-123");
  CHECK(json::parse(seen_body)["model"] == "test-model");
}

TEST_CASE("missing key fails before any request") {
  testing::LoopbackServer s;
  std::atomic<int> hits{0};
  s.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.set_content(ok_completion("x"), "application/json");
  });
  s.start();
  KeyGuard key(nullptr);
  HttpProvider p(config_for(s));
  CHECK(code_of([&] { p.complete(tiny_bundle(), {}); }) == Errc::AuthError);
  CHECK(hits == 0);
}

TEST_CASE("429 honours Retry-After and then succeeds") {
  testing::LoopbackServer s;
  std::atomic<int> hits{0};
  s.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    if (hits++ == 0) {
      res.status = 429;
      res.set_header("Retry-After", "0.01");
      return;
    }
    res.set_content(ok_completion("after wait"), "application/json");
  });
  s.start();
  KeyGuard key("k");
  HttpProvider p(config_for(s));
  CHECK(p.complete(tiny_bundle(), {}).text == "after wait");
  CHECK(hits == 2);
}

TEST_CASE("persistent 429 surfaces RateLimited after the retry budget") {
  testing::LoopbackServer s;
  std::atomic<int> hits{0};
  s.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 429;
  });
  s.start();
  KeyGuard key("k");
  HttpProvider p(config_for(s));
  CHECK(code_of([&] { p.complete(tiny_bundle(), {}); }) == Errc::RateLimited);
  CHECK(hits == 3);
}

TEST_CASE("5xx is retried; 401 is not") {
  testing::LoopbackServer s;
  std::atomic<int> hits{0};
  std::atomic<int> status{500};
  s.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = status;
    res.set_content("{}", "application/json");
  });
  s.start();
  KeyGuard key("k");
  HttpProvider p(config_for(s));
  CHECK(code_of([&] { p.complete(tiny_bundle(), {}); }) == Errc::TransportError);
  CHECK(hits == 3);
  hits = 0;
  status = 401;
  CHECK(code_of([&] { p.complete(tiny_bundle(), {}); }) == Errc::AuthError);
  CHECK(hits == 1);
}

TEST_CASE("malformed responses") {
  testing::LoopbackServer s;
  std::string body = "not json";
  s.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(body, "application/json");
  });
  s.start();
  KeyGuard key("k");
  HttpProvider p(config_for(s));
  CHECK(code_of([&] { p.complete(tiny_bundle(), {}); }) == Errc::MalformedProviderResponse);
  body = R"({"choices": []})";
  CHECK(code_of([&] { p.complete(tiny_bundle(), {}); }) == Errc::MalformedProviderResponse);
  body = R"({"choices": [{"message": {"content": ""}, "finish_reason": "stop"}]})";
  CHECK(code_of([&] { p.complete(tiny_bundle(), {}); }) == Errc::MalformedProviderResponse);
  body = R"({"choices": [{"message": {"content": null}, "finish_reason": "content_filter"}]})";
  const auto r = p.complete(tiny_bundle(), {});
  CHECK_FALSE(r.ok());
  CHECK(r.text.empty());
}

TEST_CASE("unreachable host is a transport error") {
  testing::LoopbackServer s;
  s.start();
  auto cfg = config_for(s);
  s.stop();
  cfg.max_retries = 1;
  KeyGuard key("k");
  HttpProvider p(cfg);
  const auto code = code_of([&] { p.complete(tiny_bundle(), {}); });
  CHECK((code == Errc::TransportError || code == Errc::Timeout));
  CHECK(is_provider_error(code));
}

TEST_CASE("embeddings over loopback") {
  testing::LoopbackServer s;
  s.server().Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
    const auto in = json::parse(req.body)["input"];
    json data = json::array();
    // Reply out of order; the index field decides placement.
    for (int i = int(in.size()) - 1; i >= 0; --i) data.push_back({{"index", i}, {"embedding", {double(i), 1.0}}});
    res.set_content(json{{"data", data}}.dump(), "application/json");
  });
  s.start();
  KeyGuard key("k");
  HttpProvider p(config_for(s));
  const std::string texts[] = {"a", "b", "c"};
  const auto v = embed(texts, p);
  REQUIRE(v.size() == 3);
  CHECK(v[2](0) == 2.0);
  CHECK(v[0](1) == 1.0);
  CHECK(code_of([&] { embed(std::span<const std::string>{}, p); }) == Errc::EmptyInput);
}

TEST_CASE("concurrency is bounded by max_concurrency") {
  testing::LoopbackServer s;
  std::atomic<int> in_flight{0}, peak{0};
  s.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    const int now = ++in_flight;
    int p = peak.load();
    while (now > p && !peak.compare_exchange_weak(p, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    --in_flight;
    res.set_content(ok_completion("x"), "application/json");
  });
  s.start();
  KeyGuard key("k");
  auto cfg = config_for(s);
  cfg.max_concurrency = 2;
  HttpProvider p(cfg);
  std::vector<std::thread> ts;
  for (int i = 0; i < 6; ++i) ts.emplace_back([&] { p.complete(tiny_bundle(), {}); });
  for (auto& t : ts) t.join();
  CHECK(peak <= 2);
  CHECK(peak >= 1);
}

TEST_CASE("redaction and bundle shape guard") {
  CHECK(redact("key=abc and abc again", "abc") == "key=*** and *** again");
  CHECK(redact("nothing", "") == "nothing");
  ProviderConfig c;
  HttpProvider p(c);
  PromptBundle no_system;
  no_system.messages = {{Role::user, "x", Tag::query}};
  CHECK(code_of([&] { chat_complete(no_system, p); }) == Errc::BadRequest);
}
