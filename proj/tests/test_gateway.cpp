#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <thread>

#include "webweaver/gateway.hpp"
#include "webweaver/http_backend.hpp"
#include "webweaver/net_guard.hpp"

using namespace webweaver;

namespace {

std::vector<ChatMessage> user_message(const std::string& text) {
    return {{MsgRole::user, text}};
}

Gateway scripted_gateway(std::shared_ptr<ScriptedBackend> backend, Slot slot = Slot::planner) {
    Gateway gateway;
    gateway.configure(slot, SlotConfig{backend, "test-model", 0.0, 1024});
    return gateway;
}

}  // namespace

TEST_CASE("scripted backend replays a single canned reply") {
    auto backend = std::make_shared<ScriptedBackend>(std::vector<ScriptEntry>{{"<terminate>", {}}});
    Gateway gateway = scripted_gateway(backend);
    ChatResponse response = gateway.complete(Slot::planner, user_message("go"));
    CHECK(response.content == "<terminate>");
    CHECK(response.finish_reason == FinishReason::stop);
    CHECK(response.input_tokens == estimate_tokens("go"));
    CHECK_THROWS_AS(gateway.complete(Slot::planner, user_message("again")), Error);
}

TEST_CASE("the same request sequence yields the same response sequence") {
    std::vector<ScriptEntry> script;
    for (int i = 0; i < 5; ++i) script.push_back({"reply " + std::to_string(i), {}});

    auto run = [&script] {
        auto backend = std::make_shared<ScriptedBackend>(script);
        Gateway gateway = scripted_gateway(backend);
        std::vector<std::string> replies;
        for (int i = 0; i < 5; ++i) {
            replies.push_back(
                gateway.complete(Slot::planner, user_message("step " + std::to_string(i))).content);
        }
        return replies;
    };
    CHECK(run() == run());
}

TEST_CASE("match-conditioned entries are chosen by content, not call order") {
    auto backend = std::make_shared<ScriptedBackend>(std::vector<ScriptEntry>{
        {"summary of beta", {"Summarize", "beta-marker"}},
        {"summary of alpha", {"Summarize", "alpha-marker"}},
        {"fallthrough", {}},
    });
    Gateway gateway = scripted_gateway(backend);
    CHECK(gateway.complete(Slot::planner, user_message("Summarize: alpha-marker text")).content ==
          "summary of alpha");
    CHECK(gateway.complete(Slot::planner, user_message("Summarize: beta-marker text")).content ==
          "summary of beta");
    CHECK(gateway.complete(Slot::planner, user_message("anything else")).content == "fallthrough");
}

TEST_CASE("request validation rejects malformed requests") {
    auto backend = std::make_shared<ScriptedBackend>(std::vector<ScriptEntry>{{"x", {}}});
    ChatRequest request;
    request.model_id = "m";
    CHECK_THROWS_AS(backend->complete(request), Error);  // no messages

    request.messages = {{MsgRole::assistant, "hi"}};
    CHECK_THROWS_AS(backend->complete(request), Error);  // bad first role

    request.messages = {{MsgRole::user, "hi"}};
    request.max_output_tokens = 0;
    CHECK_THROWS_AS(backend->complete(request), Error);
}

TEST_CASE("token budget blocks the crossing request before dispatch") {
    auto backend = std::make_shared<ScriptedBackend>(
        std::vector<ScriptEntry>{{"ok", {}}, {"ok", {}}, {"never", {}}});
    Gateway gateway;
    gateway.configure(Slot::planner, SlotConfig{backend, "m", 0.0, 100});
    gateway.set_budget(std::make_shared<TokenBudget>(250));

    CHECK(gateway.complete(Slot::planner, user_message(std::string(80, 'a'))).content == "ok");
    const long used_after_first = gateway.budget()->used();
    CHECK(used_after_first == 20 + 1);  // 80 bytes in, "ok" out

    // Second request: 21 used + 25 in + 100 reserved = 146 <= 250.
    CHECK(gateway.complete(Slot::planner, user_message(std::string(100, 'b'))).content == "ok");

    // Third request would need 47 + 125 + 100 > 250: refused before dispatch.
    const std::size_t requests_before = backend->request_log().size();
    try {
        gateway.complete(Slot::planner, user_message(std::string(500, 'c')));
        FAIL("expected BudgetExceeded");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::BudgetExceeded);
    }
    CHECK(backend->request_log().size() == requests_before);
    CHECK(gateway.budget()->used() < 250);
}

TEST_CASE("endpoint paths normalize trailing slashes") {
    CHECK(detail::endpoint_prefix("http://host/v1/") == "/v1");
    CHECK(detail::endpoint_prefix("http://host/v1") == "/v1");
    CHECK(detail::endpoint_prefix("http://host/") == "");
    CHECK(detail::endpoint_prefix("http://host") == "");
    CHECK_THROWS_AS(detail::split_url("no-scheme"), Error);
}

TEST_CASE("live backend raises AuthError before touching the network") {
    net::refuse_network(true);
    HttpBackend backend("http://127.0.0.1:1", "");
    ChatRequest request;
    request.messages = user_message("hello");
    request.model_id = "m";
    try {
        backend.complete(request);
        FAIL("expected AuthError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::AuthError);  // not NetworkRefused
    }
    net::refuse_network(false);
}

TEST_CASE("live backend speaks the chat-completions wire format") {
    httplib::Server server;
    std::atomic<int> calls{0};
    std::string seen_body;
    std::string seen_auth;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        const int call = ++calls;
        seen_body = req.body;
        seen_auth = req.get_header_value("Authorization");
        if (call == 1) {
            res.status = 500;
            return;
        }
        res.set_content(
            R"({"choices":[{"message":{"content":"pong"},"finish_reason":"stop"}],)"
            R"("usage":{"prompt_tokens":7,"completion_tokens":3}})",
            "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    RetryPolicy retry;
    retry.retries = 2;
    retry.backoff_ms = 1;
    HttpBackend backend("http://127.0.0.1:" + std::to_string(port) + "/v1", "sk-test", retry);

    ChatRequest request;
    request.messages = {{MsgRole::system, "sys"}, {MsgRole::user, "ping"}};
    request.model_id = "demo-model";
    request.max_output_tokens = 64;

    ChatResponse response = backend.complete(request);
    CHECK(response.content == "pong");
    CHECK(response.input_tokens == 7);
    CHECK(response.output_tokens == 3);
    CHECK(calls.load() == 2);  // one 500, one success
    CHECK(seen_auth == "Bearer sk-test");

    nlohmann::json body = nlohmann::json::parse(seen_body);
    CHECK(body["model"] == "demo-model");
    CHECK(body["messages"].size() == 2);
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["max_tokens"] == 64);
    CHECK_FALSE(body.contains("temperature"));  // provider default when unset

    SECTION("4xx responses are not retried") {
        server.Post("/v1/other", [](const httplib::Request&, httplib::Response&) {});
    }

    server.stop();
    server_thread.join();
}

TEST_CASE("live fetcher honors robots and truncates oversized bodies") {
    httplib::Server server;
    server.Get("/robots.txt", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("User-agent: *\nDisallow: /private\n", "text/plain");
    });
    server.Get("/private/doc", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("secret", "text/html");
    });
    server.Get("/public/doc", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("open text", "text/html");
    });
    server.Get("/public/huge", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(std::string(HttpFetcher::kMaxBodyBytes + 4096, 'h'), "text/html");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    const std::string base = "http://127.0.0.1:" + std::to_string(port);

    RetryPolicy retry;
    retry.retries = 0;
    retry.backoff_ms = 1;
    HttpFetcher fetcher(/*honor_robots=*/true, retry);
    CHECK(fetcher.fetch(base + "/public/doc") == "open text");
    try {
        fetcher.fetch(base + "/private/doc");
        FAIL("expected robots refusal");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::FetchError);
        CHECK(std::string(e.what()).find("robots") != std::string::npos);
    }
    CHECK(fetcher.fetch(base + "/public/huge").size() == HttpFetcher::kMaxBodyBytes);
    CHECK_THROWS_AS(fetcher.fetch(base + "/missing"), Error);

    HttpFetcher ignoring(/*honor_robots=*/false, retry);
    CHECK(ignoring.fetch(base + "/private/doc") == "secret");

    server.stop();
    server_thread.join();
}

TEST_CASE("live backend maps auth and refusal statuses") {
    httplib::Server server;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        nlohmann::json body = nlohmann::json::parse(req.body);
        const std::string model = body["model"];
        if (model == "denied") {
            res.status = 401;
        } else if (model == "empty") {
            res.set_content(R"({"choices":[{"message":{"content":""},"finish_reason":"stop"}]})",
                            "application/json");
        } else {
            res.status = 404;
        }
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    RetryPolicy retry;
    retry.retries = 0;
    retry.backoff_ms = 1;
    HttpBackend backend("http://127.0.0.1:" + std::to_string(port) + "/v1", "sk-test", retry);

    ChatRequest request;
    request.messages = user_message("x");

    request.model_id = "denied";
    try {
        backend.complete(request);
        FAIL("expected AuthError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::AuthError);
    }

    request.model_id = "empty";
    try {
        backend.complete(request);
        FAIL("expected ProviderRefusal");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ProviderRefusal);
    }

    request.model_id = "missing";
    try {
        backend.complete(request);
        FAIL("expected TransportError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::TransportError);
    }

    server.stop();
    server_thread.join();
}
