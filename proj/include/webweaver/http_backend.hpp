#pragma once

// Live transports: OpenAI-compatible chat completions and a plain page
// fetcher. Kept out of gateway.hpp so offline builds of the core never pull
// in httplib.

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "webweaver/errors.hpp"
#include "webweaver/gateway.hpp"
#include "webweaver/net_guard.hpp"
#include "webweaver/search.hpp"

namespace webweaver {

namespace detail {

struct SplitUrl {
    std::string scheme_host;  // "https://api.example.com:8443"
    std::string path;         // "/v1" or "/"
};

inline SplitUrl split_url(const std::string& url) {
    const std::size_t scheme = url.find("://");
    if (scheme == std::string::npos) {
        throw Error(ErrorKind::ConfigError, "url lacks a scheme: " + url);
    }
    const std::size_t path_start = url.find('/', scheme + 3);
    if (path_start == std::string::npos) {
        return {url, ""};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

/// Path prefix for building endpoint routes: trailing slashes dropped so
/// "https://host/v1/" and "https://host/v1" address the same API.
inline std::string endpoint_prefix(const std::string& base_url) {
    std::string path = split_url(base_url).path;
    while (!path.empty() && path.back() == '/') path.pop_back();
    return path;
}

}  // namespace detail

struct RetryPolicy {
    int retries = 2;
    int backoff_ms = 250;  // doubled per attempt
};

/// Chat-completions client for any OpenAI-compatible endpoint. Transient
/// transport failures (connection errors, 429, 5xx) are retried with
/// exponential backoff; well-formed responses are never retried.
class HttpBackend : public Backend {
public:
    HttpBackend(std::string base_url, std::string api_key, RetryPolicy retry = {},
                TokenCounter counter = default_token_counter())
        : base_url_(std::move(base_url)),
          api_key_(std::move(api_key)),
          retry_(retry),
          counter_(std::move(counter)) {}

    ChatResponse complete(const ChatRequest& request) override {
        request.validate();
        if (api_key_.empty()) {
            throw Error(ErrorKind::AuthError, "no API key configured");
        }

        nlohmann::json body;
        body["model"] = request.model_id;
        nlohmann::json messages = nlohmann::json::array();
        for (const auto& message : request.messages) {
            messages.push_back({{"role", to_string(message.role)}, {"content", message.content}});
        }
        body["messages"] = std::move(messages);
        if (request.temperature) body["temperature"] = *request.temperature;
        body["max_tokens"] = request.max_output_tokens;
        const std::string payload = body.dump();

        const auto url = detail::split_url(base_url_);
        const std::string path = detail::endpoint_prefix(base_url_) + "/chat/completions";

        std::string last_failure = "no attempt made";
        for (int attempt = 0; attempt <= retry_.retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(retry_.backoff_ms << (attempt - 1)));
            }
            net::check_network_allowed("chat completion");
            httplib::Client client(url.scheme_host);
            client.set_connection_timeout(20, 0);
            client.set_read_timeout(120, 0);
            client.set_bearer_token_auth(api_key_);
            auto result = client.Post(path, payload, "application/json");
            if (!result) {
                last_failure = "connection failure (" + httplib::to_string(result.error()) + ")";
                continue;
            }
            if (result->status == 401 || result->status == 403) {
                throw Error(ErrorKind::AuthError,
                            "endpoint rejected the credential (HTTP " +
                                std::to_string(result->status) + ")");
            }
            if (result->status == 429 || result->status >= 500) {
                last_failure = "HTTP " + std::to_string(result->status);
                continue;
            }
            if (result->status != 200) {
                throw Error(ErrorKind::TransportError,
                            "HTTP " + std::to_string(result->status) + ": " + result->body);
            }
            return parse_completion(result->body, request);
        }
        throw Error(ErrorKind::TransportError,
                    "gave up after " + std::to_string(retry_.retries + 1) + " attempts: " +
                        last_failure);
    }

    std::string name() const override { return "http:" + base_url_; }

private:
    ChatResponse parse_completion(const std::string& body, const ChatRequest& request) const {
        nlohmann::json doc = nlohmann::json::parse(body, nullptr, false);
        if (doc.is_discarded() || !doc.contains("choices") || doc["choices"].empty()) {
            throw Error(ErrorKind::ProviderRefusal, "response carries no choices");
        }
        const nlohmann::json& choice = doc["choices"][0];
        ChatResponse response;
        response.content = choice.value("message", nlohmann::json::object()).value("content", "");
        const std::string finish = choice.value("finish_reason", "stop");
        response.finish_reason = finish == "length" ? FinishReason::length
                                : finish == "stop"  ? FinishReason::stop
                                                    : FinishReason::error;
        if (response.content.empty() && response.finish_reason != FinishReason::error) {
            throw Error(ErrorKind::ProviderRefusal, "provider returned empty content");
        }
        if (doc.contains("usage")) {
            response.input_tokens = doc["usage"].value("prompt_tokens", 0);
            response.output_tokens = doc["usage"].value("completion_tokens", 0);
        } else {
            for (const auto& message : request.messages) {
                response.input_tokens += counter_(message.content);
            }
            response.output_tokens = counter_(response.content);
        }
        return response;
    }

    std::string base_url_;
    std::string api_key_;
    RetryPolicy retry_;
    TokenCounter counter_;
};

/// Generic JSON search endpoint: GET {base_url}/search?q=<query>, optional
/// bearer key, response {"results": [{"url", "title", "snippet"}, ...]}.
/// Works against any self-hosted metasearch instance exposing that shape.
class HttpSearchProvider : public SearchProvider {
public:
    HttpSearchProvider(std::string base_url, std::string api_key = {})
        : base_url_(std::move(base_url)), api_key_(std::move(api_key)) {}

    std::vector<SearchHit> search(const std::string& query) override {
        const auto url = detail::split_url(base_url_);
        net::check_network_allowed("web search");
        httplib::Client client(url.scheme_host);
        client.set_connection_timeout(20, 0);
        client.set_read_timeout(20, 0);
        if (!api_key_.empty()) client.set_bearer_token_auth(api_key_);
        httplib::Params params{{"q", query}};
        auto result =
            client.Get(detail::endpoint_prefix(base_url_) + "/search", params, httplib::Headers{});
        if (!result || result->status != 200) {
            throw Error(ErrorKind::SearchProviderError,
                        "search endpoint failed" +
                            (result ? " with HTTP " + std::to_string(result->status) : ""));
        }
        nlohmann::json doc = nlohmann::json::parse(result->body, nullptr, false);
        if (doc.is_discarded() || !doc.contains("results") || !doc["results"].is_array()) {
            throw Error(ErrorKind::SearchProviderError, "search endpoint returned no results array");
        }
        std::vector<SearchHit> hits;
        for (const auto& item : doc["results"]) {
            SearchHit hit;
            hit.url = item.value("url", "");
            hit.title = item.value("title", "");
            hit.snippet = item.value("snippet", "");
            hit.query = query;
            if (!hit.url.empty()) hits.push_back(std::move(hit));
        }
        return hits;
    }

private:
    std::string base_url_;
    std::string api_key_;
};

/// Live page fetcher: 20 s timeout, bounded retries, 2 MB body cap, and
/// optional robots.txt exclusion honored per host (on by default).
class HttpFetcher : public Fetcher {
public:
    explicit HttpFetcher(bool honor_robots = true, RetryPolicy retry = {})
        : honor_robots_(honor_robots), retry_(retry) {}

    static constexpr std::size_t kMaxBodyBytes = 2 * 1024 * 1024;

    std::string fetch(const std::string& url) override {
        const auto split = detail::split_url(url);
        if (honor_robots_ && robots_disallows(split.scheme_host, split.path.empty() ? "/" : split.path)) {
            throw Error(ErrorKind::FetchError, "robots.txt disallows " + url);
        }
        std::string last_failure = "no attempt made";
        for (int attempt = 0; attempt <= retry_.retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(retry_.backoff_ms << (attempt - 1)));
            }
            net::check_network_allowed("page fetch");
            httplib::Client client(split.scheme_host);
            client.set_connection_timeout(20, 0);
            client.set_read_timeout(20, 0);
            client.set_follow_location(true);
            auto result = client.Get(split.path.empty() ? "/" : split.path);
            if (!result) {
                last_failure = "connection failure";
                continue;
            }
            if (result->status >= 500) {
                last_failure = "HTTP " + std::to_string(result->status);
                continue;
            }
            if (result->status != 200) {
                throw Error(ErrorKind::FetchError,
                            url + " returned HTTP " + std::to_string(result->status));
            }
            std::string body = result->body;
            if (body.size() > kMaxBodyBytes) body.resize(kMaxBodyBytes);
            return body;
        }
        throw Error(ErrorKind::FetchError, url + ": " + last_failure);
    }

private:
    bool robots_disallows(const std::string& scheme_host, const std::string& path) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = robots_.find(scheme_host);
        if (it == robots_.end()) {
            std::vector<std::string> rules;
            net::check_network_allowed("robots.txt fetch");
            httplib::Client client(scheme_host);
            client.set_connection_timeout(10, 0);
            client.set_read_timeout(10, 0);
            if (auto result = client.Get("/robots.txt"); result && result->status == 200) {
                rules = parse_disallow_rules(result->body);
            }
            it = robots_.emplace(scheme_host, std::move(rules)).first;
        }
        for (const auto& prefix : it->second) {
            if (!prefix.empty() && path.rfind(prefix, 0) == 0) return true;
        }
        return false;
    }

    // Disallow prefixes that apply to User-agent: * groups.
    static std::vector<std::string> parse_disallow_rules(const std::string& body) {
        std::vector<std::string> rules;
        bool applies = false;
        std::size_t pos = 0;
        while (pos <= body.size()) {
            std::size_t end = body.find('\n', pos);
            if (end == std::string::npos) end = body.size();
            std::string line = body.substr(pos, end - pos);
            pos = end + 1;
            if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
            const auto colon = line.find(':');
            if (colon == std::string::npos) continue;
            auto strip = [](std::string s) {
                while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(0, 1);
                while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
                return s;
            };
            std::string key = strip(line.substr(0, colon));
            std::string value = strip(line.substr(colon + 1));
            for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            if (key == "user-agent") {
                applies = value == "*";
            } else if (key == "disallow" && applies && !value.empty()) {
                rules.push_back(value);
            }
        }
        return rules;
    }

    bool honor_robots_;
    RetryPolicy retry_;
    std::mutex mutex_;
    std::map<std::string, std::vector<std::string>> robots_;
};

}  // namespace webweaver
