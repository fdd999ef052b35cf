#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "webweaver/errors.hpp"
#include "webweaver/memory_bank.hpp"
#include "webweaver/planner.hpp"
#include "webweaver/search.hpp"
#include "webweaver/writer.hpp"

namespace webweaver {

enum class RunMode { live, offline };

struct ModelSlotSettings {
    std::string model_id;
    std::optional<double> temperature;
    int max_output_tokens = 4096;
};

/// Everything one run needs. Precedence: command-line flags > environment
/// variables (WEBWEAVER_API_KEY, WEBWEAVER_BASE_URL, WEBWEAVER_SEARCH_KEY) >
/// config file > defaults.
struct RunConfig {
    std::string question;
    RunMode mode = RunMode::offline;
    std::filesystem::path out_dir = "out";
    long seed = 0;  // reserved; the pipeline has no randomized choices today
    long token_budget = 1'000'000;

    // live endpoints
    std::string api_base_url;
    std::string api_key;
    std::string search_base_url;
    std::string search_key;
    std::filesystem::path fetch_cache_dir;  // empty: no on-disk cache
    bool honor_robots = true;

    ModelSlotSettings planner_model{"", std::nullopt, 8192};
    ModelSlotSettings writer_model{"", std::nullopt, 8192};
    ModelSlotSettings digester_model{"", 0.0, 2048};
    ModelSlotSettings judge_model{"", 0.0, 1024};

    PlannerConfig planner;
    WriterConfig writer;
    PipelineConfig pipeline;

    // offline fixtures
    std::filesystem::path scripts_path;
    std::filesystem::path search_fixtures_dir;
    std::filesystem::path page_fixtures_dir;

    void validate() const {
        if (mode == RunMode::offline) {
            if (scripts_path.empty() || search_fixtures_dir.empty() ||
                page_fixtures_dir.empty()) {
                throw Error(ErrorKind::ConfigError,
                            "offline mode requires offline.scripts, offline.search_fixtures and "
                            "offline.page_fixtures");
            }
        } else {
            if (api_key.empty()) {
                throw Error(ErrorKind::AuthError,
                            "live mode requires an API key (config api.api_key or "
                            "WEBWEAVER_API_KEY)");
            }
            if (api_base_url.empty()) {
                throw Error(ErrorKind::ConfigError,
                            "live mode requires api.base_url or WEBWEAVER_BASE_URL");
            }
        }
        planner.validate();
        writer.validate();
    }
};

namespace config_detail {

inline ModelSlotSettings slot_from_json(const nlohmann::json& value, ModelSlotSettings defaults) {
    if (value.is_string()) {
        defaults.model_id = value.get<std::string>();
        return defaults;
    }
    if (!value.is_object()) {
        throw Error(ErrorKind::ConfigError, "model slot must be a string or object");
    }
    if (value.contains("id")) defaults.model_id = value["id"].get<std::string>();
    if (value.contains("temperature")) {
        defaults.temperature = value["temperature"].is_null()
                                   ? std::optional<double>{}
                                   : std::optional<double>{value["temperature"].get<double>()};
    }
    if (value.contains("max_output_tokens")) {
        defaults.max_output_tokens = value["max_output_tokens"].get<int>();
    }
    return defaults;
}

inline MaterialMode retrieval_mode_from_string(const std::string& text) {
    if (text == "evidence") return MaterialMode::evidence;
    if (text == "summary") return MaterialMode::summary;
    if (text == "both") return MaterialMode::summary_and_evidence;
    throw Error(ErrorKind::ConfigError,
                "retrieval_mode must be evidence, summary or both; got '" + text + "'");
}

}  // namespace config_detail

inline RunConfig config_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw Error(ErrorKind::ConfigError, "config root must be a JSON object");
    }
    RunConfig config;
    try {
        config.question = doc.value("question", "");
        if (doc.contains("mode")) {
            const std::string mode = doc["mode"].get<std::string>();
            if (mode == "live") config.mode = RunMode::live;
            else if (mode == "offline") config.mode = RunMode::offline;
            else throw Error(ErrorKind::ConfigError, "mode must be live or offline");
        }
        if (doc.contains("out_dir")) config.out_dir = doc["out_dir"].get<std::string>();
        config.seed = doc.value("seed", 0L);
        config.token_budget = doc.value("token_budget", config.token_budget);

        if (doc.contains("api")) {
            const auto& api = doc["api"];
            config.api_base_url = api.value("base_url", "");
            config.api_key = api.value("api_key", "");
        }
        if (doc.contains("search")) {
            const auto& search = doc["search"];
            config.search_base_url = search.value("base_url", "");
            config.search_key = search.value("api_key", "");
        }
        if (doc.contains("fetch")) {
            const auto& fetch = doc["fetch"];
            if (fetch.contains("cache_dir")) {
                config.fetch_cache_dir = fetch["cache_dir"].get<std::string>();
            }
            config.honor_robots = fetch.value("honor_robots", true);
        }
        if (doc.contains("models")) {
            const auto& models = doc["models"];
            if (models.contains("planner")) {
                config.planner_model =
                    config_detail::slot_from_json(models["planner"], config.planner_model);
            }
            if (models.contains("writer")) {
                config.writer_model =
                    config_detail::slot_from_json(models["writer"], config.writer_model);
            }
            if (models.contains("digester")) {
                config.digester_model =
                    config_detail::slot_from_json(models["digester"], config.digester_model);
            }
            if (models.contains("judge")) {
                config.judge_model =
                    config_detail::slot_from_json(models["judge"], config.judge_model);
            }
        }
        if (doc.contains("planner")) {
            const auto& planner = doc["planner"];
            config.planner.max_turns = planner.value("max_turns", config.planner.max_turns);
            config.planner.max_saved_pages =
                planner.value("max_saved_pages", config.planner.max_saved_pages);
            config.planner.min_rounds_before_terminate = planner.value(
                "min_rounds_before_terminate", config.planner.min_rounds_before_terminate);
            config.pipeline.per_run_saved_pages = config.planner.max_saved_pages;
        }
        if (doc.contains("writer")) {
            const auto& writer = doc["writer"];
            config.writer.max_turns = writer.value("max_turns", config.writer.max_turns);
            config.writer.context_token_budget =
                writer.value("context_token_budget", config.writer.context_token_budget);
            if (writer.contains("retrieval_mode")) {
                config.writer.retrieval_mode = config_detail::retrieval_mode_from_string(
                    writer["retrieval_mode"].get<std::string>());
            }
            config.writer.pruning_enabled =
                writer.value("pruning_enabled", config.writer.pruning_enabled);
        }
        if (doc.contains("pipeline")) {
            const auto& pipe = doc["pipeline"];
            auto& p = config.pipeline;
            p.max_queries = pipe.value("max_queries", p.max_queries);
            p.per_query_results = pipe.value("per_query_results", p.per_query_results);
            p.select_cap = pipe.value("select_cap", p.select_cap);
            p.fetch_workers = pipe.value("fetch_workers", p.fetch_workers);
            p.summary_token_cap = pipe.value("summary_token_cap", p.summary_token_cap);
            p.evidence_item_token_cap =
                pipe.value("evidence_item_token_cap", p.evidence_item_token_cap);
            p.evidence_item_cap = pipe.value("evidence_item_cap", p.evidence_item_cap);
            p.per_run_saved_pages = pipe.value("per_run_saved_pages", p.per_run_saved_pages);
            p.two_call_digest = pipe.value("two_call_digest", p.two_call_digest);
        }
        if (doc.contains("offline")) {
            const auto& offline = doc["offline"];
            if (offline.contains("scripts")) {
                config.scripts_path = offline["scripts"].get<std::string>();
            }
            if (offline.contains("search_fixtures")) {
                config.search_fixtures_dir = offline["search_fixtures"].get<std::string>();
            }
            if (offline.contains("page_fixtures")) {
                config.page_fixtures_dir = offline["page_fixtures"].get<std::string>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ConfigError, std::string("bad config value: ") + e.what());
    }
    return config;
}

inline RunConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open config file " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    nlohmann::json doc = nlohmann::json::parse(buffer.str(), nullptr, false);
    if (doc.is_discarded()) {
        throw Error(ErrorKind::ConfigError, path.string() + " is not valid JSON");
    }
    return config_from_json(doc);
}

/// Environment overrides sit between the config file and the flags.
inline void apply_env_overrides(RunConfig& config) {
    if (const char* key = std::getenv("WEBWEAVER_API_KEY"); key && *key) {
        config.api_key = key;
    }
    if (const char* url = std::getenv("WEBWEAVER_BASE_URL"); url && *url) {
        config.api_base_url = url;
    }
    if (const char* key = std::getenv("WEBWEAVER_SEARCH_KEY"); key && *key) {
        config.search_key = key;
    }
}

}  // namespace webweaver
