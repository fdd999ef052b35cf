#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "webweaver/errors.hpp"
#include "webweaver/gateway.hpp"
#include "webweaver/memory_bank.hpp"
#include "webweaver/prompts.hpp"
#include "webweaver/readability.hpp"
#include "webweaver/tokens.hpp"
#include "webweaver/trajectory.hpp"

namespace webweaver {

struct SearchHit {
    std::string url;
    std::string title;
    std::string snippet;
    std::string query;  // the query that produced this hit
    bool operator==(const SearchHit&) const = default;
};

struct PageDigest {
    std::string url;
    std::string summary;
    std::vector<std::string> evidence;
};

class SearchProvider {
public:
    virtual ~SearchProvider() = default;
    /// Provider-ranked results for one query. Throws SearchProviderError.
    virtual std::vector<SearchHit> search(const std::string& query) = 0;
};

class Fetcher {
public:
    virtual ~Fetcher() = default;
    /// Raw document body for a URL. Throws FetchError.
    virtual std::string fetch(const std::string& url) = 0;
};

/// Page-content extractor interface for non-HTML documents. The engine ships
/// none by default; PDFs and friends are skipped unless one is registered.
class DocumentExtractor {
public:
    virtual ~DocumentExtractor() = default;
    virtual bool handles(const std::string& url) const = 0;
    virtual std::string extract(const std::string& body) const = 0;
};

inline std::string content_key(std::string_view text) {
    // FNV-1a 64, hex. Stable across platforms; used to key fixture and cache
    // files by query or URL.
    std::uint64_t hash = 1469598103934665603ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

/// Offline search results: one JSON file per query, named by content_key of
/// the exact query string. A missing file means the query found nothing.
class FixtureSearchProvider : public SearchProvider {
public:
    explicit FixtureSearchProvider(std::filesystem::path dir) : dir_(std::move(dir)) {}

    std::vector<SearchHit> search(const std::string& query) override {
        const auto path = dir_ / (content_key(query) + ".json");
        std::ifstream in(path, std::ios::binary);
        if (!in) return {};
        std::ostringstream buffer;
        buffer << in.rdbuf();
        nlohmann::json doc = nlohmann::json::parse(buffer.str(), nullptr, false);
        if (doc.is_discarded() || !doc.is_array()) {
            throw Error(ErrorKind::SearchProviderError,
                        "fixture " + path.string() + " is not a JSON array");
        }
        std::vector<SearchHit> hits;
        for (const auto& item : doc) {
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
    std::filesystem::path dir_;
};

/// Content-addressed page store: <dir>/<content_key(url)>.html. With an
/// upstream fetcher it acts as an on-disk cache; without one it is the
/// offline corpus and unknown URLs fail.
class DirectoryFetcher : public Fetcher {
public:
    explicit DirectoryFetcher(std::filesystem::path dir, std::shared_ptr<Fetcher> upstream = nullptr)
        : dir_(std::move(dir)), upstream_(std::move(upstream)) {}

    std::string fetch(const std::string& url) override {
        if (pre_fetch_hook) pre_fetch_hook(url);
        const auto path = dir_ / (content_key(url) + ".html");
        if (std::ifstream in(path, std::ios::binary); in) {
            std::ostringstream buffer;
            buffer << in.rdbuf();
            return buffer.str();
        }
        if (!upstream_) {
            throw Error(ErrorKind::FetchError, "no fixture for " + url);
        }
        const std::string body = upstream_->fetch(url);
        std::filesystem::create_directories(dir_);
        std::ofstream out(path, std::ios::binary);
        out << body;
        return body;
    }

    /// Test hook: runs before each lookup (used to randomize worker timing).
    std::function<void(const std::string&)> pre_fetch_hook;

private:
    std::filesystem::path dir_;
    std::shared_ptr<Fetcher> upstream_;
};

struct PipelineConfig {
    int max_queries = 5;            // queries accepted per search action
    int per_query_results = 10;     // provider hits kept per query
    int select_cap = 8;             // pages digested per search action
    int fetch_workers = 4;
    long summary_token_cap = 300;
    long evidence_item_token_cap = 200;
    int evidence_item_cap = 20;
    int per_run_saved_pages = 120;  // bank admission ceiling for one run
    bool two_call_digest = true;    // summary and evidence as separate calls
};

inline constexpr std::string_view kNoNewMaterialNotice =
    "No new material was found for this search.";

/// The planner's search action, end to end: query fan-out, LLM URL selection,
/// concurrent fetch+digest, memory admission, and the observation text.
class SearchPipeline {
public:
    SearchPipeline(std::shared_ptr<SearchProvider> provider, std::shared_ptr<Fetcher> fetcher,
                   Gateway& gateway, PipelineConfig config = {})
        : provider_(std::move(provider)),
          fetcher_(std::move(fetcher)),
          gateway_(&gateway),
          config_(config) {}

    void set_document_extractor(std::shared_ptr<DocumentExtractor> extractor) {
        extractor_ = std::move(extractor);
    }

    const PipelineConfig& config() const { return config_; }
    const std::vector<std::string>& skip_log() const { return skip_log_; }

    /// Union of per-query results, capped per query, deduplicated by URL with
    /// the first occurrence winning. Order: by query, then provider rank.
    std::vector<SearchHit> web_search(const std::vector<std::string>& queries,
                                      const std::string& goal) {
        (void)goal;
        if (queries.empty() || static_cast<int>(queries.size()) > config_.max_queries) {
            throw Error(ErrorKind::InvalidArgument,
                        "between 1 and " + std::to_string(config_.max_queries) +
                            " queries per search");
        }
        std::vector<SearchHit> out;
        std::set<std::string> seen;
        for (const auto& query : queries) {
            std::vector<SearchHit> hits = provider_->search(query);
            if (static_cast<int>(hits.size()) > config_.per_query_results) {
                hits.resize(static_cast<std::size_t>(config_.per_query_results));
            }
            for (auto& hit : hits) {
                if (seen.insert(hit.url).second) {
                    out.push_back(std::move(hit));
                }
            }
        }
        return out;
    }

    /// Stage-1 filter: the digester picks result numbers off a titles+snippets
    /// menu. Output is a subset of the input in input order. One malformed
    /// reply earns a re-prompt; a second falls back to the top results by
    /// provider rank, so selection always makes progress.
    std::vector<SearchHit> select_urls(const std::vector<SearchHit>& hits, const std::string& goal) {
        if (hits.empty()) {
            throw Error(ErrorKind::InvalidArgument, "select_urls requires hits");
        }
        const int cap = std::min<int>(config_.select_cap, static_cast<int>(hits.size()));

        std::string menu;
        for (std::size_t i = 0; i < hits.size(); ++i) {
            menu += std::to_string(i + 1) + ". " + hits[i].title + " - " + hits[i].snippet +
                    " (" + hits[i].url + ")\n";
        }
        const std::string prompt = prompts::interpolate(
            prompts::url_select,
            {{"goal", goal}, {"results", menu}, {"cap", std::to_string(cap)}});

        std::optional<std::vector<std::size_t>> picks;
        for (int attempt = 0; attempt < 2 && !picks; ++attempt) {
            const std::string reply =
                gateway_->complete(Slot::digester, {{MsgRole::user, prompt}}).content;
            picks = parse_index_reply(reply, hits.size());
        }
        std::vector<SearchHit> selected;
        if (picks) {
            for (std::size_t index : *picks) {
                selected.push_back(hits[index]);
                if (static_cast<int>(selected.size()) == cap) break;
            }
        } else {
            selected.assign(hits.begin(), hits.begin() + cap);
        }
        return selected;
    }

    /// Stage-2 filter: distill a goal-relevant summary and verbatim-leaning
    /// evidence items from one page. Summarization and extraction run as two
    /// digester calls by default, or as one structured call when
    /// two_call_digest is off. Two empty or refused replies for the summary
    /// mean the page is skipped.
    PageDigest digest_page(const std::string& page_text, const std::string& query,
                           const std::string& goal) {
        if (detail::trim(page_text).empty()) {
            throw Error(ErrorKind::DigestFailure, "page has no extractable text");
        }
        PageDigest digest;
        const std::map<std::string, std::string> slots = {
            {"query", query},
            {"goal", goal},
            {"page", page_text},
            {"max_tokens", std::to_string(config_.summary_token_cap)},
            {"max_items", std::to_string(config_.evidence_item_cap)}};

        if (!config_.two_call_digest) {
            std::string reply;
            for (int attempt = 0; attempt < 2 && detail::trim(reply).empty(); ++attempt) {
                const std::string prompt = prompts::interpolate(prompts::digest_combined, slots);
                reply = gateway_->complete(Slot::digester, {{MsgRole::user, prompt}}).content;
            }
            if (detail::trim(reply).empty()) {
                throw Error(ErrorKind::DigestFailure, "digester produced no digest");
            }
            // Summary paragraph up to the first blank line, evidence after it.
            const std::size_t split = reply.find("\n\n");
            const std::string summary_part =
                std::string(detail::trim(reply.substr(0, split)));
            if (summary_part.empty()) {
                throw Error(ErrorKind::DigestFailure, "combined digest lacks a summary");
            }
            digest.summary = truncate_to_tokens(summary_part, config_.summary_token_cap);
            if (split != std::string::npos) {
                append_evidence_lines(reply.substr(split + 2), digest);
            }
            return digest;
        }

        std::string summary;
        for (int attempt = 0; attempt < 2 && summary.empty(); ++attempt) {
            const std::string prompt = prompts::interpolate(prompts::summarize_page, slots);
            summary = std::string(
                detail::trim(gateway_->complete(Slot::digester, {{MsgRole::user, prompt}}).content));
        }
        if (summary.empty()) {
            throw Error(ErrorKind::DigestFailure, "digester produced no summary");
        }
        digest.summary = truncate_to_tokens(summary, config_.summary_token_cap);

        const std::string evidence_prompt =
            prompts::interpolate(prompts::extract_evidence, slots);
        append_evidence_lines(
            gateway_->complete(Slot::digester, {{MsgRole::user, evidence_prompt}}).content,
            digest);
        return digest;
    }

    /// Full search action. Admission order equals selected-hit order no matter
    /// how the fetch workers are scheduled, so the observation bytes are a
    /// pure function of the inputs. Oversized query lists from the model are
    /// clamped to the configured maximum rather than failing the run.
    std::string run_search_action(const SearchAction& action, MemoryBank& bank) {
        std::vector<std::string> queries = action.queries;
        if (static_cast<int>(queries.size()) > config_.max_queries) {
            skip_log_.push_back("query list clamped from " + std::to_string(queries.size()) +
                                " to " + std::to_string(config_.max_queries));
            queries.resize(static_cast<std::size_t>(config_.max_queries));
        }
        std::vector<SearchHit> hits = web_search(queries, action.goal);
        if (hits.empty()) {
            return std::string(kNoNewMaterialNotice);
        }
        std::vector<SearchHit> selected = select_urls(hits, action.goal);

        const long room = config_.per_run_saved_pages - static_cast<long>(bank.size());
        if (room <= 0) {
            skip_log_.push_back("saved-page cap reached; search skipped");
            return std::string(kNoNewMaterialNotice);
        }
        if (static_cast<long>(selected.size()) > room) {
            selected.resize(static_cast<std::size_t>(room));
        }

        // Fan out fetch+digest; slot i belongs to selected[i].
        std::vector<std::optional<PageDigest>> digests(selected.size());
        std::vector<std::string> failures(selected.size());
        std::atomic<std::size_t> next{0};
        const int workers =
            std::max(1, std::min<int>(config_.fetch_workers, static_cast<int>(selected.size())));
        auto work = [&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= selected.size()) return;
                try {
                    digests[i] = fetch_and_digest(selected[i], action.goal);
                } catch (const Error& e) {
                    failures[i] = e.what();
                }
            }
        };
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();

        // Coordinator: admit in selected order, then render summaries of the
        // newly admitted records only.
        std::vector<SourceRecord> fresh;
        for (std::size_t i = 0; i < selected.size(); ++i) {
            if (!digests[i]) {
                skip_log_.push_back(selected[i].url + ": " + failures[i]);
                continue;
            }
            const std::size_t before = bank.size();
            const SourceId id =
                bank.admit_source(selected[i].url, selected[i].title, action.goal,
                                  digests[i]->summary, digests[i]->evidence);
            if (bank.size() > before) {
                fresh.push_back(bank.get(id));
            }
        }
        if (fresh.empty()) {
            return std::string(kNoNewMaterialNotice);
        }
        return render_material_block(fresh, MaterialMode::summary);
    }

private:
    void append_evidence_lines(const std::string& reply, PageDigest& digest) const {
        std::istringstream lines(reply);
        std::string line;
        while (std::getline(lines, line) &&
               static_cast<int>(digest.evidence.size()) < config_.evidence_item_cap) {
            std::string item(detail::trim(line));
            if (item.rfind("- ", 0) == 0) item = std::string(detail::trim(item.substr(2)));
            if (item.empty()) continue;
            digest.evidence.push_back(truncate_to_tokens(item, config_.evidence_item_token_cap));
        }
    }

    PageDigest fetch_and_digest(const SearchHit& hit, const std::string& goal) {
        const std::string body = fetcher_->fetch(hit.url);
        std::string text;
        if (extractor_ && extractor_->handles(hit.url)) {
            text = extractor_->extract(body);
        } else {
            text = extract_main_text(body);
        }
        if (detail::trim(text).empty()) {
            throw Error(ErrorKind::DigestFailure, "no readable text");
        }
        PageDigest digest = digest_page(text, hit.query, goal);
        digest.url = hit.url;
        return digest;
    }

    /// "1,3,4" (or "1 3 4") to zero-based indices, in reply order, in-range
    /// only, duplicates dropped. Anything else is malformed.
    static std::optional<std::vector<std::size_t>> parse_index_reply(const std::string& reply,
                                                                     std::size_t limit) {
        std::vector<std::size_t> out;
        std::set<std::size_t> seen;
        std::size_t i = 0;
        bool any_token = false;
        while (i < reply.size()) {
            const char c = reply[i];
            if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
                ++i;
                continue;
            }
            if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
            std::size_t value = 0;
            while (i < reply.size() && std::isdigit(static_cast<unsigned char>(reply[i]))) {
                value = value * 10 + static_cast<std::size_t>(reply[i] - '0');
                ++i;
            }
            any_token = true;
            if (value < 1 || value > limit) return std::nullopt;
            if (seen.insert(value).second) out.push_back(value - 1);
        }
        if (!any_token || out.empty()) return std::nullopt;
        return out;
    }

    std::shared_ptr<SearchProvider> provider_;
    std::shared_ptr<Fetcher> fetcher_;
    Gateway* gateway_;
    PipelineConfig config_;
    std::shared_ptr<DocumentExtractor> extractor_;
    std::vector<std::string> skip_log_;
};

}  // namespace webweaver
