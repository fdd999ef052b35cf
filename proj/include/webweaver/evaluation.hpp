#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "webweaver/gateway.hpp"
#include "webweaver/memory_bank.hpp"
#include "webweaver/outline.hpp"
#include "webweaver/planner.hpp"
#include "webweaver/prompts.hpp"
#include "webweaver/writer.hpp"

namespace webweaver {

struct JudgeResult {
    std::string criterion;
    int rating = 0;  // integral, 0..10
    std::string justification;
};

struct JudgeOutcome {
    std::vector<JudgeResult> per_criterion;
    std::vector<std::string> failed_criteria;  // criteria whose call or parse failed
    double overall = 0.0;                      // mean rating x 10 over available results
    bool partial = false;
};

/// Byte-exact interpolation of the outline-judge template for one criterion.
inline std::string build_judge_prompt(const prompts::JudgeCriterion& criterion,
                                      const std::string& question, const std::string& answer) {
    if (criterion.name.empty() || criterion.description.empty() || question.empty() ||
        answer.empty()) {
        throw Error(ErrorKind::InvalidArgument, "judge prompt inputs must be non-empty");
    }
    return prompts::interpolate(prompts::judge_prompt_template,
                                {{"criterion_name", std::string(criterion.name)},
                                 {"criterion_description", std::string(criterion.description)},
                                 {"question", question},
                                 {"answer", answer}});
}

/// Extracts the first well-formed {"rating": r, "justification": j} object,
/// tolerating code fences and surrounding prose. The rating must be an
/// integer in [0, 10].
inline JudgeResult parse_judge_response(const std::string& text) {
    for (std::size_t start = 0; start < text.size(); ++start) {
        if (text[start] != '{') continue;
        int depth = 0;
        bool in_string = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (c == '\\') ++i;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}') {
                if (--depth > 0) continue;
                const std::string candidate = text.substr(start, i - start + 1);
                nlohmann::json doc = nlohmann::json::parse(candidate, nullptr, false);
                if (doc.is_discarded() || !doc.is_object() || !doc.contains("rating") ||
                    !doc.contains("justification") || !doc["justification"].is_string()) {
                    break;  // resume the outer scan after this balanced group
                }
                const nlohmann::json& rating = doc["rating"];
                if (!rating.is_number()) {
                    break;  // not a rating object; keep scanning
                }
                if (rating.is_number_float() &&
                    rating.get<double>() != std::floor(rating.get<double>())) {
                    throw Error(ErrorKind::RatingOutOfRange,
                                "rating must be an integer, got " + rating.dump());
                }
                const double value = rating.get<double>();
                if (value < 0 || value > 10) {
                    throw Error(ErrorKind::RatingOutOfRange,
                                "rating " + rating.dump() + " is outside [0, 10]");
                }
                JudgeResult result;
                result.rating = static_cast<int>(value);
                result.justification = doc["justification"].get<std::string>();
                return result;
            }
        }
    }
    throw Error(ErrorKind::MalformedJudgeResponse, "no rating/justification object found");
}

/// Scores an outline on the six rubric criteria, one judge call each. Failed
/// criteria are flagged and the overall mean is computed over the rest.
inline JudgeOutcome judge_outline(const std::string& outline_raw, const std::string& question,
                                  Gateway& gateway) {
    if (detail::trim(outline_raw).empty()) {
        throw Error(ErrorKind::InvalidArgument, "outline text is empty");
    }
    JudgeOutcome outcome;
    long total = 0;
    for (const auto& criterion : prompts::judge_criteria) {
        const std::string prompt = build_judge_prompt(criterion, question, outline_raw);
        try {
            const ChatResponse response =
                gateway.complete(Slot::judge, {{MsgRole::user, prompt}});
            JudgeResult result = parse_judge_response(response.content);
            result.criterion = std::string(criterion.name);
            total += result.rating;
            outcome.per_criterion.push_back(std::move(result));
        } catch (const Error& e) {
            switch (e.kind()) {
                case ErrorKind::MalformedJudgeResponse:
                case ErrorKind::RatingOutOfRange:
                case ErrorKind::ProviderRefusal:
                case ErrorKind::TransportError:
                case ErrorKind::ScriptExhausted:
                    outcome.failed_criteria.push_back(std::string(criterion.name));
                    break;
                default:
                    throw;
            }
        }
    }
    outcome.partial = !outcome.failed_criteria.empty();
    if (!outcome.per_criterion.empty()) {
        outcome.overall =
            10.0 * static_cast<double>(total) / static_cast<double>(outcome.per_criterion.size());
    }
    return outcome;
}

// ---------------------------------------------------------------------------
// Structural citation check (FACT-style proxy)
// ---------------------------------------------------------------------------

struct CitationStructure {
    long total_cites = 0;            // id occurrences across all cite tags
    long unique_cited_sources = 0;   // distinct resolvable ids
    std::vector<SourceId> dangling;  // distinct unresolvable ids
    double structural_accuracy = 1.0;
};

inline CitationStructure check_citation_structure(const Report& report, const MemoryBank& bank) {
    CitationStructure out;
    std::set<int> unique_known, unique_dangling;
    long resolvable = 0;
    for (const auto& section : report.sections) {
        for (const auto& id : section.cited_ids) {
            ++out.total_cites;
            if (bank.contains(id)) {
                ++resolvable;
                unique_known.insert(id.ordinal);
            } else if (unique_dangling.insert(id.ordinal).second) {
                out.dangling.push_back(id);
            }
        }
    }
    out.unique_cited_sources = static_cast<long>(unique_known.size());
    out.structural_accuracy =
        out.total_cites == 0
            ? 1.0
            : static_cast<double>(resolvable) / static_cast<double>(out.total_cites);
    return out;
}

// ---------------------------------------------------------------------------
// Run statistics (the nine trace-level columns)
// ---------------------------------------------------------------------------

struct TraceStats {
    long search_steps = 0;
    long outline_tokens = 0;
    long outline_optimizations = 0;
    long saved_pages = 0;
    long search_queries = 0;
    long evidence_tokens = 0;
    long summary_tokens = 0;
    long output_tokens = 0;
    long writing_steps = 0;

    bool operator==(const TraceStats&) const = default;
};

inline TraceStats compute_trace_stats(const Trajectory& planner_trajectory,
                                      const Trajectory& writer_trajectory, const Outline& outline,
                                      const MemoryBank& bank, const Report& report,
                                      const TokenCounter& counter = default_token_counter()) {
    TraceStats stats;
    for (const auto& turn : planner_trajectory.turns()) {
        if (kind_of(turn.action) == ActionKind::search) {
            ++stats.search_steps;
            stats.search_queries +=
                static_cast<long>(std::get<SearchAction>(turn.action).queries.size());
        } else if (kind_of(turn.action) == ActionKind::write_outline) {
            ++stats.outline_optimizations;
        }
    }
    stats.outline_tokens = counter(outline.raw_text);
    stats.saved_pages = static_cast<long>(bank.size());
    stats.summary_tokens = bank.total_summary_tokens();
    stats.evidence_tokens = bank.total_evidence_tokens();
    for (const auto& section : report.sections) {
        stats.output_tokens += counter(section.text);
    }
    stats.writing_steps = static_cast<long>(writer_trajectory.size()) -
                          (writer_trajectory.terminated() ? 1 : 0);
    return stats;
}

inline nlohmann::json stats_to_json(const TraceStats& stats) {
    return nlohmann::json{{"search_steps", stats.search_steps},
                          {"outline_tokens", stats.outline_tokens},
                          {"outline_optimizations", stats.outline_optimizations},
                          {"saved_pages", stats.saved_pages},
                          {"search_queries", stats.search_queries},
                          {"evidence_tokens", stats.evidence_tokens},
                          {"summary_tokens", stats.summary_tokens},
                          {"output_tokens", stats.output_tokens},
                          {"writing_steps", stats.writing_steps}};
}

}  // namespace webweaver
