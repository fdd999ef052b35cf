#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "webweaver/gateway.hpp"
#include "webweaver/memory_bank.hpp"
#include "webweaver/outline.hpp"
#include "webweaver/prompts.hpp"
#include "webweaver/trajectory.hpp"

namespace webweaver {

/// The exact masking sentence substituted for consumed tool responses.
inline constexpr std::string_view kPruningPlaceholder =
    "The page content for the previous section has been masked for saving the space.";

struct WriterConfig {
    int max_turns = 60;
    long context_token_budget = 32768;
    MaterialMode retrieval_mode = MaterialMode::evidence;
    std::string placeholder_text{kPruningPlaceholder};
    bool pruning_enabled = true;

    void validate() const {
        if (max_turns <= 0 || context_token_budget <= 0) {
            throw Error(ErrorKind::ConfigError, "writer config values must be positive");
        }
        if (placeholder_text != kPruningPlaceholder) {
            throw Error(ErrorKind::ConfigError,
                        "placeholder_text must equal the canonical masking sentence");
        }
    }
};

struct ReportSection {
    int order = 1;                  // 1-based write order
    std::string text;               // verbatim <write> payload
    std::vector<SourceId> cited_ids;

    bool operator==(const ReportSection&) const = default;
};

struct Reference {
    SourceId id;
    std::string url;
    std::string title;
    bool operator==(const Reference&) const = default;
};

struct Report {
    std::vector<ReportSection> sections;
    std::vector<Reference> references;  // unique cited ids, first-citation order
    long total_output_tokens = 0;

    bool operator==(const Report&) const = default;
};

/// One detected departure from the outline's citation contract. Deviations
/// are recorded, never enforced: a live model may ask for anything.
struct Deviation {
    int turn_index = 0;
    std::string kind;     // retrieve-outside-outline | unknown-id | cite-not-retrieved | malformed-cite
    std::string detail;
};

struct WriteOutcome {
    Report report;
    std::string document;  // rendered markdown with numeric citation markers
    Trajectory trajectory{AgentRole::writer};
    std::vector<Deviation> deviations;
    std::vector<std::string> warnings;
    std::vector<SourceId> unknown_cited;      // cited ids missing from the bank
    std::vector<long> request_tokens;         // token count of each writer request
    std::vector<int> writes_before_request;   // completed sections before each request
};

struct CiteScan {
    std::vector<SourceId> ids;            // in order of appearance, duplicates kept
    std::vector<std::string> malformed;   // one entry per broken tag
};

/// Extracts the ids inside <cite id="..."> attributes. Malformed tags are
/// reported per tag and scanning continues after them.
inline CiteScan extract_cites(std::string_view section_text) {
    CiteScan scan;
    static constexpr std::string_view open = "<cite";
    std::size_t pos = 0;
    while ((pos = section_text.find(open, pos)) != std::string_view::npos) {
        const std::size_t tag_end = section_text.find('>', pos);
        if (tag_end == std::string_view::npos) {
            scan.malformed.push_back("unterminated <cite tag at offset " + std::to_string(pos));
            break;
        }
        const std::string_view tag = section_text.substr(pos, tag_end - pos + 1);
        const std::size_t attr = tag.find("id=\"");
        if (attr == std::string_view::npos) {
            scan.malformed.push_back("cite tag without id attribute at offset " +
                                     std::to_string(pos));
            pos = tag_end + 1;
            continue;
        }
        const std::size_t value_start = attr + 4;
        const std::size_t value_end = tag.find('"', value_start);
        if (value_end == std::string_view::npos) {
            scan.malformed.push_back("unterminated id attribute at offset " + std::to_string(pos));
            pos = tag_end + 1;
            continue;
        }
        const std::string_view body = tag.substr(value_start, value_end - value_start);
        std::size_t cursor = 0;
        while (cursor < body.size()) {
            std::size_t comma = body.find(',', cursor);
            if (comma == std::string_view::npos) comma = body.size();
            const std::string_view token = detail::trim(body.substr(cursor, comma - cursor));
            if (!token.empty()) {
                if (auto id = SourceId::parse(token)) {
                    scan.ids.push_back(*id);
                } else {
                    scan.malformed.push_back("bad id token '" + std::string(token) + "'");
                }
            }
            cursor = comma + 1;
        }
        if (section_text.find("</cite>", tag_end) == std::string_view::npos) {
            scan.malformed.push_back("cite tag never closed at offset " + std::to_string(pos));
        }
        pos = tag_end + 1;
    }
    return scan;
}

struct AssembledReport {
    Report report;
    std::string document;
    std::vector<SourceId> unknown_cited;
};

/// Builds the final report value and its rendered document: sections joined
/// in write order, cite tags replaced by bracketed numeric markers, and a
/// reference list ordered by first citation. Cited ids missing from the bank
/// render as [?] and are reported.
inline AssembledReport assemble_report(const std::vector<ReportSection>& sections,
                                       const MemoryBank& bank,
                                       TokenCounter counter = default_token_counter()) {
    if (sections.empty()) {
        throw Error(ErrorKind::EmptyReport, "no sections to assemble");
    }
    AssembledReport out;
    out.report.sections = sections;

    std::vector<SourceId> order;  // unique resolvable ids, first-citation order
    std::set<int> known, unknown;
    for (const auto& section : sections) {
        for (const auto& id : section.cited_ids) {
            if (bank.contains(id)) {
                if (known.insert(id.ordinal).second) order.push_back(id);
            } else if (unknown.insert(id.ordinal).second) {
                out.unknown_cited.push_back(id);
            }
        }
    }
    for (const auto& id : order) {
        const SourceRecord& record = bank.get(id);
        out.report.references.push_back({id, record.url, record.title});
    }

    auto marker_for = [&](SourceId id) -> std::string {
        for (std::size_t i = 0; i < order.size(); ++i) {
            if (order[i] == id) return "[" + std::to_string(i + 1) + "]";
        }
        return "[?]";
    };

    std::string body;
    for (const auto& section : sections) {
        if (!body.empty()) body += "\n\n";
        // Replace <cite id="...">inner</cite> with inner followed by markers.
        const std::string& text = section.text;
        std::size_t pos = 0;
        while (pos < text.size()) {
            const std::size_t open = text.find("<cite", pos);
            if (open == std::string::npos) {
                body.append(text.substr(pos));
                break;
            }
            body.append(text.substr(pos, open - pos));
            const std::size_t tag_end = text.find('>', open);
            const std::size_t close = tag_end == std::string::npos
                                          ? std::string::npos
                                          : text.find("</cite>", tag_end);
            if (tag_end == std::string::npos || close == std::string::npos) {
                body.append(text.substr(open));  // broken tag: keep verbatim
                break;
            }
            body.append(text.substr(tag_end + 1, close - tag_end - 1));
            const CiteScan tag_scan =
                extract_cites(text.substr(open, close + 7 - open));
            for (const auto& id : tag_scan.ids) body += marker_for(id);
            pos = close + 7;
        }
        out.report.total_output_tokens += counter(section.text);
    }

    out.document = body;
    if (!out.report.references.empty()) {
        out.document += "\n\n## References\n";
        for (std::size_t i = 0; i < out.report.references.size(); ++i) {
            const auto& ref = out.report.references[i];
            out.document += std::to_string(i + 1) + ". " + ref.title + " — " + ref.url + "\n";
        }
    }
    return out;
}

/// Renders the trajectory as request context with every observation at or
/// before `upto_turn` replaced by the placeholder. Idempotent; thoughts and
/// action texts are never touched.
inline std::string prune_context(const Trajectory& trajectory, int upto_turn,
                                 std::string_view placeholder) {
    std::string out;
    for (const auto& turn : trajectory.turns()) {
        if (!out.empty()) out += "\n";
        out += render_assistant_text(turn);
        if (turn.observation) {
            const std::string_view body =
                turn.index <= upto_turn ? placeholder : std::string_view(*turn.observation);
            out += "\n" + render_observation(body);
        }
    }
    return out;
}

namespace writer_detail {

inline std::vector<ChatMessage> context_messages(const std::string& task,
                                                 const Trajectory& trajectory,
                                                 int last_completed_write,
                                                 const WriterConfig& config) {
    std::vector<ChatMessage> messages{{MsgRole::system, std::string(prompts::writer_system)},
                                      {MsgRole::user, task}};
    for (const auto& turn : trajectory.turns()) {
        messages.push_back({MsgRole::assistant, render_assistant_text(turn)});
        if (turn.observation) {
            const bool masked = config.pruning_enabled && turn.index <= last_completed_write;
            messages.push_back({MsgRole::user, render_observation(masked ? config.placeholder_text
                                                                         : *turn.observation)});
        }
    }
    return messages;
}

}  // namespace writer_detail

/// Memory-grounded synthesis: a ReAct loop over retrieve/write/terminate.
/// After each completed write, every earlier tool response in the replayed
/// context is replaced by the placeholder before the next model call.
inline WriteOutcome write_report(const Outline& outline, MemoryBank& bank,
                                 const WriterConfig& config, Gateway& gateway,
                                 const std::string& question = {}) {
    config.validate();
    if (outline.roots.empty()) {
        throw Error(ErrorKind::InvalidArgument, "outline has no sections");
    }

    WriteOutcome outcome;

    std::set<int> outline_ids;
    for (const auto& id : outline_citations(outline)) {
        if (bank.contains(id)) {
            outline_ids.insert(id.ordinal);
        } else {
            outcome.warnings.push_back("outline cites unknown id " + id.str() +
                                       "; dropped from retrieval");
        }
    }

    std::string task;
    if (!question.empty()) task += "Question:\n" + question + "\n\n";
    task += "Write the full report following this outline:\n\n" + outline.raw_text;

    std::vector<ReportSection> sections;
    std::set<int> retrieved_so_far;
    int last_completed_write = -1;
    bool budget_stop = false;

    for (int slot = 0; slot < config.max_turns && !budget_stop; ++slot) {
        std::vector<ChatMessage> messages = writer_detail::context_messages(
            task, outcome.trajectory, last_completed_write, config);

        std::optional<ParsedTurn> parsed;
        for (int attempt = 0; attempt < 2; ++attempt) {
            outcome.request_tokens.push_back(gateway.request_tokens(messages));
            outcome.writes_before_request.push_back(static_cast<int>(sections.size()));
            ChatResponse response;
            try {
                response = gateway.complete(Slot::writer, messages);
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::BudgetExceeded && !sections.empty()) {
                    outcome.warnings.push_back("token budget exhausted; report is partial");
                    budget_stop = true;
                    break;
                }
                throw;
            }
            try {
                parsed = parse_assistant_turn(response.content, AgentRole::writer);
                break;
            } catch (const Error& e) {
                switch (e.kind()) {
                    case ErrorKind::MalformedTag:
                    case ErrorKind::MalformedPayload:
                    case ErrorKind::RoleViolation:
                    case ErrorKind::AmbiguousAction:
                        if (attempt == 1) {
                            outcome.warnings.push_back(
                                std::string("turn aborted after two invalid replies: ") + e.what());
                        } else {
                            messages.push_back({MsgRole::assistant, response.content});
                            messages.push_back(
                                {MsgRole::user,
                                 std::string("Your previous reply was invalid (") + e.what() +
                                     "). Reply again with exactly one valid action."});
                        }
                        break;
                    default:
                        throw;
                }
            }
        }
        if (!parsed) continue;

        Turn turn;
        turn.index = static_cast<int>(outcome.trajectory.size());
        turn.thought = parsed->thought;
        turn.action = parsed->action;

        switch (kind_of(parsed->action)) {
            case ActionKind::retrieve: {
                const auto& retrieve = std::get<RetrieveAction>(parsed->action);
                // A second retrieve before the section is written is allowed
                // but noteworthy; flag it in the run record.
                if (!outcome.trajectory.empty() &&
                    kind_of(outcome.trajectory.turns().back().action) == ActionKind::retrieve) {
                    outcome.deviations.push_back(
                        {turn.index, "second-retrieve-before-write",
                         "retrieve issued before the previous retrieval was written up"});
                }
                std::vector<SourceId> known;
                std::string missing;
                for (const auto& id : retrieve.ids) {
                    if (!bank.contains(id)) {
                        outcome.deviations.push_back(
                            {turn.index, "unknown-id", id.str() + " is not in the bank"});
                        if (!missing.empty()) missing += ", ";
                        missing += id.str();
                        continue;
                    }
                    if (!outline_ids.count(id.ordinal)) {
                        outcome.deviations.push_back({turn.index, "retrieve-outside-outline",
                                                      id.str() + " is not cited by the outline"});
                    }
                    known.push_back(id);
                    retrieved_so_far.insert(id.ordinal);
                }
                if (known.empty()) {
                    turn.observation = "No material found for the requested ids: " + missing + ".";
                } else {
                    turn.observation = render_material_block(bank.retrieve(known, retrieve.goal),
                                                             config.retrieval_mode);
                }
                break;
            }
            case ActionKind::write: {
                const auto& write = std::get<WriteAction>(parsed->action);
                ReportSection section;
                section.order = static_cast<int>(sections.size()) + 1;
                section.text = write.section_text;
                CiteScan scan = extract_cites(section.text);
                for (const auto& broken : scan.malformed) {
                    outcome.deviations.push_back({turn.index, "malformed-cite", broken});
                }
                for (const auto& id : scan.ids) {
                    if (!retrieved_so_far.count(id.ordinal)) {
                        outcome.deviations.push_back({turn.index, "cite-not-retrieved",
                                                      id.str() + " cited before any retrieval"});
                    }
                }
                section.cited_ids = std::move(scan.ids);
                sections.push_back(std::move(section));
                turn.observation =
                    "Section " + std::to_string(sections.size()) + " recorded.";
                break;
            }
            case ActionKind::terminate:
                if (sections.empty()) {
                    throw Error(ErrorKind::EmptyReport,
                                "writer terminated before writing any section");
                }
                break;
            default:
                break;  // unreachable: role gating admits no other kinds
        }

        const bool was_write = kind_of(parsed->action) == ActionKind::write;
        outcome.trajectory.append(std::move(turn));
        if (was_write) {
            last_completed_write = static_cast<int>(outcome.trajectory.size()) - 1;
        }
        if (outcome.trajectory.terminated()) break;
    }

    if (sections.empty()) {
        throw Error(ErrorKind::MaxTurnsExceeded, "writer produced no sections");
    }
    if (!outcome.trajectory.terminated() && !budget_stop) {
        outcome.warnings.push_back("max_turns reached; report is partial");
    }

    AssembledReport assembled = assemble_report(sections, bank, gateway.counter());
    outcome.report = std::move(assembled.report);
    outcome.document = std::move(assembled.document);
    outcome.unknown_cited = std::move(assembled.unknown_cited);
    return outcome;
}

}  // namespace webweaver
