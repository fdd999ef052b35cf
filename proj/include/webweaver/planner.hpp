#pragma once

#include <optional>
#include <string>
#include <vector>

#include "webweaver/gateway.hpp"
#include "webweaver/outline.hpp"
#include "webweaver/prompts.hpp"
#include "webweaver/search.hpp"
#include "webweaver/trajectory.hpp"

namespace webweaver {

struct PlannerConfig {
    int max_turns = 40;
    int max_saved_pages = 120;
    int min_rounds_before_terminate = 1;

    void validate() const {
        if (max_turns <= 0 || max_saved_pages <= 0 || min_rounds_before_terminate <= 0) {
            throw Error(ErrorKind::ConfigError, "planner config values must be positive");
        }
    }
};

struct PlanResult {
    Outline outline;
    Trajectory trajectory{AgentRole::planner};
    std::vector<std::string> warnings;
};

/// Number of write_outline actions in a planner trajectory, i.e. how many
/// outline-optimization rounds the run performed.
inline int count_optimization_rounds(const Trajectory& trajectory) {
    int rounds = 0;
    for (const auto& turn : trajectory.turns()) {
        if (kind_of(turn.action) == ActionKind::write_outline) ++rounds;
    }
    return rounds;
}

namespace planner_detail {

inline std::vector<ChatMessage> base_messages(const std::string& question) {
    return {{MsgRole::system, std::string(prompts::planner_system)},
            {MsgRole::user, question}};
}

inline std::vector<ChatMessage> context_messages(const std::string& question,
                                                 const Trajectory& trajectory) {
    std::vector<ChatMessage> messages = base_messages(question);
    for (const auto& turn : trajectory.turns()) {
        messages.push_back({MsgRole::assistant, render_assistant_text(turn)});
        if (turn.observation) {
            messages.push_back({MsgRole::user, render_observation(*turn.observation)});
        }
    }
    return messages;
}

inline std::string outline_ack(int round, const Outline& outline, const MemoryBank& bank) {
    const ValidationReport report = validate_outline(outline, bank);
    const auto leaves = outline_leaves(outline);
    const std::size_t cited = leaves.size() - report.uncited_sections.size();
    std::string ack = "Outline round " + std::to_string(round) + " recorded. Cited leaves: " +
                      std::to_string(cited) + "/" + std::to_string(leaves.size()) +
                      ". Dangling ids: ";
    if (report.dangling_ids.empty()) {
        ack += "none.";
    } else {
        for (std::size_t i = 0; i < report.dangling_ids.size(); ++i) {
            if (i) ack += ", ";
            ack += report.dangling_ids[i].str();
        }
        ack += ".";
    }
    return ack;
}

}  // namespace planner_detail

/// The research cycle: a ReAct loop that interleaves search actions with
/// outline revisions, in any order the model chooses, until it terminates.
/// The returned outline is always the latest valid one; terminating before
/// any outline exists is re-prompted once and then fails with NoOutline.
inline PlanResult plan(const std::string& question, const PlannerConfig& config, Gateway& gateway,
                       SearchPipeline& pipeline, MemoryBank& bank) {
    config.validate();
    if (detail::trim(question).empty()) {
        throw Error(ErrorKind::InvalidArgument, "question must be non-empty");
    }

    PlanResult result;
    std::optional<Outline> latest;
    int rounds = 0;

    for (int slot = 0; slot < config.max_turns; ++slot) {
        std::vector<ChatMessage> messages =
            planner_detail::context_messages(question, result.trajectory);

        std::optional<ParsedTurn> parsed;
        std::optional<Outline> outline_candidate;
        std::string raw_reply;
        bool rejected_terminate = false;

        for (int attempt = 0; attempt < 2; ++attempt) {
            ChatResponse response;
            try {
                response = gateway.complete(Slot::planner, messages);
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::BudgetExceeded && latest) {
                    result.warnings.push_back("token budget exhausted; returning round " +
                                              std::to_string(latest->round));
                    result.outline = *latest;
                    return result;
                }
                throw;
            }
            raw_reply = response.content;

            std::string complaint;
            try {
                ParsedTurn candidate = parse_assistant_turn(raw_reply, AgentRole::planner);
                if (kind_of(candidate.action) == ActionKind::terminate &&
                    rounds < config.min_rounds_before_terminate) {
                    if (rejected_terminate || attempt == 1) {
                        if (rounds == 0) {
                            throw Error(ErrorKind::NoOutline,
                                        "planner terminated twice before writing any outline");
                        }
                        result.warnings.push_back("terminated before min_rounds_before_terminate");
                        parsed = std::move(candidate);
                        break;
                    }
                    rejected_terminate = true;
                    complaint = "Terminate rejected: write the outline with <write_outline> "
                                "before terminating.";
                } else if (kind_of(candidate.action) == ActionKind::write_outline) {
                    outline_candidate =
                        parse_outline(std::get<WriteOutlineAction>(candidate.action).outline_text,
                                      bank);
                    parsed = std::move(candidate);
                    break;
                } else {
                    parsed = std::move(candidate);
                    break;
                }
            } catch (const Error& e) {
                switch (e.kind()) {
                    case ErrorKind::MalformedTag:
                    case ErrorKind::MalformedPayload:
                    case ErrorKind::RoleViolation:
                    case ErrorKind::AmbiguousAction:
                    case ErrorKind::UnparseableOutline:
                    case ErrorKind::MalformedCitationTag:
                        complaint = std::string("Your previous reply was invalid (") + e.what() +
                                    "). Reply again with exactly one valid action.";
                        break;
                    default:
                        throw;
                }
            }
            if (attempt == 1) {
                result.warnings.push_back("turn aborted after two invalid replies: " + complaint);
            } else {
                messages.push_back({MsgRole::assistant, raw_reply});
                messages.push_back({MsgRole::user, complaint});
            }
        }
        if (!parsed) continue;  // aborted slot, counts toward max_turns

        Turn turn;
        turn.index = static_cast<int>(result.trajectory.size());
        turn.thought = parsed->thought;
        turn.action = parsed->action;

        switch (kind_of(parsed->action)) {
            case ActionKind::search:
                turn.observation =
                    pipeline.run_search_action(std::get<SearchAction>(parsed->action), bank);
                break;
            case ActionKind::write_outline: {
                ++rounds;
                outline_candidate->round = rounds;
                latest = std::move(outline_candidate);
                turn.observation = planner_detail::outline_ack(rounds, *latest, bank);
                break;
            }
            case ActionKind::terminate:
                break;
            default:
                break;  // unreachable: role gating admits no other kinds
        }

        result.trajectory.append(std::move(turn));
        if (result.trajectory.terminated()) {
            if (!latest) {
                throw Error(ErrorKind::NoOutline, "planner terminated without an outline");
            }
            result.outline = *latest;
            return result;
        }
    }

    if (!latest) {
        throw Error(ErrorKind::MaxTurnsExceeded,
                    "max_turns reached without any outline being written");
    }
    result.warnings.push_back("max_turns reached; returning round " +
                              std::to_string(latest->round));
    result.outline = *latest;
    return result;
}

}  // namespace webweaver
