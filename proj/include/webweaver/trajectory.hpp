#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <zlib.h>

#include <json.hpp>

#include "webweaver/errors.hpp"

namespace webweaver {

enum class AgentRole { planner, writer };

inline const char* to_string(AgentRole role) {
    return role == AgentRole::planner ? "planner" : "writer";
}

inline AgentRole role_from_string(std::string_view text) {
    if (text == "planner") return AgentRole::planner;
    if (text == "writer") return AgentRole::writer;
    throw Error(ErrorKind::CorruptRecord, "unknown agent role '" + std::string(text) + "'");
}

/// Citation id into the memory bank, rendered as "id_<ordinal>".
struct SourceId {
    int ordinal = 0;

    std::string str() const { return "id_" + std::to_string(ordinal); }

    static std::optional<SourceId> parse(std::string_view text) {
        if (text.size() < 4 || text.substr(0, 3) != "id_") return std::nullopt;
        int value = 0;
        for (char c : text.substr(3)) {
            if (c < '0' || c > '9') return std::nullopt;
            value = value * 10 + (c - '0');
            if (value > 100'000'000) return std::nullopt;
        }
        if (value <= 0) return std::nullopt;
        return SourceId{value};
    }

    auto operator<=>(const SourceId&) const = default;
};

// ---------------------------------------------------------------------------
// Action space
// ---------------------------------------------------------------------------

struct SearchAction {
    std::vector<std::string> queries;
    std::string goal;
    bool operator==(const SearchAction&) const = default;
};

struct WriteOutlineAction {
    std::string outline_text;
    bool operator==(const WriteOutlineAction&) const = default;
};

struct RetrieveAction {
    std::vector<SourceId> ids;
    std::string goal;
    bool operator==(const RetrieveAction&) const = default;
};

struct WriteAction {
    std::string section_text;
    bool operator==(const WriteAction&) const = default;
};

struct TerminateAction {
    bool operator==(const TerminateAction&) const = default;
};

using Action = std::variant<SearchAction, WriteOutlineAction, RetrieveAction, WriteAction, TerminateAction>;

enum class ActionKind { search, write_outline, retrieve, write, terminate };

inline ActionKind kind_of(const Action& action) {
    return std::visit(
        [](const auto& a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, SearchAction>) return ActionKind::search;
            else if constexpr (std::is_same_v<T, WriteOutlineAction>) return ActionKind::write_outline;
            else if constexpr (std::is_same_v<T, RetrieveAction>) return ActionKind::retrieve;
            else if constexpr (std::is_same_v<T, WriteAction>) return ActionKind::write;
            else return ActionKind::terminate;
        },
        action);
}

inline const char* to_string(ActionKind kind) {
    switch (kind) {
        case ActionKind::search: return "search";
        case ActionKind::write_outline: return "write_outline";
        case ActionKind::retrieve: return "retrieve";
        case ActionKind::write: return "write";
        case ActionKind::terminate: return "terminate";
    }
    return "unknown";
}

inline bool action_allowed_for(AgentRole role, ActionKind kind) {
    if (kind == ActionKind::terminate) return true;
    if (role == AgentRole::planner) {
        return kind == ActionKind::search || kind == ActionKind::write_outline;
    }
    return kind == ActionKind::retrieve || kind == ActionKind::write;
}

// ---------------------------------------------------------------------------
// Turns and trajectories
// ---------------------------------------------------------------------------

struct Turn {
    int index = 0;
    std::optional<std::string> thought;
    Action action = TerminateAction{};
    std::optional<std::string> observation;

    bool operator==(const Turn&) const = default;
};

/// One agent run: an ordered ReAct history of thought/action/observation
/// records. Append enforces the structural invariants (contiguous indices,
/// observations on every non-final turn, nothing after a terminate).
class Trajectory {
public:
    Trajectory() = default;
    explicit Trajectory(AgentRole role) : role_(role) {}

    AgentRole role() const { return role_; }
    const std::vector<Turn>& turns() const { return turns_; }
    bool terminated() const { return terminated_; }
    bool empty() const { return turns_.empty(); }
    std::size_t size() const { return turns_.size(); }

    void append(Turn turn) {
        if (terminated_) {
            throw Error(ErrorKind::InvariantViolation,
                        "terminate-finality: cannot append to a terminated trajectory");
        }
        if (turn.index != static_cast<int>(turns_.size())) {
            throw Error(ErrorKind::InvariantViolation,
                        "index-contiguity: expected index " + std::to_string(turns_.size()) +
                            ", got " + std::to_string(turn.index));
        }
        const bool is_terminate = kind_of(turn.action) == ActionKind::terminate;
        if (is_terminate && turn.observation) {
            throw Error(ErrorKind::InvariantViolation,
                        "terminate-observation: a terminate turn carries no observation");
        }
        if (!turns_.empty() && !turns_.back().observation) {
            throw Error(ErrorKind::InvariantViolation,
                        "observation-missing: non-final turn " +
                            std::to_string(turns_.back().index) + " has no observation");
        }
        if (!action_allowed_for(role_, kind_of(turn.action))) {
            throw Error(ErrorKind::InvariantViolation,
                        std::string("role-gating: action '") + to_string(kind_of(turn.action)) +
                            "' is outside the " + to_string(role_) + " action space");
        }
        turns_.push_back(std::move(turn));
        if (is_terminate) terminated_ = true;
    }

    bool operator==(const Trajectory& other) const {
        return role_ == other.role_ && terminated_ == other.terminated_ && turns_ == other.turns_;
    }

private:
    AgentRole role_ = AgentRole::planner;
    std::vector<Turn> turns_;
    bool terminated_ = false;
};

// ---------------------------------------------------------------------------
// Tag grammar
// ---------------------------------------------------------------------------

namespace tags {
inline constexpr std::string_view think_open = "<think>";
inline constexpr std::string_view think_close = "</think>";
inline constexpr std::string_view tool_call_open = "<tool_call>";
inline constexpr std::string_view tool_call_close = "</tool_call>";
inline constexpr std::string_view write_outline_open = "<write_outline>";
inline constexpr std::string_view write_outline_close = "</write_outline>";
inline constexpr std::string_view write_open = "<write>";
inline constexpr std::string_view write_close = "</write>";
inline constexpr std::string_view terminate_token = "<terminate>";
inline constexpr std::string_view tool_response_open = "<tool_response>";
inline constexpr std::string_view tool_response_close = "</tool_response>";
}  // namespace tags

struct ParsedTurn {
    std::optional<std::string> thought;
    Action action = TerminateAction{};
    /// Non-fatal oddities observed while parsing (extra think blocks, ...).
    std::vector<std::string> diagnostics;
};

namespace detail {

inline std::string_view trim(std::string_view text) {
    std::size_t begin = 0, end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return text.substr(begin, end - begin);
}

inline std::vector<std::string> parse_string_list(const nlohmann::json& value, const char* field) {
    std::vector<std::string> out;
    if (value.is_string()) {
        out.push_back(value.get<std::string>());
    } else if (value.is_array()) {
        for (const auto& item : value) {
            if (!item.is_string()) {
                throw Error(ErrorKind::MalformedPayload,
                            std::string(field) + " must contain only strings");
            }
            out.push_back(item.get<std::string>());
        }
    } else {
        throw Error(ErrorKind::MalformedPayload,
                    std::string(field) + " must be a string or an array of strings");
    }
    for (const auto& s : out) {
        if (trim(s).empty()) {
            throw Error(ErrorKind::MalformedPayload, std::string(field) + " contains an empty entry");
        }
    }
    if (out.empty()) {
        throw Error(ErrorKind::MalformedPayload, std::string(field) + " is empty");
    }
    return out;
}

inline Action action_from_tool_call(const std::string& payload_text) {
    nlohmann::json payload = nlohmann::json::parse(payload_text, nullptr, false);
    if (payload.is_discarded() || !payload.is_object()) {
        throw Error(ErrorKind::MalformedPayload, "tool_call body is not a JSON object");
    }
    if (!payload.contains("name") || !payload["name"].is_string()) {
        throw Error(ErrorKind::MalformedPayload, "tool_call payload lacks a string \"name\"");
    }
    if (!payload.contains("arguments") || !payload["arguments"].is_object()) {
        throw Error(ErrorKind::MalformedPayload, "tool_call payload lacks an \"arguments\" object");
    }
    const std::string name = payload["name"].get<std::string>();
    const nlohmann::json& args = payload["arguments"];
    std::string goal;
    if (args.contains("goal")) {
        if (!args["goal"].is_string()) {
            throw Error(ErrorKind::MalformedPayload, "goal must be a string");
        }
        goal = std::string(trim(args["goal"].get<std::string>()));
    }
    if (name == "search") {
        if (!args.contains("query")) {
            throw Error(ErrorKind::MalformedPayload, "search arguments lack \"query\"");
        }
        return SearchAction{parse_string_list(args["query"], "query"), goal};
    }
    if (name == "retrieve") {
        if (!args.contains("url_id")) {
            throw Error(ErrorKind::MalformedPayload, "retrieve arguments lack \"url_id\"");
        }
        std::vector<SourceId> ids;
        for (const auto& token : parse_string_list(args["url_id"], "url_id")) {
            auto id = SourceId::parse(trim(token));
            if (!id) {
                throw Error(ErrorKind::MalformedPayload, "'" + token + "' is not a valid source id");
            }
            ids.push_back(*id);
        }
        return RetrieveAction{std::move(ids), goal};
    }
    throw Error(ErrorKind::MalformedPayload, "unknown tool name '" + name + "'");
}

inline std::string json_quote(std::string_view text) { return nlohmann::json(text).dump(); }

}  // namespace detail

/// Parses one complete assistant message into its optional thought and exactly
/// one action. Role gating is applied here: a planner may only search, write
/// the outline, or terminate; a writer may only retrieve, write, or terminate.
///
/// Raises MalformedTag, MalformedPayload, RoleViolation or AmbiguousAction;
/// no other outcome exists for any input.
inline ParsedTurn parse_assistant_turn(std::string_view raw_text, AgentRole role) {
    ParsedTurn result;

    // Thought extraction happens before the action scan; every <think> block
    // is removed from the text the scan sees. The first block becomes the
    // thought, the rest are flagged.
    std::string remainder;
    remainder.reserve(raw_text.size());
    std::size_t cursor = 0;
    int think_blocks = 0;
    while (true) {
        std::size_t open = raw_text.find(tags::think_open, cursor);
        if (open == std::string_view::npos) {
            remainder.append(raw_text.substr(cursor));
            break;
        }
        std::size_t body = open + tags::think_open.size();
        std::size_t close = raw_text.find(tags::think_close, body);
        if (close == std::string_view::npos) {
            throw Error(ErrorKind::MalformedTag, "unclosed <think> block");
        }
        remainder.append(raw_text.substr(cursor, open - cursor));
        ++think_blocks;
        if (think_blocks == 1) {
            result.thought = std::string(detail::trim(raw_text.substr(body, close - body)));
        } else {
            result.diagnostics.push_back("extra <think> block ignored (block " +
                                         std::to_string(think_blocks) + ")");
        }
        cursor = close + tags::think_close.size();
    }

    struct Opener {
        std::string_view open;
        std::string_view close;  // empty for the bare terminate token
        ActionKind kind;
    };
    static constexpr Opener openers[] = {
        {tags::tool_call_open, tags::tool_call_close, ActionKind::search},  // name decides search/retrieve
        {tags::write_outline_open, tags::write_outline_close, ActionKind::write_outline},
        {tags::write_open, tags::write_close, ActionKind::write},
        {tags::terminate_token, {}, ActionKind::terminate},
    };

    int total_openers = 0;
    std::size_t first_pos = std::string::npos;
    const Opener* first = nullptr;
    for (const auto& opener : openers) {
        std::size_t pos = remainder.find(opener.open);
        while (pos != std::string::npos) {
            ++total_openers;
            if (pos < first_pos) {
                first_pos = pos;
                first = &opener;
            }
            pos = remainder.find(opener.open, pos + opener.open.size());
        }
    }

    if (total_openers == 0) {
        throw Error(ErrorKind::MalformedTag, "no action tag found");
    }
    if (total_openers > 1) {
        throw Error(ErrorKind::AmbiguousAction,
                    std::to_string(total_openers) + " action tags present");
    }

    Action action = TerminateAction{};
    if (first->kind == ActionKind::terminate) {
        action = TerminateAction{};
    } else {
        std::size_t body = first_pos + first->open.size();
        std::size_t close = remainder.find(first->close, body);
        if (close == std::string::npos) {
            throw Error(ErrorKind::MalformedTag,
                        "unclosed " + std::string(first->open) + " block");
        }
        std::string inner(detail::trim(std::string_view(remainder).substr(body, close - body)));
        switch (first->kind) {
            case ActionKind::write_outline:
                if (inner.empty()) {
                    throw Error(ErrorKind::MalformedPayload, "empty write_outline payload");
                }
                action = WriteOutlineAction{std::move(inner)};
                break;
            case ActionKind::write:
                if (inner.empty()) {
                    throw Error(ErrorKind::MalformedPayload, "empty write payload");
                }
                action = WriteAction{std::move(inner)};
                break;
            default:
                action = detail::action_from_tool_call(inner);
                break;
        }
    }

    if (!action_allowed_for(role, kind_of(action))) {
        throw Error(ErrorKind::RoleViolation,
                    std::string("action '") + to_string(kind_of(action)) + "' is outside the " +
                        to_string(role) + " action space");
    }
    result.action = std::move(action);
    return result;
}

/// Canonical text of an action block. Parsing the result reproduces the
/// action exactly.
inline std::string render_action(const Action& action) {
    using detail::json_quote;
    switch (kind_of(action)) {
        case ActionKind::search: {
            const auto& a = std::get<SearchAction>(action);
            std::string queries;
            for (std::size_t i = 0; i < a.queries.size(); ++i) {
                if (i) queries += ", ";
                queries += json_quote(a.queries[i]);
            }
            return std::string(tags::tool_call_open) + "\n{\"name\": \"search\", \"arguments\": {\"query\": [" +
                   queries + "], \"goal\": " + json_quote(a.goal) + "}}\n" +
                   std::string(tags::tool_call_close);
        }
        case ActionKind::retrieve: {
            const auto& a = std::get<RetrieveAction>(action);
            std::string ids;
            for (std::size_t i = 0; i < a.ids.size(); ++i) {
                if (i) ids += ", ";
                ids += json_quote(a.ids[i].str());
            }
            return std::string(tags::tool_call_open) + "\n{\"name\": \"retrieve\", \"arguments\": {\"url_id\": [" +
                   ids + "], \"goal\": " + json_quote(a.goal) + "}}\n" +
                   std::string(tags::tool_call_close);
        }
        case ActionKind::write_outline:
            return std::string(tags::write_outline_open) + "\n" +
                   std::get<WriteOutlineAction>(action).outline_text + "\n" +
                   std::string(tags::write_outline_close);
        case ActionKind::write:
            return std::string(tags::write_open) + "\n" + std::get<WriteAction>(action).section_text +
                   "\n" + std::string(tags::write_close);
        case ActionKind::terminate:
            return std::string(tags::terminate_token);
    }
    return {};
}

/// Assistant-side text of a turn: optional think block plus the action block.
inline std::string render_assistant_text(const Turn& turn) {
    std::string out;
    if (turn.thought) {
        out += std::string(tags::think_open) + *turn.thought + std::string(tags::think_close) + "\n";
    }
    out += render_action(turn.action);
    return out;
}

inline std::string render_observation(std::string_view observation) {
    return std::string(tags::tool_response_open) + "\n" + std::string(observation) + "\n" +
           std::string(tags::tool_response_close);
}

/// Canonical textual form of a full turn, tool response included.
inline std::string render_turn(const Turn& turn) {
    std::string out = render_assistant_text(turn);
    if (turn.observation) {
        out += "\n" + render_observation(*turn.observation);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Trace log (line-delimited JSON with per-record checksums)
// ---------------------------------------------------------------------------

inline constexpr int kTraceFormatVersion = 1;

namespace detail {

inline nlohmann::json action_to_json(const Action& action) {
    nlohmann::json payload = nlohmann::json::object();
    switch (kind_of(action)) {
        case ActionKind::search: {
            const auto& a = std::get<SearchAction>(action);
            payload["queries"] = a.queries;
            payload["goal"] = a.goal;
            break;
        }
        case ActionKind::retrieve: {
            const auto& a = std::get<RetrieveAction>(action);
            std::vector<std::string> ids;
            for (const auto& id : a.ids) ids.push_back(id.str());
            payload["ids"] = ids;
            payload["goal"] = a.goal;
            break;
        }
        case ActionKind::write_outline:
            payload["text"] = std::get<WriteOutlineAction>(action).outline_text;
            break;
        case ActionKind::write:
            payload["text"] = std::get<WriteAction>(action).section_text;
            break;
        case ActionKind::terminate:
            break;
    }
    return nlohmann::json{{"kind", to_string(kind_of(action))}, {"payload", payload}};
}

inline Action action_from_json(const nlohmann::json& value) {
    if (!value.is_object() || !value.contains("kind") || !value.contains("payload")) {
        throw Error(ErrorKind::CorruptRecord, "action record lacks kind/payload");
    }
    const std::string kind = value["kind"].get<std::string>();
    const nlohmann::json& payload = value["payload"];
    try {
        if (kind == "search") {
            return SearchAction{payload.at("queries").get<std::vector<std::string>>(),
                                payload.at("goal").get<std::string>()};
        }
        if (kind == "retrieve") {
            std::vector<SourceId> ids;
            for (const auto& token : payload.at("ids").get<std::vector<std::string>>()) {
                auto id = SourceId::parse(token);
                if (!id) throw Error(ErrorKind::CorruptRecord, "bad source id '" + token + "'");
                ids.push_back(*id);
            }
            return RetrieveAction{std::move(ids), payload.at("goal").get<std::string>()};
        }
        if (kind == "write_outline") return WriteOutlineAction{payload.at("text").get<std::string>()};
        if (kind == "write") return WriteAction{payload.at("text").get<std::string>()};
        if (kind == "terminate") return TerminateAction{};
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::CorruptRecord, std::string("bad action payload: ") + e.what());
    }
    throw Error(ErrorKind::CorruptRecord, "unknown action kind '" + kind + "'");
}

inline std::string record_crc(const nlohmann::json& record_without_crc) {
    const std::string canonical = record_without_crc.dump();
    uLong crc = ::crc32(0L, reinterpret_cast<const Bytef*>(canonical.data()),
                        static_cast<uInt>(canonical.size()));
    char buf[9];
    std::snprintf(buf, sizeof(buf), "%08lx", static_cast<unsigned long>(crc));
    return buf;
}

inline std::string seal_record(nlohmann::json record) {
    record["crc"] = record_crc(record);
    return record.dump();
}

/// Parses one trace line, verifies its checksum, and returns the record with
/// the crc field removed. Unknown fields are preserved (and covered by the
/// checksum) but otherwise ignored.
inline nlohmann::json open_record(const std::string& line, std::size_t line_no) {
    nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object()) {
        throw Error(ErrorKind::CorruptRecord, "line " + std::to_string(line_no) + " is not a JSON object");
    }
    if (!record.contains("crc") || !record["crc"].is_string()) {
        throw Error(ErrorKind::CorruptRecord, "line " + std::to_string(line_no) + " lacks a crc");
    }
    const std::string stored = record["crc"].get<std::string>();
    record.erase("crc");
    if (record_crc(record) != stored) {
        throw Error(ErrorKind::CorruptRecord, "line " + std::to_string(line_no) + " fails its checksum");
    }
    return record;
}

}  // namespace detail

/// One JSON record per turn, preceded by a header record; every record carries
/// a crc over its remaining fields so any byte-level corruption is detected.
inline std::string serialize_trace(const Trajectory& trajectory) {
    std::string out;
    nlohmann::json header{{"type", "webweaver.trace"},
                          {"version", kTraceFormatVersion},
                          {"role", to_string(trajectory.role())},
                          {"terminated", trajectory.terminated()}};
    out += detail::seal_record(header) + "\n";
    for (const auto& turn : trajectory.turns()) {
        nlohmann::json record{{"index", turn.index},
                              {"role", to_string(trajectory.role())},
                              {"action", detail::action_to_json(turn.action)}};
        if (turn.thought) record["thought"] = *turn.thought;
        if (turn.observation) record["observation"] = *turn.observation;
        out += detail::seal_record(record) + "\n";
    }
    return out;
}

inline Trajectory parse_trace(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        if (end > start) lines.emplace_back(text.substr(start, end - start));
        start = end + 1;
    }
    if (lines.empty()) {
        throw Error(ErrorKind::CorruptRecord, "empty trace");
    }

    nlohmann::json header = detail::open_record(lines[0], 1);
    if (header.value("type", "") != "webweaver.trace") {
        throw Error(ErrorKind::CorruptRecord, "missing trace header");
    }
    if (header.value("version", -1) != kTraceFormatVersion) {
        throw Error(ErrorKind::CorruptRecord,
                    "unsupported trace version " + std::to_string(header.value("version", -1)));
    }
    if (!header.contains("role") || !header["role"].is_string() || !header.contains("terminated") ||
        !header["terminated"].is_boolean()) {
        throw Error(ErrorKind::CorruptRecord, "trace header lacks role/terminated");
    }

    Trajectory trajectory(role_from_string(header["role"].get<std::string>()));
    int expected_index = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        nlohmann::json record = detail::open_record(lines[i], i + 1);
        if (!record.contains("index") || !record["index"].is_number_integer()) {
            throw Error(ErrorKind::CorruptRecord, "line " + std::to_string(i + 1) + " lacks an index");
        }
        const int index = record["index"].get<int>();
        if (index != expected_index) {
            throw Error(ErrorKind::SequenceGap,
                        "expected index " + std::to_string(expected_index) + ", found " +
                            std::to_string(index));
        }
        ++expected_index;

        Turn turn;
        turn.index = index;
        if (record.contains("thought")) {
            if (!record["thought"].is_string()) {
                throw Error(ErrorKind::CorruptRecord, "thought must be a string");
            }
            turn.thought = record["thought"].get<std::string>();
        }
        if (record.contains("observation")) {
            if (!record["observation"].is_string()) {
                throw Error(ErrorKind::CorruptRecord, "observation must be a string");
            }
            turn.observation = record["observation"].get<std::string>();
        }
        if (!record.contains("action")) {
            throw Error(ErrorKind::CorruptRecord, "line " + std::to_string(i + 1) + " lacks an action");
        }
        turn.action = detail::action_from_json(record["action"]);
        trajectory.append(std::move(turn));
    }

    if (header["terminated"].get<bool>() != trajectory.terminated()) {
        throw Error(ErrorKind::InvariantViolation,
                    "terminate-finality: header terminated flag disagrees with the turn list");
    }
    return trajectory;
}

}  // namespace webweaver
