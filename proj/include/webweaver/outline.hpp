#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "webweaver/errors.hpp"
#include "webweaver/memory_bank.hpp"
#include "webweaver/trajectory.hpp"

namespace webweaver {

struct OutlineNode {
    std::string heading;
    int depth = 1;
    std::vector<SourceId> citations;
    std::vector<OutlineNode> children;

    bool operator==(const OutlineNode&) const = default;
};

struct Outline {
    std::string title;
    std::vector<OutlineNode> roots;
    int round = 1;            // which write_outline action produced it
    std::string raw_text;     // verbatim outline payload

    bool operator==(const Outline&) const = default;
};

struct ValidationReport {
    std::vector<SourceId> dangling_ids;        // cited but absent from the bank
    std::vector<std::string> uncited_sections; // leaf headings without citations
    double cited_coverage = 0.0;               // cited leaves / total leaves
};

inline constexpr int kMaxOutlineDepth = 5;

namespace outline_detail {

inline std::optional<int> roman_value(std::string_view token) {
    static constexpr std::pair<char, int> values[] = {{'I', 1},   {'V', 5},   {'X', 10},
                                                      {'L', 50},  {'C', 100}, {'D', 500},
                                                      {'M', 1000}};
    auto value_of = [&](char c) -> int {
        for (auto [ch, v] : values) {
            if (ch == c) return v;
        }
        return 0;
    };
    if (token.empty()) return std::nullopt;
    int total = 0;
    for (std::size_t i = 0; i < token.size(); ++i) {
        const int v = value_of(token[i]);
        if (v == 0) return std::nullopt;
        const int next = i + 1 < token.size() ? value_of(token[i + 1]) : 0;
        total += v < next ? -v : v;
    }
    return total;
}

struct HeadingMarker {
    int depth = 0;
    std::string text;
};

/// Classifies one line against the outline enumeration schemes: markdown
/// hashes, roman numerals (depth 1), capital letters (2), numbers (3) and
/// lowercase letters (4). Single capital letters that happen to be roman
/// digits ("C.", "D.") count as roman only when they continue the running
/// roman sequence, so "D. Advanced signs" after "III." stays a letter item.
inline std::optional<HeadingMarker> classify(std::string_view line, int& last_roman) {
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::string_view rest = line.substr(i);
    if (rest.empty()) return std::nullopt;

    if (rest[0] == '#') {
        std::size_t hashes = 0;
        while (hashes < rest.size() && rest[hashes] == '#') ++hashes;
        if (hashes <= 6 && hashes < rest.size() && rest[hashes] == ' ') {
            return HeadingMarker{static_cast<int>(hashes),
                                 std::string(detail::trim(rest.substr(hashes)))};
        }
        return std::nullopt;
    }

    const std::size_t dot = rest.find('.');
    if (dot == std::string_view::npos || dot == 0 || dot > 8) return std::nullopt;
    if (dot + 1 < rest.size() && rest[dot + 1] != ' ' && rest[dot + 1] != '\t') {
        return std::nullopt;  // "3.14" or "e.g." are not markers
    }
    const std::string_view token = rest.substr(0, dot);
    const std::string text{detail::trim(rest.substr(dot + 1))};

    if (auto roman = roman_value(token)) {
        if (token.size() > 1 || *roman == last_roman + 1 || *roman == 1) {
            last_roman = *roman;
            return HeadingMarker{1, text};
        }
    }
    if (token.size() == 1 && std::isupper(static_cast<unsigned char>(token[0]))) {
        return HeadingMarker{2, text};
    }
    bool all_digits = true;
    for (char c : token) {
        if (!std::isdigit(static_cast<unsigned char>(c))) {
            all_digits = false;
            break;
        }
    }
    if (all_digits) return HeadingMarker{3, text};
    if (token.size() == 1 && std::islower(static_cast<unsigned char>(token[0]))) {
        return HeadingMarker{4, text};
    }
    return std::nullopt;
}

/// Pulls every <citation>...</citation> body out of the line and returns the
/// ids found inside, leaving the heading text clean of the tags.
inline std::vector<SourceId> extract_citations(std::string& text) {
    static constexpr std::string_view open = "<citation>";
    static constexpr std::string_view close = "</citation>";
    std::vector<SourceId> ids;
    while (true) {
        const std::size_t a = text.find(open);
        if (a == std::string::npos) break;
        const std::size_t b = text.find(close, a + open.size());
        if (b == std::string::npos) {
            throw Error(ErrorKind::MalformedCitationTag, "unclosed <citation> tag");
        }
        const std::string body = text.substr(a + open.size(), b - a - open.size());
        std::size_t pos = 0;
        while ((pos = body.find("id_", pos)) != std::string::npos) {
            std::size_t end = pos + 3;
            while (end < body.size() && std::isdigit(static_cast<unsigned char>(body[end]))) ++end;
            if (auto id = SourceId::parse(body.substr(pos, end - pos))) {
                ids.push_back(*id);
            }
            pos = end;
        }
        text.erase(a, b + close.size() - a);
    }
    text = std::string(detail::trim(text));
    return ids;
}

inline void collect_leaves(const OutlineNode& node, std::vector<const OutlineNode*>& leaves) {
    if (node.children.empty()) {
        leaves.push_back(&node);
        return;
    }
    for (const auto& child : node.children) collect_leaves(child, leaves);
}

inline void collect_citations(const OutlineNode& node, std::vector<SourceId>& out) {
    for (const auto& id : node.citations) out.push_back(id);
    for (const auto& child : node.children) collect_citations(child, out);
}

inline nlohmann::json node_to_json(const OutlineNode& node) {
    nlohmann::json children = nlohmann::json::array();
    for (const auto& child : node.children) children.push_back(node_to_json(child));
    std::vector<std::string> ids;
    for (const auto& id : node.citations) ids.push_back(id.str());
    return nlohmann::json{{"heading", node.heading},
                          {"depth", node.depth},
                          {"citations", ids},
                          {"children", children}};
}

}  // namespace outline_detail

inline std::vector<const OutlineNode*> outline_leaves(const Outline& outline) {
    std::vector<const OutlineNode*> leaves;
    for (const auto& root : outline.roots) outline_detail::collect_leaves(root, leaves);
    return leaves;
}

inline std::vector<SourceId> outline_citations(const Outline& outline) {
    std::vector<SourceId> ids;
    for (const auto& root : outline.roots) outline_detail::collect_citations(root, ids);
    return ids;
}

/// Parses the planner's outline text: hierarchy from the enumeration scheme
/// (markdown # and I./A./1./a.), citations from <citation> tags. Ids that do
/// not resolve in the bank are kept; validate_outline reports them as
/// dangling. The raw text is preserved verbatim on the result.
inline Outline parse_outline(const std::string& raw, const MemoryBank& bank) {
    (void)bank;  // resolution happens in validate_outline; parsing keeps all ids
    if (detail::trim(raw).empty()) {
        throw Error(ErrorKind::InvalidArgument, "outline text is empty");
    }

    Outline outline;
    outline.raw_text = raw;

    struct Frame {
        OutlineNode* node;
        int depth;
    };
    std::vector<Frame> stack;
    int last_roman = 0;
    bool saw_heading = false;

    auto attach = [&](OutlineNode node) {
        const int depth = node.depth;
        while (!stack.empty() && stack.back().depth >= depth) stack.pop_back();
        OutlineNode* placed;
        if (stack.empty()) {
            outline.roots.push_back(std::move(node));
            placed = &outline.roots.back();
        } else {
            stack.back().node->children.push_back(std::move(node));
            placed = &stack.back().node->children.back();
        }
        stack.push_back({placed, depth});
    };

    std::size_t pos = 0;
    while (pos <= raw.size()) {
        std::size_t end = raw.find('\n', pos);
        if (end == std::string::npos) end = raw.size();
        std::string line = raw.substr(pos, end - pos);
        pos = end + 1;
        if (detail::trim(line).empty()) continue;

        std::string body = line;
        std::vector<SourceId> cited = outline_detail::extract_citations(body);

        if (auto marker = outline_detail::classify(body, last_roman)) {
            OutlineNode node;
            node.depth = std::min(marker->depth, kMaxOutlineDepth);
            node.heading = marker->text;
            node.citations = std::move(cited);
            attach(std::move(node));
            saw_heading = true;
        } else if (!saw_heading && outline.title.empty()) {
            outline.title = body;
        } else if (!cited.empty() && !stack.empty()) {
            // Citation tags on a content line belong to the nearest section.
            auto& dest = stack.back().node->citations;
            dest.insert(dest.end(), cited.begin(), cited.end());
        }
    }

    if (!saw_heading) {
        throw Error(ErrorKind::UnparseableOutline, "no headings found");
    }
    return outline;
}

inline ValidationReport validate_outline(const Outline& outline, const MemoryBank& bank) {
    ValidationReport report;
    std::vector<SourceId> seen_dangling;
    for (const auto& id : outline_citations(outline)) {
        if (!bank.contains(id)) {
            bool already = false;
            for (const auto& d : seen_dangling) {
                if (d == id) {
                    already = true;
                    break;
                }
            }
            if (!already) seen_dangling.push_back(id);
        }
    }
    report.dangling_ids = std::move(seen_dangling);

    const auto leaves = outline_leaves(outline);
    std::size_t cited = 0;
    for (const auto* leaf : leaves) {
        if (leaf->citations.empty()) {
            report.uncited_sections.push_back(leaf->heading);
        } else {
            ++cited;
        }
    }
    report.cited_coverage =
        leaves.empty() ? 0.0 : static_cast<double>(cited) / static_cast<double>(leaves.size());
    return report;
}

inline nlohmann::json outline_to_json(const Outline& outline) {
    nlohmann::json roots = nlohmann::json::array();
    for (const auto& root : outline.roots) roots.push_back(outline_detail::node_to_json(root));
    return nlohmann::json{{"type", "webweaver.outline"},
                          {"version", 1},
                          {"title", outline.title},
                          {"round", outline.round},
                          {"raw_text", outline.raw_text},
                          {"tree", roots}};
}

inline Outline outline_from_json(const nlohmann::json& doc, const MemoryBank& bank) {
    if (!doc.is_object() || doc.value("type", "") != "webweaver.outline") {
        throw Error(ErrorKind::CorruptRecord, "not an outline document");
    }
    Outline outline = parse_outline(doc.at("raw_text").get<std::string>(), bank);
    outline.round = doc.value("round", 1);
    return outline;
}

}  // namespace webweaver
