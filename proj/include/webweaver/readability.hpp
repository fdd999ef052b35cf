#pragma once

#include <array>
#include <cctype>
#include <string>
#include <string_view>

namespace webweaver {

// Boilerplate-stripping HTML-to-text conversion. This is deliberately a
// heuristic, not a DOM: drop script/style and chrome containers, prefer the
// <article>/<main> region when one exists, flatten the rest to text and
// normalize whitespace.

namespace readability_detail {

inline bool iequal(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i]))) {
            return false;
        }
    }
    return true;
}

inline std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t from) {
    if (needle.empty() || haystack.size() < needle.size()) return std::string_view::npos;
    for (std::size_t i = from; i + needle.size() <= haystack.size(); ++i) {
        if (iequal(haystack.substr(i, needle.size()), needle)) return i;
    }
    return std::string_view::npos;
}

/// Removes every `<tag ...>...</tag>` region (case-insensitive), tolerating a
/// missing close tag by cutting to the end.
inline std::string drop_regions(std::string text, std::string_view tag) {
    const std::string open = "<" + std::string(tag);
    const std::string close = "</" + std::string(tag) + ">";
    std::size_t pos = 0;
    while (true) {
        const std::size_t a = ifind(text, open, pos);
        if (a == std::string_view::npos) break;
        const char next = a + open.size() < text.size() ? text[a + open.size()] : ' ';
        if (next != '>' && !std::isspace(static_cast<unsigned char>(next))) {
            pos = a + open.size();
            continue;  // e.g. <head> while scanning for <header
        }
        const std::size_t b = ifind(text, close, a);
        if (b == std::string_view::npos) {
            text.erase(a);
            break;
        }
        text.erase(a, b + close.size() - a);
        pos = a;
    }
    return text;
}

inline std::string drop_comments(std::string text) {
    std::size_t pos = 0;
    while (true) {
        const std::size_t a = text.find("<!--", pos);
        if (a == std::string::npos) break;
        const std::size_t b = text.find("-->", a);
        if (b == std::string::npos) {
            text.erase(a);
            break;
        }
        text.erase(a, b + 3 - a);
        pos = a;
    }
    return text;
}

inline std::string pick_region(const std::string& text) {
    for (std::string_view tag : {std::string_view("article"), std::string_view("main"),
                                 std::string_view("body")}) {
        const std::string open = "<" + std::string(tag);
        const std::size_t a = ifind(text, open, 0);
        if (a == std::string_view::npos) continue;
        const std::size_t gt = text.find('>', a);
        if (gt == std::string::npos) continue;
        const std::string close = "</" + std::string(tag) + ">";
        const std::size_t b = ifind(text, close, gt);
        return b == std::string_view::npos ? text.substr(gt + 1) : text.substr(gt + 1, b - gt - 1);
    }
    return text;
}

inline void append_utf8(std::string& out, unsigned long cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

inline std::string decode_entities(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] != '&') {
            out += text[i++];
            continue;
        }
        const std::size_t semi = text.find(';', i);
        if (semi == std::string::npos || semi - i > 10) {
            out += text[i++];
            continue;
        }
        const std::string_view entity(text.data() + i + 1, semi - i - 1);
        if (entity == "amp") out += '&';
        else if (entity == "lt") out += '<';
        else if (entity == "gt") out += '>';
        else if (entity == "quot") out += '"';
        else if (entity == "apos") out += '\'';
        else if (entity == "nbsp") out += ' ';
        else if (!entity.empty() && entity[0] == '#') {
            unsigned long cp = 0;
            bool ok = entity.size() > 1;
            if (entity.size() > 2 && (entity[1] == 'x' || entity[1] == 'X')) {
                for (char c : entity.substr(2)) {
                    if (!std::isxdigit(static_cast<unsigned char>(c))) { ok = false; break; }
                    cp = cp * 16 + (std::isdigit(static_cast<unsigned char>(c))
                                        ? static_cast<unsigned long>(c - '0')
                                        : static_cast<unsigned long>(
                                              std::tolower(static_cast<unsigned char>(c)) - 'a' + 10));
                }
            } else {
                for (char c : entity.substr(1)) {
                    if (!std::isdigit(static_cast<unsigned char>(c))) { ok = false; break; }
                    cp = cp * 10 + static_cast<unsigned long>(c - '0');
                }
            }
            if (ok && cp > 0 && cp <= 0x10FFFF) append_utf8(out, cp);
            else { out += text[i]; ++i; continue; }
        } else {
            out += text[i++];
            continue;
        }
        i = semi + 1;
    }
    return out;
}

}  // namespace readability_detail

/// Extracts the main readable text of an HTML document. Deterministic; returns
/// an empty string when nothing textual survives.
inline std::string extract_main_text(const std::string& html) {
    using namespace readability_detail;
    std::string text = drop_comments(html);
    for (std::string_view tag : {std::string_view("script"), std::string_view("style"),
                                 std::string_view("noscript"), std::string_view("svg")}) {
        text = drop_regions(std::move(text), tag);
    }
    text = pick_region(text);
    for (std::string_view tag : {std::string_view("nav"), std::string_view("header"),
                                 std::string_view("footer"), std::string_view("aside"),
                                 std::string_view("form")}) {
        text = drop_regions(std::move(text), tag);
    }

    // Flatten: block-closing tags become newlines, the rest vanish.
    std::string flat;
    flat.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] != '<') {
            flat += text[i++];
            continue;
        }
        const std::size_t gt = text.find('>', i);
        if (gt == std::string::npos) break;
        const std::string_view tag(text.data() + i, gt - i + 1);
        static constexpr std::array<std::string_view, 14> breakers = {
            "</p>", "</div>", "</li>", "</tr>", "</h1>", "</h2>", "</h3>", "</h4>",
            "</h5>", "</h6>", "<br>", "<br/>", "<br />", "</blockquote>"};
        for (const auto& breaker : breakers) {
            if (iequal(tag, breaker)) {
                flat += '\n';
                break;
            }
        }
        i = gt + 1;
    }

    flat = decode_entities(flat);

    // Whitespace normalization: collapse runs of spaces, trim line edges,
    // allow at most one blank line.
    std::string out;
    out.reserve(flat.size());
    std::string line;
    int blank_run = 0;
    auto flush_line = [&] {
        std::size_t a = 0, b = line.size();
        while (a < b && std::isspace(static_cast<unsigned char>(line[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(line[b - 1]))) --b;
        std::string trimmed;
        bool in_space = false;
        for (std::size_t k = a; k < b; ++k) {
            const char c = line[k];
            if (c == ' ' || c == '\t' || c == '\r') {
                in_space = true;
                continue;
            }
            if (in_space && !trimmed.empty()) trimmed += ' ';
            in_space = false;
            trimmed += c;
        }
        if (trimmed.empty()) {
            ++blank_run;
            if (blank_run == 1 && !out.empty()) out += '\n';
        } else {
            blank_run = 0;
            out += trimmed;
            out += '\n';
        }
        line.clear();
    };
    for (char c : flat) {
        if (c == '\n') flush_line();
        else line += c;
    }
    flush_line();
    while (!out.empty() && (out.back() == '\n' || out.back() == ' ')) out.pop_back();
    return out;
}

}  // namespace webweaver
