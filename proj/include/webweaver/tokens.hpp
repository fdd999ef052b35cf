#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>

namespace webweaver {

/// Counts tokens for budgeting and statistics.
///
/// The default estimator is ceil(bytes / 4). It is deterministic, counts the
/// empty string as zero, and is monotone under concatenation:
/// count(a + b) >= max(count(a), count(b)). An exact model tokenizer can be
/// plugged in anywhere a TokenCounter is accepted, as long as it keeps the
/// same contract.
inline long estimate_tokens(std::string_view text) {
    return static_cast<long>((text.size() + 3) / 4);
}

using TokenCounter = std::function<long(std::string_view)>;

inline TokenCounter default_token_counter() {
    return [](std::string_view text) { return estimate_tokens(text); };
}

/// Truncates text so the default estimator counts at most `max_tokens`,
/// backing off to a UTF-8 sequence boundary so no code point is split.
inline std::string truncate_to_tokens(std::string_view text, long max_tokens) {
    if (max_tokens <= 0) return {};
    if (estimate_tokens(text) <= max_tokens) return std::string(text);
    std::size_t limit = static_cast<std::size_t>(max_tokens) * 4;
    while (limit > 0 && (static_cast<unsigned char>(text[limit]) & 0xC0) == 0x80) {
        --limit;  // continuation byte, step back to the sequence start
    }
    return std::string(text.substr(0, limit));
}

}  // namespace webweaver
