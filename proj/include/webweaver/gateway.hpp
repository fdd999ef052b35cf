#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "webweaver/errors.hpp"
#include "webweaver/tokens.hpp"

namespace webweaver {

enum class MsgRole { system, user, assistant, tool };

inline const char* to_string(MsgRole role) {
    switch (role) {
        case MsgRole::system: return "system";
        case MsgRole::user: return "user";
        case MsgRole::assistant: return "assistant";
        case MsgRole::tool: return "tool";
    }
    return "user";
}

struct ChatMessage {
    MsgRole role = MsgRole::user;
    std::string content;
    bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    std::string model_id;
    std::optional<double> temperature;  // absent: provider default
    int max_output_tokens = 4096;

    void validate() const {
        if (messages.empty()) {
            throw Error(ErrorKind::InvalidArgument, "request has no messages");
        }
        if (messages.front().role != MsgRole::system && messages.front().role != MsgRole::user) {
            throw Error(ErrorKind::InvalidArgument, "first message must be system or user");
        }
        if (temperature && *temperature < 0) {
            throw Error(ErrorKind::InvalidArgument, "temperature must be >= 0");
        }
        if (max_output_tokens <= 0) {
            throw Error(ErrorKind::InvalidArgument, "max_output_tokens must be positive");
        }
    }
};

enum class FinishReason { stop, length, error };

struct ChatResponse {
    std::string content;
    long input_tokens = 0;
    long output_tokens = 0;
    FinishReason finish_reason = FinishReason::stop;
};

/// Uniform completion interface. Everything above this line of the stack
/// talks to Backend; nothing above it builds provider wire payloads.
class Backend {
public:
    virtual ~Backend() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
    virtual std::string name() const = 0;
};

// ---------------------------------------------------------------------------
// Scripted backend
// ---------------------------------------------------------------------------

/// One canned reply. Entries without match conditions are consumed strictly
/// in order; entries with conditions are consumed by the first request whose
/// last user message contains every listed substring, regardless of call
/// order. The latter keeps concurrent digester calls deterministic.
struct ScriptEntry {
    std::string response;
    std::vector<std::string> match;
};

class ScriptedBackend : public Backend {
public:
    explicit ScriptedBackend(std::vector<ScriptEntry> script,
                             TokenCounter counter = default_token_counter())
        : script_(std::move(script)), consumed_(script_.size(), false), counter_(std::move(counter)) {}

    ChatResponse complete(const ChatRequest& request) override {
        request.validate();
        std::lock_guard<std::mutex> lock(mutex_);
        requests_.push_back(request);

        std::string last_user;
        for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
            if (it->role == MsgRole::user || it->role == MsgRole::tool) {
                last_user = it->content;
                break;
            }
        }

        std::size_t chosen = script_.size();
        for (std::size_t i = 0; i < script_.size(); ++i) {
            if (consumed_[i] || script_[i].match.empty()) continue;
            bool all = true;
            for (const auto& needle : script_[i].match) {
                if (last_user.find(needle) == std::string::npos) {
                    all = false;
                    break;
                }
            }
            if (all) {
                chosen = i;
                break;
            }
        }
        if (chosen == script_.size()) {
            for (std::size_t i = 0; i < script_.size(); ++i) {
                if (!consumed_[i] && script_[i].match.empty()) {
                    chosen = i;
                    break;
                }
            }
        }
        if (chosen == script_.size()) {
            throw Error(ErrorKind::ScriptExhausted,
                        name_ + " has no reply left for this request");
        }
        consumed_[chosen] = true;

        ChatResponse response;
        response.content = script_[chosen].response;
        for (const auto& message : request.messages) {
            response.input_tokens += counter_(message.content);
        }
        response.output_tokens = counter_(response.content);
        response.finish_reason = FinishReason::stop;
        return response;
    }

    std::string name() const override { return name_; }
    void set_name(std::string name) { name_ = std::move(name); }

    /// Requests seen so far, in arrival order.
    std::vector<ChatRequest> request_log() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return requests_;
    }

    std::size_t replies_left() const {
        std::lock_guard<std::mutex> lock(mutex_);
        std::size_t left = 0;
        for (bool used : consumed_) left += used ? 0 : 1;
        return left;
    }

private:
    std::vector<ScriptEntry> script_;
    std::vector<bool> consumed_;
    TokenCounter counter_;
    mutable std::mutex mutex_;
    std::vector<ChatRequest> requests_;
    std::string name_ = "scripted";
};

// ---------------------------------------------------------------------------
// Run-level token budget
// ---------------------------------------------------------------------------

/// Guards the cumulative input+output token spend of one run. A request that
/// could cross the limit fails before dispatch; the worst case (the full
/// max_output_tokens) is reserved and trued up once the real usage is known.
class TokenBudget {
public:
    explicit TokenBudget(long limit) : limit_(limit) {}

    void reserve(long input_tokens, long max_output_tokens) {
        std::lock_guard<std::mutex> lock(mutex_);
        const long want = input_tokens + max_output_tokens;
        if (used_ + reserved_ + want > limit_) {
            throw Error(ErrorKind::BudgetExceeded,
                        "request needs " + std::to_string(want) + " tokens, " +
                            std::to_string(limit_ - used_ - reserved_) + " remain of " +
                            std::to_string(limit_));
        }
        reserved_ += want;
    }

    void commit(long reserved_total, long actual_total) {
        std::lock_guard<std::mutex> lock(mutex_);
        reserved_ -= reserved_total;
        used_ += actual_total;
    }

    void release(long reserved_total) {
        std::lock_guard<std::mutex> lock(mutex_);
        reserved_ -= reserved_total;
    }

    long used() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return used_;
    }
    long limit() const { return limit_; }

private:
    long limit_;
    long used_ = 0;
    long reserved_ = 0;
    mutable std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Gateway: named model slots over shared backends
// ---------------------------------------------------------------------------

enum class Slot { planner, writer, digester, judge };

inline const char* to_string(Slot slot) {
    switch (slot) {
        case Slot::planner: return "planner";
        case Slot::writer: return "writer";
        case Slot::digester: return "digester";
        case Slot::judge: return "judge";
    }
    return "planner";
}

struct SlotConfig {
    std::shared_ptr<Backend> backend;
    std::string model_id;
    std::optional<double> temperature;
    int max_output_tokens = 4096;
};

class Gateway {
public:
    explicit Gateway(TokenCounter counter = default_token_counter()) : counter_(std::move(counter)) {}

    void configure(Slot slot, SlotConfig config) {
        if (!config.backend) {
            throw Error(ErrorKind::ConfigError,
                        std::string("slot ") + to_string(slot) + " has no backend");
        }
        slots_[slot] = std::move(config);
    }

    bool has(Slot slot) const { return slots_.count(slot) > 0; }

    void set_budget(std::shared_ptr<TokenBudget> budget) { budget_ = std::move(budget); }
    std::shared_ptr<TokenBudget> budget() const { return budget_; }

    ChatResponse complete(Slot slot, const std::vector<ChatMessage>& messages) {
        auto it = slots_.find(slot);
        if (it == slots_.end()) {
            throw Error(ErrorKind::ConfigError,
                        std::string("no backend configured for slot ") + to_string(slot));
        }
        const SlotConfig& config = it->second;

        ChatRequest request;
        request.messages = messages;
        request.model_id = config.model_id;
        request.temperature = config.temperature;
        request.max_output_tokens = config.max_output_tokens;
        request.validate();

        long input_estimate = 0;
        for (const auto& message : messages) input_estimate += counter_(message.content);

        const long reservation = input_estimate + config.max_output_tokens;
        if (budget_) budget_->reserve(input_estimate, config.max_output_tokens);
        ChatResponse response;
        try {
            response = config.backend->complete(request);
        } catch (...) {
            if (budget_) budget_->release(reservation);
            throw;
        }
        if (budget_) budget_->commit(reservation, response.input_tokens + response.output_tokens);
        return response;
    }

    long request_tokens(const std::vector<ChatMessage>& messages) const {
        long total = 0;
        for (const auto& message : messages) total += counter_(message.content);
        return total;
    }

    const TokenCounter& counter() const { return counter_; }

private:
    std::map<Slot, SlotConfig> slots_;
    std::shared_ptr<TokenBudget> budget_;
    TokenCounter counter_;
};

}  // namespace webweaver
