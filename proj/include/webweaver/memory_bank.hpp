#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "webweaver/errors.hpp"
#include "webweaver/tokens.hpp"
#include "webweaver/trajectory.hpp"

namespace webweaver {

/// One memory-bank entry: a digested web source addressable by its citation id.
struct SourceRecord {
    SourceId id;
    std::string url;
    std::string title;
    std::string query_context;  // the search goal that found this source
    std::string summary;
    std::vector<std::string> evidence;
    long summary_tokens = 0;
    long evidence_tokens = 0;

    bool operator==(const SourceRecord&) const = default;
};

enum class MaterialMode { summary, evidence, summary_and_evidence };

inline constexpr int kBankFormatVersion = 1;

/// Run-scoped store of digested sources keyed by sequential citation ids.
/// Ids are assigned 1, 2, 3, ... in admission order and never reused; lookups
/// by any issued id succeed for the lifetime of the bank.
///
/// Threading discipline: any number of concurrent readers OR one admitting
/// writer. The search pipeline admits from its coordinating thread only.
class MemoryBank {
public:
    explicit MemoryBank(TokenCounter counter = default_token_counter(),
                        std::size_t evidence_item_cap = 20)
        : counter_(std::move(counter)), evidence_item_cap_(evidence_item_cap) {}

    /// Admits a digested page and returns its id. Re-admitting a URL already
    /// in the bank (ignoring any #fragment) returns the existing id unchanged.
    SourceId admit_source(const std::string& url, const std::string& title,
                          const std::string& query_context, const std::string& summary,
                          std::vector<std::string> evidence) {
        if (detail::trim(summary).empty()) {
            throw Error(ErrorKind::EmptySummary, "summary must be non-empty");
        }
        if (detail::trim(url).empty()) {
            throw Error(ErrorKind::InvalidArgument, "url must be non-empty");
        }
        const std::string key = dedup_key(url);
        if (auto it = by_url_.find(key); it != by_url_.end()) {
            return it->second;
        }
        if (evidence.size() > evidence_item_cap_) {
            evidence.resize(evidence_item_cap_);
        }
        SourceRecord record;
        record.id = SourceId{next_ordinal_++};
        record.url = url;
        record.title = title;
        record.query_context = query_context;
        record.summary = summary;
        record.evidence = std::move(evidence);
        record.summary_tokens = counter_(record.summary);
        record.evidence_tokens = counter_(joined_evidence(record.evidence));
        by_url_.emplace(key, record.id);
        records_.push_back(std::move(record));
        return records_.back().id;
    }

    bool contains(SourceId id) const {
        return id.ordinal >= 1 && id.ordinal < next_ordinal_;
    }

    const SourceRecord& get(SourceId id) const {
        if (!contains(id)) {
            throw Error(ErrorKind::UnknownId, id.str() + " is not in the bank");
        }
        return records_[static_cast<std::size_t>(id.ordinal) - 1];
    }

    /// Returns the requested records in request order with duplicates collapsed
    /// to their first occurrence. If any id is unknown the whole call fails and
    /// the error message lists every missing id.
    std::vector<SourceRecord> retrieve(const std::vector<SourceId>& ids,
                                       const std::string& goal) const {
        (void)goal;  // the goal travels in the Retrieve action of the run trace
        if (ids.empty()) {
            throw Error(ErrorKind::InvalidArgument, "retrieve requires at least one id");
        }
        std::string missing;
        for (const auto& id : ids) {
            if (!contains(id)) {
                if (!missing.empty()) missing += ", ";
                missing += id.str();
            }
        }
        if (!missing.empty()) {
            throw Error(ErrorKind::UnknownId, "unknown ids: " + missing);
        }
        std::vector<SourceRecord> out;
        std::vector<bool> seen(static_cast<std::size_t>(next_ordinal_), false);
        for (const auto& id : ids) {
            auto slot = static_cast<std::size_t>(id.ordinal);
            if (seen[slot]) continue;
            seen[slot] = true;
            out.push_back(get(id));
        }
        return out;
    }

    const std::vector<SourceRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    int next_ordinal() const { return next_ordinal_; }

    long total_summary_tokens() const {
        long total = 0;
        for (const auto& r : records_) total += r.summary_tokens;
        return total;
    }

    long total_evidence_tokens() const {
        long total = 0;
        for (const auto& r : records_) total += r.evidence_tokens;
        return total;
    }

    // -- persistence -------------------------------------------------------

    std::string save() const {
        nlohmann::json doc;
        doc["type"] = "webweaver.bank";
        doc["version"] = kBankFormatVersion;
        doc["next_ordinal"] = next_ordinal_;
        nlohmann::json records = nlohmann::json::array();
        for (const auto& r : records_) {
            records.push_back(nlohmann::json{{"id", r.id.str()},
                                             {"url", r.url},
                                             {"title", r.title},
                                             {"query_context", r.query_context},
                                             {"summary", r.summary},
                                             {"evidence", r.evidence},
                                             {"summary_tokens", r.summary_tokens},
                                             {"evidence_tokens", r.evidence_tokens}});
        }
        doc["records"] = std::move(records);
        return doc.dump(2) + "\n";
    }

    static MemoryBank load(std::string_view text, TokenCounter counter = default_token_counter(),
                           std::size_t evidence_item_cap = 20) {
        nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
        if (doc.is_discarded() || !doc.is_object() || doc.value("type", "") != "webweaver.bank") {
            throw Error(ErrorKind::CorruptBank, "not a bank document");
        }
        if (doc.value("version", -1) != kBankFormatVersion) {
            throw Error(ErrorKind::VersionMismatch,
                        "bank version " + std::to_string(doc.value("version", -1)) +
                            " is not supported");
        }
        MemoryBank bank(std::move(counter), evidence_item_cap);
        try {
            for (const auto& item : doc.at("records")) {
                SourceRecord record;
                auto id = SourceId::parse(item.at("id").get<std::string>());
                if (!id) throw Error(ErrorKind::CorruptBank, "bad record id");
                record.id = *id;
                record.url = item.at("url").get<std::string>();
                record.title = item.at("title").get<std::string>();
                record.query_context = item.at("query_context").get<std::string>();
                record.summary = item.at("summary").get<std::string>();
                record.evidence = item.at("evidence").get<std::vector<std::string>>();
                record.summary_tokens = item.at("summary_tokens").get<long>();
                record.evidence_tokens = item.at("evidence_tokens").get<long>();
                if (record.id.ordinal != static_cast<int>(bank.records_.size()) + 1) {
                    throw Error(ErrorKind::CorruptBank,
                                "record ids are not sequential at " + record.id.str());
                }
                bank.by_url_.emplace(dedup_key(record.url), record.id);
                bank.records_.push_back(std::move(record));
            }
            bank.next_ordinal_ = doc.at("next_ordinal").get<int>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::CorruptBank, std::string("bad bank document: ") + e.what());
        }
        if (bank.next_ordinal_ != static_cast<int>(bank.records_.size()) + 1) {
            throw Error(ErrorKind::CorruptBank, "next_ordinal disagrees with the record count");
        }
        return bank;
    }

    bool operator==(const MemoryBank& other) const {
        return next_ordinal_ == other.next_ordinal_ && records_ == other.records_;
    }

private:
    static std::string dedup_key(const std::string& url) {
        return url.substr(0, url.find('#'));
    }

    static std::string joined_evidence(const std::vector<std::string>& items) {
        std::string joined;
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (i) joined += "\n";
            joined += items[i];
        }
        return joined;
    }

    TokenCounter counter_;
    std::size_t evidence_item_cap_;
    std::vector<SourceRecord> records_;  // record k lives at index k-1
    std::map<std::string, SourceId> by_url_;
    int next_ordinal_ = 1;
};

/// Renders the tool-response material block: one <id_N> section per record,
/// wrapped in <material> tags. Byte output is deterministic for fixed input.
/// In evidence mode a record with no stored evidence falls back to its
/// summary so the writer never receives an empty section.
inline std::string render_material_block(std::span<const SourceRecord> records, MaterialMode mode) {
    if (records.empty()) {
        throw Error(ErrorKind::InvalidArgument, "material block requires at least one record");
    }
    std::string out = "<material>\n";
    for (const auto& record : records) {
        const std::string tag = record.id.str();
        out += "<" + tag + ">\n";
        const bool want_summary = mode != MaterialMode::evidence || record.evidence.empty();
        const bool want_evidence =
            mode != MaterialMode::summary && !record.evidence.empty();
        if (want_summary) {
            out += "Summary:\n" + record.summary + "\n";
        }
        if (want_evidence) {
            for (const auto& item : record.evidence) {
                out += item + "\n";
            }
        }
        out += "</" + tag + ">\n";
    }
    out += "</material>";
    return out;
}

inline std::string render_material_block(const std::vector<SourceRecord>& records,
                                         MaterialMode mode) {
    return render_material_block(std::span<const SourceRecord>(records), mode);
}

}  // namespace webweaver
