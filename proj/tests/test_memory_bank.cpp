#include <catch2/catch_amalgamated.hpp>

#include "webweaver/memory_bank.hpp"

#include "support/generators.hpp"
#include "support/oracle.hpp"
#include "support/testutil.hpp"

using namespace webweaver;

namespace {

SourceId admit_nth(MemoryBank& bank, int n) {
    return bank.admit_source("https://example.org/page/" + std::to_string(n),
                             "Title " + std::to_string(n), "goal", "summary " + std::to_string(n),
                             {"evidence " + std::to_string(n)});
}

MemoryBank random_bank(gen::Rng& rng, int records) {
    MemoryBank bank;
    for (int i = 1; i <= records; ++i) {
        std::vector<std::string> evidence;
        const int items = gen::pick(rng, 0, 4);
        for (int j = 0; j < items; ++j) evidence.push_back(gen::words(rng, 3, 10));
        bank.admit_source("https://example.org/" + std::to_string(i) + "/" + gen::words(rng, 1, 1),
                          gen::words(rng, 2, 5), gen::words(rng, 3, 8), gen::words(rng, 5, 20),
                          evidence);
    }
    return bank;
}

}  // namespace

TEST_CASE("admission assigns sequential ids") {
    MemoryBank bank;
    CHECK(admit_nth(bank, 1).str() == "id_1");
    for (int i = 2; i <= 38; ++i) admit_nth(bank, i);
    CHECK(bank.size() == 38);
    CHECK(admit_nth(bank, 39).str() == "id_39");
}

TEST_CASE("re-admitting a URL returns the existing id") {
    MemoryBank bank;
    SourceId first = bank.admit_source("https://example.org/a", "A", "g", "s", {});
    SourceId again = bank.admit_source("https://example.org/a", "A2", "g2", "s2", {});
    CHECK(first == again);
    CHECK(bank.size() == 1);

    // Fragments do not defeat deduplication.
    SourceId frag = bank.admit_source("https://example.org/a#section-2", "A3", "g", "s", {});
    CHECK(frag == first);
    CHECK(bank.size() == 1);
}

TEST_CASE("admission validates its inputs") {
    MemoryBank bank;
    try {
        bank.admit_source("https://example.org/x", "T", "g", "   ", {});
        FAIL("expected EmptySummary");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptySummary);
    }
    CHECK_THROWS_AS(bank.admit_source("", "T", "g", "s", {}), Error);
}

TEST_CASE("evidence items beyond the cap are truncated at admission") {
    MemoryBank bank(default_token_counter(), 20);
    std::vector<std::string> evidence;
    for (int i = 0; i < 30; ++i) evidence.push_back("item " + std::to_string(i));
    SourceId id = bank.admit_source("https://example.org/cap", "T", "g", "s", evidence);
    CHECK(bank.get(id).evidence.size() == 20);
}

TEST_CASE("token fields match the counter") {
    MemoryBank bank;
    SourceId id = bank.admit_source("https://example.org/t", "T", "g", std::string(400, 's'),
                                    {std::string(100, 'e'), std::string(99, 'f')});
    const SourceRecord& record = bank.get(id);
    CHECK(record.summary_tokens == 100);
    CHECK(record.evidence_tokens == estimate_tokens(std::string(100, 'e') + "\n" + std::string(99, 'f')));
}

TEST_CASE("retrieve returns records in request order with duplicates collapsed") {
    MemoryBank bank;
    for (int i = 1; i <= 21; ++i) admit_nth(bank, i);

    const std::vector<int> wanted = {2, 6, 9, 12, 13, 14, 15, 17, 20, 21};
    std::vector<SourceId> ids;
    for (int n : wanted) ids.push_back(SourceId{n});
    auto records = bank.retrieve(ids, "measurement and monitoring approaches");
    REQUIRE(records.size() == wanted.size());
    for (std::size_t i = 0; i < wanted.size(); ++i) {
        CHECK(records[i].id.ordinal == wanted[i]);
    }

    SECTION("singleton") {
        MemoryBank one;
        admit_nth(one, 1);
        auto got = one.retrieve({SourceId{1}}, "g");
        REQUIRE(got.size() == 1);
        CHECK(got[0].id.str() == "id_1");
    }

    SECTION("duplicates collapse to the first occurrence") {
        auto got = bank.retrieve({SourceId{3}, SourceId{1}, SourceId{3}}, "g");
        REQUIRE(got.size() == 2);
        CHECK(got[0].id.ordinal == 3);
        CHECK(got[1].id.ordinal == 1);
    }

    SECTION("unknown ids are all reported") {
        try {
            bank.retrieve({SourceId{3}, SourceId{999}}, "g");
            FAIL("expected UnknownId");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::UnknownId);
            CHECK(std::string(e.what()).find("id_999") != std::string::npos);
        }
    }
}

TEST_CASE("material block matches the golden layout") {
    MemoryBank bank;
    bank.admit_source(
        "https://example.org/cool-roofs", "Cool roofs", "heat mitigation",
        "Cool roofs reflect a large share of incoming sunlight and measurably lower roof surface "
        "temperatures in dense districts.",
        {"Reflective coatings cut peak roof temperature by double digits in field trials."});
    bank.admit_source(
        "https://example.org/street-trees", "Street trees", "heat mitigation",
        "Street tree canopies reduce afternoon air temperature through shading and "
        "evapotranspiration, with the strongest effect in paved corridors.",
        {});
    const std::string block = render_material_block(bank.records(), MaterialMode::summary);
    CHECK(block == testutil::read_file(testutil::golden_path("material_block.golden")));
}

TEST_CASE("material block modes") {
    MemoryBank bank;
    bank.admit_source("https://example.org/e", "E", "g", "the summary", {"first fact", "second fact"});
    bank.admit_source("https://example.org/no-evidence", "N", "g", "only summary", {});

    const std::string evidence_block = render_material_block(bank.records(), MaterialMode::evidence);
    CHECK(evidence_block.find("first fact\nsecond fact\n") != std::string::npos);
    CHECK(evidence_block.find("the summary") == std::string::npos);
    // A record without evidence falls back to its summary.
    CHECK(evidence_block.find("Summary:\nonly summary") != std::string::npos);

    const std::string both = render_material_block(bank.records(), MaterialMode::summary_and_evidence);
    CHECK(both.find("Summary:\nthe summary\nfirst fact\nsecond fact\n") != std::string::npos);

    CHECK_THROWS_AS(render_material_block(std::vector<SourceRecord>{}, MaterialMode::summary), Error);
}

TEST_CASE("material block lists every id exactly once in input order") {
    gen::Rng rng(99);
    MemoryBank bank = random_bank(rng, 20);
    const std::string block = render_material_block(bank.records(), MaterialMode::summary);

    int previous_pos = -1;
    for (const auto& record : bank.records()) {
        const std::string open = "<" + record.id.str() + ">";
        const std::string close = "</" + record.id.str() + ">";
        CHECK(oracle::count_occurrences(block, open) == 1);
        CHECK(oracle::count_occurrences(block, close) == 1);
        const int pos = static_cast<int>(block.find(open));
        CHECK(pos > previous_pos);
        previous_pos = pos;
    }
    CHECK(oracle::count_occurrences(block, "<material>") == 1);
    CHECK(oracle::count_occurrences(block, "</material>") == 1);
}

TEST_CASE("bank persistence round-trips") {
    SECTION("empty bank") {
        MemoryBank bank;
        MemoryBank back = MemoryBank::load(bank.save());
        CHECK(back == bank);
        CHECK(back.save() == bank.save());
    }

    SECTION("100-record randomized bank") {
        gen::Rng rng(1234);
        MemoryBank bank = random_bank(rng, 100);
        const std::string saved = bank.save();
        MemoryBank back = MemoryBank::load(saved);
        CHECK(back == bank);
        CHECK(back.save() == saved);
        CHECK(back.next_ordinal() == 101);
    }

    SECTION("tampered version is rejected") {
        MemoryBank bank;
        admit_nth(bank, 1);
        std::string saved = bank.save();
        const std::string needle = "\"version\": 1";
        saved.replace(saved.find(needle), needle.size(), "\"version\": 9");
        try {
            MemoryBank::load(saved);
            FAIL("expected VersionMismatch");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::VersionMismatch);
        }
    }

    SECTION("garbage is rejected as CorruptBank") {
        try {
            MemoryBank::load("{\"type\": \"other\"}");
            FAIL("expected CorruptBank");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::CorruptBank);
        }
    }

    SECTION("dedup map survives a load") {
        MemoryBank bank;
        admit_nth(bank, 1);
        MemoryBank back = MemoryBank::load(bank.save());
        SourceId again = back.admit_source("https://example.org/page/1", "T", "g", "s", {});
        CHECK(again.str() == "id_1");
        CHECK(back.size() == 1);
    }
}

TEST_CASE("id assignment is stable for a fixed admission sequence") {
    auto run = [] {
        MemoryBank bank;
        std::vector<std::string> ids;
        for (int i = 1; i <= 10; ++i) ids.push_back(admit_nth(bank, i).str());
        return ids;
    };
    CHECK(run() == run());
}
