#include <catch2/catch_amalgamated.hpp>

#include "webweaver/planner.hpp"

#include "support/generators.hpp"
#include "support/oracle.hpp"
#include "support/scripted_world.hpp"

using namespace webweaver;

TEST_CASE("parse_outline maps enumeration schemes onto a tree") {
    MemoryBank bank;

    SECTION("two-level direct mapping") {
        Outline outline = parse_outline(
            "I. Intro <citation>id_1</citation>\n A. Background <citation>id_2, id_3</citation>",
            bank);
        REQUIRE(outline.roots.size() == 1);
        CHECK(outline.roots[0].heading == "Intro");
        REQUIRE(outline.roots[0].citations.size() == 1);
        CHECK(outline.roots[0].citations[0].ordinal == 1);
        REQUIRE(outline.roots[0].children.size() == 1);
        const OutlineNode& child = outline.roots[0].children[0];
        CHECK(child.heading == "Background");
        REQUIRE(child.citations.size() == 2);
        CHECK(child.citations[0].ordinal == 2);
        CHECK(child.citations[1].ordinal == 3);
    }

    SECTION("title line precedes the first heading") {
        Outline outline = parse_outline("A Study of Heat\nI. One\nII. Two", bank);
        CHECK(outline.title == "A Study of Heat");
        CHECK(outline.roots.size() == 2);
    }

    SECTION("single capital letters that look roman stay letters mid-sequence") {
        Outline outline = parse_outline(
            "I. First\n A. Alpha\n B. Beta\n C. Gamma\n D. Delta\nII. Second\n 1. Numbered\n"
            " a. Lettered",
            bank);
        REQUIRE(outline.roots.size() == 2);
        CHECK(outline.roots[0].children.size() == 4);  // A-D are letters, not romans
        CHECK(outline.roots[0].children[3].heading == "Delta");
        REQUIRE(outline.roots[1].children.size() == 1);
        CHECK(outline.roots[1].children[0].children.size() == 1);
        CHECK(outline.roots[1].children[0].children[0].depth == 4);
    }

    SECTION("markdown headings work and depth is capped") {
        Outline outline = parse_outline("# Top\n## Mid\n###### Deep", bank);
        REQUIRE(outline.roots.size() == 1);
        const OutlineNode* node = &outline.roots[0];
        REQUIRE(node->children.size() == 1);
        node = &node->children[0];
        REQUIRE(node->children.size() == 1);
        CHECK(node->children[0].depth == kMaxOutlineDepth);
    }

    SECTION("citations on content lines attach to the nearest section") {
        Outline outline =
            parse_outline("I. One\nsupporting prose <citation>id_7</citation>", bank);
        REQUIRE(outline.roots[0].citations.size() == 1);
        CHECK(outline.roots[0].citations[0].ordinal == 7);
    }

    SECTION("errors") {
        try {
            parse_outline("prose only, nothing enumerated", bank);
            FAIL("expected UnparseableOutline");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::UnparseableOutline);
        }
        try {
            parse_outline("I. One <citation>id_1", bank);
            FAIL("expected MalformedCitationTag");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::MalformedCitationTag);
        }
    }
}

TEST_CASE("the demo outline carries the ten-citation measurement node") {
    MemoryBank bank;
    const auto fx = demo::make_fixtures();
    Outline outline = parse_outline(fx.final_outline_text, bank);
    REQUIRE(outline.roots.size() == 3);
    const OutlineNode& measurement = outline.roots[1];
    CHECK(measurement.heading == "Measurement and Monitoring Approaches");
    std::vector<int> ids;
    for (const auto& id : measurement.citations) ids.push_back(id.ordinal);
    CHECK(ids == std::vector<int>{2, 6, 9, 12, 13, 14, 15, 17, 20, 21});
    CHECK(outline.raw_text == fx.final_outline_text);
}

namespace {

std::string random_outline_text(gen::Rng& rng) {
    std::string text = gen::words(rng, 2, 5) + "\n";
    static const char* markers[] = {"I. ", "II. ", " A. ", " B. ", " 1. ", " 2. ", " a. ", "# ",
                                    "## "};
    const int lines = gen::pick(rng, 1, 12);
    for (int i = 0; i < lines; ++i) {
        text += markers[gen::pick(rng, 0, 8)] + gen::words(rng, 2, 6);
        if (gen::pick(rng, 0, 1) == 0) {
            text += " <citation>";
            const int ids = gen::pick(rng, 1, 4);
            for (int k = 0; k < ids; ++k) {
                if (k) text += ", ";
                text += "id_" + std::to_string(gen::pick(rng, 1, 60));
            }
            text += "</citation>";
        }
        text += "\n";
    }
    return text;
}

int count_tree_citations(const webweaver::OutlineNode& node) {
    int total = static_cast<int>(node.citations.size());
    for (const auto& child : node.children) total += count_tree_citations(child);
    return total;
}

}  // namespace

TEST_CASE("parsed citation counts match a brute-force pattern scan") {
    gen::Rng rng(555);
    MemoryBank bank;
    for (int i = 0; i < 100; ++i) {
        const std::string raw = random_outline_text(rng);
        Outline outline;
        try {
            outline = parse_outline(raw, bank);
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::UnparseableOutline);
            continue;
        }
        int parsed = 0;
        for (const auto& root : outline.roots) parsed += count_tree_citations(root);
        CHECK(parsed == static_cast<int>(oracle::scan_citation_tag_ids(raw).size()));
    }
}

TEST_CASE("validate_outline reports dangling ids and coverage") {
    MemoryBank bank;
    for (int i = 1; i <= 10; ++i) {
        bank.admit_source("https://example.org/" + std::to_string(i), "T", "g", "s", {});
    }

    SECTION("clean outline") {
        Outline outline = parse_outline(
            "I. One <citation>id_1</citation>\nII. Two <citation>id_2, id_3</citation>", bank);
        ValidationReport report = validate_outline(outline, bank);
        CHECK(report.dangling_ids.empty());
        CHECK(report.uncited_sections.empty());
        CHECK(report.cited_coverage == 1.0);
    }

    SECTION("dangling id") {
        Outline outline = parse_outline("I. One <citation>id_999</citation>", bank);
        ValidationReport report = validate_outline(outline, bank);
        REQUIRE(report.dangling_ids.size() == 1);
        CHECK(report.dangling_ids[0].str() == "id_999");
    }

    SECTION("uncited leaves lower coverage") {
        Outline outline =
            parse_outline("I. One <citation>id_1</citation>\n A. Cited <citation>id_2</citation>\n"
                          " B. Bare\nII. Also bare",
                          bank);
        ValidationReport report = validate_outline(outline, bank);
        REQUIRE(report.uncited_sections.size() == 2);
        CHECK(report.uncited_sections[0] == "Bare");
        CHECK(report.uncited_sections[1] == "Also bare");
        CHECK(report.cited_coverage == Catch::Approx(1.0 / 3.0));
    }

    SECTION("random outlines match brute-force set arithmetic") {
        gen::Rng rng(808);
        for (int i = 0; i < 60; ++i) {
            const std::string raw = random_outline_text(rng);
            Outline outline;
            try {
                outline = parse_outline(raw, bank);
            } catch (const Error&) {
                continue;
            }
            ValidationReport report = validate_outline(outline, bank);

            // Independent recomputation by walking the tree.
            std::vector<const OutlineNode*> stack;
            for (const auto& root : outline.roots) stack.push_back(&root);
            std::set<int> dangling;
            int leaves = 0, cited_leaves = 0;
            while (!stack.empty()) {
                const OutlineNode* node = stack.back();
                stack.pop_back();
                for (const auto& id : node->citations) {
                    if (id.ordinal > 10) dangling.insert(id.ordinal);
                }
                if (node->children.empty()) {
                    ++leaves;
                    if (!node->citations.empty()) ++cited_leaves;
                }
                for (const auto& child : node->children) stack.push_back(&child);
            }
            CHECK(report.dangling_ids.size() == dangling.size());
            CHECK(report.cited_coverage ==
                  Catch::Approx(leaves == 0 ? 0.0 : double(cited_leaves) / leaves));
        }
    }
}

TEST_CASE("plan runs the minimal legal session") {
    world::DemoWorld w;
    std::vector<ScriptEntry> script = {
        w.fx.planner_script[0],  // search 1
        {"<think>\nStructure is clear.\n</think>\n<write_outline>\nI. Formation "
         "<citation>id_1</citation>\n A. Surfaces <citation>id_2</citation>\n</write_outline>",
         {}},
        {"<think>\nDone.\n</think>\n<terminate>", {}},
    };
    w.planner_backend = std::make_shared<ScriptedBackend>(script);
    w.gateway.configure(Slot::planner, {w.planner_backend, "scripted-planner", std::nullopt, 8192});

    PlanResult result = w.run_plan();
    CHECK(result.trajectory.size() == 3);
    CHECK(result.trajectory.terminated());
    CHECK(result.outline.round == 1);
    CHECK(count_optimization_rounds(result.trajectory) == 1);
    CHECK(result.warnings.empty());
    CHECK(w.bank.size() == 5);

    // The search observation is a summary material block, bytes included.
    const Turn& search_turn = result.trajectory.turns()[0];
    REQUIRE(search_turn.observation.has_value());
    CHECK(search_turn.observation->rfind("<material>\n<id_1>", 0) == 0);
    CHECK(search_turn.observation->find("Summary:") != std::string::npos);

    // The outline turn's observation reports validation results.
    const Turn& outline_turn = result.trajectory.turns()[1];
    REQUIRE(outline_turn.observation.has_value());
    CHECK(outline_turn.observation->find("Outline round 1 recorded") != std::string::npos);
    CHECK(outline_turn.observation->find("Dangling ids: none.") != std::string::npos);
}

TEST_CASE("plan reproduces the bundled eight-step research cycle") {
    world::DemoWorld w;
    PlanResult result = w.run_plan();

    REQUIRE(result.trajectory.size() == 8);
    CHECK(result.trajectory.terminated());
    CHECK(count_optimization_rounds(result.trajectory) == 2);
    CHECK(result.outline.round == 2);
    CHECK(result.warnings.empty());
    CHECK(w.bank.size() == 25);

    // Searches at steps 1-4 and 6 (indices 0-3, 5), outlines at 5 and 7.
    const auto& turns = result.trajectory.turns();
    for (int i : {0, 1, 2, 3, 5}) CHECK(kind_of(turns[i].action) == ActionKind::search);
    for (int i : {4, 6}) CHECK(kind_of(turns[i].action) == ActionKind::write_outline);
    CHECK(kind_of(turns[7].action) == ActionKind::terminate);

    // Every citation in the returned outline resolves in the bank.
    for (const auto& id : outline_citations(result.outline)) {
        CHECK(w.bank.contains(id));
    }
    ValidationReport report = validate_outline(result.outline, w.bank);
    CHECK(report.dangling_ids.empty());
    CHECK(report.cited_coverage == 1.0);

    // The measurement node still carries the ten-citation set end to end.
    std::vector<int> ids;
    for (const auto& id : result.outline.roots[1].citations) ids.push_back(id.ordinal);
    CHECK(ids == std::vector<int>{2, 6, 9, 12, 13, 14, 15, 17, 20, 21});
}

TEST_CASE("plan imposes no phase ordering on search and outline actions") {
    // Outline first, search later, outline again: the loop accepts any
    // interleaving the model chooses.
    world::DemoWorld w;
    std::vector<ScriptEntry> script = {
        {"<think>\nSketch first from prior knowledge.\n</think>\n<write_outline>\nI. Formation\n"
         " A. Surfaces\n</write_outline>",
         {}},
        w.fx.planner_script[0],  // search 1
        {"<think>\nGround the sketch in the new material.\n</think>\n<write_outline>\nI. "
         "Formation <citation>id_1</citation>\n A. Surfaces <citation>id_2, "
         "id_3</citation>\n</write_outline>",
         {}},
        {"<terminate>", {}},
    };
    w.planner_backend = std::make_shared<ScriptedBackend>(script);
    w.gateway.configure(Slot::planner, {w.planner_backend, "scripted-planner", std::nullopt, 8192});

    PlanResult result = w.run_plan();
    CHECK(result.trajectory.size() == 4);
    CHECK(count_optimization_rounds(result.trajectory) == 2);
    CHECK(result.outline.round == 2);
    // The round-1 outline cited nothing and was legal; round 2 wins.
    CHECK(result.outline.roots[0].citations.size() == 1);
    CHECK(result.warnings.empty());
}

TEST_CASE("plan rejects an immediate terminate, twice means NoOutline") {
    world::DemoWorld w;
    w.planner_backend = std::make_shared<ScriptedBackend>(std::vector<ScriptEntry>{
        {"<think>\nNothing to do.\n</think>\n<terminate>", {}},
        {"<terminate>", {}},
    });
    w.gateway.configure(Slot::planner, {w.planner_backend, "scripted-planner", std::nullopt, 8192});
    try {
        w.run_plan();
        FAIL("expected NoOutline");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NoOutline);
    }
    // Both replies were consumed: the terminate was re-prompted once.
    CHECK(w.planner_backend->replies_left() == 0);
}

TEST_CASE("plan recovers from one malformed reply via a corrective re-prompt") {
    world::DemoWorld w;
    w.planner_backend = std::make_shared<ScriptedBackend>(std::vector<ScriptEntry>{
        {"no action here at all", {}},
        {"<write_outline>\nI. Single <citation>id_1</citation>\n</write_outline>", {}},
        {"<terminate>", {}},
    });
    w.gateway.configure(Slot::planner, {w.planner_backend, "scripted-planner", std::nullopt, 8192});
    PlanResult result = w.run_plan();
    CHECK(result.trajectory.size() == 2);
    CHECK(result.outline.round == 1);

    // The corrective exchange is visible in the second request's context.
    const auto log = w.planner_backend->request_log();
    REQUIRE(log.size() >= 2);
    CHECK(log[1].messages.back().content.find("Reply again") != std::string::npos);
}

TEST_CASE("plan returns the best outline with a warning when turns run out") {
    world::DemoWorld w;
    PlannerConfig config;
    config.max_turns = 5;  // stops before the second outline and the terminate
    PlanResult result = w.run_plan(config);
    CHECK_FALSE(result.trajectory.terminated());
    CHECK(result.outline.round == 1);
    REQUIRE_FALSE(result.warnings.empty());
    CHECK(result.warnings[0].find("max_turns") != std::string::npos);

    SECTION("no outline at all raises MaxTurnsExceeded") {
        world::DemoWorld w2;
        PlannerConfig tight;
        tight.max_turns = 2;
        try {
            w2.run_plan(tight);
            FAIL("expected MaxTurnsExceeded");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::MaxTurnsExceeded);
        }
    }
}

TEST_CASE("plan stops on budget exhaustion and keeps the outline written so far") {
    world::DemoWorld w;
    w.gateway.set_budget(std::make_shared<TokenBudget>(26000));
    PlanResult result = w.run_plan();
    REQUIRE_FALSE(result.warnings.empty());
    CHECK(result.warnings[0].find("budget") != std::string::npos);
    CHECK(result.outline.round >= 1);
    CHECK_FALSE(result.trajectory.terminated());
}

TEST_CASE("optimization round counting matches a trace scan") {
    gen::Rng rng(31337);
    for (int i = 0; i < 40; ++i) {
        Trajectory trajectory = gen::random_trajectory(rng, AgentRole::planner);
        const std::string trace = serialize_trace(trajectory);
        CHECK(count_optimization_rounds(trajectory) ==
              oracle::count_occurrences(trace, "\"kind\":\"write_outline\""));
    }
}
