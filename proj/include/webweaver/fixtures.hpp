#pragma once

// Bundled offline corpus: a complete scripted research run (planner, writer,
// digester, judge) over a synthetic topic, plus the matching search and page
// fixtures. This is what `webweaver-mkfixtures` writes to disk and what the
// offline test suites run against.

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "webweaver/gateway.hpp"
#include "webweaver/search.hpp"

namespace webweaver::demo {

inline constexpr int kPageCount = 25;
inline constexpr int kSearchCount = 5;

struct Fixtures {
    std::string question;
    std::vector<ScriptEntry> planner_script;
    std::vector<ScriptEntry> writer_script;
    std::vector<ScriptEntry> digester_script;
    std::vector<ScriptEntry> judge_script;
    std::map<std::string, std::vector<SearchHit>> serp;  // query -> ranked hits
    std::map<std::string, std::string> pages;            // url -> html body
    std::string final_outline_text;
};

namespace fixture_detail {

inline std::string marker(int page) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "UHI-P%02d", page);
    return buf;
}

inline std::string page_url(int page) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%02d", page);
    return "https://example.org/uhi/source-" + std::string(buf);
}

inline std::string page_title(int page) {
    static const char* aspects[] = {"albedo and pavement",  "canopy cover",
                                    "anthropogenic heat",   "street geometry",
                                    "station measurements", "satellite retrievals",
                                    "mitigation programs",  "cool roofing",
                                    "district greening",    "heat-health outcomes"};
    return "Urban heat study " + std::to_string(page) + ": " + aspects[page % 10];
}

inline std::string page_prose(int page) {
    const std::string m = marker(page);
    return "Field notes " + m + ". This survey examines how built surfaces store and release "
           "heat across a mid-sized city. Section one reviews measured temperature differentials "
           "between the urban core and the surrounding countryside. Section two documents the "
           "materials, street geometry, and waste-heat sources that drive the differential for "
           "case " + std::to_string(page) + ", and closes with monitoring recommendations.";
}

inline std::string page_summary(int page) {
    return "Source " + std::to_string(page) + " analyses urban-rural temperature differentials " +
           "for a mid-sized city, attributing the nighttime gap to heat stored in dense surfaces " +
           "and reduced sky view, and recommends continuous station transects for monitoring " +
           "(notes " + marker(page) + ").";
}

inline std::vector<std::string> page_evidence(int page) {
    return {"Observed nighttime urban-rural differential of " +
                std::to_string(2 + page % 4) + "." + std::to_string(page % 10) +
                " degrees Celsius across the study transect.",
            "Dense pavement retained roughly " + std::to_string(30 + page) +
                " percent more stored heat than vegetated control plots in case " +
                std::to_string(page) + "."};
}

inline std::string search_goal(int search) {
    static const char* goals[] = {
        "Understand how urban heat islands form in mid-sized cities",
        "Establish how urban heat islands are measured and monitored",
        "Collect evidence on mitigation strategies and their measured effect",
        "Gather case studies of mid-sized cities that reduced urban heat",
        "Fill remaining gaps on monitoring networks and program costs"};
    return goals[search - 1];
}

inline std::string search_query(int search, int q) {
    return "uhi topic " + std::to_string(search) + " angle " + std::to_string(q);
}

inline std::string think(const std::string& text) {
    return "<think>\n" + text + "\n</think>\n";
}

inline std::string search_call(int search) {
    nlohmann::json queries = nlohmann::json::array();
    for (int q = 1; q <= 3; ++q) queries.push_back(search_query(search, q));
    return think("Coverage is still thin; running search " + std::to_string(search) + ".") +
           "<tool_call>\n{\"name\": \"search\", \"arguments\": {\"query\": " + queries.dump() +
           ", \"goal\": " + nlohmann::json(search_goal(search)).dump() + "}}\n</tool_call>";
}

inline std::string retrieve_call(const std::vector<int>& ids, const std::string& goal) {
    nlohmann::json url_id = nlohmann::json::array();
    for (int id : ids) url_id.push_back("id_" + std::to_string(id));
    return think("Pulling the evidence cited for this section.") +
           "<tool_call>\n{\"name\": \"retrieve\", \"arguments\": {\"url_id\": " + url_id.dump() +
           ", \"goal\": " + nlohmann::json(goal).dump() + "}}\n</tool_call>";
}

inline std::string round_one_outline() {
    return
        "Urban Heat Islands: Formation, Measurement, and Mitigation\n"
        "I. Formation Mechanisms <citation>id_1, id_3</citation>\n"
        " A. Surface materials and albedo <citation>id_2, id_4</citation>\n"
        "II. Measurement and Monitoring Approaches <citation>id_6, id_9, id_12</citation>\n"
        "III. Mitigation Strategies <citation>id_16, id_19</citation>";
}

inline std::string round_two_outline() {
    return
        "Urban Heat Islands: Formation, Measurement, and Mitigation\n"
        "I. Formation Mechanisms <citation>id_1, id_3</citation>\n"
        " A. Surface materials and albedo <citation>id_2, id_4</citation>\n"
        " B. Waste heat and street geometry <citation>id_5, id_7</citation>\n"
        "II. Measurement and Monitoring Approaches <citation>id_2, id_6, id_9, id_12, id_13, "
        "id_14, id_15, id_17, id_20, id_21</citation>\n"
        " A. Station networks and transects <citation>id_8, id_10</citation>\n"
        " B. Remote sensing <citation>id_11, id_18</citation>\n"
        "III. Mitigation Strategies for Mid-Sized Cities <citation>id_16, id_19, id_22</citation>\n"
        " A. Cool surfaces <citation>id_23</citation>\n"
        " B. Urban greening <citation>id_24, id_25</citation>";
}

}  // namespace fixture_detail

inline Fixtures make_fixtures() {
    using namespace fixture_detail;
    Fixtures fx;
    fx.question =
        "How do urban heat islands form, how are they measured, and which mitigation strategies "
        "have proven effective for mid-sized cities?";
    fx.final_outline_text = round_two_outline();

    // Pages and their digester entries.
    for (int page = 1; page <= kPageCount; ++page) {
        fx.pages[page_url(page)] =
            "<html><head><title>" + page_title(page) + "</title></head><body><article><h1>" +
            page_title(page) + "</h1><p>" + page_prose(page) + "</p></article></body></html>";
        fx.digester_script.push_back({page_summary(page), {"Summarize the page", marker(page)}});
        std::string evidence_reply;
        for (const auto& item : page_evidence(page)) evidence_reply += "- " + item + "\n";
        fx.digester_script.push_back({evidence_reply, {"Extract up to", marker(page)}});
    }

    // Search results: search s admits pages 5(s-1)+1 .. 5(s-1)+5. Each query
    // returns three hits, two of them selected; filler URLs are never picked.
    for (int search = 1; search <= kSearchCount; ++search) {
        const int base = 5 * (search - 1);
        const int pages_of_query[3][2] = {{base + 1, base + 2}, {base + 3, base + 4}, {base + 5, 0}};
        for (int q = 0; q < 3; ++q) {
            std::vector<SearchHit> hits;
            auto filler = [&](int n) {
                const std::string url = "https://example.org/skip/s" + std::to_string(search) +
                                        "q" + std::to_string(q) + "n" + std::to_string(n);
                return SearchHit{url, "Listing page " + std::to_string(n), "index of links", ""};
            };
            auto page_hit = [&](int page) {
                return SearchHit{page_url(page), page_title(page),
                                 "urban heat survey with measured differentials", ""};
            };
            if (q < 2) {
                hits = {page_hit(pages_of_query[q][0]), filler(1), page_hit(pages_of_query[q][1])};
            } else {
                hits = {page_hit(pages_of_query[q][0]), filler(1), filler(2)};
            }
            fx.serp[search_query(search, q + 1)] = hits;
        }
        // Menu positions: 1=p+1, 2=f, 3=p+2, 4=p+3, 5=f, 6=p+4, 7=p+5, 8=f, 9=f.
        fx.digester_script.push_back(
            {"1,3,4,6,7", {"Select the web results", search_goal(search)}});
    }

    // Planner: searches at steps 1-4 and 6, outlines at 5 and 7, terminate at 8.
    fx.planner_script.push_back({search_call(1), {}});
    fx.planner_script.push_back({search_call(2), {}});
    fx.planner_script.push_back({search_call(3), {}});
    fx.planner_script.push_back({search_call(4), {}});
    fx.planner_script.push_back(
        {think("Enough material for a first structure.") + "<write_outline>\n" +
             round_one_outline() + "\n</write_outline>",
         {}});
    fx.planner_script.push_back({search_call(5), {}});
    fx.planner_script.push_back(
        {think("Monitoring and cost evidence is now in; finalize the structure.") +
             "<write_outline>\n" + round_two_outline() + "\n</write_outline>",
         {}});
    fx.planner_script.push_back(
        {think("The outline is comprehensive and every section is supported.") + "<terminate>",
         {}});

    // Writer: retrieves at steps 1, 3, 5, 7; writes at 2, 4, 6, 8; terminate at 9.
    fx.writer_script.push_back(
        {retrieve_call({2, 6, 9, 12, 13, 14, 15, 17, 20, 21},
                       "Measurement and monitoring approaches section"),
         {}});
    fx.writer_script.push_back(
        {think("The monitoring evidence is in hand; writing the measurement section.") +
             "<write>\nII. Measurement and Monitoring Approaches\n\nCities quantify their heat "
             "islands with paired stations and transects. <cite id=\"id_2,id_6\">Urban cores "
             "measure several degrees warmer than their surroundings at night</cite>, and <cite "
             "id=\"id_9\">dense surfaces retain a large share of stored daytime heat</cite>.\n"
             "</write>",
         {}});
    fx.writer_script.push_back({retrieve_call({1, 3}, "Formation mechanisms section"), {}});
    fx.writer_script.push_back(
        {think("Formation evidence retrieved; writing the formation section.") +
             "<write>\nI. Formation Mechanisms\n\n<cite id=\"id_1,id_3\">Low-albedo surfaces and "
             "reduced sky view drive the urban-rural temperature differential</cite>, which peaks "
             "after sunset.\n</write>",
         {}});
    fx.writer_script.push_back(
        {retrieve_call({16, 19, 22}, "Mitigation strategies section"), {}});
    fx.writer_script.push_back(
        {think("Mitigation evidence retrieved; writing the mitigation section.") +
             "<write>\nIII. Mitigation Strategies for Mid-Sized Cities\n\n<cite "
             "id=\"id_16,id_22\">Documented programs cut peak neighborhood temperatures</cite> "
             "through coordinated surface and canopy changes.\n</write>",
         {}});
    fx.writer_script.push_back(
        {retrieve_call({23, 24, 25}, "Cool surfaces and greening subsections"), {}});
    fx.writer_script.push_back(
        {think("Closing with the program-level subsections.") +
             "<write>\nIII.A-B. Cool Surfaces and Urban Greening\n\n<cite id=\"id_24,id_25\">"
             "Greening programs show measured reductions</cite> that complement <cite "
             "id=\"id_2\">the monitoring baselines established earlier</cite>.\n</write>",
         {}});
    fx.writer_script.push_back(
        {think("Every outline section is written; the report is complete.") + "<terminate>", {}});

    // Judge: one reply per criterion, matched on the criterion name.
    const std::pair<const char*, int> ratings[] = {
        {"Instruction following", 8}, {"Depth", 7}, {"Balance", 9},
        {"Breadth", 8},               {"Support", 6}, {"Insightfulness", 9}};
    for (const auto& [criterion, rating] : ratings) {
        fx.judge_script.push_back(
            {"{\"rating\": " + std::to_string(rating) +
                 ", \"justification\": \"Scripted verdict for " + std::string(criterion) + ".\"}",
             {"single criterion: " + std::string(criterion) + "."}});
    }
    return fx;
}

// ---------------------------------------------------------------------------
// On-disk form
// ---------------------------------------------------------------------------

inline nlohmann::json script_to_json(const std::vector<ScriptEntry>& script) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& entry : script) {
        nlohmann::json item{{"response", entry.response}};
        if (!entry.match.empty()) item["match"] = entry.match;
        out.push_back(std::move(item));
    }
    return out;
}

inline std::vector<ScriptEntry> script_from_json(const nlohmann::json& doc) {
    std::vector<ScriptEntry> script;
    for (const auto& item : doc) {
        ScriptEntry entry;
        entry.response = item.at("response").get<std::string>();
        if (item.contains("match")) entry.match = item["match"].get<std::vector<std::string>>();
        script.push_back(std::move(entry));
    }
    return script;
}

/// Writes the full offline corpus under `dir`: search_fixtures/, page_fixtures/,
/// scripts.json and a ready-to-run config.json. Returns the config path.
inline std::filesystem::path write_fixtures(const std::filesystem::path& requested_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(requested_dir);
    const fs::path dir = fs::absolute(requested_dir).lexically_normal();
    const Fixtures fx = make_fixtures();

    auto dump_file = [](const fs::path& path, const std::string& content) {
        fs::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary);
        out << content;
    };

    nlohmann::json serp_index = nlohmann::json::object();
    for (const auto& [query, hits] : fx.serp) {
        nlohmann::json doc = nlohmann::json::array();
        for (const auto& hit : hits) {
            doc.push_back({{"url", hit.url}, {"title", hit.title}, {"snippet", hit.snippet}});
        }
        const std::string key = content_key(query);
        dump_file(dir / "search_fixtures" / (key + ".json"), doc.dump(2) + "\n");
        serp_index[key] = query;
    }
    dump_file(dir / "search_fixtures" / "index.json", serp_index.dump(2) + "\n");

    nlohmann::json page_index = nlohmann::json::object();
    for (const auto& [url, html] : fx.pages) {
        const std::string key = content_key(url);
        dump_file(dir / "page_fixtures" / (key + ".html"), html);
        page_index[key] = url;
    }
    dump_file(dir / "page_fixtures" / "index.json", page_index.dump(2) + "\n");

    nlohmann::json scripts{{"version", 1},
                           {"slots",
                            {{"planner", script_to_json(fx.planner_script)},
                             {"writer", script_to_json(fx.writer_script)},
                             {"digester", script_to_json(fx.digester_script)},
                             {"judge", script_to_json(fx.judge_script)}}}};
    dump_file(dir / "scripts.json", scripts.dump(2) + "\n");

    nlohmann::json config{
        {"question", fx.question},
        {"mode", "offline"},
        {"out_dir", (dir / "out").string()},
        {"offline",
         {{"scripts", (dir / "scripts.json").string()},
          {"search_fixtures", (dir / "search_fixtures").string()},
          {"page_fixtures", (dir / "page_fixtures").string()}}}};
    const fs::path config_path = dir / "config.json";
    dump_file(config_path, config.dump(2) + "\n");
    return config_path;
}

}  // namespace webweaver::demo
