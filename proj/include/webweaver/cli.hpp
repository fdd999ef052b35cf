#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "webweaver/config.hpp"
#include "webweaver/evaluation.hpp"
#include "webweaver/fixtures.hpp"
#include "webweaver/gateway.hpp"
#include "webweaver/http_backend.hpp"
#include "webweaver/planner.hpp"
#include "webweaver/search.hpp"
#include "webweaver/version.hpp"
#include "webweaver/writer.hpp"

namespace webweaver::cli {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

inline std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline void spill(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    out << content;
}

// ---------------------------------------------------------------------------
// Stack construction from a RunConfig
// ---------------------------------------------------------------------------

struct Stack {
    Gateway gateway;
    std::shared_ptr<SearchProvider> provider;
    std::shared_ptr<Fetcher> fetcher;
    MemoryBank bank;

    SearchPipeline pipeline(const RunConfig& config) {
        return SearchPipeline(provider, fetcher, gateway, config.pipeline);
    }
};

inline Stack build_stack(const RunConfig& config) {
    config.validate();
    Stack stack;

    if (config.mode == RunMode::offline) {
        for (const auto& dir : {config.search_fixtures_dir, config.page_fixtures_dir}) {
            if (!fs::is_directory(dir)) {
                throw Error(ErrorKind::ConfigError, dir.string() + " is not a directory");
            }
        }
        nlohmann::json scripts = nlohmann::json::parse(slurp(config.scripts_path), nullptr, false);
        if (scripts.is_discarded() || !scripts.contains("slots")) {
            throw Error(ErrorKind::ConfigError,
                        config.scripts_path.string() + " is not a script file");
        }
        auto scripted = [&scripts](const char* slot) -> std::shared_ptr<Backend> {
            std::vector<ScriptEntry> script;
            if (scripts["slots"].contains(slot)) {
                script = demo::script_from_json(scripts["slots"][slot]);
            }
            auto backend = std::make_shared<ScriptedBackend>(std::move(script));
            backend->set_name(std::string("scripted-") + slot);
            return backend;
        };
        stack.gateway.configure(Slot::planner, {scripted("planner"), "scripted-planner",
                                                config.planner_model.temperature,
                                                config.planner_model.max_output_tokens});
        stack.gateway.configure(Slot::writer, {scripted("writer"), "scripted-writer",
                                               config.writer_model.temperature,
                                               config.writer_model.max_output_tokens});
        stack.gateway.configure(Slot::digester, {scripted("digester"), "scripted-digester",
                                                 config.digester_model.temperature,
                                                 config.digester_model.max_output_tokens});
        stack.gateway.configure(Slot::judge, {scripted("judge"), "scripted-judge",
                                              config.judge_model.temperature,
                                              config.judge_model.max_output_tokens});
        stack.provider = std::make_shared<FixtureSearchProvider>(config.search_fixtures_dir);
        stack.fetcher = std::make_shared<DirectoryFetcher>(config.page_fixtures_dir);
    } else {
        auto backend = std::make_shared<HttpBackend>(config.api_base_url, config.api_key);
        auto slot = [&backend](const ModelSlotSettings& settings) {
            return SlotConfig{backend, settings.model_id, settings.temperature,
                              settings.max_output_tokens};
        };
        stack.gateway.configure(Slot::planner, slot(config.planner_model));
        stack.gateway.configure(Slot::writer, slot(config.writer_model));
        stack.gateway.configure(Slot::digester, slot(config.digester_model));
        stack.gateway.configure(Slot::judge, slot(config.judge_model));
        if (config.search_base_url.empty()) {
            throw Error(ErrorKind::ConfigError, "live mode requires search.base_url");
        }
        stack.provider =
            std::make_shared<HttpSearchProvider>(config.search_base_url, config.search_key);
        auto live_fetcher = std::make_shared<HttpFetcher>(config.honor_robots);
        if (config.fetch_cache_dir.empty()) {
            stack.fetcher = live_fetcher;
        } else {
            stack.fetcher =
                std::make_shared<DirectoryFetcher>(config.fetch_cache_dir, live_fetcher);
        }
    }
    stack.gateway.set_budget(std::make_shared<TokenBudget>(config.token_budget));
    return stack;
}

// ---------------------------------------------------------------------------
// Artifacts
// ---------------------------------------------------------------------------

inline nlohmann::json validation_json(const ValidationReport& outline_report,
                                      const CitationStructure& citations,
                                      const std::vector<Deviation>& deviations,
                                      const std::vector<std::string>& warnings) {
    nlohmann::json dangling_outline = nlohmann::json::array();
    for (const auto& id : outline_report.dangling_ids) dangling_outline.push_back(id.str());
    nlohmann::json dangling_cites = nlohmann::json::array();
    for (const auto& id : citations.dangling) dangling_cites.push_back(id.str());
    nlohmann::json deviation_list = nlohmann::json::array();
    for (const auto& d : deviations) {
        deviation_list.push_back(
            {{"turn", d.turn_index}, {"kind", d.kind}, {"detail", d.detail}});
    }
    return nlohmann::json{
        {"outline",
         {{"dangling_ids", dangling_outline},
          {"uncited_sections", outline_report.uncited_sections},
          {"cited_coverage", outline_report.cited_coverage}}},
        {"citations",
         {{"total_cites", citations.total_cites},
          {"unique_cited_sources", citations.unique_cited_sources},
          {"dangling", dangling_cites},
          {"structural_accuracy", citations.structural_accuracy}}},
        {"deviations", deviation_list},
        {"warnings", warnings}};
}

/// Rebuilds the Report value from a writer trace: one section per write
/// action, citations re-extracted from the section text.
inline Report report_from_trajectory(const Trajectory& writer_trajectory, const MemoryBank& bank,
                                     const TokenCounter& counter = default_token_counter()) {
    std::vector<ReportSection> sections;
    for (const auto& turn : writer_trajectory.turns()) {
        if (const auto* write = std::get_if<WriteAction>(&turn.action)) {
            ReportSection section;
            section.order = static_cast<int>(sections.size()) + 1;
            section.text = write->section_text;
            section.cited_ids = extract_cites(section.text).ids;
            sections.push_back(std::move(section));
        }
    }
    if (sections.empty()) {
        throw Error(ErrorKind::EmptyReport, "trace contains no write actions");
    }
    return assemble_report(sections, bank, counter).report;
}

inline void write_error_record(const fs::path& out_dir, const Error& error) {
    try {
        spill(out_dir / "error.json",
              nlohmann::json{{"error", to_string(error.kind())}, {"message", error.what()}}.dump(2) +
                  "\n");
    } catch (...) {
        // the error report is best effort; the exit code carries the signal
    }
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

inline int cmd_plan_and_maybe_write(const RunConfig& config, bool run_writer) {
    Stack stack = build_stack(config);
    SearchPipeline pipeline = stack.pipeline(config);

    PlanResult planned = plan(config.question, config.planner, stack.gateway, pipeline, stack.bank);

    spill(config.out_dir / "outline.json", outline_to_json(planned.outline).dump(2) + "\n");
    spill(config.out_dir / "bank.json", stack.bank.save());
    spill(config.out_dir / "planner_trace.jsonl", serialize_trace(planned.trajectory));

    std::vector<std::string> warnings = planned.warnings;
    ValidationReport outline_report = validate_outline(planned.outline, stack.bank);

    if (!run_writer) {
        spill(config.out_dir / "validation.json",
              validation_json(outline_report, CitationStructure{}, {}, warnings).dump(2) + "\n");
        for (const auto& warning : warnings) std::cerr << "warning: " << warning << "\n";
        return warnings.empty() ? 0 : 2;
    }

    WriteOutcome written =
        write_report(planned.outline, stack.bank, config.writer, stack.gateway, config.question);
    warnings.insert(warnings.end(), written.warnings.begin(), written.warnings.end());

    spill(config.out_dir / "report.md", written.document + "\n");
    spill(config.out_dir / "writer_trace.jsonl", serialize_trace(written.trajectory));

    const CitationStructure citations = check_citation_structure(written.report, stack.bank);
    const TraceStats stats =
        compute_trace_stats(planned.trajectory, written.trajectory, planned.outline, stack.bank,
                            written.report, stack.gateway.counter());
    spill(config.out_dir / "stats.json", stats_to_json(stats).dump(2) + "\n");
    spill(config.out_dir / "validation.json",
          validation_json(outline_report, citations, written.deviations, warnings).dump(2) + "\n");

    for (const auto& warning : warnings) std::cerr << "warning: " << warning << "\n";
    std::cout << "report: " << (config.out_dir / "report.md").string() << "\n"
              << "sections: " << written.report.sections.size()
              << ", references: " << written.report.references.size()
              << ", structural_accuracy: " << citations.structural_accuracy << "\n";
    return warnings.empty() ? 0 : 2;
}

inline int cmd_write(const RunConfig& config, const fs::path& artifacts_dir) {
    Stack stack = build_stack(config);
    stack.bank = MemoryBank::load(slurp(artifacts_dir / "bank.json"));
    nlohmann::json outline_doc =
        nlohmann::json::parse(slurp(artifacts_dir / "outline.json"), nullptr, false);
    if (outline_doc.is_discarded()) {
        throw Error(ErrorKind::CorruptRecord, "outline.json is not valid JSON");
    }
    Outline outline = outline_from_json(outline_doc, stack.bank);

    WriteOutcome written =
        write_report(outline, stack.bank, config.writer, stack.gateway, config.question);

    spill(config.out_dir / "report.md", written.document + "\n");
    spill(config.out_dir / "writer_trace.jsonl", serialize_trace(written.trajectory));
    const CitationStructure citations = check_citation_structure(written.report, stack.bank);
    spill(config.out_dir / "validation.json",
          validation_json(validate_outline(outline, stack.bank), citations, written.deviations,
                          written.warnings)
                  .dump(2) +
              "\n");
    for (const auto& warning : written.warnings) std::cerr << "warning: " << warning << "\n";
    return written.warnings.empty() ? 0 : 2;
}

inline int cmd_judge(const RunConfig& config, const fs::path& outline_path) {
    Stack stack = build_stack(config);
    std::string outline_raw = slurp(outline_path);
    if (outline_path.extension() == ".json") {
        nlohmann::json doc = nlohmann::json::parse(outline_raw, nullptr, false);
        if (!doc.is_discarded() && doc.contains("raw_text")) {
            outline_raw = doc["raw_text"].get<std::string>();
        }
    }
    JudgeOutcome outcome = judge_outline(outline_raw, config.question, stack.gateway);

    nlohmann::json results = nlohmann::json::array();
    for (const auto& result : outcome.per_criterion) {
        results.push_back({{"criterion", result.criterion},
                           {"rating", result.rating},
                           {"justification", result.justification}});
    }
    nlohmann::json doc{{"overall", outcome.overall},
                       {"partial", outcome.partial},
                       {"failed_criteria", outcome.failed_criteria},
                       {"per_criterion", results}};
    spill(config.out_dir / "judge.json", doc.dump(2) + "\n");
    std::cout << doc.dump(2) << "\n";
    return outcome.partial ? 2 : 0;
}

inline int cmd_stats(const fs::path& dir, const fs::path& out_dir) {
    MemoryBank bank = MemoryBank::load(slurp(dir / "bank.json"));
    Trajectory planner_trajectory = parse_trace(slurp(dir / "planner_trace.jsonl"));
    Trajectory writer_trajectory = parse_trace(slurp(dir / "writer_trace.jsonl"));
    nlohmann::json outline_doc =
        nlohmann::json::parse(slurp(dir / "outline.json"), nullptr, false);
    if (outline_doc.is_discarded()) {
        throw Error(ErrorKind::CorruptRecord, "outline.json is not valid JSON");
    }
    Outline outline = outline_from_json(outline_doc, bank);
    Report report = report_from_trajectory(writer_trajectory, bank);

    const TraceStats stats =
        compute_trace_stats(planner_trajectory, writer_trajectory, outline, bank, report);
    const std::string rendered = stats_to_json(stats).dump(2) + "\n";
    spill(out_dir / "stats.json", rendered);
    std::cout << rendered;
    return 0;
}

/// Re-parses a trace, re-renders every turn through the grammar, and checks
/// the trajectory invariants. Exit 0 only when everything holds.
inline int cmd_replay(const fs::path& trace_path) {
    Trajectory trajectory;
    try {
        trajectory = parse_trace(slurp(trace_path));
    } catch (const Error& e) {
        std::cout << "replay FAILED: " << e.what() << "\n";
        return 1;
    }

    try {
        for (const auto& turn : trajectory.turns()) {
            const std::string rendered = render_assistant_text(turn);
            const ParsedTurn reparsed = parse_assistant_turn(rendered, trajectory.role());
            if (reparsed.thought != turn.thought || !(reparsed.action == turn.action)) {
                std::cout << "replay FAILED: render-parse-mismatch at turn " << turn.index << "\n";
                return 1;
            }
        }
    } catch (const Error& e) {
        std::cout << "replay FAILED: render-parse-mismatch: " << e.what() << "\n";
        return 1;
    }

    // Structural invariants were enforced while rebuilding the trajectory;
    // re-serialize to prove the log round-trips.
    Trajectory rebuilt(trajectory.role());
    for (const auto& turn : trajectory.turns()) rebuilt.append(turn);
    if (!(parse_trace(serialize_trace(rebuilt)) == trajectory)) {
        std::cout << "replay FAILED: reserialization-mismatch\n";
        return 1;
    }

    // Recompute the per-trace statistics from the rebuilt trajectory.
    long searches = 0, queries = 0, outlines = 0, retrieves = 0, writes = 0;
    for (const auto& turn : trajectory.turns()) {
        switch (kind_of(turn.action)) {
            case ActionKind::search:
                ++searches;
                queries += static_cast<long>(std::get<SearchAction>(turn.action).queries.size());
                break;
            case ActionKind::write_outline: ++outlines; break;
            case ActionKind::retrieve: ++retrieves; break;
            case ActionKind::write: ++writes; break;
            case ActionKind::terminate: break;
        }
    }
    std::cout << "replay OK: role=" << to_string(trajectory.role())
              << " turns=" << trajectory.size()
              << " terminated=" << (trajectory.terminated() ? "true" : "false");
    if (trajectory.role() == AgentRole::planner) {
        std::cout << " search_steps=" << searches << " search_queries=" << queries
                  << " outline_optimizations=" << outlines;
    } else {
        std::cout << " retrieves=" << retrieves << " writing_steps=" << (retrieves + writes);
    }
    std::cout << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline int run(std::vector<std::string> args) {
    CLI::App app{"webweaver: dual-agent deep-research engine"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string question_flag;
    std::string out_flag;
    std::string mode_flag;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "config file (JSON)");
        sub->add_option("--question", question_flag, "research question (overrides config)");
        sub->add_option("--out", out_flag, "output directory (overrides config)");
        sub->add_option("--mode", mode_flag, "live or offline (overrides config)");
    };

    CLI::App* research = app.add_subcommand("research", "plan then write, end to end");
    CLI::App* plan_cmd = app.add_subcommand("plan", "run the planner only");
    CLI::App* write_cmd = app.add_subcommand("write", "write a report from saved outline + bank");
    CLI::App* judge_cmd = app.add_subcommand("judge", "score an outline on the six criteria");
    CLI::App* stats_cmd = app.add_subcommand("stats", "recompute run statistics from artifacts");
    CLI::App* replay_cmd = app.add_subcommand("replay", "verify a trace log");
    add_common(research);
    add_common(plan_cmd);
    add_common(write_cmd);
    add_common(judge_cmd);

    std::string artifacts_dir;
    write_cmd->add_option("--dir", artifacts_dir, "directory with outline.json and bank.json");

    std::string judge_outline_path;
    judge_cmd->add_option("--outline", judge_outline_path, "outline file (json or raw text)")
        ->required();

    std::string stats_dir;
    std::string stats_out;
    stats_cmd->add_option("--dir", stats_dir, "artifact directory")->required();
    stats_cmd->add_option("--out", stats_out, "output directory (defaults to --dir)");

    std::string trace_path;
    replay_cmd->add_option("--trace", trace_path, "trace log path")->required();

    std::vector<const char*> argv;
    argv.push_back("webweaver");
    for (const auto& arg : args) argv.push_back(arg.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    RunConfig config;
    auto finish_config = [&]() {
        if (!config_path.empty()) config = load_config_file(config_path);
        apply_env_overrides(config);
        if (!question_flag.empty()) config.question = question_flag;
        if (!out_flag.empty()) config.out_dir = out_flag;
        if (!mode_flag.empty()) {
            if (mode_flag == "live") config.mode = RunMode::live;
            else if (mode_flag == "offline") config.mode = RunMode::offline;
            else throw Error(ErrorKind::ConfigError, "mode must be live or offline");
        }
    };

    try {
        if (research->parsed()) {
            finish_config();
            return cmd_plan_and_maybe_write(config, /*run_writer=*/true);
        }
        if (plan_cmd->parsed()) {
            finish_config();
            return cmd_plan_and_maybe_write(config, /*run_writer=*/false);
        }
        if (write_cmd->parsed()) {
            finish_config();
            const fs::path dir = artifacts_dir.empty() ? config.out_dir : fs::path(artifacts_dir);
            return cmd_write(config, dir);
        }
        if (judge_cmd->parsed()) {
            finish_config();
            return cmd_judge(config, judge_outline_path);
        }
        if (stats_cmd->parsed()) {
            return cmd_stats(stats_dir, stats_out.empty() ? fs::path(stats_dir) : fs::path(stats_out));
        }
        if (replay_cmd->parsed()) {
            return cmd_replay(trace_path);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        write_error_record(config.out_dir, e);
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace webweaver::cli
