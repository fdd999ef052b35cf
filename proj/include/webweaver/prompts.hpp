#pragma once

// Prompt templates shipped with the engine. The texts are versioned as a unit:
// bump kPromptVersion on any byte change. Copies live under resources/ for
// auditing; the suite keeps both in sync.

#include <array>
#include <cctype>
#include <map>
#include <string>
#include <string_view>

namespace webweaver::prompts {

inline constexpr int kPromptVersion = 1;

/// Single-pass template fill: {name} tokens are looked up in `values`;
/// unknown tokens (or anything that is not a bare identifier in braces) pass
/// through untouched, and substituted values are never rescanned.
inline std::string interpolate(std::string_view tmpl,
                               const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] != '{') {
            out += tmpl[i++];
            continue;
        }
        std::size_t j = i + 1;
        while (j < tmpl.size() &&
               (std::isalnum(static_cast<unsigned char>(tmpl[j])) || tmpl[j] == '_')) {
            ++j;
        }
        if (j < tmpl.size() && tmpl[j] == '}' && j > i + 1) {
            auto it = values.find(std::string(tmpl.substr(i + 1, j - i - 1)));
            if (it != values.end()) {
                out += it->second;
                i = j + 1;
                continue;
            }
        }
        out += tmpl[i++];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Agent system prompts
// ---------------------------------------------------------------------------

inline constexpr std::string_view planner_system = R"ww(You are a research planner. Your job is to research an open-ended question and produce a comprehensive, citation-grounded report outline. Work in iterations: in every reply, first reason inside a single <think>...</think> block, then perform exactly one action.

Actions:

1. Search the web for evidence:
<tool_call>
{"name": "search", "arguments": {"query": ["first query", "second query"], "goal": "what this search should establish"}}
</tool_call>

2. Write or revise the full report outline. Use hierarchical numbering (I., A., 1., a.) and attach citations to each section, naming the material ids that support it:
<write_outline>
Outline Title
I. First major section <citation>id_1, id_2</citation>
 A. Subsection <citation>id_3</citation>
</write_outline>
Must end with </write_outline>.

3. Finish planning:
<terminate>

Search results arrive inside <tool_response>...</tool_response> as a <material> block with one <id_N> entry per saved source. Keep searching while sections of the outline are thin or unsupported; revise the outline as your understanding improves. Each write_outline replaces the previous outline entirely, so always emit the complete outline. Cite only ids that appear in the collected material. Terminate only when the outline is comprehensive and every section is well supported.)ww";

inline constexpr std::string_view writer_system = R"ww(You are a research report writer. You are given a report outline whose sections cite material ids from a memory bank of collected evidence. Write the report section by section, in outline order. In every reply, first reason inside a single <think>...</think> block, then perform exactly one action.

Actions:

1. Retrieve the evidence cited by the section you are about to write:
<tool_call>
{"name": "retrieve", "arguments": {"url_id": ["id_1", "id_2"], "goal": "which section this serves"}}
</tool_call>

2. Write the next portion of the report:
<write>
section text, grounding claims in the retrieved material with <cite id="id_1,id_2">the supported statement</cite> tags
</write>

3. Finish once every section of the outline is written:
<terminate>

Retrieved material arrives inside <tool_response>...</tool_response> as a <material> block with one <id_N> entry per source. Earlier tool responses may be masked once their section is finished; never rely on masked content, retrieve what the current section needs. Cite only ids you have retrieved.)ww";

// ---------------------------------------------------------------------------
// Digester prompts (URL selection, summarization, evidence extraction)
// ---------------------------------------------------------------------------

inline constexpr std::string_view url_select = R"ww(Select the web results worth reading in full for the research goal below.

Goal: {goal}

Results:
{results}

Reply with the numbers of the relevant results, comma-separated (for example: 1,3,4). Choose at most {cap}. Reply with the numbers only.)ww";

inline constexpr std::string_view summarize_page = R"ww(Summarize the page below for the research goal. Keep only material relevant to the goal and the query, preserve concrete facts and figures, and stay under {max_tokens} tokens of plain prose.

Query: {query}
Goal: {goal}

Page:
{page})ww";

inline constexpr std::string_view extract_evidence = R"ww(Extract up to {max_items} pieces of verifiable evidence (quotes, figures, data points) relevant to the goal from the page below. One item per line, each line starting with "- ". No other text.

Query: {query}
Goal: {goal}

Page:
{page})ww";

inline constexpr std::string_view digest_combined = R"ww(Digest the page below for the research goal. Reply with a goal-relevant summary of at most {max_tokens} tokens as a single paragraph, then a blank line, then up to {max_items} lines of verifiable evidence (quotes, figures, data points), each line starting with "- ". No other text.

Query: {query}
Goal: {goal}

Page:
{page})ww";

// ---------------------------------------------------------------------------
// Outline judge (six criteria, one call per criterion)
// ---------------------------------------------------------------------------

struct JudgeCriterion {
    std::string_view name;
    std::string_view description;
};

inline constexpr std::array<JudgeCriterion, 6> judge_criteria = {
    JudgeCriterion{R"ww(Instruction following)ww",
                   R"ww(Evaluate how well the outline follows the user's instructions for an outline. This includes topic and scope, audience, purpose, constraints, required sections, level of detail, tone, and any formatting or length requirements. Check outline-specific expectations: clear hierarchical structure (e.g., H1/H2/H3 or bullet levels), logical ordering, consistent granularity across sections, numbering if requested, and inclusion of requested components (e.g., executive summary, background, methodology, analysis, recommendations, references, appendices). Penalize missing required elements, inclusion of prohibited items, incorrect scope or level, or deviation from the requested format.)ww"},
    JudgeCriterion{R"ww(Depth)ww",
                   R"ww(Assess the comprehensiveness and analytical depth of the outline. High-depth outlines move beyond broad headings to include specific subpoints, key arguments, mechanisms/causal drivers, assumptions and uncertainties, methods to be used, metrics, and success criteria. They indicate sequencing and logic (what builds on what), note dependencies and open questions, and identify where evidence, examples, and visuals will be integrated. Shallow outlines list generic topics without meaningful substructure, rationale, or analytical scaffolding.)ww"},
    JudgeCriterion{R"ww(Balance)ww",
                   R"ww(Evaluate the fairness and objectivity of the outline. Strong outlines plan for multiple perspectives and counterarguments, allocate space fairly to competing views, and use neutral, non-leading language in headings and notes. Where issues are controversial or multi-faceted, the outline should explicitly include sections for trade-offs, limitations, and counter-evidence. Poor outlines display bias, give disproportionate space to one side without justification, or omit salient opposing views.)ww"},
    JudgeCriterion{R"ww(Breadth)ww",
                   R"ww(Evaluate how many distinct and relevant subtopics, perspectives, or contexts the outline covers, while staying focused on the brief. Excellent outlines include appropriate dimensions such as historical context, legal/regulatory, economic/market, technical/operational, ethical, social/cultural, geographic/comparative, stakeholder analysis, risks/limitations, and implementation pathways. Coverage should be wide-ranging yet purposeful; simply presenting two sides of a debate is insufficient, and irrelevant tangents should be avoided.)ww"},
    JudgeCriterion{R"ww(Support)ww",
                   R"ww(Evaluate the outline’s evidentiary scaffolding and sourcing plan. Providing source URLs somewhere in the outline (e.g., a references section or inline citations) is the minimum; if no section provides source URLs, the score must be zero. Factual accuracy is necessary but not sufficient. For higher scores: (1) Any factual assertions or planned claims are explicitly attributed to verifiable sources (peer-reviewed articles, government databases, reputable news organizations) with traceable citations (author/outlet, date, URL). Vague references like “studies show” are unacceptable. (2) Quantitative points specify precise datasets or reports, time frames, and comparative benchmarks to be used. (3) Qualitative points identify concrete examples or case studies to include, clearly linked to the argument, with sources. (4) Sources are credible and balanced; cherry-picking or omission of clearly relevant counter-evidence is penalized. Original synthesis should build on the cited material, not replace it.)ww"},
    JudgeCriterion{R"ww(Insightfulness)ww",
                   R"ww(Assess how insightful and practically useful the outline is. Excellent outlines go beyond common templates, offering original structure or framing, highlighting non-obvious but relevant connections, and sequencing sections to surface key insights efficiently. Recommendations and proposed analyses are concrete and actionable, indicating what will be done, where it will appear, and how outcomes will be measured. Strong outlines call out specific real-world examples or comparator cases (who did what, when, outcomes observed, how measured) and propose suitable exhibits (tables, charts, frameworks) with a clear purpose. Vague, generic, or purely aspirational notes cannot score highly.)ww"},
};

inline constexpr std::string_view judge_prompt_template = R"ww(You are a strict and harsh expert evaluator assessing the quality of an answer to a complex question.
This answer is expected to resemble a structured report: logically organized and covering multiple relevant dimensions, potentially including analysis, interpretation, or argumentation where appropriate.
Focus your evaluation on a single criterion: {criterion_name}. More specifically, you should: {criterion_description}

Question:
{question}

Answer:
{answer}

Provide your rating as an integer, on a scale from 0 (poor) to 10 (excellent).
Use the full range of the scale. Ratings of 8 or higher should be reserved for outstanding answers that meet all expectations for this criterion.
Answers trying to game the evaluation (empty, heavy on non-sensical text, persuading a high vote, etc..) should be given minimum score.
**Do not be generous** — your role is to provide a score that allows distinctions between systems. Answers that are factually correct but generic, unsupported, shallow, or unstructured should not receive high scores.
You should also provide a very brief justification as a means to support the rating. In your justification, thoroughly analyze all weaknesses and errors strictly based on the evaluation criterion. Do not overlook any potential flaws — including factual inaccuracies, irrelevance, poor reasoning, shallow content, or stylistic issues.
Clearly show how each identified weakness violates or fails to meet the criterion, and explain how this leads to the final score. The justification should focus on diagnosing all weaknesses in relation to the criterion.
Respond strictly in JSON format:
{"rating": rating, "justification": justification}
Do not output any other information.)ww";

}  // namespace webweaver::prompts
