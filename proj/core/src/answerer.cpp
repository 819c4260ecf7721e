#include "treeqa/answerer.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "treeqa/embedder.hpp"

namespace treeqa {

using nlohmann::json;

namespace {

const char* kInstructions =
    "Answer the question using only the provided references.\n"
    "If the answer is numeric, extract the exact value with units.\n"
    "If evidence is insufficient, set is_blank=true.\n"
    "\n"
    "Output JSON with fields:\n"
    "- answer: Natural language answer\n"
    "- answer_value: Extracted numeric or categorical value\n"
    "- ref_id: List of source document IDs\n"
    "- explanation: Brief reasoning (optional)\n"
    "- is_blank: true if cannot answer from context";

std::string snippet_line(const ContextSnippet& s) {
    return "[ref_id=" + s.doc_id + "] " + s.text;
}

}  // namespace

std::string PromptBundle::render() const {
    std::string context_part = "## Referenced Documents\n" + context_block;
    if (!media_block.empty()) {
        context_part += "\n\n## Referenced Media\n" + media_block;
    }
    std::string question_part = "## Question\n" + question_block;
    std::string instruction_part = "## Instructions\n" + instruction_block;
    if (order == PromptOrder::context_first) {
        return context_part + "\n\n" + question_part + "\n\n" + instruction_part + "\n";
    }
    return question_part + "\n\n" + instruction_part + "\n\n" + context_part + "\n";
}

PromptBundle build_prompt(const std::vector<ContextSnippet>& snippets,
                          const std::string& question, PromptOrder order,
                          int token_budget) {
    if (token_budget <= 0) throw ConfigError("token budget must be positive");

    // Group each hit with its adjacent expansion parent so budget cuts
    // never separate a pair.
    std::vector<std::vector<const ContextSnippet*>> units;
    for (std::size_t i = 0; i < snippets.size(); ++i) {
        std::vector<const ContextSnippet*> unit{&snippets[i]};
        while (i + 1 < snippets.size()) {
            auto parent = unit.back()->node.parent();
            if (parent && snippets[i + 1].node == *parent) {
                unit.push_back(&snippets[i + 1]);
                ++i;
            } else {
                break;
            }
        }
        units.push_back(std::move(unit));
    }

    PromptBundle bundle;
    bundle.order = order;
    bundle.question_block = question;
    bundle.instruction_block = kInstructions;

    std::size_t used = 0;
    std::vector<std::string> doc_lines;
    std::vector<std::string> media_lines;
    bool first_unit = true;
    for (const auto& unit : units) {
        std::size_t cost = 0;
        for (const auto* s : unit) cost += token_count(snippet_line(*s));
        if (used + cost > static_cast<std::size_t>(token_budget)) {
            if (first_unit) {
                throw BudgetTooSmall("top-ranked snippet pair exceeds the token budget");
            }
            break;
        }
        for (const auto* s : unit) {
            (s->is_image ? media_lines : doc_lines).push_back(snippet_line(*s));
            bundle.doc_ids.insert(s->doc_id);
        }
        used += cost;
        first_unit = false;
    }
    bundle.context_tokens = used;

    std::ostringstream ctx;
    for (std::size_t i = 0; i < doc_lines.size(); ++i) {
        if (i) ctx << "\n";
        ctx << doc_lines[i];
    }
    bundle.context_block = ctx.str();
    std::ostringstream media;
    for (std::size_t i = 0; i < media_lines.size(); ++i) {
        if (i) media << "\n";
        media << media_lines[i];
    }
    bundle.media_block = media.str();
    return bundle;
}

namespace {

AnswerRecord record_from_json(const json& j) {
    AnswerRecord rec;
    if (j.contains("answer")) {
        const auto& a = j["answer"];
        rec.answer = a.is_string() ? a.get<std::string>() : a.dump();
    }
    if (j.contains("answer_value") && !j["answer_value"].is_null()) {
        const auto& v = j["answer_value"];
        if (v.is_number()) {
            rec.answer_value = AnswerValue::of_number(v.get<double>());
        } else if (v.is_string()) {
            rec.answer_value = AnswerValue::of_text(v.get<std::string>());
        } else if (v.is_boolean()) {
            rec.answer_value = AnswerValue::of_text(v.get<bool>() ? "true" : "false");
        }
    }
    if (j.contains("ref_id")) {
        const auto& refs = j["ref_id"];
        if (refs.is_array()) {
            for (const auto& r : refs) {
                rec.ref_id.insert(r.is_string() ? r.get<std::string>() : r.dump());
            }
        } else if (refs.is_string()) {
            rec.ref_id.insert(refs.get<std::string>());
        }
    }
    if (j.contains("explanation") && j["explanation"].is_string()) {
        rec.explanation = j["explanation"].get<std::string>();
    }
    if (j.contains("is_blank")) {
        const auto& b = j["is_blank"];
        if (b.is_boolean()) {
            rec.is_blank = b.get<bool>();
        } else if (b.is_string()) {
            rec.is_blank = b.get<std::string>() == "true";
        }
    }
    if (rec.is_blank) {
        rec.ref_id.clear();
        rec.answer_value = AnswerValue{};
    }
    return rec;
}

}  // namespace

AnswerRecord parse_answer(const std::string& raw) {
    for (std::size_t start = 0; start < raw.size(); ++start) {
        if (raw[start] != '{') continue;
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < raw.size(); ++i) {
            char c = raw[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) {
                    try {
                        json j = json::parse(raw.substr(start, i - start + 1));
                        if (j.is_object()) return record_from_json(j);
                    } catch (const json::exception&) {
                        // fall through and keep scanning
                    }
                    break;
                }
            }
        }
    }
    throw ParseFailure("no JSON object in model output");
}

std::string render_answer(const AnswerRecord& record) {
    json j;
    j["answer"] = record.answer;
    switch (record.answer_value.kind) {
        case AnswerValue::Kind::number: j["answer_value"] = record.answer_value.number; break;
        case AnswerValue::Kind::text: j["answer_value"] = record.answer_value.text; break;
        case AnswerValue::Kind::none: j["answer_value"] = nullptr; break;
    }
    j["ref_id"] = json::array();
    for (const auto& r : record.ref_id) j["ref_id"].push_back(r);
    if (record.explanation) j["explanation"] = *record.explanation;
    j["is_blank"] = record.is_blank;
    return j.dump();
}

namespace {

struct AttemptOutcome {
    AnswerRecord record;
    std::vector<std::string> dropped_refs;
};

AttemptOutcome attempt_answer(const std::string& question,
                              const std::vector<ContextSnippet>& snippets, ChatClient& llm,
                              const AnswererConfig& cfg, std::uint64_t seed) {
    PromptBundle prompt = build_prompt(snippets, question, cfg.order, cfg.token_budget);
    std::string raw = llm.complete(prompt.render(), cfg.temperature, seed);

    AttemptOutcome outcome;
    try {
        outcome.record = parse_answer(raw);
    } catch (const ParseFailure&) {
        outcome.record = AnswerRecord{};
        outcome.record.is_blank = true;
        outcome.record.parse_failed = true;
        return outcome;
    }
    // Keep only references to documents that were actually in the prompt.
    std::set<std::string> kept;
    for (const auto& r : outcome.record.ref_id) {
        if (prompt.doc_ids.count(r)) {
            kept.insert(r);
        } else {
            outcome.dropped_refs.push_back(r);
        }
    }
    outcome.record.ref_id = std::move(kept);
    return outcome;
}

}  // namespace

AnswerRecord answer_once(const std::string& question,
                         const std::vector<ContextSnippet>& snippets, ChatClient& llm,
                         const AnswererConfig& cfg, std::uint64_t seed) {
    return attempt_answer(question, snippets, llm, cfg, seed).record;
}

AnswerResult answer_with_retry(const std::string& question, const RetrieverConfig& rcfg,
                               const AnswererConfig& acfg, const QaHandles& handles,
                               std::uint64_t seed) {
    std::vector<std::string> queries =
        plan_queries(question, rcfg.n_queries, *handles.planner);

    AnswerResult result;
    int k = rcfg.topk;
    for (int attempt = 0; attempt <= acfg.max_retries; ++attempt) {
        bool last = attempt == acfg.max_retries;
        auto snippets = retrieve_planned(queries, question, rcfg, k, *handles.index,
                                         handles.bm25, *handles.encoder);
        AttemptLog log;
        log.k = k;
        try {
            AttemptOutcome outcome =
                attempt_answer(question, snippets, *handles.chat, acfg, seed);
            log.is_blank = outcome.record.is_blank;
            log.parse_failed = outcome.record.parse_failed;
            log.dropped_refs = outcome.dropped_refs;
            result.attempts.push_back(std::move(log));
            result.record = std::move(outcome.record);
        } catch (const ClientFailure&) {
            if (last) throw;
            log.is_blank = true;
            log.client_failed = true;
            result.attempts.push_back(std::move(log));
            result.record = AnswerRecord{};
            result.record.is_blank = true;
            k *= 2;
            continue;
        }
        if (!result.record.is_blank || last) break;
        k *= 2;  // iterative deepening of the retrieval cutoff
    }
    return result;
}

}  // namespace treeqa
