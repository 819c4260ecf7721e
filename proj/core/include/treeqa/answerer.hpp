#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "treeqa/retriever.hpp"

namespace treeqa {

struct AnswerValue {
    enum class Kind { none, number, text };
    Kind kind = Kind::none;
    double number = 0.0;
    std::string text;

    static AnswerValue of_number(double v) { return {Kind::number, v, {}}; }
    static AnswerValue of_text(std::string t) { return {Kind::text, 0.0, std::move(t)}; }
    bool operator==(const AnswerValue& o) const {
        return kind == o.kind && number == o.number && text == o.text;
    }
};

/// Structured output of one inference run. A blank record always has an
/// empty reference set and no value; parse_failed marks records that were
/// turned blank because the raw output held no JSON object.
struct AnswerRecord {
    std::string answer;
    AnswerValue answer_value;
    std::set<std::string> ref_id;
    std::optional<std::string> explanation;
    bool is_blank = false;
    bool parse_failed = false;
};

enum class PromptOrder { context_first, question_first };

/// Rendered prompt sections. context_first lays out Referenced Documents,
/// Referenced Media, Question, Instructions; question_first moves the
/// question and instructions ahead of the context blocks.
struct PromptBundle {
    std::string context_block;
    std::string media_block;
    std::string question_block;
    std::string instruction_block;
    PromptOrder order = PromptOrder::context_first;
    std::set<std::string> doc_ids;       // documents actually present
    std::size_t context_tokens = 0;      // whitespace tokens across both blocks

    std::string render() const;
};

/// Chat completion abstraction. Implementations: HttpChatClient and
/// ReplayChatClient (clients.hpp).
class ChatClient {
  public:
    virtual ~ChatClient() = default;
    virtual std::string complete(const std::string& prompt, double temperature,
                                 std::uint64_t seed) = 0;
};

struct AnswererConfig {
    PromptOrder order = PromptOrder::context_first;
    int token_budget = 8000;
    double temperature = 0.7;
    int max_retries = 0;
};

/// Renders snippets as "[ref_id=<doc>] <text>" lines, image captions under
/// the media heading. Snippets are kept pairwise (a hit and its expansion
/// parent stay together) and dropped lowest-ranked-first once the
/// whitespace-token budget would be exceeded; BudgetTooSmall fires when
/// even the top-ranked pair does not fit.
PromptBundle build_prompt(const std::vector<ContextSnippet>& snippets,
                          const std::string& question, PromptOrder order,
                          int token_budget);

/// Extracts the first well-formed JSON object from raw model output,
/// tolerating surrounding prose and code fences. Missing is_blank defaults
/// to false, missing ref_id to the empty set. Throws ParseFailure when no
/// object can be found.
AnswerRecord parse_answer(const std::string& raw);

/// Serializes a record back to the JSON the model is asked to produce.
std::string render_answer(const AnswerRecord& record);

struct QaHandles {
    const IndexFile* index = nullptr;
    const Bm25Index* bm25 = nullptr;   // optional
    EncoderClient* encoder = nullptr;
    PlannerClient* planner = nullptr;
    ChatClient* chat = nullptr;
};

struct AttemptLog {
    int k = 0;
    bool is_blank = false;
    bool parse_failed = false;
    bool client_failed = false;
    std::vector<std::string> dropped_refs;  // refs outside the prompt, discarded
};

struct AnswerResult {
    AnswerRecord record;
    std::vector<AttemptLog> attempts;
};

/// One prompt -> completion -> parse pass. Malformed output becomes an
/// abstention (blank with parse_failed set) so the retry loop can react.
/// Returned ref_ids are intersected with the documents present in the
/// prompt.
AnswerRecord answer_once(const std::string& question,
                         const std::vector<ContextSnippet>& snippets, ChatClient& llm,
                         const AnswererConfig& cfg, std::uint64_t seed);

/// Retry-on-abstention loop: plans once, then retrieves and asks with k
/// doubling per attempt (k, 2k, 4k, ...) until a non-blank record appears
/// or max_retries is exhausted. Client failures also consume retries and
/// propagate once none remain.
AnswerResult answer_with_retry(const std::string& question, const RetrieverConfig& rcfg,
                               const AnswererConfig& acfg, const QaHandles& handles,
                               std::uint64_t seed);

}  // namespace treeqa
