#include <doctest.h>

#include <random>

#include "support/generators.hpp"
#include "treeqa/answerer.hpp"
#include "treeqa/clients.hpp"

using namespace treeqa;

namespace {

ContextSnippet text_snip(const std::string& id, const std::string& text,
                         bool image = false) {
    ContextSnippet s;
    s.node = NodeId{id};
    s.text = text;
    s.doc_id = s.node.doc_label();
    s.is_image = image;
    return s;
}

// Chat stub that records prompts and replays a fixed list of responses.
struct SequenceChat : ChatClient {
    std::vector<std::string> responses;
    std::vector<std::string> prompts;
    std::size_t calls = 0;
    explicit SequenceChat(std::vector<std::string> r) : responses(std::move(r)) {}
    std::string complete(const std::string& prompt, double, std::uint64_t) override {
        prompts.push_back(prompt);
        std::size_t i = std::min(calls, responses.size() - 1);
        ++calls;
        return responses[i];
    }
};

QaHandles make_handles(const IndexFile& index, EncoderClient& enc, PlannerClient& planner,
                       ChatClient& chat) {
    QaHandles h;
    h.index = &index;
    h.encoder = &enc;
    h.planner = &planner;
    h.chat = &chat;
    return h;
}

IndexFile toy_index() {
    DocumentTree tree = parse_plaintext(
        "d7", "# Usage\nThe PUE was 1.18 in 2024. Water use fell.\n\nCooling was efficient.");
    MockEncoder enc(8, 2);
    auto embeddings = embed_tree(tree, enc);
    return build_index({tree}, {embeddings}, "");
}

}  // namespace

TEST_CASE("build_prompt: reference markers and section order") {
    auto snippets = {text_snip("d7:sec0:p0:s0", "The PUE was 1.18.")};
    PromptBundle bundle =
        build_prompt(snippets, "What was the PUE?", PromptOrder::context_first, 1000);
    CHECK(bundle.context_block.rfind("[ref_id=d7] ", 0) == 0);
    CHECK(bundle.doc_ids == std::set<std::string>{"d7"});

    std::string rendered = bundle.render();
    auto ctx_pos = rendered.find("## Referenced Documents");
    auto q_pos = rendered.find("## Question");
    auto instr_pos = rendered.find("## Instructions");
    REQUIRE(ctx_pos != std::string::npos);
    REQUIRE(q_pos != std::string::npos);
    REQUIRE(instr_pos != std::string::npos);
    CHECK(ctx_pos < q_pos);
    CHECK(q_pos < instr_pos);
    CHECK(rendered.find("What was the PUE?") > ctx_pos);

    PromptBundle flipped =
        build_prompt(snippets, "What was the PUE?", PromptOrder::question_first, 1000);
    std::string r2 = flipped.render();
    CHECK(r2.find("## Question") < r2.find("## Referenced Documents"));
}

TEST_CASE("build_prompt: image captions go under the media heading") {
    std::vector<ContextSnippet> snippets = {
        text_snip("d7:sec0:p0:s0", "Text evidence."),
        text_snip("d8:sec0:p1", "Chart of energy per inference.", true),
    };
    PromptBundle bundle = build_prompt(snippets, "q", PromptOrder::context_first, 1000);
    CHECK(bundle.media_block.find("Chart of energy") != std::string::npos);
    CHECK(bundle.context_block.find("Chart of energy") == std::string::npos);
    std::string rendered = bundle.render();
    CHECK(rendered.find("## Referenced Media") < rendered.find("## Question"));
    CHECK(rendered.find("## Referenced Documents") < rendered.find("## Referenced Media"));
}

TEST_CASE("build_prompt: budget drops lowest-ranked snippets first") {
    std::vector<ContextSnippet> snippets;
    for (int i = 0; i < 10; ++i) {
        // the [ref_id=..] marker is one token, so 999 text tokens make 1000
        std::string text;
        for (int t = 0; t < 999; ++t) text += "tok ";
        snippets.push_back(text_snip("d" + std::to_string(i) + ":sec0:p0", text));
    }
    PromptBundle bundle = build_prompt(snippets, "q", PromptOrder::context_first, 8000);
    CHECK(bundle.context_tokens == 8000);
    CHECK(bundle.doc_ids.size() == 8);
    CHECK(bundle.doc_ids.count("d7") == 1);
    CHECK(bundle.doc_ids.count("d8") == 0);
    CHECK(bundle.doc_ids.count("d9") == 0);
}

TEST_CASE("build_prompt: hit and expansion parent stay paired under budget cuts") {
    std::vector<ContextSnippet> snippets = {
        text_snip("d0:sec0:p0:s0", "one two three"),
        text_snip("d0:sec0:p0", "one two three four five"),
        text_snip("d0:sec1:p0:s0", "six seven"),
        text_snip("d0:sec1:p0", "six seven eight nine"),
    };
    // First pair costs (1+3) + (1+5) = 10 tokens; the second pair would
    // push the total to 18, over a 17-token budget.
    PromptBundle bundle = build_prompt(snippets, "q", PromptOrder::context_first, 17);
    CHECK(bundle.context_tokens == 10);
    CHECK(bundle.context_block.find("six") == std::string::npos);

    // Budget below the first pair fails.
    CHECK_THROWS_AS(build_prompt(snippets, "q", PromptOrder::context_first, 9),
                    BudgetTooSmall);
}

TEST_CASE("build_prompt: deterministic render") {
    std::vector<ContextSnippet> snippets = {text_snip("d1:sec0:p0", "alpha beta"),
                                            text_snip("d2:sec0:p0", "gamma", true)};
    auto a = build_prompt(snippets, "q?", PromptOrder::context_first, 100).render();
    auto b = build_prompt(snippets, "q?", PromptOrder::context_first, 100).render();
    CHECK(a == b);
}

TEST_CASE("parse_answer: plain object") {
    AnswerRecord rec = parse_answer(
        R"({"answer":"1.1","answer_value":1.1,"ref_id":["google2023"],"is_blank":false})");
    CHECK(rec.answer == "1.1");
    CHECK(rec.answer_value.kind == AnswerValue::Kind::number);
    CHECK(rec.answer_value.number == doctest::Approx(1.1));
    CHECK(rec.ref_id == std::set<std::string>{"google2023"});
    CHECK_FALSE(rec.is_blank);
}

TEST_CASE("parse_answer: blank record clears value and refs") {
    AnswerRecord rec = parse_answer(R"({"is_blank":true})");
    CHECK(rec.is_blank);
    CHECK(rec.ref_id.empty());
    CHECK(rec.answer_value.kind == AnswerValue::Kind::none);

    AnswerRecord forced = parse_answer(
        R"({"answer":"x","answer_value":3,"ref_id":["a"],"is_blank":true})");
    CHECK(forced.is_blank);
    CHECK(forced.ref_id.empty());
    CHECK(forced.answer_value.kind == AnswerValue::Kind::none);
}

TEST_CASE("parse_answer: fenced output with commentary") {
    std::string raw = "Sure, here's the answer:\n```json\n"
                      R"({"answer":"42 W","answer_value":"42 W","ref_id":["d1"],"is_blank":false})"
                      "\n```\nHope that helps!";
    AnswerRecord rec = parse_answer(raw);
    CHECK(rec.answer == "42 W");
    CHECK(rec.answer_value.kind == AnswerValue::Kind::text);
    CHECK(rec.ref_id.count("d1") == 1);

    // braces inside strings don't confuse the scanner
    AnswerRecord tricky = parse_answer(R"(noise {"answer":"a { b }","is_blank":false} tail)");
    CHECK(tricky.answer == "a { b }");
}

TEST_CASE("parse_answer: no object anywhere") {
    CHECK_THROWS_AS(parse_answer("I cannot answer that."), ParseFailure);
    CHECK_THROWS_AS(parse_answer(""), ParseFailure);
    CHECK_THROWS_AS(parse_answer("{broken json"), ParseFailure);
}

TEST_CASE("parse_answer: render round-trip") {
    std::mt19937_64 rng(19);
    for (int i = 0; i < 100; ++i) {
        AnswerRecord rec = gen::random_record(rng);
        AnswerRecord back = parse_answer(render_answer(rec));
        CHECK(back.answer == rec.answer);
        CHECK(back.is_blank == rec.is_blank);
        CHECK(back.ref_id == rec.ref_id);
        CHECK(back.answer_value == rec.answer_value);
    }
}

TEST_CASE("answer_once: scripted, garbage, and empty-context cases") {
    std::vector<ContextSnippet> snippets = {text_snip("d7:sec0:p0:s0", "PUE was 1.18.")};
    AnswererConfig cfg;

    SUBCASE("valid scripted object passes through") {
        SequenceChat chat({R"({"answer":"1.18","answer_value":1.18,"ref_id":["d7"]})"});
        AnswerRecord rec = answer_once("q", snippets, chat, cfg, 1);
        CHECK(rec.answer == "1.18");
        CHECK(rec.ref_id == std::set<std::string>{"d7"});
    }
    SUBCASE("garbage becomes a blank with the parse-failure marker") {
        SequenceChat chat({"total nonsense"});
        AnswerRecord rec = answer_once("q", snippets, chat, cfg, 1);
        CHECK(rec.is_blank);
        CHECK(rec.parse_failed);
    }
    SUBCASE("empty snippets still prompt; honest mock abstains") {
        SequenceChat chat({R"({"is_blank":true})"});
        AnswerRecord rec = answer_once("q", {}, chat, cfg, 1);
        CHECK(rec.is_blank);
    }
    SUBCASE("out-of-context refs are dropped") {
        SequenceChat chat({R"({"answer":"1.18","ref_id":["d7","webXYZ"]})"});
        AnswerRecord rec = answer_once("q", snippets, chat, cfg, 1);
        CHECK(rec.ref_id == std::set<std::string>{"d7"});
    }
}

TEST_CASE("answer_with_retry: blank then answer") {
    IndexFile index = toy_index();
    MockEncoder enc(8, 2);
    IdentityPlanner planner;
    SequenceChat chat({R"({"is_blank":true})",
                       R"({"answer":"1.18","answer_value":1.18,"ref_id":["d7"]})"});
    QaHandles handles = make_handles(index, enc, planner, chat);

    RetrieverConfig rcfg;
    rcfg.n_queries = 1;
    rcfg.topk = 2;
    AnswererConfig acfg;
    acfg.max_retries = 1;

    AnswerResult result = answer_with_retry("What was the PUE?", rcfg, acfg, handles, 5);
    CHECK_FALSE(result.record.is_blank);
    CHECK(result.record.answer == "1.18");
    REQUIRE(result.attempts.size() == 2);
    CHECK(result.attempts[0].is_blank);
    CHECK(result.attempts[0].k == 2);
    CHECK(result.attempts[1].k == 4);
    CHECK(result.attempts[1].k > result.attempts[0].k);
}

TEST_CASE("answer_with_retry: always blank exhausts retries") {
    IndexFile index = toy_index();
    MockEncoder enc(8, 2);
    IdentityPlanner planner;
    SequenceChat chat({R"({"is_blank":true})"});
    QaHandles handles = make_handles(index, enc, planner, chat);

    RetrieverConfig rcfg;
    rcfg.n_queries = 1;
    rcfg.topk = 2;
    AnswererConfig acfg;
    acfg.max_retries = 2;

    AnswerResult result = answer_with_retry("q", rcfg, acfg, handles, 5);
    CHECK(result.record.is_blank);
    REQUIRE(result.attempts.size() == 3);
    CHECK(result.attempts[0].k == 2);
    CHECK(result.attempts[1].k == 4);
    CHECK(result.attempts[2].k == 8);
}

TEST_CASE("answer_with_retry: zero retries means one attempt") {
    IndexFile index = toy_index();
    MockEncoder enc(8, 2);
    IdentityPlanner planner;
    SequenceChat chat({R"({"is_blank":true})"});
    QaHandles handles = make_handles(index, enc, planner, chat);

    RetrieverConfig rcfg;
    rcfg.n_queries = 1;
    AnswererConfig acfg;  // max_retries = 0

    AnswerResult result = answer_with_retry("q", rcfg, acfg, handles, 5);
    CHECK(result.record.is_blank);
    CHECK(result.attempts.size() == 1);
}

TEST_CASE("answer_with_retry: client failures consume retries then propagate") {
    struct FailingChat : ChatClient {
        std::string complete(const std::string&, double, std::uint64_t) override {
            throw ClientFailure("down");
        }
    };
    IndexFile index = toy_index();
    MockEncoder enc(8, 2);
    IdentityPlanner planner;
    FailingChat chat;
    QaHandles handles = make_handles(index, enc, planner, chat);

    RetrieverConfig rcfg;
    rcfg.n_queries = 1;
    AnswererConfig acfg;
    acfg.max_retries = 1;
    CHECK_THROWS_AS(answer_with_retry("q", rcfg, acfg, handles, 5), ClientFailure);
}

TEST_CASE("prompt budget invariant: context tokens never exceed the budget") {
    std::mt19937_64 rng(91);
    for (int trial = 0; trial < 100; ++trial) {
        std::uniform_int_distribution<std::size_t> count(1, 12);
        std::uniform_int_distribution<int> budget(40, 200);
        auto snippets = gen::random_snippets(rng, count(rng));
        int b = budget(rng);
        try {
            PromptBundle bundle = build_prompt(snippets, "q", PromptOrder::context_first, b);
            CHECK(bundle.context_tokens <= static_cast<std::size_t>(b));
            // recount from the rendered blocks
            std::size_t recount = token_count(bundle.context_block);
            recount += token_count(bundle.media_block);
            CHECK(recount == bundle.context_tokens);
        } catch (const BudgetTooSmall&) {
            // acceptable when the first unit alone is too large
        }
    }
}
