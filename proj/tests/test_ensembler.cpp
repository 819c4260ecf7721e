#include <doctest.h>

#include <random>

#include "support/generators.hpp"
#include "treeqa/clients.hpp"
#include "treeqa/ensembler.hpp"

using namespace treeqa;
using gen::make_record;

namespace {

AnswerRecord numeric_record(double v, std::vector<std::string> refs = {}) {
    AnswerRecord rec;
    rec.answer = std::to_string(v);
    rec.answer_value = AnswerValue::of_number(v);
    rec.ref_id.insert(refs.begin(), refs.end());
    return rec;
}

}  // namespace

TEST_CASE("parse_numeric: decimals, scientific, separators, units") {
    CHECK(*parse_numeric("1.5e6") == doctest::Approx(1500000.0));
    CHECK(*parse_numeric("1.5 MW") == doctest::Approx(1500000.0));
    CHECK(*parse_numeric("1,500,000") == doctest::Approx(1500000.0));
    CHECK(*parse_numeric("-2.5") == doctest::Approx(-2.5));
    CHECK(*parse_numeric("42") == doctest::Approx(42.0));
    CHECK(*parse_numeric("5,439 thousand liters") == doctest::Approx(5439000.0));
    CHECK(*parse_numeric("3 kWh") == doctest::Approx(3000.0));
    CHECK(*parse_numeric("12 mW") == doctest::Approx(0.012));
    CHECK(*parse_numeric("0.8 million") == doctest::Approx(800000.0));
    CHECK(*parse_numeric("  7 ") == doctest::Approx(7.0));

    CHECK_FALSE(parse_numeric("30-50%"));
    CHECK_FALSE(parse_numeric("yes"));
    CHECK_FALSE(parse_numeric(""));
    CHECK_FALSE(parse_numeric("1,23"));          // malformed separator group
    CHECK_FALSE(parse_numeric("3 bananas"));     // unknown unit
    CHECK_FALSE(parse_numeric("around 3"));      // leading prose
}

TEST_CASE("normalize_answer: numeric, categorical, blank") {
    CHECK(normalize_answer(numeric_record(1.5e6)).kind == NormalizedAnswer::Kind::numeric);

    AnswerRecord mw;
    mw.answer = "about 1.5 megawatts";
    mw.answer_value = AnswerValue::of_text("1.5 MW");
    NormalizedAnswer n = normalize_answer(mw);
    CHECK(n.kind == NormalizedAnswer::Kind::numeric);
    CHECK(n.numeric_value == doctest::Approx(1.5e6));

    NormalizedAnswer a = normalize_answer(make_record("  Yes "));
    NormalizedAnswer b = normalize_answer(make_record("yes"));
    CHECK(a.kind == NormalizedAnswer::Kind::categorical);
    CHECK(a.categorical_key == b.categorical_key);
    CHECK(a.categorical_key == "yes");

    CHECK(normalize_answer(make_record("", {}, true)).kind == NormalizedAnswer::Kind::blank);

    // normalization is idempotent on its own key
    NormalizedAnswer c = normalize_answer(make_record("Mixed   Case Words"));
    CHECK(normalize_answer(make_record(c.categorical_key)).categorical_key ==
          c.categorical_key);
}

TEST_CASE("vote: blank filtering fixture {a, a, blank, b, a}") {
    std::vector<AnswerRecord> records = {
        make_record("a", {"d1"}), make_record("a", {"d1"}), make_record("", {}, true),
        make_record("b", {"d2"}), make_record("a", {"d1"})};
    VoteConfig cfg;
    cfg.ignore_blank = true;
    AnswerRecord out = vote(records, cfg);
    CHECK_FALSE(out.is_blank);
    CHECK(out.answer == "a");
    CHECK(out.ref_id == std::set<std::string>{"d1"});
}

TEST_CASE("vote: all blank abstains") {
    std::vector<AnswerRecord> records = {make_record("", {}, true), make_record("", {}, true),
                                         make_record("", {}, true)};
    for (bool ignore : {true, false}) {
        VoteConfig cfg;
        cfg.ignore_blank = ignore;
        AnswerRecord out = vote(records, cfg);
        CHECK(out.is_blank);
        CHECK(out.ref_id.empty());
    }
}

TEST_CASE("vote: blanks win when the filter is off") {
    std::vector<AnswerRecord> records = {make_record("a", {"d1"}), make_record("", {}, true),
                                         make_record("", {}, true)};
    VoteConfig cfg;
    cfg.ignore_blank = false;
    AnswerRecord out = vote(records, cfg);
    CHECK(out.is_blank);

    cfg.ignore_blank = true;
    CHECK_FALSE(vote(records, cfg).is_blank);
}

TEST_CASE("vote: numeric grouping at the 0.1% tolerance") {
    std::vector<AnswerRecord> records = {numeric_record(100.0, {"d1"}),
                                         numeric_record(100.05, {"d1"}),
                                         numeric_record(200.0, {"d2"})};
    VoteConfig cfg;
    AnswerRecord out = vote(records, cfg);
    // {100.0, 100.05} groups together and beats {200.0}
    CHECK(out.answer_value.number == doctest::Approx(100.0));
    CHECK(out.ref_id == std::set<std::string>{"d1"});
}

TEST_CASE("vote: 0.1% grouping uses the transitive closure") {
    // adjacent pairs are within 0.1% but the endpoints are not
    std::vector<AnswerRecord> records = {numeric_record(100.0), numeric_record(100.09),
                                         numeric_record(100.18)};
    CHECK(numeric_equivalent(100.0, 100.09));
    CHECK(numeric_equivalent(100.09, 100.18));
    CHECK_FALSE(numeric_equivalent(100.0, 100.18));

    std::vector<AnswerRecord> contenders = records;
    contenders.push_back(make_record("other"));
    contenders.push_back(make_record("other"));
    VoteConfig cfg;
    AnswerRecord out = vote(contenders, cfg);
    // the chained numeric group has 3 members and beats "other" at 2
    CHECK(out.answer_value.kind == AnswerValue::Kind::number);
}

TEST_CASE("vote: plurality ties go to the earliest run") {
    std::vector<AnswerRecord> records = {make_record("b", {"d2"}), make_record("a", {"d1"}),
                                         make_record("a", {"d1"}), make_record("b", {"d2"})};
    VoteConfig cfg;
    AnswerRecord out = vote(records, cfg);
    CHECK(out.answer == "b");
}

TEST_CASE("vote: reference aggregation modes") {
    std::vector<AnswerRecord> records = {
        make_record("a", {"d1", "d2"}),
        make_record("a", {"d1"}),
        make_record("a", {"d1", "d2"}),
        make_record("b", {"d9"}),
    };
    auto run = [&](VoteMode mode) {
        VoteConfig cfg;
        cfg.mode = mode;
        return vote(records, cfg);
    };

    CHECK(run(VoteMode::answer_priority).ref_id == std::set<std::string>{"d1", "d2"});
    CHECK(run(VoteMode::set_union).ref_id == std::set<std::string>{"d1", "d2"});
    CHECK(run(VoteMode::set_intersection).ref_id == std::set<std::string>{"d1"});
    // d1 appears in 3 of 4 surviving runs (> half), d2 in 2 of 4 (not > half)
    CHECK(run(VoteMode::independent).ref_id == std::set<std::string>{"d1"});

    // ref_priority: {d1,d2} is the most common reference set over all runs;
    // among its runs the common answer is a.
    AnswerRecord rp = run(VoteMode::ref_priority);
    CHECK(rp.ref_id == std::set<std::string>{"d1", "d2"});
    CHECK(rp.answer == "a");
}

TEST_CASE("vote: union contains answer-priority result contains intersection") {
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 300; ++trial) {
        std::uniform_int_distribution<int> m(1, 9);
        std::vector<AnswerRecord> records;
        int n = m(rng);
        for (int i = 0; i < n; ++i) records.push_back(gen::random_record(rng));
        bool any_non_blank = false;
        for (const auto& r : records) any_non_blank |= !r.is_blank;
        if (!any_non_blank) continue;

        VoteConfig cfg;
        cfg.mode = VoteMode::set_union;
        auto u = vote(records, cfg).ref_id;
        cfg.mode = VoteMode::answer_priority;
        auto a = vote(records, cfg).ref_id;
        cfg.mode = VoteMode::set_intersection;
        auto i = vote(records, cfg).ref_id;

        for (const auto& r : a) CHECK(u.count(r) == 1);
        for (const auto& r : i) CHECK(a.count(r) == 1);
    }
}

TEST_CASE("vote: ignore_blank with any non-blank never abstains") {
    std::mt19937_64 rng(34);
    for (int trial = 0; trial < 300; ++trial) {
        std::uniform_int_distribution<int> m(1, 9);
        std::vector<AnswerRecord> records;
        int n = m(rng);
        for (int i = 0; i < n; ++i) records.push_back(gen::random_record(rng));
        bool any_non_blank = false;
        for (const auto& r : records) any_non_blank |= !r.is_blank;
        if (!any_non_blank) continue;
        VoteConfig cfg;
        cfg.ignore_blank = true;
        CHECK_FALSE(vote(records, cfg).is_blank);
    }
}

TEST_CASE("vote: idempotence over m copies of one record") {
    std::mt19937_64 rng(35);
    for (int trial = 0; trial < 50; ++trial) {
        AnswerRecord rec = gen::random_record(rng);
        std::vector<AnswerRecord> records(5, rec);
        for (VoteMode mode : {VoteMode::independent, VoteMode::answer_priority,
                              VoteMode::ref_priority, VoteMode::set_union,
                              VoteMode::set_intersection}) {
            VoteConfig cfg;
            cfg.mode = mode;
            AnswerRecord out = vote(records, cfg);
            CHECK(out.is_blank == rec.is_blank);
            if (!rec.is_blank) {
                CHECK(out.ref_id == rec.ref_id);
                CHECK(out.answer == rec.answer);
            }
        }
    }
}

TEST_CASE("vote: permutation leaves the winning group and refs unchanged") {
    std::mt19937_64 rng(37);
    UnitTable units = UnitTable::defaults();
    for (int trial = 0; trial < 300; ++trial) {
        std::uniform_int_distribution<int> m(1, 9);
        std::vector<AnswerRecord> records;
        int n = m(rng);
        for (int i = 0; i < n; ++i) records.push_back(gen::random_record(rng));

        VoteConfig cfg;
        cfg.mode = VoteMode::set_union;
        AnswerRecord base = vote(records, cfg, units);

        // Skip permutation comparison when a plurality tie could flip the
        // winner; ties are resolved by run order, which permutation changes.
        std::map<std::string, int> group_sizes;
        for (const auto& r : records) {
            if (cfg.ignore_blank && r.is_blank) continue;
            NormalizedAnswer na = normalize_answer(r, units);
            std::string key = na.kind == NormalizedAnswer::Kind::numeric
                                  ? "num:" + std::to_string(na.numeric_value)
                                  : "cat:" + na.categorical_key;
            ++group_sizes[key];
        }
        int best = 0;
        int best_count = 0;
        for (const auto& [k, c] : group_sizes) {
            if (c > best) best = c;
        }
        for (const auto& [k, c] : group_sizes) {
            if (c == best) ++best_count;
        }
        if (best_count != 1) continue;

        auto shuffled = records;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        AnswerRecord permuted = vote(shuffled, cfg, units);
        CHECK(permuted.is_blank == base.is_blank);
        if (!base.is_blank) {
            NormalizedAnswer a = normalize_answer(base, units);
            NormalizedAnswer b = normalize_answer(permuted, units);
            CHECK(a.kind == b.kind);
            if (a.kind == NormalizedAnswer::Kind::numeric) {
                CHECK(numeric_equivalent(a.numeric_value, b.numeric_value));
            } else {
                CHECK(a.categorical_key == b.categorical_key);
            }
            CHECK(permuted.ref_id == base.ref_id);
        }
    }
}

TEST_CASE("run_ensemble: m=1 bypasses voting, scripted runs reproduce the fixture") {
    DocumentTree tree = parse_plaintext("d", "The answer lives here. More text.");
    MockEncoder enc(8, 3);
    auto embeddings = embed_tree(tree, enc);
    IndexFile index = build_index({tree}, {embeddings}, "");
    IdentityPlanner planner;

    // five scripted runs: a, a, blank, b, a
    std::map<std::string, std::vector<std::string>> script = {
        {"q", {R"({"answer":"a","ref_id":["d"]})", R"({"answer":"a","ref_id":["d"]})",
               R"({"is_blank":true})", R"({"answer":"b","ref_id":["d"]})",
               R"({"answer":"a","ref_id":["d"]})"}}};
    ReplayChatClient chat(script);

    QaHandles handles;
    handles.index = &index;
    handles.encoder = &enc;
    handles.planner = &planner;
    handles.chat = &chat;

    RetrieverConfig rcfg;
    rcfg.n_queries = 1;
    rcfg.topk = 1;
    AnswererConfig acfg;
    VoteConfig vcfg;
    auto seed_fn = [](int run) { return static_cast<std::uint64_t>(run); };

    SUBCASE("five runs vote to a") {
        EnsembleResult result =
            run_ensemble("q", 5, rcfg, acfg, vcfg, handles, seed_fn);
        CHECK(result.record.answer == "a");
        CHECK(result.runs.size() == 5);
        CHECK(result.runs[2].record.is_blank);
    }
    SUBCASE("m=1 is the single run") {
        EnsembleResult result =
            run_ensemble("q", 1, rcfg, acfg, vcfg, handles, seed_fn);
        CHECK(result.record.answer == "a");
        CHECK(result.runs.size() == 1);
    }
}

TEST_CASE("run_ensemble: numeric grouping across runs") {
    DocumentTree tree = parse_plaintext("d", "Numbers vary slightly. Runs disagree.");
    MockEncoder enc(8, 3);
    auto embeddings = embed_tree(tree, enc);
    IndexFile index = build_index({tree}, {embeddings}, "");
    IdentityPlanner planner;
    std::map<std::string, std::vector<std::string>> script = {
        {"q", {R"({"answer":"100.0","answer_value":100.0,"ref_id":["d"]})",
               R"({"answer":"100.05","answer_value":100.05,"ref_id":["d"]})",
               R"({"answer":"200.0","answer_value":200.0,"ref_id":["d"]})"}}};
    ReplayChatClient chat(script);

    QaHandles handles;
    handles.index = &index;
    handles.encoder = &enc;
    handles.planner = &planner;
    handles.chat = &chat;

    RetrieverConfig rcfg;
    rcfg.n_queries = 1;
    rcfg.topk = 1;
    EnsembleResult result = run_ensemble("q", 3, rcfg, AnswererConfig{}, VoteConfig{},
                                         handles, [](int r) { return r; });
    CHECK(result.record.answer_value.number == doctest::Approx(100.0));
}
