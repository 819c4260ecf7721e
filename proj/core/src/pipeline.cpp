#include "treeqa/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "treeqa/sparse.hpp"

namespace treeqa {

namespace fs = std::filesystem;
using nlohmann::json;

QuestionSet load_questions(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("question file is not valid JSON: ") + e.what());
    }
    if (!j.is_array()) throw SchemaError("question file must be a JSON array");
    QuestionSet set;
    std::set<std::string> seen;
    for (const auto& item : j) {
        if (!item.contains("question_id") || !item.contains("question")) {
            throw SchemaError("question entries need question_id and question");
        }
        Question q;
        q.question_id = item["question_id"].get<std::string>();
        q.question = item["question"].get<std::string>();
        if (!seen.insert(q.question_id).second) {
            throw DuplicateQuestion("duplicate question id: " + q.question_id);
        }
        set.questions.push_back(std::move(q));
    }
    return set;
}

QuestionSet load_questions_file(const std::string& path) {
    return load_questions(read_file(path));
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoFailure("cannot write file: " + tmp);
        out << content;
        if (!out) throw IoFailure("write failed: " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoFailure("rename failed for " + path + ": " + ec.message());
}

namespace {

std::string env_or_empty(const std::string& name) {
    if (name.empty()) return "";
    const char* v = std::getenv(name.c_str());
    return v ? v : "";
}

std::string encoder_endpoint(const PipelineConfig& cfg) {
    std::string endpoint = cfg.encoder_endpoint.empty() ? env_or_empty("TREEQA_ENCODER_URL")
                                                        : cfg.encoder_endpoint;
    if (endpoint.empty()) {
        throw ConfigError(
            "encoder.kind = http needs encoder.endpoint or TREEQA_ENCODER_URL");
    }
    return endpoint;
}

std::string chat_endpoint(const PipelineConfig& cfg) {
    std::string endpoint =
        cfg.chat_endpoint.empty() ? env_or_empty("TREEQA_CHAT_URL") : cfg.chat_endpoint;
    if (endpoint.empty()) {
        throw ConfigError("chat.kind = http needs chat.endpoint or TREEQA_CHAT_URL");
    }
    return endpoint;
}

std::unique_ptr<EncoderClient> make_encoder(const PipelineConfig& cfg) {
    if (cfg.encoder_kind == "mock") {
        return std::make_unique<MockEncoder>(cfg.encoder_dim, cfg.encoder_seed);
    }
    return std::make_unique<HttpEncoderClient>(encoder_endpoint(cfg), cfg.encoder_dim,
                                               env_or_empty(cfg.encoder_auth_env));
}

}  // namespace

IndexBuildStats build_index_from_dir(const std::string& docs_dir,
                                     const std::string& out_path,
                                     const PipelineConfig& cfg) {
    if (!fs::is_directory(docs_dir)) {
        throw IoFailure("document directory not found: " + docs_dir);
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(docs_dir)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::vector<DocumentTree> trees;
    for (const auto& path : files) {
        std::string ext = path.extension().string();
        if (ext == ".txt" || ext == ".md") {
            std::string doc_id = path.stem().string();
            trees.push_back(parse_plaintext(doc_id, read_file(path.string())));
        } else if (ext == ".json" && path.stem().extension() == ".doctree") {
            trees.push_back(load_tree_file(path.string()));
        }
    }
    if (trees.empty()) throw EmptyCorpus("no ingestable documents in " + docs_dir);

    auto encoder = make_encoder(cfg);
    std::vector<std::map<NodeId, NodeEmbedding>> embeddings;
    embeddings.reserve(trees.size());
    for (const auto& tree : trees) embeddings.push_back(embed_tree(tree, *encoder));

    IndexFile index = build_index(trees, embeddings, "");
    index.header.encoder_id = encoder->descriptor();

    TokenizerConfig tok;
    tok.lowercase = cfg.bm25_lowercase;
    if (!cfg.bm25_stopwords_file.empty()) {
        tok.stopwords.clear();
        std::istringstream words(read_file(cfg.bm25_stopwords_file));
        std::string w;
        while (words >> w) tok.stopwords.insert(w);
    }
    Bm25Index bm25 = build_bm25(index, tok, cfg.bm25_k1, cfg.bm25_b);
    index.bm25_blob = serialize_bm25(bm25);
    save_index(index, out_path);

    IndexBuildStats stats;
    for (const auto& e : index.nodes) {
        if (e.is_image()) {
            ++stats.images;
            continue;
        }
        switch (e.level) {
            case Level::document: ++stats.documents; break;
            case Level::section: ++stats.sections; break;
            case Level::paragraph: ++stats.paragraphs; break;
            case Level::sentence: ++stats.sentences; break;
        }
    }
    return stats;
}

ClientBundle make_clients(const PipelineConfig& cfg, const IndexFile& index) {
    ClientBundle bundle;

    if (cfg.encoder_kind == "mock") {
        // Recover dim and seed from the header written at index time.
        std::size_t dim = index.header.dim;
        std::uint64_t seed = cfg.encoder_seed;
        const std::string& desc = index.header.encoder_id;
        auto pos = desc.find("seed=");
        if (pos != std::string::npos) {
            seed = std::strtoull(desc.c_str() + pos + 5, nullptr, 10);
        }
        bundle.encoder = std::make_unique<MockEncoder>(dim, seed);
    } else {
        bundle.encoder = std::make_unique<HttpEncoderClient>(
            encoder_endpoint(cfg), index.header.dim, env_or_empty(cfg.encoder_auth_env));
    }

    if (cfg.chat_kind == "replay") {
        if (cfg.chat_replay_file.empty()) {
            throw ConfigError("chat.replay_file required for chat.kind = replay");
        }
        bundle.chat = std::make_unique<ReplayChatClient>(
            ReplayChatClient::script_from_file(cfg.chat_replay_file));
    } else {
        bundle.chat = std::make_unique<HttpChatClient>(chat_endpoint(cfg),
                                                       env_or_empty(cfg.chat_auth_env));
    }

    if (cfg.planner_kind == "identity") {
        bundle.planner = std::make_unique<IdentityPlanner>();
    } else if (cfg.planner_kind == "scripted") {
        if (cfg.planner_script_file.empty()) {
            throw ConfigError("planner.script_file required for planner.kind = scripted");
        }
        bundle.planner = std::make_unique<ScriptedPlanner>(
            ScriptedPlanner::from_file(cfg.planner_script_file));
    } else {
        bundle.planner = std::make_unique<LlmPlanner>(*bundle.chat, 0.0, cfg.seed);
    }
    return bundle;
}

std::vector<PredictionRow> answer_questions(const QuestionSet& questions,
                                            const PipelineConfig& cfg,
                                            const IndexFile& index, const Bm25Index* bm25,
                                            const ClientBundle& clients) {
    QaHandles handles;
    handles.index = &index;
    handles.bm25 = bm25;
    handles.encoder = clients.encoder.get();
    handles.planner = clients.planner.get();
    handles.chat = clients.chat.get();

    std::vector<PredictionRow> rows(questions.questions.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex error_mutex;

    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= questions.questions.size() || failed.load()) break;
            const Question& q = questions.questions[i];
            try {
                auto seed_fn = [&](int run) { return seed_for(cfg, q.question_id, run); };
                rows[i].question_id = q.question_id;
                rows[i].result =
                    run_ensemble(q.question, cfg.ensemble_size, cfg.retriever, cfg.answerer,
                                 cfg.vote, handles, seed_fn);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed.exchange(true)) first_error = e.what();
                break;
            }
        }
    };

    int jobs = std::max(1, std::min<int>(cfg.jobs,
                                         static_cast<int>(questions.questions.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(jobs));
        for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    if (failed.load()) throw ClientFailure("answering failed: " + first_error);
    return rows;
}

namespace {

json answer_value_json(const AnswerValue& v) {
    switch (v.kind) {
        case AnswerValue::Kind::number: return json(v.number);
        case AnswerValue::Kind::text: return json(v.text);
        case AnswerValue::Kind::none: break;
    }
    return json(nullptr);
}

json record_json(const AnswerRecord& rec) {
    json j;
    j["answer"] = rec.answer;
    j["answer_value"] = answer_value_json(rec.answer_value);
    j["ref_id"] = json::array();
    for (const auto& r : rec.ref_id) j["ref_id"].push_back(r);
    j["is_blank"] = rec.is_blank;
    return j;
}

}  // namespace

std::string render_predictions(const std::vector<PredictionRow>& rows) {
    json out = json::array();
    for (const auto& row : rows) {
        json j = record_json(row.result.record);
        j["question_id"] = row.question_id;
        j["runs"] = json::array();
        for (const auto& run : row.result.runs) {
            json r = record_json(run.record);
            r["attempts"] = json::array();
            for (const auto& attempt : run.attempts) {
                json a;
                a["k"] = attempt.k;
                a["is_blank"] = attempt.is_blank;
                a["parse_failed"] = attempt.parse_failed;
                a["client_failed"] = attempt.client_failed;
                a["dropped_refs"] = attempt.dropped_refs;
                r["attempts"].push_back(std::move(a));
            }
            j["runs"].push_back(std::move(r));
        }
        out.push_back(std::move(j));
    }
    return out.dump(2) + "\n";
}

EvaluationOutput evaluate_files(const std::string& predictions_json,
                                const std::string& truth_json) {
    std::vector<std::string> ids;
    std::vector<AnswerRecord> records = load_predictions(predictions_json, &ids);
    std::vector<GroundTruth> truths = load_truth(truth_json);

    std::vector<std::pair<std::string, AnswerRecord>> predictions;
    predictions.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        predictions.emplace_back(ids[i], std::move(records[i]));
    }

    EvaluationOutput out;
    out.report = error_report(predictions, truths);
    out.score_table = out.report.render_scores();
    out.summary = out.report.render();
    return out;
}

}  // namespace treeqa
