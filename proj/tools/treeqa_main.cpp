#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "treeqa/pipeline.hpp"
#include "treeqa/sparse.hpp"

namespace {

using namespace treeqa;

constexpr int kExitOk = 0;
constexpr int kExitDataError = 1;
constexpr int kExitSetupError = 2;

struct ConfigArgs {
    std::string config_file;
    std::vector<std::string> overrides;  // key=value pairs from --set
    bool dump = false;
};

PipelineConfig resolve_config(const ConfigArgs& args) {
    PipelineConfig cfg;
    if (!args.config_file.empty()) cfg = load_config_file(args.config_file);
    for (const auto& entry : args.overrides) {
        auto eq = entry.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("--set expects key=value, got: " + entry);
        }
        apply_config_entry(cfg, entry.substr(0, eq), entry.substr(eq + 1));
    }
    return cfg;
}

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
    cmd->add_option("--config", args.config_file, "Configuration file");
    cmd->add_option("--set", args.overrides, "Override a config key (key=value)")
        ->take_all();
    cmd->add_flag("--dump-config", args.dump, "Print the effective configuration and exit");
}

int run_index_build(const ConfigArgs& cargs, const std::string& docs,
                    const std::string& out) {
    PipelineConfig cfg = resolve_config(cargs);
    if (cargs.dump) {
        std::cout << dump_config(cfg);
        return kExitOk;
    }
    IndexBuildStats stats = build_index_from_dir(docs, out, cfg);
    std::cout << "documents: " << stats.documents << "\n";
    std::cout << "sections: " << stats.sections << "\n";
    std::cout << "paragraphs: " << stats.paragraphs << "\n";
    std::cout << "sentences: " << stats.sentences << "\n";
    std::cout << "images: " << stats.images << "\n";
    std::cout << "index written to " << out << "\n";
    return kExitOk;
}

int run_index_info(const std::string& path) {
    IndexFile index = load_index(path);
    std::cout << "dim: " << index.header.dim << "\n";
    std::cout << "tokenizer: " << index.header.tokenizer_id << "\n";
    std::cout << "encoder: " << index.header.encoder_id << "\n";
    std::cout << "nodes: " << index.nodes.size() << "\n";
    std::cout << "bm25: " << (index.bm25_blob.empty() ? "no" : "yes") << "\n";
    return kExitOk;
}

int run_answer(const ConfigArgs& cargs, const std::string& index_path,
               const std::string& questions_path, const std::string& out_path) {
    PipelineConfig cfg = resolve_config(cargs);
    if (cargs.dump) {
        std::cout << dump_config(cfg);
        return kExitOk;
    }
    IndexFile index = load_index(index_path);
    Bm25Index bm25;
    bool have_bm25 = !index.bm25_blob.empty();
    if (have_bm25) bm25 = parse_bm25(index.bm25_blob);

    QuestionSet questions = load_questions_file(questions_path);
    ClientBundle clients = make_clients(cfg, index);
    auto rows = answer_questions(questions, cfg, index, have_bm25 ? &bm25 : nullptr,
                                 clients);
    write_file_atomic(out_path, render_predictions(rows));
    std::cout << "answered " << rows.size() << " questions -> " << out_path << "\n";
    return kExitOk;
}

int run_evaluate(const std::string& predictions_path, const std::string& truth_path,
                 const std::string& out_path, bool errors_only) {
    EvaluationOutput out =
        evaluate_files(read_file(predictions_path), read_file(truth_path));
    std::string rendered =
        errors_only ? out.summary : out.score_table + "\n" + out.summary;
    if (!out_path.empty()) {
        write_file_atomic(out_path, rendered);
    }
    std::cout << rendered;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical tree-indexed document question answering"};
    app.require_subcommand(1);

    // index build | index info
    auto* index_cmd = app.add_subcommand("index", "Build or inspect an index");
    index_cmd->require_subcommand(1);

    ConfigArgs build_cargs;
    std::string docs_dir;
    std::string index_out;
    auto* build_cmd = index_cmd->add_subcommand("build", "Index a document directory");
    build_cmd->add_option("--docs", docs_dir, "Directory of .txt/.md/.doctree.json files")
        ->required();
    build_cmd->add_option("--out", index_out, "Output .kindex path")->required();
    add_config_options(build_cmd, build_cargs);

    std::string info_path;
    auto* info_cmd = index_cmd->add_subcommand("info", "Print index header fields");
    info_cmd->add_option("--index", info_path, "Index path")->required();

    // answer
    ConfigArgs answer_cargs;
    std::string answer_index;
    std::string questions_path;
    std::string predictions_out;
    auto* answer_cmd = app.add_subcommand("answer", "Answer a question set");
    answer_cmd->add_option("--index", answer_index, "Index path")->required();
    answer_cmd->add_option("--questions", questions_path, "Question file")->required();
    answer_cmd->add_option("--out", predictions_out, "Prediction output file")->required();
    add_config_options(answer_cmd, answer_cargs);
    // Frequently-swept knobs as first-class flags.
    answer_cmd->add_option_function<int>(
        "--ensemble-size",
        [&](int v) { answer_cargs.overrides.push_back("ensemble.size=" + std::to_string(v)); },
        "Number of ensemble runs (odd values recommended)");
    answer_cmd->add_option_function<std::string>(
        "--vote-mode",
        [&](const std::string& v) { answer_cargs.overrides.push_back("ensemble.vote_mode=" + v); },
        "independent|answer_priority|ref_priority|union|intersection");
    answer_cmd->add_option_function<std::string>(
        "--ignore-blank",
        [&](const std::string& v) { answer_cargs.overrides.push_back("ensemble.ignore_blank=" + v); },
        "Filter abstaining runs before voting (true|false)");
    answer_cmd->add_option_function<int>(
        "--bm25-topk",
        [&](int v) {
            answer_cargs.overrides.push_back("retriever.bm25_topk=" + std::to_string(v));
        },
        "Sparse hits appended after dense retrieval (0 = dense only)");
    answer_cmd->add_option_function<int>(
        "--jobs",
        [&](int v) { answer_cargs.overrides.push_back("jobs=" + std::to_string(v)); },
        "Question-level parallelism");
    answer_cmd->add_option_function<long>(
        "--seed",
        [&](long v) { answer_cargs.overrides.push_back("seed=" + std::to_string(v)); },
        "Root random seed");

    // evaluate / classify-errors
    std::string eval_predictions;
    std::string eval_truth;
    std::string eval_out;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score predictions against truth");
    eval_cmd->add_option("--predictions", eval_predictions, "Prediction file")->required();
    eval_cmd->add_option("--truth", eval_truth, "Ground-truth file")->required();
    eval_cmd->add_option("--out", eval_out, "Write the report here as well");

    std::string cls_predictions;
    std::string cls_truth;
    std::string cls_out;
    auto* cls_cmd =
        app.add_subcommand("classify-errors", "Error-category distribution only");
    cls_cmd->add_option("--predictions", cls_predictions, "Prediction file")->required();
    cls_cmd->add_option("--truth", cls_truth, "Ground-truth file")->required();
    cls_cmd->add_option("--out", cls_out, "Write the report here as well");

    CLI11_PARSE(app, argc, argv);

    try {
        if (build_cmd->parsed()) return run_index_build(build_cargs, docs_dir, index_out);
        if (info_cmd->parsed()) return run_index_info(info_path);
        if (answer_cmd->parsed()) {
            return run_answer(answer_cargs, answer_index, questions_path, predictions_out);
        }
        if (eval_cmd->parsed()) {
            return run_evaluate(eval_predictions, eval_truth, eval_out, false);
        }
        if (cls_cmd->parsed()) return run_evaluate(cls_predictions, cls_truth, cls_out, true);
    } catch (const SetupError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSetupError;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    }
    return kExitOk;
}
