#pragma once

#include <memory>
#include <string>
#include <vector>

#include "treeqa/clients.hpp"
#include "treeqa/config.hpp"
#include "treeqa/evalkit.hpp"

namespace treeqa {

struct Question {
    std::string question_id;
    std::string question;
};

struct QuestionSet {
    std::vector<Question> questions;
};

/// JSON array of {question_id, question}; ids must be unique.
QuestionSet load_questions(const std::string& json_text);
QuestionSet load_questions_file(const std::string& path);

struct IndexBuildStats {
    std::size_t documents = 0;
    std::size_t sections = 0;
    std::size_t paragraphs = 0;
    std::size_t sentences = 0;
    std::size_t images = 0;
};

/// Ingests every .txt/.md (plain-text parser) and .doctree.json (tree
/// loader) file under docs_dir in sorted order, embeds the trees, builds
/// the sparse postings section and writes the index to out_path.
IndexBuildStats build_index_from_dir(const std::string& docs_dir,
                                     const std::string& out_path,
                                     const PipelineConfig& cfg);

/// Constructed clients for one pipeline run, owned together so the
/// QaHandles view stays valid.
struct ClientBundle {
    std::unique_ptr<EncoderClient> encoder;
    std::unique_ptr<ChatClient> chat;
    std::unique_ptr<PlannerClient> planner;
};

/// Builds encoder/chat/planner per the config. Mock encoders are
/// reconstructed from the index header so query vectors live in the same
/// space the index was built in.
ClientBundle make_clients(const PipelineConfig& cfg, const IndexFile& index);

struct PredictionRow {
    std::string question_id;
    EnsembleResult result;
};

/// Runs the whole question set: ensemble answering per question with
/// per-(question, run) seeds. Questions run in parallel up to cfg.jobs;
/// results keep question order.
std::vector<PredictionRow> answer_questions(const QuestionSet& questions,
                                            const PipelineConfig& cfg,
                                            const IndexFile& index, const Bm25Index* bm25,
                                            const ClientBundle& clients);

/// Prediction-file JSON: one record per question with the voted answer
/// plus the per-run audit trail.
std::string render_predictions(const std::vector<PredictionRow>& rows);

struct EvaluationOutput {
    ErrorReport report;
    std::string score_table;    // per-question breakdown (TSV)
    std::string summary;        // error distribution + aggregates (TSV)
};

EvaluationOutput evaluate_files(const std::string& predictions_json,
                                const std::string& truth_json);

/// Whole-file read/write helpers; writes go through a temp file + rename.
std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace treeqa
