#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "treeqa/ensembler.hpp"

namespace treeqa {

/// Expected answer for one question; mirrors the prediction record shape.
struct GroundTruth {
    std::string question_id;
    std::string answer;
    AnswerValue answer_value;
    std::set<std::string> refs;
    bool is_blank = false;
};

/// Per-question components and their weighted sum:
/// final = 0.75 * value + 0.15 * ref + 0.10 * hallucination.
struct ScoreBreakdown {
    int value_score = 0;
    double ref_score = 0.0;
    int hallucination_score = 0;
    double final_score = 0.0;
};

enum class ErrorCategory {
    correct,
    false_positive,
    false_negative,
    unit_conversion,
    rounding_calc,
    value_selection,
    reference_mismatch,
    type_mismatch,
    categorical_mismatch,
};

/// Human-readable category label used in reports.
const char* category_label(ErrorCategory c);

/// Value accuracy: numeric answers within +-0.1% relative tolerance,
/// categorical answers by exact match after normalization. A numeric truth
/// of exactly 0 scores 1 only for a prediction of exactly 0. Blank truth:
/// 1 iff the prediction is blank too.
int value_score(const AnswerRecord& pred, const GroundTruth& truth,
                const UnitTable& units = UnitTable::defaults());

/// Jaccard similarity of the reference sets; both empty scores 1.0.
double ref_score(const std::set<std::string>& pred_refs,
                 const std::set<std::string>& true_refs);

/// 0 iff the truth is blank and the prediction is not; 1 otherwise.
int hallucination_score(const AnswerRecord& pred, const GroundTruth& truth);

ScoreBreakdown final_score(int value, double ref, int hallucination);
ScoreBreakdown score_question(const AnswerRecord& pred, const GroundTruth& truth,
                              const UnitTable& units = UnitTable::defaults());

/// Deterministic decision tree:
///   1. abstention check (false positive / false negative / correct)
///   2. percentage error eps and ratio r for numeric pairs
///   3. for eps > 0.1%: unit conversion when r is within +-5% of a power
///      of ten (10^n, n in [-9, 9], n != 0), else rounding/calculation
///      when eps <= 10%, else value selection
///   4. correct value but differing refs -> reference mismatch;
///      numeric-vs-text shape conflict -> type mismatch; both text and
///      different -> categorical mismatch
ErrorCategory classify_error(const AnswerRecord& pred, const GroundTruth& truth,
                             const UnitTable& units = UnitTable::defaults());

struct QuestionScore {
    std::string question_id;
    ScoreBreakdown breakdown;
    ErrorCategory category = ErrorCategory::correct;
};

struct ErrorReport {
    std::vector<QuestionScore> questions;
    std::map<ErrorCategory, std::size_t> category_counts;
    std::size_t total = 0;
    std::size_t correct = 0;
    double aggregate_final = 0.0;

    /// Tab-separated per-category table plus a summary block.
    std::string render() const;
    /// Per-question score table (question_id, components, category).
    std::string render_scores() const;
};

/// Prediction / truth files: JSON arrays of {question_id, answer,
/// answer_value, ref_id, is_blank}; extra fields are ignored. Question ids
/// must align one-to-one (MissingQuestion) and be unique
/// (DuplicateQuestion).
std::vector<AnswerRecord> load_predictions(const std::string& json_text,
                                           std::vector<std::string>* ids_out);
std::vector<GroundTruth> load_truth(const std::string& json_text);

ErrorReport error_report(const std::vector<std::pair<std::string, AnswerRecord>>& predictions,
                         const std::vector<GroundTruth>& truths,
                         const UnitTable& units = UnitTable::defaults());

}  // namespace treeqa
