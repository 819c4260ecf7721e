#include "treeqa/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace treeqa {

using nlohmann::json;

const char* category_label(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::correct: return "Correct";
        case ErrorCategory::false_positive: return "False positive";
        case ErrorCategory::false_negative: return "False negative";
        case ErrorCategory::unit_conversion: return "Unit conversion";
        case ErrorCategory::rounding_calc: return "Rounding/calculation";
        case ErrorCategory::value_selection: return "Value selection";
        case ErrorCategory::reference_mismatch: return "Reference mismatch";
        case ErrorCategory::type_mismatch: return "Type mismatch";
        case ErrorCategory::categorical_mismatch: return "Categorical mismatch";
    }
    return "Correct";
}

namespace {

NormalizedAnswer normalize_truth(const GroundTruth& truth, const UnitTable& units) {
    AnswerRecord as_record;
    as_record.answer = truth.answer;
    as_record.answer_value = truth.answer_value;
    as_record.is_blank = truth.is_blank;
    return normalize_answer(as_record, units);
}

bool numeric_value_match(double pred, double truth) {
    if (truth == 0.0) return pred == 0.0;
    return std::abs(pred - truth) / std::abs(truth) <= 0.001;
}

}  // namespace

int value_score(const AnswerRecord& pred, const GroundTruth& truth,
                const UnitTable& units) {
    if (truth.is_blank) return pred.is_blank ? 1 : 0;
    if (pred.is_blank) return 0;

    NormalizedAnswer t = normalize_truth(truth, units);
    NormalizedAnswer p = normalize_answer(pred, units);
    if (t.kind == NormalizedAnswer::Kind::numeric) {
        if (p.kind != NormalizedAnswer::Kind::numeric) return 0;
        return numeric_value_match(p.numeric_value, t.numeric_value) ? 1 : 0;
    }
    if (p.kind != NormalizedAnswer::Kind::categorical) return 0;
    return p.categorical_key == t.categorical_key ? 1 : 0;
}

double ref_score(const std::set<std::string>& pred_refs,
                 const std::set<std::string>& true_refs) {
    if (pred_refs.empty() && true_refs.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& r : pred_refs) inter += true_refs.count(r);
    std::size_t uni = pred_refs.size() + true_refs.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

int hallucination_score(const AnswerRecord& pred, const GroundTruth& truth) {
    return (truth.is_blank && !pred.is_blank) ? 0 : 1;
}

ScoreBreakdown final_score(int value, double ref, int hallucination) {
    ScoreBreakdown b;
    b.value_score = value;
    b.ref_score = ref;
    b.hallucination_score = hallucination;
    b.final_score = 0.75 * value + 0.15 * ref + 0.10 * hallucination;
    return b;
}

ScoreBreakdown score_question(const AnswerRecord& pred, const GroundTruth& truth,
                              const UnitTable& units) {
    return final_score(value_score(pred, truth, units),
                       ref_score(pred.ref_id, truth.refs),
                       hallucination_score(pred, truth));
}

ErrorCategory classify_error(const AnswerRecord& pred, const GroundTruth& truth,
                             const UnitTable& units) {
    // Step 1: abstention check.
    if (truth.is_blank && !pred.is_blank) return ErrorCategory::false_positive;
    if (!truth.is_blank && pred.is_blank) return ErrorCategory::false_negative;
    if (truth.is_blank && pred.is_blank) return ErrorCategory::correct;

    NormalizedAnswer t = normalize_truth(truth, units);
    NormalizedAnswer p = normalize_answer(pred, units);

    bool t_numeric = t.kind == NormalizedAnswer::Kind::numeric;
    bool p_numeric = p.kind == NormalizedAnswer::Kind::numeric;
    if (t_numeric != p_numeric) return ErrorCategory::type_mismatch;

    if (t_numeric) {
        if (numeric_value_match(p.numeric_value, t.numeric_value)) {
            return pred.ref_id == truth.refs ? ErrorCategory::correct
                                             : ErrorCategory::reference_mismatch;
        }
        // Step 2: percentage error and ratio. A zero truth behaves as an
        // unbounded error since the relative scale is undefined.
        double eps = t.numeric_value == 0.0
                         ? std::numeric_limits<double>::infinity()
                         : std::abs(p.numeric_value - t.numeric_value) /
                               std::abs(t.numeric_value) * 100.0;
        double r = t.numeric_value == 0.0 ? std::numeric_limits<double>::infinity()
                                          : p.numeric_value / t.numeric_value;
        // Step 3: unit conversion, rounding, or wrong value.
        if (std::isfinite(r) && r > 0.0) {
            for (int n = -9; n <= 9; ++n) {
                if (n == 0) continue;
                double power = std::pow(10.0, n);
                // tiny slack keeps the inclusive 5% boundary stable under
                // floating-point rounding
                if (std::abs(r / power - 1.0) <= 0.05 + 1e-9) {
                    return ErrorCategory::unit_conversion;
                }
            }
        }
        if (eps <= 10.0) return ErrorCategory::rounding_calc;
        return ErrorCategory::value_selection;
    }

    // Step 4, categorical side.
    if (p.categorical_key == t.categorical_key) {
        return pred.ref_id == truth.refs ? ErrorCategory::correct
                                         : ErrorCategory::reference_mismatch;
    }
    return ErrorCategory::categorical_mismatch;
}

std::string ErrorReport::render() const {
    std::ostringstream out;
    out << "category\tcount\tpct_of_errors\n";
    std::size_t errors = total - correct;
    static const ErrorCategory order[] = {
        ErrorCategory::false_negative,   ErrorCategory::reference_mismatch,
        ErrorCategory::value_selection,  ErrorCategory::rounding_calc,
        ErrorCategory::type_mismatch,    ErrorCategory::unit_conversion,
        ErrorCategory::categorical_mismatch, ErrorCategory::false_positive,
    };
    for (ErrorCategory c : order) {
        auto it = category_counts.find(c);
        std::size_t count = it == category_counts.end() ? 0 : it->second;
        if (count == 0) continue;
        double pct = errors ? 100.0 * static_cast<double>(count) /
                                  static_cast<double>(errors)
                            : 0.0;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.1f", pct);
        out << category_label(c) << "\t" << count << "\t" << buf << "\n";
    }
    out << "\n";
    out << "total\t" << total << "\n";
    out << "correct\t" << correct << "\n";
    out << "errors\t" << errors << "\n";
    char rate[32];
    std::snprintf(rate, sizeof(rate), "%.1f",
                  total ? 100.0 * static_cast<double>(correct) / static_cast<double>(total)
                        : 0.0);
    out << "correct_rate_pct\t" << rate << "\n";
    char agg[32];
    std::snprintf(agg, sizeof(agg), "%.6f", aggregate_final);
    out << "aggregate_final_score\t" << agg << "\n";
    return out.str();
}

std::string ErrorReport::render_scores() const {
    std::ostringstream out;
    out << "question_id\tvalue\tref\thallucination\tfinal\tcategory\n";
    for (const auto& q : questions) {
        char refbuf[32];
        std::snprintf(refbuf, sizeof(refbuf), "%.6f", q.breakdown.ref_score);
        char finbuf[32];
        std::snprintf(finbuf, sizeof(finbuf), "%.6f", q.breakdown.final_score);
        out << q.question_id << "\t" << q.breakdown.value_score << "\t" << refbuf << "\t"
            << q.breakdown.hallucination_score << "\t" << finbuf << "\t"
            << category_label(q.category) << "\n";
    }
    return out.str();
}

namespace {

AnswerRecord record_from_file_json(const json& item) {
    AnswerRecord rec;
    if (item.contains("answer") && item["answer"].is_string()) {
        rec.answer = item["answer"].get<std::string>();
    }
    if (item.contains("answer_value") && !item["answer_value"].is_null()) {
        const auto& v = item["answer_value"];
        if (v.is_number()) {
            rec.answer_value = AnswerValue::of_number(v.get<double>());
        } else if (v.is_string()) {
            rec.answer_value = AnswerValue::of_text(v.get<std::string>());
        }
    }
    if (item.contains("ref_id") && item["ref_id"].is_array()) {
        for (const auto& r : item["ref_id"]) {
            if (r.is_string()) rec.ref_id.insert(r.get<std::string>());
        }
    }
    if (item.contains("is_blank") && item["is_blank"].is_boolean()) {
        rec.is_blank = item["is_blank"].get<bool>();
    }
    if (rec.is_blank) {
        rec.ref_id.clear();
        rec.answer_value = AnswerValue{};
    }
    return rec;
}

json parse_record_array(const std::string& json_text, const char* what) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw SchemaError(std::string(what) + " file is not valid JSON: " + e.what());
    }
    if (!j.is_array()) throw SchemaError(std::string(what) + " file must be a JSON array");
    return j;
}

}  // namespace

std::vector<AnswerRecord> load_predictions(const std::string& json_text,
                                           std::vector<std::string>* ids_out) {
    json j = parse_record_array(json_text, "prediction");
    std::vector<AnswerRecord> out;
    std::unordered_set<std::string> seen;
    for (const auto& item : j) {
        if (!item.contains("question_id") || !item["question_id"].is_string()) {
            throw SchemaError("prediction record missing question_id");
        }
        std::string id = item["question_id"].get<std::string>();
        if (!seen.insert(id).second) throw DuplicateQuestion("duplicate question id: " + id);
        if (ids_out) ids_out->push_back(id);
        out.push_back(record_from_file_json(item));
    }
    return out;
}

std::vector<GroundTruth> load_truth(const std::string& json_text) {
    json j = parse_record_array(json_text, "truth");
    std::vector<GroundTruth> out;
    std::unordered_set<std::string> seen;
    for (const auto& item : j) {
        if (!item.contains("question_id") || !item["question_id"].is_string()) {
            throw SchemaError("truth record missing question_id");
        }
        GroundTruth t;
        t.question_id = item["question_id"].get<std::string>();
        if (!seen.insert(t.question_id).second) {
            throw DuplicateQuestion("duplicate question id: " + t.question_id);
        }
        AnswerRecord rec = record_from_file_json(item);
        t.answer = rec.answer;
        t.answer_value = rec.answer_value;
        t.refs = rec.ref_id;
        t.is_blank = rec.is_blank;
        out.push_back(std::move(t));
    }
    return out;
}

ErrorReport error_report(const std::vector<std::pair<std::string, AnswerRecord>>& predictions,
                         const std::vector<GroundTruth>& truths, const UnitTable& units) {
    std::unordered_map<std::string, const AnswerRecord*> by_id;
    for (const auto& [id, rec] : predictions) {
        if (!by_id.emplace(id, &rec).second) {
            throw DuplicateQuestion("duplicate prediction for question: " + id);
        }
    }
    ErrorReport report;
    double sum = 0.0;
    for (const auto& truth : truths) {
        auto it = by_id.find(truth.question_id);
        if (it == by_id.end()) {
            throw MissingQuestion("no prediction for question: " + truth.question_id);
        }
        QuestionScore qs;
        qs.question_id = truth.question_id;
        qs.breakdown = score_question(*it->second, truth, units);
        qs.category = classify_error(*it->second, truth, units);
        sum += qs.breakdown.final_score;
        ++report.category_counts[qs.category];
        if (qs.category == ErrorCategory::correct) ++report.correct;
        report.questions.push_back(std::move(qs));
        by_id.erase(it);
    }
    if (!by_id.empty()) {
        throw MissingQuestion("prediction without matching truth: " + by_id.begin()->first);
    }
    report.total = truths.size();
    report.aggregate_final = report.total ? sum / static_cast<double>(report.total) : 0.0;
    return report;
}

}  // namespace treeqa
