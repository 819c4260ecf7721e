#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "treeqa/answerer.hpp"

namespace treeqa {

struct NormalizedAnswer {
    enum class Kind { numeric, categorical, blank };
    Kind kind = Kind::blank;
    double numeric_value = 0.0;
    std::string categorical_key;
};

enum class VoteMode { independent, answer_priority, ref_priority, set_union, set_intersection };

const char* vote_mode_name(VoteMode mode);
std::optional<VoteMode> vote_mode_from_name(const std::string& name);

struct VoteConfig {
    VoteMode mode = VoteMode::answer_priority;
    bool ignore_blank = true;
};

/// Multiplicative factors applied to the words/symbols following a number.
/// Symbol entries (kW, MW, ...) match case-sensitively, word entries
/// (thousand, liters, ...) after lowercasing. Extensible via config.
struct UnitTable {
    std::map<std::string, double> symbols;
    std::map<std::string, double> words;

    static UnitTable defaults();
};

/// Parses a numeric string: plain decimals, scientific notation, thousands
/// separators, and unit suffixes expanded through the table ("1.5 MW" ->
/// 1500000). Returns nullopt when the text is not a single number with an
/// optional known suffix.
std::optional<double> parse_numeric(const std::string& text,
                                    const UnitTable& units = UnitTable::defaults());

/// Lowercases, trims and collapses internal whitespace.
std::string normalize_categorical(const std::string& text);

/// Blank stays blank; otherwise the answer_value (falling back to the
/// answer text) is parsed numerically, and what fails to parse becomes a
/// categorical key.
NormalizedAnswer normalize_answer(const AnswerRecord& rec,
                                  const UnitTable& units = UnitTable::defaults());

/// True when two numeric values fall within 0.1% relative difference:
/// |a - b| <= 0.001 * max(|a|, |b|).
bool numeric_equivalent(double a, double b);

/// Plurality vote over m records. Blanks are filtered first when
/// ignore_blank is set and any non-blank exists; all-blank inputs return a
/// blank record. Numeric answers group by the transitive closure of
/// numeric_equivalent (0.1% single-linkage). Plurality ties go to the
/// group containing the earliest run, whose earliest member also supplies
/// the output answer text. References are aggregated per VoteMode:
///   answer_priority: most frequent exact ref set among winner runs
///   set_union / set_intersection: union / intersection over winner runs
///   ref_priority: vote ref sets over all surviving runs first, then pick
///                 the most common answer among runs with the winning set
///   independent: answer plurality plus per-reference majority (a ref is
///                kept if present in more than half of surviving runs)
AnswerRecord vote(const std::vector<AnswerRecord>& records, const VoteConfig& cfg,
                  const UnitTable& units = UnitTable::defaults());

struct EnsembleResult {
    AnswerRecord record;
    std::vector<AnswerResult> runs;
};

/// m independent answer_with_retry calls with distinct seeds, then vote.
/// m == 1 bypasses voting. Individual client failures are tolerated; the
/// call fails only when every run fails.
EnsembleResult run_ensemble(const std::string& question, int m,
                            const RetrieverConfig& rcfg, const AnswererConfig& acfg,
                            const VoteConfig& vcfg, const QaHandles& handles,
                            const std::function<std::uint64_t(int)>& seed_for_run,
                            const UnitTable& units = UnitTable::defaults());

}  // namespace treeqa
