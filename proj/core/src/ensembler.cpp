#include "treeqa/ensembler.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <sstream>

namespace treeqa {

const char* vote_mode_name(VoteMode mode) {
    switch (mode) {
        case VoteMode::independent: return "independent";
        case VoteMode::answer_priority: return "answer_priority";
        case VoteMode::ref_priority: return "ref_priority";
        case VoteMode::set_union: return "union";
        case VoteMode::set_intersection: return "intersection";
    }
    return "answer_priority";
}

std::optional<VoteMode> vote_mode_from_name(const std::string& name) {
    if (name == "independent") return VoteMode::independent;
    if (name == "answer_priority") return VoteMode::answer_priority;
    if (name == "ref_priority") return VoteMode::ref_priority;
    if (name == "union") return VoteMode::set_union;
    if (name == "intersection") return VoteMode::set_intersection;
    return std::nullopt;
}

UnitTable UnitTable::defaults() {
    UnitTable t;
    const std::pair<const char*, double> prefixes[] = {
        {"", 1.0}, {"k", 1e3}, {"M", 1e6}, {"G", 1e9}, {"m", 1e-3}};
    for (const char* base : {"W", "Wh", "L", "g"}) {
        for (const auto& [prefix, factor] : prefixes) {
            t.symbols[std::string(prefix) + base] = factor;
        }
    }
    t.words = {
        {"thousand", 1e3}, {"million", 1e6}, {"billion", 1e9},
        {"watt", 1.0},     {"watts", 1.0},   {"liter", 1.0},
        {"liters", 1.0},   {"litre", 1.0},   {"litres", 1.0},
        {"gram", 1.0},     {"grams", 1.0},   {"kilogram", 1e3},
        {"kilograms", 1e3},
    };
    return t;
}

namespace {

std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

// Strips well-formed thousands separators: "1,500,000" -> "1500000".
// Returns nullopt when commas are present but not in 3-digit groups.
std::optional<std::string> strip_thousands(const std::string& s) {
    if (s.find(',') == std::string::npos) return s;
    std::string out;
    std::size_t i = 0;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) out.push_back(s[i++]);
    std::size_t first_group = 0;
    while (i + first_group < s.size() &&
           std::isdigit(static_cast<unsigned char>(s[i + first_group]))) {
        ++first_group;
    }
    if (first_group == 0 || first_group > 3) return std::nullopt;
    out.append(s, i, first_group);
    i += first_group;
    while (i < s.size() && s[i] == ',') {
        if (i + 3 >= s.size()) return std::nullopt;
        for (std::size_t d = 1; d <= 3; ++d) {
            if (!std::isdigit(static_cast<unsigned char>(s[i + d]))) return std::nullopt;
        }
        out.append(s, i + 1, 3);
        i += 4;
    }
    out.append(s, i, std::string::npos);
    return out;
}

std::optional<double> parse_plain_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    errno = 0;
    char* end = nullptr;
    double value = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE) return std::nullopt;
    if (!std::isfinite(value)) return std::nullopt;
    return value;
}

}  // namespace

std::optional<double> parse_numeric(const std::string& text, const UnitTable& units) {
    std::string s = trim(text);
    if (s.empty()) return std::nullopt;

    // Split off the leading number token.
    std::size_t split = 0;
    while (split < s.size() && !std::isspace(static_cast<unsigned char>(s[split])) &&
           !(std::isalpha(static_cast<unsigned char>(s[split])) &&
             // exponent markers belong to the number ("1.5e6")
             !((s[split] == 'e' || s[split] == 'E') && split + 1 < s.size() &&
               (std::isdigit(static_cast<unsigned char>(s[split + 1])) ||
                s[split + 1] == '+' || s[split + 1] == '-')))) {
        ++split;
    }
    std::string number_part = s.substr(0, split);
    std::string suffix = trim(s.substr(split));

    auto without_commas = strip_thousands(number_part);
    if (!without_commas) return std::nullopt;
    auto value = parse_plain_number(*without_commas);
    if (!value) return std::nullopt;

    if (suffix.empty()) return value;
    double factor = 1.0;
    std::istringstream words(suffix);
    std::string word;
    while (words >> word) {
        auto sym = units.symbols.find(word);
        if (sym != units.symbols.end()) {
            factor *= sym->second;
            continue;
        }
        std::string lower = word;
        std::transform(lower.begin(), lower.end(), lower.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        auto w = units.words.find(lower);
        if (w == units.words.end()) return std::nullopt;
        factor *= w->second;
    }
    return *value * factor;
}

std::string normalize_categorical(const std::string& text) {
    std::string out;
    bool pending_space = false;
    for (unsigned char c : trim(text)) {
        if (std::isspace(c)) {
            pending_space = true;
        } else {
            if (pending_space && !out.empty()) out.push_back(' ');
            pending_space = false;
            out.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    return out;
}

NormalizedAnswer normalize_answer(const AnswerRecord& rec, const UnitTable& units) {
    NormalizedAnswer out;
    if (rec.is_blank) {
        out.kind = NormalizedAnswer::Kind::blank;
        return out;
    }
    switch (rec.answer_value.kind) {
        case AnswerValue::Kind::number:
            out.kind = NormalizedAnswer::Kind::numeric;
            out.numeric_value = rec.answer_value.number;
            return out;
        case AnswerValue::Kind::text:
            if (auto v = parse_numeric(rec.answer_value.text, units)) {
                out.kind = NormalizedAnswer::Kind::numeric;
                out.numeric_value = *v;
            } else {
                out.kind = NormalizedAnswer::Kind::categorical;
                out.categorical_key = normalize_categorical(rec.answer_value.text);
            }
            return out;
        case AnswerValue::Kind::none: break;
    }
    if (auto v = parse_numeric(rec.answer, units)) {
        out.kind = NormalizedAnswer::Kind::numeric;
        out.numeric_value = *v;
    } else {
        out.kind = NormalizedAnswer::Kind::categorical;
        out.categorical_key = normalize_categorical(rec.answer);
    }
    return out;
}

bool numeric_equivalent(double a, double b) {
    return std::abs(a - b) <= 0.001 * std::max(std::abs(a), std::abs(b));
}

namespace {

// Groups surviving run indexes by answer equivalence. Numeric groups use
// the transitive closure of numeric_equivalent (pairwise 0.1% closeness is
// not transitive); categorical and blank groups are exact.
std::vector<std::vector<std::size_t>> group_runs(
    const std::vector<NormalizedAnswer>& normalized) {
    std::vector<std::size_t> parent(normalized.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    auto unite = [&](std::size_t a, std::size_t b) { parent[find(a)] = find(b); };

    for (std::size_t i = 0; i < normalized.size(); ++i) {
        for (std::size_t j = i + 1; j < normalized.size(); ++j) {
            const auto& a = normalized[i];
            const auto& b = normalized[j];
            if (a.kind != b.kind) continue;
            bool same = false;
            switch (a.kind) {
                case NormalizedAnswer::Kind::blank: same = true; break;
                case NormalizedAnswer::Kind::categorical:
                    same = a.categorical_key == b.categorical_key;
                    break;
                case NormalizedAnswer::Kind::numeric:
                    same = numeric_equivalent(a.numeric_value, b.numeric_value);
                    break;
            }
            if (same) unite(i, j);
        }
    }

    std::map<std::size_t, std::vector<std::size_t>> by_root;
    for (std::size_t i = 0; i < normalized.size(); ++i) by_root[find(i)].push_back(i);
    std::vector<std::vector<std::size_t>> groups;
    for (auto& [root, members] : by_root) {
        std::sort(members.begin(), members.end());
        groups.push_back(std::move(members));
    }
    // Deterministic group order: by earliest member.
    std::sort(groups.begin(), groups.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return groups;
}

// Most frequent element; ties go to the one seen earliest.
template <typename T>
T majority_pick(const std::vector<T>& items) {
    std::vector<std::pair<T, int>> counts;
    for (const auto& item : items) {
        auto it = std::find_if(counts.begin(), counts.end(),
                               [&](const auto& p) { return p.first == item; });
        if (it == counts.end()) {
            counts.push_back({item, 1});
        } else {
            ++it->second;
        }
    }
    return std::max_element(counts.begin(), counts.end(),
                            [](const auto& a, const auto& b) { return a.second < b.second; })
        ->first;
}

AnswerRecord blank_record() {
    AnswerRecord rec;
    rec.is_blank = true;
    return rec;
}

}  // namespace

AnswerRecord vote(const std::vector<AnswerRecord>& records, const VoteConfig& cfg,
                  const UnitTable& units) {
    if (records.empty()) throw ConfigError("vote requires at least one record");

    std::vector<std::size_t> surviving;
    bool any_non_blank =
        std::any_of(records.begin(), records.end(), [](const auto& r) { return !r.is_blank; });
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (cfg.ignore_blank && any_non_blank && records[i].is_blank) continue;
        surviving.push_back(i);
    }
    if (std::all_of(surviving.begin(), surviving.end(),
                    [&](std::size_t i) { return records[i].is_blank; })) {
        return blank_record();
    }

    std::vector<NormalizedAnswer> normalized;
    normalized.reserve(surviving.size());
    for (std::size_t i : surviving) normalized.push_back(normalize_answer(records[i], units));

    auto groups = group_runs(normalized);
    const std::vector<std::size_t>* winner = &groups.front();
    for (const auto& g : groups) {
        if (g.size() > winner->size()) winner = &g;  // earliest-run groups come first
    }
    if (normalized[winner->front()].kind == NormalizedAnswer::Kind::blank) {
        return blank_record();
    }

    auto record_at = [&](std::size_t local) -> const AnswerRecord& {
        return records[surviving[local]];
    };

    if (cfg.mode == VoteMode::ref_priority) {
        // Reference sets vote first, over all surviving runs.
        std::vector<std::set<std::string>> sets;
        for (std::size_t local = 0; local < surviving.size(); ++local) {
            sets.push_back(record_at(local).ref_id);
        }
        std::set<std::string> winning_set = majority_pick(sets);
        std::vector<std::size_t> matching;
        for (std::size_t local = 0; local < surviving.size(); ++local) {
            if (record_at(local).ref_id == winning_set) matching.push_back(local);
        }
        // Most common answer among runs carrying the winning set.
        std::vector<NormalizedAnswer> sub;
        for (std::size_t local : matching) sub.push_back(normalized[local]);
        auto sub_groups = group_runs(sub);
        const std::vector<std::size_t>* sub_winner = &sub_groups.front();
        for (const auto& g : sub_groups) {
            if (g.size() > sub_winner->size()) sub_winner = &g;
        }
        const AnswerRecord& rep = record_at(matching[sub_winner->front()]);
        AnswerRecord out = rep;
        out.ref_id = winning_set;
        out.explanation.reset();
        return out;
    }

    const AnswerRecord& rep = record_at(winner->front());
    AnswerRecord out = rep;
    out.explanation.reset();

    switch (cfg.mode) {
        case VoteMode::answer_priority: {
            std::vector<std::set<std::string>> sets;
            for (std::size_t local : *winner) sets.push_back(record_at(local).ref_id);
            out.ref_id = majority_pick(sets);
            break;
        }
        case VoteMode::set_union: {
            out.ref_id.clear();
            for (std::size_t local : *winner) {
                const auto& refs = record_at(local).ref_id;
                out.ref_id.insert(refs.begin(), refs.end());
            }
            break;
        }
        case VoteMode::set_intersection: {
            out.ref_id = record_at(winner->front()).ref_id;
            for (std::size_t local : *winner) {
                const auto& refs = record_at(local).ref_id;
                std::set<std::string> kept;
                for (const auto& r : out.ref_id) {
                    if (refs.count(r)) kept.insert(r);
                }
                out.ref_id = std::move(kept);
            }
            break;
        }
        case VoteMode::independent: {
            // Per-reference majority over all surviving runs.
            std::map<std::string, std::size_t> counts;
            for (std::size_t local = 0; local < surviving.size(); ++local) {
                for (const auto& r : record_at(local).ref_id) ++counts[r];
            }
            out.ref_id.clear();
            for (const auto& [ref, count] : counts) {
                if (2 * count > surviving.size()) out.ref_id.insert(ref);
            }
            break;
        }
        case VoteMode::ref_priority: break;  // handled above
    }
    return out;
}

EnsembleResult run_ensemble(const std::string& question, int m,
                            const RetrieverConfig& rcfg, const AnswererConfig& acfg,
                            const VoteConfig& vcfg, const QaHandles& handles,
                            const std::function<std::uint64_t(int)>& seed_for_run,
                            const UnitTable& units) {
    if (m < 1) throw ConfigError("ensemble size must be >= 1");

    EnsembleResult result;
    std::vector<AnswerRecord> records;
    std::string last_error;
    for (int run = 0; run < m; ++run) {
        try {
            AnswerResult one =
                answer_with_retry(question, rcfg, acfg, handles, seed_for_run(run));
            records.push_back(one.record);
            result.runs.push_back(std::move(one));
        } catch (const SetupError& e) {
            last_error = e.what();
        }
    }
    if (records.empty()) {
        throw ClientFailure("all ensemble runs failed: " + last_error);
    }
    result.record = m == 1 && records.size() == 1 ? records.front()
                                                  : vote(records, vcfg, units);
    return result;
}

}  // namespace treeqa
