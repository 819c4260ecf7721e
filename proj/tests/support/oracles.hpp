#pragma once

// Independent reference implementations the test suites check the library
// against. Everything here is written straight from the defining formulas
// and shares no code with the implementation side.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "treeqa/doctree.hpp"
#include "treeqa/embedder.hpp"
#include "treeqa/sparse.hpp"
#include "treeqa/vectorstore.hpp"

namespace oracles {

// Weighted mean over all leaf descendants of `id`, each weighted by the
// whitespace token count of its content. This is what bottom-up
// propagation must telescope to.
inline treeqa::Vector descendant_leaf_mean(const treeqa::DocumentTree& tree,
                                           const treeqa::NodeId& id,
                                           const std::map<treeqa::NodeId, treeqa::Vector>& leaf_vecs,
                                           std::size_t dim) {
    std::vector<treeqa::NodeId> stack{id};
    treeqa::Vector acc;
    acc.values.assign(dim, 0.0);
    double total_weight = 0.0;
    while (!stack.empty()) {
        treeqa::NodeId cur = stack.back();
        stack.pop_back();
        const treeqa::DocNode& node = tree.node(cur);
        if (node.children.empty()) {
            double w = static_cast<double>(treeqa::token_count(node.content));
            if (w > 0.0) {
                const treeqa::Vector& v = leaf_vecs.at(cur);
                for (std::size_t d = 0; d < dim; ++d) acc.values[d] += w * v.values[d];
                total_weight += w;
            }
        } else {
            for (const auto& c : node.children) stack.push_back(c);
        }
    }
    for (double& v : acc.values) v /= total_weight;
    return acc;
}

// Full-scan cosine ranking over the index, mirroring the documented
// semantics: level filter, optional image exclusion, zero-norm scores 0,
// ties by id ascending.
inline std::vector<treeqa::RetrievalHit> full_scan_ranking(const treeqa::IndexFile& index,
                                                           const treeqa::Vector& query,
                                                           int k,
                                                           const treeqa::SearchFilter& filter) {
    double qn = 0.0;
    for (double v : query.values) qn += v * v;
    qn = std::sqrt(qn);

    std::vector<std::pair<double, std::string>> scored;
    for (std::size_t i = 0; i < index.nodes.size(); ++i) {
        const auto& entry = index.nodes[i];
        if (!filter.levels.count(entry.level)) continue;
        if (!filter.include_images && entry.is_image()) continue;
        double d = 0.0;
        double vn = 0.0;
        for (std::size_t j = 0; j < index.vectors[i].size(); ++j) {
            d += query.values[j] * static_cast<double>(index.vectors[i][j]);
            vn += static_cast<double>(index.vectors[i][j]) *
                  static_cast<double>(index.vectors[i][j]);
        }
        vn = std::sqrt(vn);
        double score = (qn == 0.0 || vn == 0.0) ? 0.0 : d / (qn * vn);
        scored.emplace_back(score, entry.id.value);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<treeqa::RetrievalHit> out;
    for (std::size_t i = 0; i < scored.size() && i < static_cast<std::size_t>(k); ++i) {
        out.push_back({treeqa::NodeId{scored[i].second}, scored[i].first, 0,
                       treeqa::HitSource::dense});
    }
    return out;
}

// Textbook Okapi BM25 with the non-negative +1-inside-log IDF, computed
// from raw token lists without an inverted index.
inline std::map<std::string, double> okapi_scores(
    const std::map<std::string, std::vector<std::string>>& corpus_tokens,
    const std::vector<std::string>& query_terms, double k1, double b) {
    double n = static_cast<double>(corpus_tokens.size());
    double avgdl = 0.0;
    for (const auto& [id, tokens] : corpus_tokens) {
        avgdl += static_cast<double>(tokens.size());
    }
    avgdl /= n;

    std::vector<std::string> unique_terms = query_terms;
    std::sort(unique_terms.begin(), unique_terms.end());
    unique_terms.erase(std::unique(unique_terms.begin(), unique_terms.end()),
                       unique_terms.end());

    std::map<std::string, double> scores;
    for (const auto& term : unique_terms) {
        double df = 0.0;
        for (const auto& [id, tokens] : corpus_tokens) {
            if (std::count(tokens.begin(), tokens.end(), term) > 0) df += 1.0;
        }
        if (df == 0.0) continue;
        double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
        for (const auto& [id, tokens] : corpus_tokens) {
            double tf = static_cast<double>(std::count(tokens.begin(), tokens.end(), term));
            if (tf == 0.0) continue;
            double dl = static_cast<double>(tokens.size());
            scores[id] += idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * dl / avgdl));
        }
    }
    return scores;
}

}  // namespace oracles
