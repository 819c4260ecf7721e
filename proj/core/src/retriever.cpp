#include "treeqa/retriever.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>

namespace treeqa {

std::vector<std::string> plan_queries(const std::string& question, int n,
                                      PlannerClient& llm) {
    if (n < 1) throw ConfigError("plan_queries requires n >= 1");
    std::vector<std::string> raw = llm.plan(question, n);
    std::vector<std::string> out;
    for (auto& q : raw) {
        if (q.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        out.push_back(std::move(q));
        if (out.size() == static_cast<std::size_t>(n)) break;
    }
    if (out.empty()) out.push_back(question);
    return out;
}

std::vector<RerankEntry> rerank(const std::vector<std::vector<RetrievalHit>>& results,
                                RerankStrategy strategy, double alpha) {
    struct Accum {
        int dense_frequency = 0;
        std::vector<double> dense_scores;
        double best_sparse = 0.0;
    };
    std::map<NodeId, Accum> accum;
    for (const auto& list : results) {
        std::map<NodeId, const RetrievalHit*> best_in_list;
        for (const auto& hit : list) {
            auto it = best_in_list.find(hit.node);
            if (it == best_in_list.end() || hit.score > it->second->score) {
                best_in_list[hit.node] = &hit;
            }
        }
        for (const auto& [id, hit] : best_in_list) {
            Accum& a = accum[id];
            if (hit->source == HitSource::dense) {
                ++a.dense_frequency;
                a.dense_scores.push_back(hit->score);
            } else {
                a.best_sparse = std::max(a.best_sparse, hit->score);
            }
        }
    }

    std::vector<RerankEntry> entries;
    entries.reserve(accum.size());
    for (auto& [id, a] : accum) {
        bool dense = a.dense_frequency > 0;
        // Sorted addends make the sum independent of input list order.
        std::sort(a.dense_scores.begin(), a.dense_scores.end());
        double total = 0.0;
        for (double s : a.dense_scores) total += s;
        RerankEntry e;
        e.node = id;
        e.frequency = dense ? a.dense_frequency : 1;
        e.total_score = dense ? total : a.best_sparse;
        e.source = dense ? HitSource::dense : HitSource::sparse;
        entries.push_back(std::move(e));
    }

    auto by_frequency = [](const RerankEntry& x, const RerankEntry& y) {
        if (x.frequency != y.frequency) return x.frequency > y.frequency;
        if (x.total_score != y.total_score) return x.total_score > y.total_score;
        return x.node < y.node;
    };
    auto by_score = [](const RerankEntry& x, const RerankEntry& y) {
        if (x.total_score != y.total_score) return x.total_score > y.total_score;
        return x.node < y.node;
    };

    switch (strategy) {
        case RerankStrategy::frequency:
            std::sort(entries.begin(), entries.end(), by_frequency);
            break;
        case RerankStrategy::score:
            std::sort(entries.begin(), entries.end(), by_score);
            break;
        case RerankStrategy::combined: {
            double fmin = std::numeric_limits<double>::infinity();
            double fmax = -std::numeric_limits<double>::infinity();
            double smin = std::numeric_limits<double>::infinity();
            double smax = -std::numeric_limits<double>::infinity();
            for (const auto& e : entries) {
                if (e.source != HitSource::dense) continue;
                fmin = std::min(fmin, static_cast<double>(e.frequency));
                fmax = std::max(fmax, static_cast<double>(e.frequency));
                smin = std::min(smin, e.total_score);
                smax = std::max(smax, e.total_score);
            }
            auto normalize = [](double v, double lo, double hi) {
                if (!(hi > lo)) return 1.0;  // degenerate range
                return (v - lo) / (hi - lo);
            };
            std::map<NodeId, double> composite;
            for (const auto& e : entries) {
                double f_hat = normalize(static_cast<double>(e.frequency), fmin, fmax);
                double s_hat = e.source == HitSource::dense
                                   ? normalize(e.total_score, smin, smax)
                                   : 0.0;
                composite[e.node] = alpha * f_hat + (1.0 - alpha) * s_hat;
            }
            std::sort(entries.begin(), entries.end(),
                      [&](const RerankEntry& x, const RerankEntry& y) {
                          double cx = composite[x.node];
                          double cy = composite[y.node];
                          if (cx != cy) return cx > cy;
                          return x.node < y.node;
                      });
            break;
        }
    }
    return entries;
}

namespace {

std::vector<bool> dedup_keep_mask(const std::vector<NodeId>& ids, DedupMode mode) {
    std::set<NodeId> unique(ids.begin(), ids.end());
    std::set<NodeId> discard;
    if (mode == DedupMode::tree) {
        for (const auto& v : unique) {
            for (const auto& u : unique) {
                if (u != v && is_ancestor(u, v)) {
                    discard.insert(v);
                    break;
                }
            }
        }
    }
    std::vector<bool> keep(ids.size(), false);
    std::set<NodeId> seen;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (discard.count(ids[i])) continue;
        if (!seen.insert(ids[i]).second) continue;
        keep[i] = true;
    }
    return keep;
}

}  // namespace

std::vector<ContextSnippet> dedup_nodes(const std::vector<ContextSnippet>& snippets,
                                        DedupMode mode) {
    std::vector<NodeId> ids;
    ids.reserve(snippets.size());
    for (const auto& s : snippets) ids.push_back(s.node);
    auto keep = dedup_keep_mask(ids, mode);
    std::vector<ContextSnippet> out;
    for (std::size_t i = 0; i < snippets.size(); ++i) {
        if (keep[i]) out.push_back(snippets[i]);
    }
    return out;
}

namespace {

ContextSnippet make_snippet(const IndexEntry& entry, double score) {
    ContextSnippet s;
    s.node = entry.id;
    s.text = entry.content;
    s.score = score;
    s.doc_id = entry.id.doc_label();
    s.is_image = entry.is_image();
    return s;
}

}  // namespace

std::vector<ContextSnippet> expand_context(const std::vector<RetrievalHit>& hits,
                                           const IndexFile& index) {
    std::vector<ContextSnippet> out;
    for (const auto& hit : hits) {
        const IndexEntry& entry = index.entry(hit.node);
        if (entry.level == Level::section || entry.level == Level::document) continue;
        out.push_back(make_snippet(entry, hit.score));
        if (entry.parent) {
            const IndexEntry* parent = index.find(*entry.parent);
            if (parent) out.push_back(make_snippet(*parent, hit.score));
        }
    }
    return out;
}

std::vector<ContextSnippet> retrieve_planned(const std::vector<std::string>& queries,
                                             const std::string& question,
                                             const RetrieverConfig& cfg, int k,
                                             const IndexFile& index, const Bm25Index* bm25,
                                             EncoderClient& enc) {
    SearchFilter filter;
    filter.levels = {Level::sentence, Level::paragraph};
    filter.include_images = cfg.include_images;

    std::vector<std::vector<RetrievalHit>> per_query;
    per_query.reserve(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) {
        Vector qv;
        try {
            qv = enc.embed_query(queries[i]);
        } catch (const Error& e) {
            throw RetrievalFailure(std::string("query embedding failed: ") + e.what());
        }
        auto hits = search(index, qv, k, filter);
        for (auto& h : hits) h.query_index = static_cast<int>(i);
        per_query.push_back(std::move(hits));
    }

    auto ranked = rerank(per_query, cfg.rerank, cfg.alpha);

    // Dedup on the ranked node list before anything else sees it.
    std::vector<NodeId> ids;
    ids.reserve(ranked.size());
    for (const auto& e : ranked) ids.push_back(e.node);
    auto keep = dedup_keep_mask(ids, cfg.dedup);

    std::vector<RetrievalHit> dense_hits;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (!keep[i]) continue;
        dense_hits.push_back(
            RetrievalHit{ranked[i].node, ranked[i].total_score, 0, ranked[i].source});
    }

    std::vector<RetrievalHit> merged = dense_hits;
    if (bm25 && cfg.bm25_topk > 0) {
        int fetch = cfg.bm25_topk + static_cast<int>(dense_hits.size());
        auto sparse_hits = bm25_search(*bm25, question, fetch);
        merged = augment(dense_hits, sparse_hits, cfg.bm25_topk);
    }

    if (cfg.topk_final && merged.size() > static_cast<std::size_t>(*cfg.topk_final)) {
        merged.resize(static_cast<std::size_t>(*cfg.topk_final));
    }

    auto snippets = expand_context(merged, index);
    return dedup_nodes(snippets, DedupMode::by_id);
}

std::vector<ContextSnippet> retrieve(const std::string& question,
                                     const RetrieverConfig& cfg, const IndexFile& index,
                                     const Bm25Index* bm25, EncoderClient& enc,
                                     PlannerClient& llm) {
    std::vector<std::string> queries;
    try {
        queries = plan_queries(question, cfg.n_queries, llm);
    } catch (const Error& e) {
        throw RetrievalFailure(std::string("query planning failed: ") + e.what());
    }
    return retrieve_planned(queries, question, cfg, cfg.topk, index, bm25, enc);
}

}  // namespace treeqa
