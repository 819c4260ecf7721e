#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "treeqa/sparse.hpp"
#include "treeqa/vectorstore.hpp"

namespace treeqa {

/// Aggregate over all hits of one node across the planned queries:
/// frequency counts the queries that retrieved it, total_score sums their
/// similarities.
struct RerankEntry {
    NodeId node;
    int frequency = 0;
    double total_score = 0.0;
    HitSource source = HitSource::dense;
};

/// One context unit headed for the prompt. `score` is carried from the
/// triggering hit (parents inherit the child's); doc_id is the root
/// segment of the node id.
struct ContextSnippet {
    NodeId node;
    std::string text;
    double score = 0.0;
    std::string doc_id;
    bool is_image = false;
};

/// Query planner abstraction. Implementations must return at least one
/// query and fall back to exactly {question} on malformed model output.
class PlannerClient {
  public:
    virtual ~PlannerClient() = default;
    virtual std::vector<std::string> plan(const std::string& question, int n) = 0;
};

enum class RerankStrategy { frequency, score, combined };
enum class DedupMode { by_id, tree };

struct RetrieverConfig {
    int n_queries = 4;
    int topk = 16;
    std::optional<int> topk_final = 32;  // nullopt = no truncation
    RerankStrategy rerank = RerankStrategy::combined;
    double alpha = 0.5;
    DedupMode dedup = DedupMode::by_id;
    int bm25_topk = 0;
    bool include_images = true;
};

/// Asks the planner for up to n query strings; empty strings are dropped,
/// surplus ones truncated. Yields [question] when nothing usable remains.
std::vector<std::string> plan_queries(const std::string& question, int n,
                                      PlannerClient& llm);

/// Cross-query aggregation and ordering. The per-query lists are folded
/// into unique nodes with (frequency, total score); a node occurring twice
/// inside one list counts once, keeping its best score. Orderings:
///   frequency: (f desc, s desc, id asc)
///   score:     (s desc, id asc)
///   combined:  (alpha*f_hat + (1-alpha)*s_hat desc, id asc), where f_hat
///              and s_hat are min-max normalized over the dense candidates;
///              a degenerate range (max == min) normalizes to 1.0.
/// Sparse-only nodes get frequency 1, are excluded from the normalization
/// ranges and use s_hat = 0 in combined mode. Score sums are accumulated
/// over sorted addends, so permuting the input lists cannot change the
/// result.
std::vector<RerankEntry> rerank(const std::vector<std::vector<RetrievalHit>>& results,
                                RerankStrategy strategy, double alpha);

/// by_id keeps the first occurrence of each node id. tree additionally
/// drops every snippet with an ancestor anywhere in the set, then runs the
/// by_id pass. Input order is preserved either way.
std::vector<ContextSnippet> dedup_nodes(const std::vector<ContextSnippet>& snippets,
                                        DedupMode mode);

/// Hierarchical expansion: section- and document-level hits are dropped;
/// each surviving hit contributes itself and its parent (sentence brings
/// its paragraph, paragraph brings its section), child before parent, in
/// hit order. Throws UnknownNode for ids missing from the index.
std::vector<ContextSnippet> expand_context(const std::vector<RetrievalHit>& hits,
                                           const IndexFile& index);

/// Full retrieval pipeline: plan -> per-query dense search over sentence
/// and paragraph levels -> rerank -> dedup -> BM25 augmentation -> top-k
/// final truncation -> context expansion -> final by-id dedup. Client
/// errors surface as RetrievalFailure.
std::vector<ContextSnippet> retrieve(const std::string& question,
                                     const RetrieverConfig& cfg, const IndexFile& index,
                                     const Bm25Index* bm25, EncoderClient& enc,
                                     PlannerClient& llm);

/// Same pipeline with the planning stage already done; the retry loop
/// reuses one plan across attempts and only re-retrieves. `k` overrides
/// cfg.topk for this call.
std::vector<ContextSnippet> retrieve_planned(const std::vector<std::string>& queries,
                                             const std::string& question,
                                             const RetrieverConfig& cfg, int k,
                                             const IndexFile& index, const Bm25Index* bm25,
                                             EncoderClient& enc);

}  // namespace treeqa
