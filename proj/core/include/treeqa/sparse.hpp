#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "treeqa/vectorstore.hpp"

namespace treeqa {

/// Tokenization for the sparse index: alphanumeric runs, lowercased when
/// the flag is set, with the stopword set applied after lowercasing.
struct TokenizerConfig {
    bool lowercase = true;
    std::set<std::string> stopwords;

    TokenizerConfig();
    std::vector<std::string> tokenize(const std::string& text) const;
};

/// Built-in English stopword list (~120 words).
const std::set<std::string>& builtin_stopwords();

struct Posting {
    NodeId node;
    int tf = 0;
};

/// Okapi BM25 inverted index over paragraph-level nodes. IDF uses the
/// non-negative variant ln((N - n_t + 0.5)/(n_t + 0.5) + 1).
struct Bm25Index {
    std::map<std::string, std::vector<Posting>> postings;
    std::map<NodeId, int> doc_lengths;
    double avgdl = 0.0;
    std::size_t paragraph_count = 0;
    double k1 = 1.5;
    double b = 0.75;
    TokenizerConfig tokenizer;
};

/// Indexes every paragraph-level node of `index`, image captions included.
/// Throws EmptyCorpus when no paragraph yields a non-stopword token.
Bm25Index build_bm25(const IndexFile& index, const TokenizerConfig& tok,
                     double k1 = 1.5, double b = 0.75);

/// Same, over in-memory trees (used by tests and the indexing pipeline
/// before the node table exists).
Bm25Index build_bm25(const std::vector<DocumentTree>& trees, const TokenizerConfig& tok,
                     double k1 = 1.5, double b = 0.75);

/// Top-k paragraphs by BM25 score, ties broken by node id ascending.
/// Paragraphs matching no query term are excluded. Hits are marked
/// HitSource::sparse; their scores live on the BM25 scale.
std::vector<RetrievalHit> bm25_search(const Bm25Index& idx, const std::string& query, int k);

/// Appends up to k_bm25 sparse hits whose node ids are absent from the
/// dense list; dense order is never changed.
std::vector<RetrievalHit> augment(const std::vector<RetrievalHit>& dense,
                                  const std::vector<RetrievalHit>& sparse, int k_bm25);

/// Postings-section codec for embedding the sparse index inside a .kindex
/// file.
std::string serialize_bm25(const Bm25Index& idx);
Bm25Index parse_bm25(const std::string& blob);

}  // namespace treeqa
