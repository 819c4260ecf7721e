#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "treeqa/doctree.hpp"
#include "treeqa/embedder.hpp"

namespace treeqa {

enum class HitSource { dense, sparse };

/// One retrieval result flowing through reranking and dedup. Dense hits
/// carry cosine similarity, sparse hits raw BM25 scores (never mixed on
/// one scale).
struct RetrievalHit {
    NodeId node;
    double score = 0.0;
    int query_index = 0;
    HitSource source = HitSource::dense;
};

struct SearchFilter {
    std::set<Level> levels = {Level::sentence, Level::paragraph};
    bool include_images = true;
};

struct IndexHeader {
    std::size_t dim = 0;
    std::string tokenizer_id = "whitespace";
    std::string encoder_id;
    int version = 1;
};

struct IndexEntry {
    NodeId id;
    Level level = Level::document;
    std::string content;
    std::optional<NodeId> parent;
    std::map<std::string, std::string> metadata;

    bool is_image() const {
        auto it = metadata.find("attachment_type");
        return it != metadata.end() && it->second == "image";
    }
};

/// In-memory form of a .kindex file: node table plus a parallel float32
/// vector table, both sorted by node id. The optional sparse-postings
/// section travels as an opaque blob (serialized/parsed by the sparse
/// module) so the whole index stays a single self-describing file.
struct IndexFile {
    IndexHeader header;
    std::vector<IndexEntry> nodes;
    std::vector<std::vector<float>> vectors;
    std::string bm25_blob;

    const IndexEntry* find(const NodeId& id) const;
    const IndexEntry& entry(const NodeId& id) const;  // throws UnknownNode
    std::size_t size() const { return nodes.size(); }

    void rebuild_lookup();

  private:
    std::unordered_map<std::string, std::size_t> lookup_;
};

/// Merges trees and their embedding maps into one index and writes it to
/// `path` (empty path skips the write). Vectors are narrowed to float32
/// here so in-memory and reopened searches see identical data. Throws
/// DimMismatch on inconsistent dims and DuplicateNodeId on id collisions
/// across trees.
IndexFile build_index(const std::vector<DocumentTree>& trees,
                      const std::vector<std::map<NodeId, NodeEmbedding>>& embeddings,
                      const std::string& path);

void save_index(const IndexFile& index, const std::string& path);
IndexFile load_index(const std::string& path);

/// Exact full-scan cosine top-k restricted to filter.levels. Results are
/// sorted by similarity descending, ties broken by node id ascending.
/// Zero-norm vectors (either side) score 0. Throws DimMismatch when the
/// query dimension differs from the index.
std::vector<RetrievalHit> search(const IndexFile& index, const Vector& query_vec, int k,
                                 const SearchFilter& filter);

}  // namespace treeqa
