#include "treeqa/embedder.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace treeqa {

double dot(const Vector& a, const Vector& b) {
    double sum = 0.0;
    std::size_t n = std::min(a.values.size(), b.values.size());
    for (std::size_t i = 0; i < n; ++i) sum += a.values[i] * b.values[i];
    return sum;
}

double norm(const Vector& a) { return std::sqrt(dot(a, a)); }

double cosine(const Vector& a, const Vector& b) {
    double na = norm(a);
    double nb = norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

std::size_t token_count(const std::string& text) {
    std::size_t count = 0;
    bool in_token = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
    }
    return count;
}

std::uint64_t stable_hash(const std::string& text, std::uint64_t seed) {
    // FNV-1a with a splitmix64 finalizer mixing in the seed.
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::uint64_t z = h ^ (seed + 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Vector mock_encode(const std::string& text, std::size_t dim, std::uint64_t seed) {
    std::vector<std::string> tokens;
    std::istringstream stream(text);
    std::string tok;
    while (stream >> tok) tokens.push_back(tok);
    std::sort(tokens.begin(), tokens.end());

    Vector out;
    out.values.assign(dim, 0.0);
    for (const auto& t : tokens) {
        std::uint64_t h = stable_hash(t, seed);
        std::size_t idx = static_cast<std::size_t>(h % dim);
        double sign = (h >> 63) ? -1.0 : 1.0;
        out.values[idx] += sign;
    }
    double n = norm(out);
    if (n > 0.0) {
        for (double& v : out.values) v /= n;
    }
    return out;
}

std::vector<Vector> MockEncoder::embed_passages(const std::vector<std::string>& texts) {
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(mock_encode(t, dim_, seed_));
    return out;
}

Vector MockEncoder::embed_query(const std::string& text) {
    return mock_encode(text, dim_, seed_);
}

std::string MockEncoder::descriptor() const {
    return "mock(dim=" + std::to_string(dim_) + ",seed=" + std::to_string(seed_) + ")";
}

Vector weighted_mean(const std::vector<Vector>& vectors,
                     const std::vector<double>& weights) {
    if (vectors.empty()) throw ZeroWeightParent("weighted mean over empty child set");
    Vector acc;
    acc.values.assign(vectors.front().dim(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        for (std::size_t d = 0; d < acc.values.size(); ++d) {
            acc.values[d] += weights[i] * vectors[i].values[d];
        }
        total += weights[i];
    }
    if (total <= 0.0) throw ZeroWeightParent("all children have zero weight");
    for (double& v : acc.values) v /= total;
    return acc;
}

std::map<NodeId, NodeEmbedding> embed_tree(const DocumentTree& tree, EncoderClient& enc) {
    std::map<NodeId, NodeEmbedding> out;

    // Leaves first, batched in sorted-id order.
    std::vector<NodeId> leaf_ids = tree.leaves();
    std::sort(leaf_ids.begin(), leaf_ids.end());
    std::vector<std::string> texts;
    texts.reserve(leaf_ids.size());
    for (const auto& id : leaf_ids) texts.push_back(tree.node(id).content);
    std::vector<Vector> leaf_vecs = enc.embed_passages(texts);
    if (leaf_vecs.size() != leaf_ids.size()) {
        throw ClientFailure("encoder returned wrong vector count");
    }
    for (std::size_t i = 0; i < leaf_ids.size(); ++i) {
        const DocNode& node = tree.node(leaf_ids[i]);
        out[leaf_ids[i]] = NodeEmbedding{leaf_ids[i], std::move(leaf_vecs[i]),
                                         token_count(node.content)};
    }

    for (Level level : {Level::paragraph, Level::section, Level::document}) {
        for (const auto& id : tree.at_level(level)) {
            if (out.count(id)) continue;  // leaf at this level, already embedded
            const DocNode& node = tree.node(id);
            std::vector<NodeId> child_ids = node.children;
            std::sort(child_ids.begin(), child_ids.end());
            std::vector<Vector> vecs;
            std::vector<double> weights;
            for (const auto& cid : child_ids) {
                const NodeEmbedding& child = out.at(cid);
                vecs.push_back(child.vector);
                weights.push_back(static_cast<double>(child.weight));
            }
            Vector mean;
            try {
                mean = weighted_mean(vecs, weights);
            } catch (const ZeroWeightParent&) {
                throw ZeroWeightParent("all children of " + id.value + " have zero weight");
            }
            out[id] = NodeEmbedding{id, std::move(mean), token_count(node.content)};
        }
    }
    return out;
}

}  // namespace treeqa
