#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "treeqa/doctree.hpp"

namespace treeqa {

/// Fixed-dimension dense vector. Propagation runs in double precision;
/// the on-disk index narrows to float32.
struct Vector {
    std::vector<double> values;

    Vector() = default;
    explicit Vector(std::vector<double> v) : values(std::move(v)) {}
    std::size_t dim() const { return values.size(); }
};

double dot(const Vector& a, const Vector& b);
double norm(const Vector& a);
/// Cosine similarity; zero-norm operands score 0.
double cosine(const Vector& a, const Vector& b);

struct NodeEmbedding {
    NodeId node;
    Vector vector;
    std::size_t weight = 0;  // whitespace token count of the node's content
};

/// Text encoder abstraction. Implementations: MockEncoder (below) and
/// HttpEncoderClient (clients.hpp).
class EncoderClient {
  public:
    virtual ~EncoderClient() = default;
    virtual std::vector<Vector> embed_passages(const std::vector<std::string>& texts) = 0;
    virtual Vector embed_query(const std::string& text) = 0;
    virtual std::size_t dim() const = 0;
    /// Self-description persisted into index headers, e.g. "mock(dim=64,seed=7)".
    virtual std::string descriptor() const = 0;
};

/// Number of whitespace-delimited tokens after trimming.
std::size_t token_count(const std::string& text);

/// Deterministic offline encoder: each token hashes to a signed basis
/// contribution; contributions are summed over the sorted token multiset
/// and L2-normalized. Same text always maps to the same unit vector, and
/// texts sharing more tokens land closer in cosine space. Empty text maps
/// to the zero vector.
Vector mock_encode(const std::string& text, std::size_t dim, std::uint64_t seed);

class MockEncoder : public EncoderClient {
  public:
    MockEncoder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {}

    std::vector<Vector> embed_passages(const std::vector<std::string>& texts) override;
    Vector embed_query(const std::string& text) override;
    std::size_t dim() const override { return dim_; }
    std::string descriptor() const override;

    std::uint64_t seed() const { return seed_; }

  private:
    std::size_t dim_;
    std::uint64_t seed_;
};

/// Token-count-weighted mean of child vectors. Zero-weight entries are
/// skipped; accumulation follows the given order.
Vector weighted_mean(const std::vector<Vector>& vectors,
                     const std::vector<double>& weights);

/// Bottom-up propagation: leaves (sentences and image paragraphs) are
/// encoded in one sorted-id batch, then internal vectors are computed
/// level by level (paragraph, section, document) as the token-count-
/// weighted mean of child vectors. Children are folded in sorted-id order
/// so sibling reordering cannot perturb the result. Children with zero
/// weight are excluded; an internal node whose children all weigh zero
/// raises ZeroWeightParent.
std::map<NodeId, NodeEmbedding> embed_tree(const DocumentTree& tree, EncoderClient& enc);

/// Seeded 64-bit string hash used by the mock encoder and seed expansion;
/// stable across platforms.
std::uint64_t stable_hash(const std::string& text, std::uint64_t seed);

}  // namespace treeqa
