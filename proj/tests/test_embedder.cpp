#include <doctest.h>

#include <cmath>
#include <random>

#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "treeqa/embedder.hpp"

using namespace treeqa;

TEST_CASE("token_count") {
    CHECK(token_count("one two three") == 3);
    CHECK(token_count("") == 0);
    CHECK(token_count("  a   b ") == 2);
    CHECK(token_count("\tx\n") == 1);
}

TEST_CASE("mock_encode: deterministic unit vectors") {
    Vector a = mock_encode("power usage", 16, 3);
    Vector b = mock_encode("power usage", 16, 3);
    CHECK(a.values == b.values);
    CHECK(cosine(a, b) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(norm(a) == doctest::Approx(1.0).epsilon(1e-12));

    // token order is irrelevant
    Vector c = mock_encode("usage power", 16, 3);
    CHECK(a.values == c.values);

    // different seeds move the vector
    Vector d = mock_encode("power usage", 16, 4);
    CHECK(a.values != d.values);

    CHECK(norm(mock_encode("", 16, 3)) == 0.0);
}

TEST_CASE("mock_encode: token overlap raises cosine similarity (statistically)") {
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Vector base = mock_encode("power usage", 32, seed);
        Vector overlapping = mock_encode("power usage effectiveness", 32, seed);
        Vector disjoint = mock_encode("water consumption", 32, seed);
        if (cosine(base, overlapping) > cosine(base, disjoint)) ++wins;
    }
    CHECK(wins > 50);
}

TEST_CASE("weighted_mean fixtures") {
    Vector e1{{1.0, 0.0}};
    Vector e2{{0.0, 1.0}};
    SUBCASE("symmetric weights") {
        Vector m = weighted_mean({e1, e2}, {2.0, 2.0});
        CHECK(m.values[0] == doctest::Approx(0.5));
        CHECK(m.values[1] == doctest::Approx(0.5));
    }
    SUBCASE("3:1 weights") {
        Vector m = weighted_mean({e1, e2}, {3.0, 1.0});
        CHECK(m.values[0] == doctest::Approx(0.75));
        CHECK(m.values[1] == doctest::Approx(0.25));
    }
    SUBCASE("single child is the identity") {
        Vector m = weighted_mean({e1}, {5.0});
        CHECK(m.values == e1.values);
    }
    SUBCASE("zero-weight children are excluded") {
        Vector m = weighted_mean({e1, e2}, {0.0, 1.0});
        CHECK(m.values == e2.values);
    }
    SUBCASE("all zero weights fail") {
        CHECK_THROWS_AS(weighted_mean({e1, e2}, {0.0, 0.0}), ZeroWeightParent);
    }
    SUBCASE("power-of-two weight scaling is exact") {
        Vector m1 = weighted_mean({e1, e2}, {3.0, 1.0});
        Vector m2 = weighted_mean({e1, e2}, {12.0, 4.0});
        CHECK(m1.values == m2.values);
    }
    SUBCASE("general positive scaling agrees within tolerance") {
        Vector m1 = weighted_mean({e1, e2}, {3.0, 1.0});
        Vector m2 = weighted_mean({e1, e2}, {3.0 * 1.7, 1.0 * 1.7});
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(m1.values[i] == doctest::Approx(m2.values[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("embed_tree: single-child paragraph equals the child vector") {
    DocumentTree tree = parse_plaintext("d", "Hello world today.");
    MockEncoder enc(8, 1);
    auto embeddings = embed_tree(tree, enc);
    const auto& sentence = embeddings.at(NodeId{"d:sec0:p0:s0"});
    const auto& paragraph = embeddings.at(NodeId{"d:sec0:p0"});
    CHECK(sentence.vector.values == paragraph.vector.values);
    CHECK(sentence.weight == 3);
}

TEST_CASE("embed_tree: every node is embedded, leaves match the encoder") {
    std::mt19937_64 rng(23);
    DocumentTree tree = gen::random_tree(rng, "doc0");
    MockEncoder enc(8, 5);
    auto embeddings = embed_tree(tree, enc);
    CHECK(embeddings.size() == tree.size());
    for (const auto& id : tree.leaves()) {
        Vector direct = mock_encode(tree.node(id).content, 8, 5);
        CHECK(embeddings.at(id).vector.values == direct.values);
    }
}

TEST_CASE("embed_tree: matches the descendant-leaf weighted-mean oracle") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 200; ++trial) {
        std::uniform_int_distribution<std::size_t> dim_pick(2, 16);
        std::size_t dim = dim_pick(rng);
        DocumentTree tree = gen::random_tree(rng, "doc" + std::to_string(trial), 50);
        MockEncoder enc(dim, static_cast<std::uint64_t>(trial));
        auto embeddings = embed_tree(tree, enc);

        std::map<NodeId, Vector> leaf_vecs;
        for (const auto& id : tree.leaves()) {
            leaf_vecs[id] = mock_encode(tree.node(id).content, dim, trial);
        }
        for (const auto& [id, node] : tree.nodes) {
            if (node.children.empty()) continue;
            Vector expected = oracles::descendant_leaf_mean(tree, id, leaf_vecs, dim);
            const Vector& actual = embeddings.at(id).vector;
            for (std::size_t d = 0; d < dim; ++d) {
                CHECK(std::abs(actual.values[d] - expected.values[d]) < 1e-9);
            }
        }
    }
}

TEST_CASE("embed_tree: convexity, sibling permutation, zero-weight error") {
    std::mt19937_64 rng(77);
    DocumentTree tree = gen::random_tree(rng, "doc0");
    MockEncoder enc(6, 9);
    auto embeddings = embed_tree(tree, enc);

    SUBCASE("internal vectors stay in the children's componentwise hull") {
        for (const auto& [id, node] : tree.nodes) {
            if (node.children.empty()) continue;
            for (std::size_t d = 0; d < 6; ++d) {
                double lo = 1e30;
                double hi = -1e30;
                for (const auto& c : node.children) {
                    if (embeddings.at(c).weight == 0) continue;
                    lo = std::min(lo, embeddings.at(c).vector.values[d]);
                    hi = std::max(hi, embeddings.at(c).vector.values[d]);
                }
                CHECK(embeddings.at(id).vector.values[d] >= lo - 1e-12);
                CHECK(embeddings.at(id).vector.values[d] <= hi + 1e-12);
            }
        }
    }

    SUBCASE("permuting sibling order changes nothing") {
        DocumentTree shuffled = tree;
        for (auto& [id, node] : shuffled.nodes) {
            std::reverse(node.children.begin(), node.children.end());
        }
        auto reshuffled = embed_tree(shuffled, enc);
        for (const auto& [id, emb] : embeddings) {
            CHECK(reshuffled.at(id).vector.values == emb.vector.values);
        }
    }

    SUBCASE("a parent whose children are all empty fails") {
        DocumentTree bad = parse_plaintext("d", "Hello.");
        bad.nodes.at(NodeId{"d:sec0:p0:s0"}).content = "   ";
        CHECK_THROWS_AS(embed_tree(bad, enc), ZeroWeightParent);
    }
}
