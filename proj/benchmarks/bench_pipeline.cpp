#include <benchmark/benchmark.h>

#include <random>

#include "treeqa/embedder.hpp"
#include "treeqa/retriever.hpp"
#include "treeqa/sparse.hpp"
#include "treeqa/vectorstore.hpp"

using namespace treeqa;

namespace {

const std::vector<std::string>& words() {
    static const std::vector<std::string> w = {
        "power", "usage", "effectiveness", "water", "consumption", "carbon", "footprint",
        "energy", "inference", "training", "model", "datacenter", "cooling", "server"};
    return w;
}

std::string make_text(std::mt19937_64& rng, int tokens) {
    std::uniform_int_distribution<std::size_t> pick(0, words().size() - 1);
    std::string out;
    for (int i = 0; i < tokens; ++i) {
        if (i) out += ' ';
        out += words()[pick(rng)];
    }
    return out;
}

DocumentTree make_tree(std::mt19937_64& rng, const std::string& doc_id, int sections,
                       int paragraphs, int sentences) {
    std::string text;
    for (int s = 0; s < sections; ++s) {
        text += "# heading\n";
        for (int p = 0; p < paragraphs; ++p) {
            for (int t = 0; t < sentences; ++t) {
                text += make_text(rng, 8) + ". ";
            }
            text += "\n\n";
        }
    }
    return parse_plaintext(doc_id, text);
}

IndexFile make_index(std::size_t dim, int docs) {
    std::mt19937_64 rng(7);
    MockEncoder enc(dim, 1);
    std::vector<DocumentTree> trees;
    std::vector<std::map<NodeId, NodeEmbedding>> embeddings;
    for (int d = 0; d < docs; ++d) {
        trees.push_back(make_tree(rng, "doc" + std::to_string(d), 3, 4, 5));
        embeddings.push_back(embed_tree(trees.back(), enc));
    }
    return build_index(trees, embeddings, "");
}

}  // namespace

static void BM_MockEncode(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::string text = make_text(rng, 16);
    for (auto _ : state) {
        benchmark::DoNotOptimize(mock_encode(text, static_cast<std::size_t>(state.range(0)), 42));
    }
}
BENCHMARK(BM_MockEncode)->Arg(8)->Arg(64)->Arg(512);

static void BM_EmbedTree(benchmark::State& state) {
    std::mt19937_64 rng(5);
    DocumentTree tree = make_tree(rng, "doc", static_cast<int>(state.range(0)), 4, 5);
    MockEncoder enc(128, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(embed_tree(tree, enc));
    }
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                            static_cast<int64_t>(tree.size()));
}
BENCHMARK(BM_EmbedTree)->Arg(2)->Arg(8);

static void BM_Search(benchmark::State& state) {
    IndexFile index = make_index(128, static_cast<int>(state.range(0)));
    Vector q = mock_encode("power usage effectiveness", 128, 9);
    for (auto _ : state) {
        benchmark::DoNotOptimize(search(index, q, 16, SearchFilter{}));
    }
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                            static_cast<int64_t>(index.size()));
}
BENCHMARK(BM_Search)->Arg(4)->Arg(16)->Arg(64);

static void BM_Bm25Search(benchmark::State& state) {
    IndexFile index = make_index(16, static_cast<int>(state.range(0)));
    Bm25Index bm25 = build_bm25(index, TokenizerConfig{});
    for (auto _ : state) {
        benchmark::DoNotOptimize(bm25_search(bm25, "power usage effectiveness water", 8));
    }
}
BENCHMARK(BM_Bm25Search)->Arg(4)->Arg(16)->Arg(64);

static void BM_Rerank(benchmark::State& state) {
    std::mt19937_64 rng(11);
    IndexFile index = make_index(32, 8);
    MockEncoder enc(32, 1);
    std::vector<std::vector<RetrievalHit>> per_query;
    for (int q = 0; q < static_cast<int>(state.range(0)); ++q) {
        per_query.push_back(
            search(index, enc.embed_query(make_text(rng, 4)), 16, SearchFilter{}));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(rerank(per_query, RerankStrategy::combined, 0.5));
    }
}
BENCHMARK(BM_Rerank)->Arg(2)->Arg(4)->Arg(8);

static void BM_TreeDedup(benchmark::State& state) {
    std::mt19937_64 rng(13);
    IndexFile index = make_index(16, 4);
    MockEncoder enc(16, 1);
    std::vector<ContextSnippet> snippets;
    for (int q = 0; q < 4; ++q) {
        auto hits = search(index, enc.embed_query(make_text(rng, 4)),
                           static_cast<int>(state.range(0)), SearchFilter{});
        for (const auto& hit : hits) {
            const IndexEntry& e = index.entry(hit.node);
            ContextSnippet s;
            s.node = e.id;
            s.text = e.content;
            s.doc_id = e.id.doc_label();
            snippets.push_back(std::move(s));
        }
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(dedup_nodes(snippets, DedupMode::tree));
    }
}
BENCHMARK(BM_TreeDedup)->Arg(8)->Arg(32);

BENCHMARK_MAIN();
