#include "treeqa/vectorstore.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace treeqa {

using nlohmann::json;

const IndexEntry* IndexFile::find(const NodeId& id) const {
    auto it = lookup_.find(id.value);
    if (it == lookup_.end()) return nullptr;
    return &nodes[it->second];
}

const IndexEntry& IndexFile::entry(const NodeId& id) const {
    const IndexEntry* e = find(id);
    if (!e) throw UnknownNode("node not in index: " + id.value);
    return *e;
}

void IndexFile::rebuild_lookup() {
    lookup_.clear();
    lookup_.reserve(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) lookup_[nodes[i].id.value] = i;
}

IndexFile build_index(const std::vector<DocumentTree>& trees,
                      const std::vector<std::map<NodeId, NodeEmbedding>>& embeddings,
                      const std::string& path) {
    if (trees.size() != embeddings.size()) {
        throw DimMismatch("one embedding map required per tree");
    }

    IndexFile index;
    std::size_t dim = 0;
    std::vector<std::pair<NodeId, std::size_t>> order;  // id -> (tree, handled below)

    struct Row {
        IndexEntry entry;
        std::vector<float> vec;
    };
    std::map<NodeId, Row> rows;

    for (std::size_t t = 0; t < trees.size(); ++t) {
        for (const auto& [id, node] : trees[t].nodes) {
            auto eit = embeddings[t].find(id);
            if (eit == embeddings[t].end()) {
                throw DimMismatch("missing embedding for node " + id.value);
            }
            const Vector& v = eit->second.vector;
            if (dim == 0) dim = v.dim();
            if (v.dim() != dim) {
                throw DimMismatch("embedding dim mismatch at " + id.value);
            }
            Row row;
            row.entry = IndexEntry{id, node.level, node.content, node.parent, node.metadata};
            row.vec.reserve(dim);
            for (double x : v.values) row.vec.push_back(static_cast<float>(x));
            if (!rows.emplace(id, std::move(row)).second) {
                throw DuplicateNodeId("node id appears in more than one tree: " + id.value);
            }
        }
    }
    if (rows.empty()) throw EmptyCorpus("no nodes to index");

    index.header.dim = dim;
    for (auto& [id, row] : rows) {
        index.nodes.push_back(std::move(row.entry));
        index.vectors.push_back(std::move(row.vec));
    }
    index.rebuild_lookup();
    if (!path.empty()) save_index(index, path);
    return index;
}

namespace {

constexpr const char* kMagic = "TREEQA-KINDEX 1";

void write_f32_le(std::ostream& out, float value) {
    std::uint32_t bits;
    std::memcpy(&bits, &value, sizeof(bits));
    char bytes[4] = {
        static_cast<char>(bits & 0xff),
        static_cast<char>((bits >> 8) & 0xff),
        static_cast<char>((bits >> 16) & 0xff),
        static_cast<char>((bits >> 24) & 0xff),
    };
    out.write(bytes, 4);
}

float read_f32_le(std::istream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    std::uint32_t bits = static_cast<std::uint32_t>(bytes[0]) |
                         (static_cast<std::uint32_t>(bytes[1]) << 8) |
                         (static_cast<std::uint32_t>(bytes[2]) << 16) |
                         (static_cast<std::uint32_t>(bytes[3]) << 24);
    float value;
    std::memcpy(&value, &bits, sizeof(value));
    return value;
}

json entry_to_json(const IndexEntry& e) {
    json j;
    j["id"] = e.id.value;
    j["level"] = level_name(e.level);
    j["content"] = e.content;
    j["parent"] = e.parent ? json(e.parent->value) : json(nullptr);
    j["metadata"] = json::object();
    for (const auto& [k, v] : e.metadata) j["metadata"][k] = v;
    return j;
}

IndexEntry entry_from_json(const json& j) {
    IndexEntry e;
    e.id = NodeId{j.at("id").get<std::string>()};
    auto level = level_from_name(j.at("level").get<std::string>());
    if (!level) throw SchemaError("bad level in index row");
    e.level = *level;
    e.content = j.at("content").get<std::string>();
    if (!j.at("parent").is_null()) e.parent = NodeId{j.at("parent").get<std::string>()};
    for (const auto& [k, v] : j.at("metadata").items()) e.metadata[k] = v.get<std::string>();
    return e;
}

}  // namespace

void save_index(const IndexFile& index, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot write index file: " + path);

    out << kMagic << "\n";
    out << "dim=" << index.header.dim << "\n";
    out << "tokenizer=" << index.header.tokenizer_id << "\n";
    out << "encoder=" << index.header.encoder_id << "\n";
    out << "nodes=" << index.nodes.size() << "\n";
    out << "bm25_bytes=" << index.bm25_blob.size() << "\n";
    out << "---\n";
    for (const auto& e : index.nodes) out << entry_to_json(e).dump() << "\n";
    out << "---VEC---\n";
    for (const auto& vec : index.vectors) {
        for (float x : vec) write_f32_le(out, x);
    }
    if (!index.bm25_blob.empty()) {
        out << "\n---BM25---\n" << index.bm25_blob;
    }
    if (!out) throw IoFailure("write failed: " + path);
}

IndexFile load_index(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open index file: " + path);

    auto read_line = [&]() {
        std::string line;
        if (!std::getline(in, line)) throw SchemaError("truncated index header: " + path);
        return line;
    };
    auto header_value = [&](const std::string& line, const std::string& key) {
        if (line.rfind(key + "=", 0) != 0) {
            throw SchemaError("expected header field " + key + " in " + path);
        }
        return line.substr(key.size() + 1);
    };

    if (read_line() != kMagic) throw SchemaError("not an index file: " + path);
    IndexFile index;
    index.header.dim = std::stoul(header_value(read_line(), "dim"));
    index.header.tokenizer_id = header_value(read_line(), "tokenizer");
    index.header.encoder_id = header_value(read_line(), "encoder");
    std::size_t node_count = std::stoul(header_value(read_line(), "nodes"));
    std::size_t bm25_bytes = std::stoul(header_value(read_line(), "bm25_bytes"));
    if (read_line() != "---") throw SchemaError("missing node section in " + path);

    index.nodes.reserve(node_count);
    for (std::size_t i = 0; i < node_count; ++i) {
        std::string line = read_line();
        try {
            index.nodes.push_back(entry_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw SchemaError(std::string("bad index row: ") + e.what());
        }
    }
    if (read_line() != "---VEC---") throw SchemaError("missing vector section in " + path);
    index.vectors.assign(node_count, {});
    for (std::size_t i = 0; i < node_count; ++i) {
        index.vectors[i].resize(index.header.dim);
        for (std::size_t d = 0; d < index.header.dim; ++d) {
            index.vectors[i][d] = read_f32_le(in);
        }
    }
    if (!in) throw SchemaError("truncated vector section in " + path);
    if (bm25_bytes > 0) {
        if (read_line() != "" || read_line() != "---BM25---") {
            throw SchemaError("missing sparse section in " + path);
        }
        index.bm25_blob.resize(bm25_bytes);
        in.read(index.bm25_blob.data(), static_cast<std::streamsize>(bm25_bytes));
        if (!in) throw SchemaError("truncated sparse section in " + path);
    }
    index.rebuild_lookup();
    return index;
}

std::vector<RetrievalHit> search(const IndexFile& index, const Vector& query_vec, int k,
                                 const SearchFilter& filter) {
    if (query_vec.dim() != index.header.dim) {
        throw DimMismatch("query dim " + std::to_string(query_vec.dim()) +
                          " does not match index dim " +
                          std::to_string(index.header.dim));
    }
    if (k < 1) throw ConfigError("search requires k >= 1");
    if (filter.levels.empty()) throw ConfigError("search filter has no levels");

    double qnorm = 0.0;
    for (double v : query_vec.values) qnorm += v * v;
    qnorm = std::sqrt(qnorm);

    std::vector<RetrievalHit> hits;
    for (std::size_t i = 0; i < index.nodes.size(); ++i) {
        const IndexEntry& e = index.nodes[i];
        if (!filter.levels.count(e.level)) continue;
        if (!filter.include_images && e.is_image()) continue;
        double dot = 0.0;
        double vnorm = 0.0;
        const auto& vec = index.vectors[i];
        for (std::size_t d = 0; d < vec.size(); ++d) {
            dot += query_vec.values[d] * static_cast<double>(vec[d]);
            vnorm += static_cast<double>(vec[d]) * static_cast<double>(vec[d]);
        }
        vnorm = std::sqrt(vnorm);
        double score = (qnorm == 0.0 || vnorm == 0.0) ? 0.0 : dot / (qnorm * vnorm);
        hits.push_back(RetrievalHit{e.id, score, 0, HitSource::dense});
    }
    std::sort(hits.begin(), hits.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.node < b.node;
    });
    if (hits.size() > static_cast<std::size_t>(k)) hits.resize(static_cast<std::size_t>(k));
    return hits;
}

}  // namespace treeqa
