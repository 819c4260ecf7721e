#include "treeqa/sparse.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace treeqa {

const std::set<std::string>& builtin_stopwords() {
    static const std::set<std::string> words = {
        "a", "about", "above", "after", "again", "against", "all", "am", "an", "and",
        "any", "are", "as", "at", "be", "because", "been", "before", "being", "below",
        "between", "both", "but", "by", "can", "did", "do", "does", "doing", "down",
        "during", "each", "few", "for", "from", "further", "had", "has", "have",
        "having", "he", "her", "here", "hers", "herself", "him", "himself", "his",
        "how", "i", "if", "in", "into", "is", "it", "its", "itself", "just", "me",
        "more", "most", "my", "myself", "no", "nor", "not", "now", "of", "off", "on",
        "once", "only", "or", "other", "our", "ours", "ourselves", "out", "over",
        "own", "same", "she", "should", "so", "some", "such", "than", "that", "the",
        "their", "theirs", "them", "themselves", "then", "there", "these", "they",
        "this", "those", "through", "to", "too", "under", "until", "up", "very",
        "was", "we", "were", "what", "when", "where", "which", "while", "who",
        "whom", "why", "will", "with", "you", "your", "yours", "yourself",
        "yourselves",
    };
    return words;
}

TokenizerConfig::TokenizerConfig() : stopwords(builtin_stopwords()) {}

std::vector<std::string> TokenizerConfig::tokenize(const std::string& text) const {
    std::vector<std::string> out;
    std::string current;
    auto flush = [&]() {
        if (current.empty()) return;
        if (!stopwords.count(current)) out.push_back(current);
        current.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            current.push_back(lowercase ? static_cast<char>(std::tolower(c))
                                        : static_cast<char>(c));
        } else {
            flush();
        }
    }
    flush();
    return out;
}

namespace {

Bm25Index build_from_paragraphs(const std::vector<std::pair<NodeId, std::string>>& paragraphs,
                                const TokenizerConfig& tok, double k1, double b) {
    Bm25Index idx;
    idx.k1 = k1;
    idx.b = b;
    idx.tokenizer = tok;

    long total_len = 0;
    for (const auto& [id, content] : paragraphs) {
        auto tokens = tok.tokenize(content);
        if (tokens.empty()) continue;
        std::map<std::string, int> tf;
        for (const auto& t : tokens) ++tf[t];
        for (const auto& [term, count] : tf) {
            idx.postings[term].push_back(Posting{id, count});
        }
        idx.doc_lengths[id] = static_cast<int>(tokens.size());
        total_len += static_cast<long>(tokens.size());
    }
    if (idx.doc_lengths.empty()) {
        throw EmptyCorpus("no paragraph with a non-stopword token");
    }
    idx.paragraph_count = idx.doc_lengths.size();
    idx.avgdl = static_cast<double>(total_len) / static_cast<double>(idx.paragraph_count);
    return idx;
}

}  // namespace

Bm25Index build_bm25(const IndexFile& index, const TokenizerConfig& tok, double k1,
                     double b) {
    std::vector<std::pair<NodeId, std::string>> paragraphs;
    for (const auto& e : index.nodes) {
        if (e.level == Level::paragraph) paragraphs.emplace_back(e.id, e.content);
    }
    return build_from_paragraphs(paragraphs, tok, k1, b);
}

Bm25Index build_bm25(const std::vector<DocumentTree>& trees, const TokenizerConfig& tok,
                     double k1, double b) {
    std::vector<std::pair<NodeId, std::string>> paragraphs;
    for (const auto& tree : trees) {
        for (const auto& [id, node] : tree.nodes) {
            if (node.level == Level::paragraph) paragraphs.emplace_back(id, node.content);
        }
    }
    return build_from_paragraphs(paragraphs, tok, k1, b);
}

std::vector<RetrievalHit> bm25_search(const Bm25Index& idx, const std::string& query, int k) {
    if (k < 1) throw ConfigError("bm25_search requires k >= 1");
    auto terms = idx.tokenizer.tokenize(query);
    // Repeated query terms contribute once per unique term.
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());

    std::map<NodeId, double> scores;
    double n = static_cast<double>(idx.paragraph_count);
    for (const auto& term : terms) {
        auto it = idx.postings.find(term);
        if (it == idx.postings.end()) continue;
        double df = static_cast<double>(it->second.size());
        double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
        for (const auto& posting : it->second) {
            double dl = static_cast<double>(idx.doc_lengths.at(posting.node));
            double tf = static_cast<double>(posting.tf);
            double denom = tf + idx.k1 * (1.0 - idx.b + idx.b * dl / idx.avgdl);
            scores[posting.node] += idf * tf * (idx.k1 + 1.0) / denom;
        }
    }

    std::vector<RetrievalHit> hits;
    hits.reserve(scores.size());
    for (const auto& [id, score] : scores) {
        if (score > 0.0) hits.push_back(RetrievalHit{id, score, 0, HitSource::sparse});
    }
    std::sort(hits.begin(), hits.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.node < b.node;
    });
    if (hits.size() > static_cast<std::size_t>(k)) hits.resize(static_cast<std::size_t>(k));
    return hits;
}

std::vector<RetrievalHit> augment(const std::vector<RetrievalHit>& dense,
                                  const std::vector<RetrievalHit>& sparse, int k_bm25) {
    std::vector<RetrievalHit> out = dense;
    if (k_bm25 <= 0) return out;
    std::unordered_set<std::string> seen;
    for (const auto& hit : dense) seen.insert(hit.node.value);
    int added = 0;
    for (const auto& hit : sparse) {
        if (added >= k_bm25) break;
        if (!seen.insert(hit.node.value).second) continue;
        RetrievalHit marked = hit;
        marked.source = HitSource::sparse;
        out.push_back(marked);
        ++added;
    }
    return out;
}

std::string serialize_bm25(const Bm25Index& idx) {
    std::ostringstream out;
    out.precision(17);
    out << "k1=" << idx.k1 << "\n";
    out << "b=" << idx.b << "\n";
    out << "lowercase=" << (idx.tokenizer.lowercase ? 1 : 0) << "\n";
    out << "stopwords=" << idx.tokenizer.stopwords.size() << "\n";
    for (const auto& w : idx.tokenizer.stopwords) out << w << "\n";
    out << "doc_lengths=" << idx.doc_lengths.size() << "\n";
    for (const auto& [id, len] : idx.doc_lengths) out << id.value << "\t" << len << "\n";
    out << "terms=" << idx.postings.size() << "\n";
    for (const auto& [term, postings] : idx.postings) {
        out << term << "\t";
        for (std::size_t i = 0; i < postings.size(); ++i) {
            if (i) out << " ";
            out << postings[i].node.value << ":" << postings[i].tf;
        }
        out << "\n";
    }
    return out.str();
}

Bm25Index parse_bm25(const std::string& blob) {
    std::istringstream in(blob);
    auto read_line = [&]() {
        std::string line;
        if (!std::getline(in, line)) throw SchemaError("truncated sparse section");
        return line;
    };
    auto field = [&](const std::string& line, const std::string& key) {
        if (line.rfind(key + "=", 0) != 0) {
            throw SchemaError("expected sparse field " + key);
        }
        return line.substr(key.size() + 1);
    };

    Bm25Index idx;
    idx.k1 = std::stod(field(read_line(), "k1"));
    idx.b = std::stod(field(read_line(), "b"));
    idx.tokenizer.lowercase = field(read_line(), "lowercase") == "1";
    std::size_t n_stop = std::stoul(field(read_line(), "stopwords"));
    idx.tokenizer.stopwords.clear();
    for (std::size_t i = 0; i < n_stop; ++i) idx.tokenizer.stopwords.insert(read_line());
    std::size_t n_docs = std::stoul(field(read_line(), "doc_lengths"));
    long total_len = 0;
    for (std::size_t i = 0; i < n_docs; ++i) {
        std::string line = read_line();
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw SchemaError("bad doc_length row");
        int len = std::stoi(line.substr(tab + 1));
        idx.doc_lengths[NodeId{line.substr(0, tab)}] = len;
        total_len += len;
    }
    idx.paragraph_count = idx.doc_lengths.size();
    idx.avgdl = idx.paragraph_count
                    ? static_cast<double>(total_len) / static_cast<double>(idx.paragraph_count)
                    : 0.0;
    std::size_t n_terms = std::stoul(field(read_line(), "terms"));
    for (std::size_t i = 0; i < n_terms; ++i) {
        std::string line = read_line();
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw SchemaError("bad postings row");
        std::string term = line.substr(0, tab);
        std::istringstream rest(line.substr(tab + 1));
        std::string item;
        while (rest >> item) {
            auto colon = item.rfind(':');
            if (colon == std::string::npos) throw SchemaError("bad posting entry");
            idx.postings[term].push_back(
                Posting{NodeId{item.substr(0, colon)}, std::stoi(item.substr(colon + 1))});
        }
    }
    return idx;
}

}  // namespace treeqa
