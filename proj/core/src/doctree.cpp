#include "treeqa/doctree.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>

namespace treeqa {

using nlohmann::json;

const char* level_name(Level level) {
    switch (level) {
        case Level::document: return "document";
        case Level::section: return "section";
        case Level::paragraph: return "paragraph";
        case Level::sentence: return "sentence";
    }
    return "document";
}

std::optional<Level> level_from_name(const std::string& name) {
    if (name == "document") return Level::document;
    if (name == "section") return Level::section;
    if (name == "paragraph") return Level::paragraph;
    if (name == "sentence") return Level::sentence;
    return std::nullopt;
}

std::size_t NodeId::depth() const {
    if (value.empty()) return 0;
    return 1 + static_cast<std::size_t>(std::count(value.begin(), value.end(), ':'));
}

std::string NodeId::doc_label() const {
    auto pos = value.find(':');
    return pos == std::string::npos ? value : value.substr(0, pos);
}

std::optional<NodeId> NodeId::parent() const {
    auto pos = value.rfind(':');
    if (pos == std::string::npos) return std::nullopt;
    return NodeId{value.substr(0, pos)};
}

bool is_ancestor(const NodeId& a, const NodeId& b) {
    if (b.value.size() <= a.value.size() + 1) return false;
    return b.value.compare(0, a.value.size(), a.value) == 0 &&
           b.value[a.value.size()] == ':';
}

namespace {

bool all_digits(const std::string& s, std::size_t from) {
    if (from >= s.size()) return false;
    return std::all_of(s.begin() + static_cast<long>(from), s.end(),
                       [](unsigned char c) { return std::isdigit(c); });
}

bool valid_segment(const std::string& seg, std::size_t position) {
    if (seg.empty()) return false;
    switch (position) {
        case 0:
            return seg.find_first_of(": \t\r\n") == std::string::npos;
        case 1: return seg.rfind("sec", 0) == 0 && all_digits(seg, 3);
        case 2: return seg[0] == 'p' && all_digits(seg, 1);
        case 3: return seg[0] == 's' && all_digits(seg, 1);
        default: return false;
    }
}

std::vector<std::string> split_segments(const std::string& value) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = value.find(':', start);
        if (pos == std::string::npos) {
            out.push_back(value.substr(start));
            break;
        }
        out.push_back(value.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

Level level_for_depth(std::size_t depth) {
    switch (depth) {
        case 1: return Level::document;
        case 2: return Level::section;
        case 3: return Level::paragraph;
        default: return Level::sentence;
    }
}

}  // namespace

bool valid_node_id(const NodeId& id) {
    auto segs = split_segments(id.value);
    if (segs.empty() || segs.size() > 4) return false;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        if (!valid_segment(segs[i], i)) return false;
    }
    return true;
}

const DocNode& DocumentTree::node(const NodeId& id) const {
    auto it = nodes.find(id);
    if (it == nodes.end()) throw UnknownNode("unknown node id: " + id.value);
    return it->second;
}

std::vector<NodeId> DocumentTree::at_level(Level level) const {
    std::vector<NodeId> out;
    for (const auto& [id, node] : nodes) {
        if (node.level == level) out.push_back(id);
    }
    return out;
}

std::vector<NodeId> DocumentTree::leaves() const {
    std::vector<NodeId> out;
    for (const auto& [id, node] : nodes) {
        if (node.children.empty()) out.push_back(id);
    }
    return out;
}

void DocumentTree::validate() const {
    if (!nodes.count(root)) throw StructureError("root node missing: " + root.value);

    std::size_t doc_count = 0;
    for (const auto& [id, node] : nodes) {
        if (id != node.id) throw StructureError("node keyed under wrong id: " + id.value);
        if (!valid_node_id(id)) throw StructureError("malformed node id: " + id.value);
        if (node.level != level_for_depth(id.depth())) {
            throw StructureError("id depth does not match level: " + id.value);
        }
        if (node.level == Level::document) ++doc_count;
        if ((node.level == Level::sentence || node.is_image()) && !node.children.empty()) {
            throw StructureError("leaf node has children: " + id.value);
        }
        for (const auto& child_id : node.children) {
            auto it = nodes.find(child_id);
            if (it == nodes.end()) {
                throw StructureError("child not present: " + child_id.value);
            }
            const DocNode& child = it->second;
            if (static_cast<int>(child.level) != static_cast<int>(node.level) + 1) {
                throw StructureError("level skip between " + id.value + " and " +
                                     child_id.value);
            }
            if (!child.parent || *child.parent != id) {
                throw StructureError("parent link inconsistent at " + child_id.value);
            }
        }
        if (node.parent) {
            auto it = nodes.find(*node.parent);
            if (it == nodes.end()) throw StructureError("parent missing: " + node.parent->value);
            const auto& siblings = it->second.children;
            if (std::find(siblings.begin(), siblings.end(), id) == siblings.end()) {
                throw StructureError("child link missing for " + id.value);
            }
        } else if (id != root) {
            throw StructureError("orphan node: " + id.value);
        }
    }
    if (doc_count != 1) throw StructureError("tree must contain exactly one document node");

    // Reachability from root; the parent checks above rule out cycles, but
    // disconnected subtrees with internally consistent links would survive.
    std::set<NodeId> seen;
    std::vector<NodeId> stack{root};
    while (!stack.empty()) {
        NodeId id = stack.back();
        stack.pop_back();
        if (!seen.insert(id).second) throw StructureError("cycle at " + id.value);
        for (const auto& c : nodes.at(id).children) stack.push_back(c);
    }
    if (seen.size() != nodes.size()) throw StructureError("orphan nodes not reachable from root");
}

std::vector<std::string> split_sentences(const std::string& text,
                                         const SegmentationRules& rules) {
    std::vector<std::string> sentences;
    std::string current;

    auto ends_with_abbrev = [&](const std::string& s) {
        for (const auto& abbr : rules.abbreviations) {
            if (s.size() >= abbr.size() &&
                s.compare(s.size() - abbr.size(), abbr.size(), abbr) == 0) {
                // The abbreviation must start a token.
                std::size_t start = s.size() - abbr.size();
                if (start == 0 || std::isspace(static_cast<unsigned char>(s[start - 1]))) {
                    return true;
                }
            }
        }
        return false;
    };

    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        current.push_back(c);
        if (c == '.' || c == '!' || c == '?') {
            // Consume a run of closing punctuation.
            while (i + 1 < text.size() &&
                   (text[i + 1] == '.' || text[i + 1] == '!' || text[i + 1] == '?' ||
                    text[i + 1] == ')' || text[i + 1] == '"' || text[i + 1] == '\'')) {
                current.push_back(text[++i]);
            }
            bool at_end = i + 1 >= text.size();
            bool before_space =
                !at_end && std::isspace(static_cast<unsigned char>(text[i + 1]));
            if ((at_end || before_space) && !ends_with_abbrev(current)) {
                // Trim surrounding whitespace and flush.
                std::string trimmed = current;
                auto a = trimmed.find_first_not_of(" \t\r\n");
                auto b = trimmed.find_last_not_of(" \t\r\n");
                if (a != std::string::npos) {
                    sentences.push_back(trimmed.substr(a, b - a + 1));
                }
                current.clear();
                while (i + 1 < text.size() &&
                       std::isspace(static_cast<unsigned char>(text[i + 1]))) {
                    ++i;
                }
            }
        }
        ++i;
    }
    auto a = current.find_first_not_of(" \t\r\n");
    if (a != std::string::npos) {
        auto b = current.find_last_not_of(" \t\r\n");
        sentences.push_back(current.substr(a, b - a + 1));
    }
    return sentences;
}

namespace {

struct ParsedSection {
    std::string heading;
    std::vector<std::vector<std::string>> paragraphs;  // each a sentence list
};

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace

DocumentTree parse_plaintext(const std::string& doc_id, const std::string& text,
                             const SegmentationRules& rules) {
    if (!valid_segment(doc_id, 0)) {
        throw SchemaError("document id not usable as a root segment: " + doc_id);
    }

    std::vector<std::regex> heading_res;
    heading_res.reserve(rules.heading_patterns.size());
    for (const auto& p : rules.heading_patterns) heading_res.emplace_back(p);

    std::vector<ParsedSection> sections;
    std::vector<std::string> paragraph_lines;

    auto flush_paragraph = [&]() {
        if (paragraph_lines.empty()) return;
        if (sections.empty()) sections.push_back({});
        auto sentences = split_sentences(join(paragraph_lines, " "), rules);
        if (!sentences.empty()) sections.back().paragraphs.push_back(std::move(sentences));
        paragraph_lines.clear();
    };

    std::istringstream stream(text);
    std::string line;
    while (std::getline(stream, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        bool is_heading = false;
        std::smatch m;
        for (const auto& re : heading_res) {
            if (std::regex_search(line, m, re)) {
                is_heading = true;
                break;
            }
        }
        if (is_heading) {
            flush_paragraph();
            ParsedSection sec;
            sec.heading = line.substr(static_cast<std::size_t>(m.position(0) + m.length(0)));
            sections.push_back(std::move(sec));
        } else if (line.find_first_not_of(" \t") == std::string::npos) {
            flush_paragraph();
        } else {
            paragraph_lines.push_back(line);
        }
    }
    flush_paragraph();

    // Drop heading-only sections; they carry no retrievable text.
    sections.erase(std::remove_if(sections.begin(), sections.end(),
                                  [](const ParsedSection& s) { return s.paragraphs.empty(); }),
                   sections.end());
    if (sections.empty()) throw EmptyDocument("no sentences in document: " + doc_id);

    DocumentTree tree;
    tree.root = NodeId{doc_id};
    DocNode doc;
    doc.id = tree.root;
    doc.level = Level::document;

    std::vector<std::string> section_texts;
    for (std::size_t si = 0; si < sections.size(); ++si) {
        NodeId sec_id{doc_id + ":sec" + std::to_string(si)};
        DocNode sec;
        sec.id = sec_id;
        sec.level = Level::section;
        sec.parent = tree.root;
        if (!sections[si].heading.empty()) sec.metadata["heading"] = sections[si].heading;

        std::vector<std::string> para_texts;
        for (std::size_t pi = 0; pi < sections[si].paragraphs.size(); ++pi) {
            NodeId para_id{sec_id.value + ":p" + std::to_string(pi)};
            DocNode para;
            para.id = para_id;
            para.level = Level::paragraph;
            para.parent = sec_id;

            const auto& sentences = sections[si].paragraphs[pi];
            for (std::size_t ti = 0; ti < sentences.size(); ++ti) {
                NodeId sent_id{para_id.value + ":s" + std::to_string(ti)};
                DocNode sent;
                sent.id = sent_id;
                sent.level = Level::sentence;
                sent.parent = para_id;
                sent.content = sentences[ti];
                para.children.push_back(sent_id);
                tree.nodes.emplace(sent_id, std::move(sent));
            }
            para.content = join(sentences, " ");
            para_texts.push_back(para.content);
            sec.children.push_back(para_id);
            tree.nodes.emplace(para_id, std::move(para));
        }
        sec.content = join(para_texts, "\n\n");
        section_texts.push_back(sec.content);
        doc.children.push_back(sec_id);
        tree.nodes.emplace(sec_id, std::move(sec));
    }
    doc.content = join(section_texts, "\n\n");
    tree.nodes.emplace(tree.root, std::move(doc));
    tree.validate();
    return tree;
}

DocumentTree load_tree(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("tree file is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("root") || !j.contains("nodes")) {
        throw SchemaError("tree file must contain root and nodes fields");
    }
    if (!j["root"].is_string() || !j["nodes"].is_array()) {
        throw SchemaError("root must be a string and nodes an array");
    }

    DocumentTree tree;
    tree.root = NodeId{j["root"].get<std::string>()};
    for (const auto& item : j["nodes"]) {
        if (!item.is_object()) throw SchemaError("node entries must be objects");
        for (const char* field : {"id", "level", "content", "children"}) {
            if (!item.contains(field)) {
                throw SchemaError(std::string("node missing field: ") + field);
            }
        }
        DocNode node;
        node.id = NodeId{item["id"].get<std::string>()};
        auto level = level_from_name(item["level"].get<std::string>());
        if (!level) throw SchemaError("unknown level: " + item["level"].get<std::string>());
        node.level = *level;
        node.content = item["content"].get<std::string>();
        for (const auto& c : item["children"]) {
            node.children.push_back(NodeId{c.get<std::string>()});
        }
        if (item.contains("metadata")) {
            for (const auto& [k, v] : item["metadata"].items()) {
                node.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
            }
        }
        if (tree.nodes.count(node.id)) {
            throw StructureError("duplicate node id: " + node.id.value);
        }
        tree.nodes.emplace(node.id, std::move(node));
    }

    // Derive parent links from children lists.
    for (auto& [id, node] : tree.nodes) {
        for (const auto& child_id : node.children) {
            auto it = tree.nodes.find(child_id);
            if (it == tree.nodes.end()) {
                throw StructureError("child not present: " + child_id.value);
            }
            if (it->second.parent) {
                throw StructureError("node has two parents: " + child_id.value);
            }
            it->second.parent = id;
        }
    }
    tree.validate();
    return tree;
}

DocumentTree load_tree_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open tree file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_tree(buf.str());
}

namespace {

void serialize_node(const DocumentTree& tree, const NodeId& id, json& out) {
    const DocNode& node = tree.node(id);
    json entry;
    entry["id"] = id.value;
    entry["level"] = level_name(node.level);
    entry["content"] = node.content;
    entry["children"] = json::array();
    for (const auto& c : node.children) entry["children"].push_back(c.value);
    entry["metadata"] = json::object();
    for (const auto& [k, v] : node.metadata) entry["metadata"][k] = v;
    out.push_back(std::move(entry));
    for (const auto& c : node.children) serialize_node(tree, c, out);
}

}  // namespace

std::string serialize_tree(const DocumentTree& tree) {
    json j;
    j["root"] = tree.root.value;
    j["nodes"] = json::array();
    serialize_node(tree, tree.root, j["nodes"]);
    return j.dump(2) + "\n";
}

}  // namespace treeqa
