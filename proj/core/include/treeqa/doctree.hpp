#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "treeqa/errors.hpp"

namespace treeqa {

enum class Level { document, section, paragraph, sentence };

const char* level_name(Level level);
std::optional<Level> level_from_name(const std::string& name);

/// Hierarchical node identifier rendered as a colon-joined string, e.g.
/// "doc1:sec2:p3:s4". Depth encodes the level: one segment is a document,
/// two a section, three a paragraph, four a sentence.
struct NodeId {
    std::string value;

    NodeId() = default;
    explicit NodeId(std::string v) : value(std::move(v)) {}

    bool operator==(const NodeId& other) const { return value == other.value; }
    bool operator!=(const NodeId& other) const { return value != other.value; }
    /// Lexicographic order on the rendered form; used for all tie-breaking.
    bool operator<(const NodeId& other) const { return value < other.value; }

    std::size_t depth() const;
    /// First segment, i.e. the document label.
    std::string doc_label() const;
    /// Id with the last segment removed; nullopt for document-level ids.
    std::optional<NodeId> parent() const;
};

/// True iff `b` lies strictly below `a` in the tree, decided on segment
/// boundaries: rendered(b) must start with rendered(a) + ":". This makes
/// "d:sec1:p2" an ancestor of "d:sec1:p2:s3" but not of "d:sec1:p21".
bool is_ancestor(const NodeId& a, const NodeId& b);

/// True when `id` matches document[:secI[:pJ[:sK]]] with non-negative I,J,K.
bool valid_node_id(const NodeId& id);

struct DocNode {
    NodeId id;
    Level level = Level::document;
    std::string content;
    std::vector<NodeId> children;
    std::optional<NodeId> parent;
    std::map<std::string, std::string> metadata;

    bool is_image() const {
        auto it = metadata.find("attachment_type");
        return it != metadata.end() && it->second == "image";
    }
};

/// Immutable four-level document tree. Nodes are stored keyed by rendered
/// id; parent/child links are validated at construction.
struct DocumentTree {
    NodeId root;
    std::map<NodeId, DocNode> nodes;

    const DocNode& node(const NodeId& id) const;
    bool has(const NodeId& id) const { return nodes.count(id) != 0; }
    std::size_t size() const { return nodes.size(); }

    std::vector<NodeId> at_level(Level level) const;
    /// Childless nodes: sentences plus image paragraphs.
    std::vector<NodeId> leaves() const;

    /// Checks parent/child consistency, level stepping, reachability and
    /// the single-document-root rule. Throws StructureError on violation.
    void validate() const;
};

/// Segmentation rules for the plain-text parser. Heading patterns are
/// regexes matched per line; a match opens a new section. Abbreviations
/// suppress sentence breaks after their trailing period.
struct SegmentationRules {
    std::vector<std::string> heading_patterns = {"^#{1,6} "};
    std::vector<std::string> abbreviations = {
        "Fig.", "et al.", "i.e.", "e.g.", "vs.", "Eq.",
        "Sec.", "Tab.", "Dr.", "Mr.", "Ms.", "No.",
    };
};

/// Splits one paragraph of text into sentences. Breaks occur after
/// [.!?] runs followed by whitespace, unless the text so far ends with a
/// configured abbreviation.
std::vector<std::string> split_sentences(const std::string& text,
                                         const SegmentationRules& rules);

/// Rule-based plain-text parser. Sections open at heading lines (or at
/// sec0 implicitly), paragraphs at blank lines, sentences per
/// split_sentences. Heading text is kept in section metadata["heading"];
/// internal node content is the concatenation of child contents, so token
/// counts telescope from sentences upward. Sections that end up without
/// paragraphs are discarded. Throws EmptyDocument when no sentence is found.
DocumentTree parse_plaintext(const std::string& doc_id, const std::string& text,
                             const SegmentationRules& rules = {});

/// Reads the interchange format: {"root": id, "nodes": [{id, level,
/// content, children, metadata}]}. Missing required fields raise
/// SchemaError; duplicate ids, cycles, level skips and orphan nodes raise
/// StructureError.
DocumentTree load_tree(const std::string& json_text);
DocumentTree load_tree_file(const std::string& path);

/// Writes the interchange format with nodes in depth-first preorder.
std::string serialize_tree(const DocumentTree& tree);

}  // namespace treeqa
