#pragma once

// Seeded random input builders for the property suites.

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "treeqa/answerer.hpp"
#include "treeqa/doctree.hpp"
#include "treeqa/retriever.hpp"

namespace gen {

inline const std::vector<std::string>& vocab() {
    static const std::vector<std::string> words = {
        "power",   "usage",   "effectiveness", "water",  "consumption", "carbon",
        "footprint", "energy", "inference",    "training", "model",     "datacenter",
        "cooling", "server",  "efficiency",    "annual", "report",      "measured",
        "total",   "average", "peak",          "figure", "table",       "estimate",
    };
    return words;
}

inline std::string random_text(std::mt19937_64& rng, int min_tokens, int max_tokens) {
    std::uniform_int_distribution<int> count(min_tokens, max_tokens);
    std::uniform_int_distribution<std::size_t> pick(0, vocab().size() - 1);
    int n = count(rng);
    std::ostringstream out;
    for (int i = 0; i < n; ++i) {
        if (i) out << " ";
        out << vocab()[pick(rng)];
    }
    return out.str();
}

// Valid four-level tree whose internal contents are whitespace joins of
// their children, so token counts telescope from the sentences up.
// Occasionally inserts image-caption paragraph leaves.
inline treeqa::DocumentTree random_tree(std::mt19937_64& rng, const std::string& doc_id,
                                        std::size_t max_nodes = 50) {
    using namespace treeqa;
    std::uniform_int_distribution<int> n_sections(1, 3);
    std::uniform_int_distribution<int> n_paragraphs(1, 3);
    std::uniform_int_distribution<int> n_sentences(1, 4);
    std::uniform_int_distribution<int> image_roll(0, 9);

    DocumentTree tree;
    tree.root = NodeId{doc_id};
    DocNode doc;
    doc.id = tree.root;
    doc.level = Level::document;

    std::size_t nodes = 1;
    std::vector<std::string> section_texts;
    int sections = n_sections(rng);
    for (int si = 0; si < sections && nodes + 3 < max_nodes; ++si) {
        NodeId sec_id{doc_id + ":sec" + std::to_string(si)};
        DocNode sec;
        sec.id = sec_id;
        sec.level = Level::section;
        sec.parent = tree.root;
        ++nodes;

        std::vector<std::string> para_texts;
        int paragraphs = n_paragraphs(rng);
        for (int pi = 0; pi < paragraphs && nodes + 2 < max_nodes; ++pi) {
            NodeId para_id{sec_id.value + ":p" + std::to_string(pi)};
            DocNode para;
            para.id = para_id;
            para.level = Level::paragraph;
            para.parent = sec_id;
            ++nodes;

            if (image_roll(rng) == 0) {
                para.content = random_text(rng, 2, 6);
                para.metadata["attachment_type"] = "image";
            } else {
                std::vector<std::string> sentence_texts;
                int sentences = n_sentences(rng);
                for (int ti = 0; ti < sentences && nodes < max_nodes; ++ti) {
                    NodeId sent_id{para_id.value + ":s" + std::to_string(ti)};
                    DocNode sent;
                    sent.id = sent_id;
                    sent.level = Level::sentence;
                    sent.parent = para_id;
                    sent.content = random_text(rng, 1, 6);
                    sentence_texts.push_back(sent.content);
                    para.children.push_back(sent_id);
                    tree.nodes.emplace(sent_id, std::move(sent));
                    ++nodes;
                }
                if (para.children.empty()) {
                    // ran out of budget; make it a caption leaf instead
                    para.content = random_text(rng, 1, 3);
                    para.metadata["attachment_type"] = "image";
                } else {
                    std::ostringstream joined;
                    for (std::size_t i = 0; i < sentence_texts.size(); ++i) {
                        if (i) joined << " ";
                        joined << sentence_texts[i];
                    }
                    para.content = joined.str();
                }
            }
            para_texts.push_back(para.content);
            sec.children.push_back(para_id);
            tree.nodes.emplace(para_id, std::move(para));
        }
        if (sec.children.empty()) {
            --nodes;
            continue;
        }
        std::ostringstream joined;
        for (std::size_t i = 0; i < para_texts.size(); ++i) {
            if (i) joined << "\n\n";
            joined << para_texts[i];
        }
        sec.content = joined.str();
        section_texts.push_back(sec.content);
        doc.children.push_back(sec_id);
        tree.nodes.emplace(sec_id, std::move(sec));
    }
    std::ostringstream joined;
    for (std::size_t i = 0; i < section_texts.size(); ++i) {
        if (i) joined << "\n\n";
        joined << section_texts[i];
    }
    doc.content = joined.str();
    tree.nodes.emplace(tree.root, std::move(doc));
    tree.validate();
    return tree;
}

// Random snippet list over a synthetic id space, with duplicate ids and
// ancestor/descendant pairs sprinkled in.
inline std::vector<treeqa::ContextSnippet> random_snippets(std::mt19937_64& rng,
                                                           std::size_t count) {
    using namespace treeqa;
    std::uniform_int_distribution<int> doc(0, 2);
    std::uniform_int_distribution<int> sec(0, 2);
    std::uniform_int_distribution<int> para(0, 2);
    std::uniform_int_distribution<int> sent(0, 3);
    std::uniform_int_distribution<int> depth(2, 4);
    std::vector<ContextSnippet> out;
    for (std::size_t i = 0; i < count; ++i) {
        std::string id = "d" + std::to_string(doc(rng));
        int d = depth(rng);
        if (d >= 2) id += ":sec" + std::to_string(sec(rng));
        if (d >= 3) id += ":p" + std::to_string(para(rng));
        if (d >= 4) id += ":s" + std::to_string(sent(rng));
        ContextSnippet s;
        s.node = NodeId{id};
        s.text = random_text(rng, 1, 12);
        s.doc_id = s.node.doc_label();
        out.push_back(std::move(s));
    }
    return out;
}

inline treeqa::AnswerRecord make_record(const std::string& answer,
                                        std::vector<std::string> refs = {},
                                        bool blank = false) {
    treeqa::AnswerRecord rec;
    rec.is_blank = blank;
    if (!blank) {
        rec.answer = answer;
        rec.answer_value = treeqa::AnswerValue::of_text(answer);
        rec.ref_id.insert(refs.begin(), refs.end());
    }
    return rec;
}

inline treeqa::AnswerRecord random_record(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> kind(0, 3);
    std::uniform_int_distribution<int> refs(0, 2);
    // well separated, so no two distinct picks fall in one 0.1% group
    static const double values[] = {1.0, 2.5, 10.0, 55.0, 100.0, 1000.0, 2500.0};
    std::uniform_int_distribution<int> value(0, 6);
    treeqa::AnswerRecord rec;
    switch (kind(rng)) {
        case 0: rec.is_blank = true; break;
        case 1: {
            double v = values[value(rng)];
            rec.answer = std::to_string(v);
            rec.answer_value = treeqa::AnswerValue::of_number(v);
            break;
        }
        default: {
            std::uniform_int_distribution<std::size_t> pick(0, vocab().size() - 1);
            rec.answer = vocab()[pick(rng)];
            rec.answer_value = treeqa::AnswerValue::of_text(rec.answer);
            break;
        }
    }
    if (!rec.is_blank) {
        int n = refs(rng);
        for (int i = 0; i < n; ++i) {
            std::uniform_int_distribution<int> d(1, 4);
            rec.ref_id.insert("doc" + std::to_string(d(rng)));
        }
    }
    return rec;
}

}  // namespace gen
