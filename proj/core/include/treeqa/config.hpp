#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "treeqa/answerer.hpp"
#include "treeqa/ensembler.hpp"
#include "treeqa/retriever.hpp"

namespace treeqa {

/// Effective settings for the whole pipeline. Defaults match the shipped
/// configuration; every key can come from a config file (flat key = value
/// lines, # comments) or a --set override. Unknown keys are rejected.
struct PipelineConfig {
    std::uint64_t seed = 42;
    int jobs = 1;

    // encoder.*
    std::string encoder_kind = "mock";  // mock | http
    std::size_t encoder_dim = 512;
    std::uint64_t encoder_seed = 0;     // mock only
    std::string encoder_endpoint;
    std::string encoder_auth_env = "TREEQA_ENCODER_TOKEN";

    // chat.*
    std::string chat_kind = "http";  // http | replay
    std::string chat_endpoint;
    std::string chat_replay_file;
    std::string chat_auth_env = "TREEQA_CHAT_TOKEN";

    // planner.*
    std::string planner_kind = "llm";  // llm | scripted | identity
    std::string planner_script_file;

    // retriever.*
    RetrieverConfig retriever;

    // answerer.*
    AnswererConfig answerer;

    // ensemble.*
    int ensemble_size = 1;
    VoteConfig vote;

    // bm25.*
    double bm25_k1 = 1.5;
    double bm25_b = 0.75;
    bool bm25_lowercase = true;
    std::string bm25_stopwords_file;
};

/// Applies one "key = value" assignment; throws ConfigError for unknown
/// keys or unparseable values.
void apply_config_entry(PipelineConfig& cfg, const std::string& key,
                        const std::string& value);

PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config_file(const std::string& path);

/// Canonical key = value dump; parse_config(dump_config(c)) reproduces c.
std::string dump_config(const PipelineConfig& cfg);

/// Per-(question, run) seed expansion from the root seed.
std::uint64_t seed_for(const PipelineConfig& cfg, const std::string& question_id, int run);

}  // namespace treeqa
