#include "treeqa/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "treeqa/embedder.hpp"

namespace treeqa {

namespace {

// Shortest representation that round-trips, e.g. 0.7 stays "0.7".
std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1" || value == "on") return true;
    if (value == "false" || value == "0" || value == "off") return false;
    throw ConfigError("expected boolean for " + key + ", got: " + value);
}

long parse_int(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        long v = std::stol(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("expected integer for " + key + ", got: " + value);
    }
}

double parse_real(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("expected number for " + key + ", got: " + value);
    }
}

}  // namespace

void apply_config_entry(PipelineConfig& cfg, const std::string& key,
                        const std::string& value) {
    if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(parse_int(value, key));
    } else if (key == "jobs") {
        cfg.jobs = static_cast<int>(parse_int(value, key));
        if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");
    } else if (key == "encoder.kind") {
        if (value != "mock" && value != "http") {
            throw ConfigError("encoder.kind must be mock or http");
        }
        cfg.encoder_kind = value;
    } else if (key == "encoder.dim") {
        long dim = parse_int(value, key);
        if (dim < 1) throw ConfigError("encoder.dim must be positive");
        cfg.encoder_dim = static_cast<std::size_t>(dim);
    } else if (key == "encoder.seed") {
        cfg.encoder_seed = static_cast<std::uint64_t>(parse_int(value, key));
    } else if (key == "encoder.endpoint") {
        cfg.encoder_endpoint = value;
    } else if (key == "encoder.auth_env") {
        cfg.encoder_auth_env = value;
    } else if (key == "chat.kind") {
        if (value != "http" && value != "replay") {
            throw ConfigError("chat.kind must be http or replay");
        }
        cfg.chat_kind = value;
    } else if (key == "chat.endpoint") {
        cfg.chat_endpoint = value;
    } else if (key == "chat.replay_file") {
        cfg.chat_replay_file = value;
    } else if (key == "chat.auth_env") {
        cfg.chat_auth_env = value;
    } else if (key == "planner.kind") {
        if (value != "llm" && value != "scripted" && value != "identity") {
            throw ConfigError("planner.kind must be llm, scripted or identity");
        }
        cfg.planner_kind = value;
    } else if (key == "planner.script_file") {
        cfg.planner_script_file = value;
    } else if (key == "retriever.n_queries") {
        cfg.retriever.n_queries = static_cast<int>(parse_int(value, key));
        if (cfg.retriever.n_queries < 1) throw ConfigError("retriever.n_queries must be >= 1");
    } else if (key == "retriever.topk") {
        cfg.retriever.topk = static_cast<int>(parse_int(value, key));
        if (cfg.retriever.topk < 1) throw ConfigError("retriever.topk must be >= 1");
    } else if (key == "retriever.topk_final") {
        if (value == "none") {
            cfg.retriever.topk_final.reset();
        } else {
            cfg.retriever.topk_final = static_cast<int>(parse_int(value, key));
            if (*cfg.retriever.topk_final < 1) {
                throw ConfigError("retriever.topk_final must be >= 1 or none");
            }
        }
    } else if (key == "retriever.rerank") {
        if (value == "frequency") {
            cfg.retriever.rerank = RerankStrategy::frequency;
        } else if (value == "score") {
            cfg.retriever.rerank = RerankStrategy::score;
        } else if (value == "combined") {
            cfg.retriever.rerank = RerankStrategy::combined;
        } else {
            throw ConfigError("retriever.rerank must be frequency, score or combined");
        }
    } else if (key == "retriever.alpha") {
        cfg.retriever.alpha = parse_real(value, key);
        if (cfg.retriever.alpha < 0.0 || cfg.retriever.alpha > 1.0) {
            throw ConfigError("retriever.alpha must be in [0, 1]");
        }
    } else if (key == "retriever.dedup") {
        if (value == "id") {
            cfg.retriever.dedup = DedupMode::by_id;
        } else if (value == "tree") {
            cfg.retriever.dedup = DedupMode::tree;
        } else {
            throw ConfigError("retriever.dedup must be id or tree");
        }
    } else if (key == "retriever.bm25_topk") {
        cfg.retriever.bm25_topk = static_cast<int>(parse_int(value, key));
        if (cfg.retriever.bm25_topk < 0) throw ConfigError("retriever.bm25_topk must be >= 0");
    } else if (key == "retriever.include_images") {
        cfg.retriever.include_images = parse_bool(value, key);
    } else if (key == "answerer.order") {
        if (value == "context_first") {
            cfg.answerer.order = PromptOrder::context_first;
        } else if (value == "question_first") {
            cfg.answerer.order = PromptOrder::question_first;
        } else {
            throw ConfigError("answerer.order must be context_first or question_first");
        }
    } else if (key == "answerer.token_budget") {
        cfg.answerer.token_budget = static_cast<int>(parse_int(value, key));
        if (cfg.answerer.token_budget < 1) throw ConfigError("token budget must be positive");
    } else if (key == "answerer.temperature") {
        cfg.answerer.temperature = parse_real(value, key);
    } else if (key == "answerer.max_retries") {
        cfg.answerer.max_retries = static_cast<int>(parse_int(value, key));
        if (cfg.answerer.max_retries < 0) throw ConfigError("max_retries must be >= 0");
    } else if (key == "ensemble.size") {
        cfg.ensemble_size = static_cast<int>(parse_int(value, key));
        if (cfg.ensemble_size < 1) throw ConfigError("ensemble.size must be >= 1");
    } else if (key == "ensemble.vote_mode") {
        auto mode = vote_mode_from_name(value);
        if (!mode) throw ConfigError("unknown vote mode: " + value);
        cfg.vote.mode = *mode;
    } else if (key == "ensemble.ignore_blank") {
        cfg.vote.ignore_blank = parse_bool(value, key);
    } else if (key == "bm25.k1") {
        cfg.bm25_k1 = parse_real(value, key);
        if (cfg.bm25_k1 <= 0.0) throw ConfigError("bm25.k1 must be > 0");
    } else if (key == "bm25.b") {
        cfg.bm25_b = parse_real(value, key);
        if (cfg.bm25_b < 0.0 || cfg.bm25_b > 1.0) throw ConfigError("bm25.b must be in [0, 1]");
    } else if (key == "bm25.lowercase") {
        cfg.bm25_lowercase = parse_bool(value, key);
    } else if (key == "bm25.stopwords_file") {
        cfg.bm25_stopwords_file = value;
    } else {
        throw ConfigError("unknown configuration key: " + key);
    }
}

PipelineConfig parse_config(const std::string& text) {
    PipelineConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::string stripped = trim(line);
        if (stripped.empty()) continue;
        auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + " is not key = value");
        }
        apply_config_entry(cfg, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
    return cfg;
}

PipelineConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string dump_config(const PipelineConfig& cfg) {
    std::ostringstream out;
    out << "# effective configuration\n";
    out << "seed = " << cfg.seed << "\n";
    out << "jobs = " << cfg.jobs << "\n";
    out << "encoder.kind = " << cfg.encoder_kind << "\n";
    out << "encoder.dim = " << cfg.encoder_dim << "\n";
    out << "encoder.seed = " << cfg.encoder_seed << "\n";
    out << "encoder.endpoint = " << cfg.encoder_endpoint << "\n";
    out << "encoder.auth_env = " << cfg.encoder_auth_env << "\n";
    out << "chat.kind = " << cfg.chat_kind << "\n";
    out << "chat.endpoint = " << cfg.chat_endpoint << "\n";
    out << "chat.replay_file = " << cfg.chat_replay_file << "\n";
    out << "chat.auth_env = " << cfg.chat_auth_env << "\n";
    out << "planner.kind = " << cfg.planner_kind << "\n";
    out << "planner.script_file = " << cfg.planner_script_file << "\n";
    out << "retriever.n_queries = " << cfg.retriever.n_queries << "\n";
    out << "retriever.topk = " << cfg.retriever.topk << "\n";
    if (cfg.retriever.topk_final) {
        out << "retriever.topk_final = " << *cfg.retriever.topk_final << "\n";
    } else {
        out << "retriever.topk_final = none\n";
    }
    const char* rerank = cfg.retriever.rerank == RerankStrategy::frequency ? "frequency"
                         : cfg.retriever.rerank == RerankStrategy::score   ? "score"
                                                                           : "combined";
    out << "retriever.rerank = " << rerank << "\n";
    out << "retriever.alpha = " << format_double(cfg.retriever.alpha) << "\n";
    out << "retriever.dedup = "
        << (cfg.retriever.dedup == DedupMode::tree ? "tree" : "id") << "\n";
    out << "retriever.bm25_topk = " << cfg.retriever.bm25_topk << "\n";
    out << "retriever.include_images = "
        << (cfg.retriever.include_images ? "true" : "false") << "\n";
    out << "answerer.order = "
        << (cfg.answerer.order == PromptOrder::context_first ? "context_first"
                                                             : "question_first")
        << "\n";
    out << "answerer.token_budget = " << cfg.answerer.token_budget << "\n";
    out << "answerer.temperature = " << format_double(cfg.answerer.temperature) << "\n";
    out << "answerer.max_retries = " << cfg.answerer.max_retries << "\n";
    out << "ensemble.size = " << cfg.ensemble_size << "\n";
    out << "ensemble.vote_mode = " << vote_mode_name(cfg.vote.mode) << "\n";
    out << "ensemble.ignore_blank = " << (cfg.vote.ignore_blank ? "true" : "false") << "\n";
    out << "bm25.k1 = " << format_double(cfg.bm25_k1) << "\n";
    out << "bm25.b = " << format_double(cfg.bm25_b) << "\n";
    out << "bm25.lowercase = " << (cfg.bm25_lowercase ? "true" : "false") << "\n";
    out << "bm25.stopwords_file = " << cfg.bm25_stopwords_file << "\n";
    return out.str();
}

std::uint64_t seed_for(const PipelineConfig& cfg, const std::string& question_id, int run) {
    std::uint64_t base = stable_hash(question_id, cfg.seed);
    return stable_hash("run:" + std::to_string(run), base);
}

}  // namespace treeqa
