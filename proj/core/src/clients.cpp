#include "treeqa/clients.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

namespace treeqa {

using nlohmann::json;

namespace {

struct ParsedUrl {
    std::string host;  // scheme://host:port
    std::string path;
};

ParsedUrl split_url(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint must include a scheme: " + endpoint);
    }
    auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

json post_json(const std::string& endpoint, const std::string& auth_token,
               const json& body) {
    ParsedUrl url = split_url(endpoint);
    httplib::Client client(url.host);
    client.set_read_timeout(120, 0);
    httplib::Headers headers;
    if (!auth_token.empty()) {
        headers.emplace("Authorization", "Bearer " + auth_token);
    }
    auto res = client.Post(url.path, headers, body.dump(), "application/json");
    if (!res) {
        throw ClientFailure("request to " + endpoint + " failed: " +
                            httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw ClientFailure("request to " + endpoint + " returned status " +
                            std::to_string(res->status));
    }
    try {
        return json::parse(res->body);
    } catch (const json::exception& e) {
        throw ClientFailure(std::string("response is not valid JSON: ") + e.what());
    }
}

}  // namespace

HttpEncoderClient::HttpEncoderClient(std::string endpoint, std::size_t dim,
                                     std::string auth_token)
    : endpoint_(std::move(endpoint)), dim_(dim), auth_token_(std::move(auth_token)) {}

std::vector<Vector> HttpEncoderClient::request(const std::vector<std::string>& texts,
                                               const std::string& task) {
    json body;
    body["texts"] = texts;
    body["task"] = task;
    json res = post_json(endpoint_, auth_token_, body);
    if (!res.contains("vectors") || !res["vectors"].is_array()) {
        throw ClientFailure("encoder response missing vectors array");
    }
    std::vector<Vector> out;
    for (const auto& row : res["vectors"]) {
        Vector v;
        for (const auto& x : row) v.values.push_back(x.get<double>());
        if (v.dim() != dim_) {
            throw ClientFailure("encoder returned dim " + std::to_string(v.dim()) +
                                ", expected " + std::to_string(dim_));
        }
        out.push_back(std::move(v));
    }
    if (out.size() != texts.size()) {
        throw ClientFailure("encoder returned wrong number of vectors");
    }
    return out;
}

std::vector<Vector> HttpEncoderClient::embed_passages(const std::vector<std::string>& texts) {
    if (texts.empty()) return {};
    return request(texts, "passage");
}

Vector HttpEncoderClient::embed_query(const std::string& text) {
    return request({text}, "query").front();
}

HttpChatClient::HttpChatClient(std::string endpoint, std::string auth_token)
    : endpoint_(std::move(endpoint)), auth_token_(std::move(auth_token)) {}

std::string HttpChatClient::complete(const std::string& prompt, double temperature,
                                     std::uint64_t seed) {
    json body;
    body["prompt"] = prompt;
    body["temperature"] = temperature;
    body["seed"] = seed;
    json res = post_json(endpoint_, auth_token_, body);
    if (!res.contains("text") || !res["text"].is_string()) {
        throw ClientFailure("chat response missing text field");
    }
    return res["text"].get<std::string>();
}

std::string question_from_prompt(const std::string& prompt) {
    const std::string marker = "## Question\n";
    auto start = prompt.find(marker);
    if (start == std::string::npos) return "";
    start += marker.size();
    auto end = prompt.find("\n\n## ", start);
    if (end == std::string::npos) end = prompt.size();
    return prompt.substr(start, end - start);
}

ReplayChatClient::ReplayChatClient(std::map<std::string, std::vector<std::string>> script)
    : script_(std::move(script)) {}

std::map<std::string, std::vector<std::string>> ReplayChatClient::script_from_json(
    const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("replay script is not valid JSON: ") + e.what());
    }
    if (!j.contains("responses") || !j["responses"].is_object()) {
        throw ConfigError("replay script must contain a responses object");
    }
    std::map<std::string, std::vector<std::string>> script;
    for (const auto& [question, list] : j["responses"].items()) {
        if (!list.is_array()) throw ConfigError("replay entries must be arrays");
        for (const auto& r : list) {
            script[question].push_back(r.is_string() ? r.get<std::string>() : r.dump());
        }
    }
    return script;
}

std::map<std::string, std::vector<std::string>> ReplayChatClient::script_from_file(
    const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open replay script: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return script_from_json(buf.str());
}

std::string ReplayChatClient::complete(const std::string& prompt, double /*temperature*/,
                                       std::uint64_t /*seed*/) {
    std::string question = question_from_prompt(prompt);
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = script_.find(question);
    if (it == script_.end() || it->second.empty()) {
        throw ClientFailure("no scripted response for question: " + question);
    }
    std::size_t& cursor = cursor_[question];
    const auto& list = it->second;
    std::string response = list[std::min(cursor, list.size() - 1)];
    ++cursor;
    return response;
}

std::vector<std::string> IdentityPlanner::plan(const std::string& question, int /*n*/) {
    return {question};
}

ScriptedPlanner::ScriptedPlanner(std::map<std::string, std::vector<std::string>> script)
    : script_(std::move(script)) {}

ScriptedPlanner ScriptedPlanner::from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("planner script is not valid JSON: ") + e.what());
    }
    if (!j.contains("plans") || !j["plans"].is_object()) {
        throw ConfigError("planner script must contain a plans object");
    }
    std::map<std::string, std::vector<std::string>> script;
    for (const auto& [question, list] : j["plans"].items()) {
        if (!list.is_array()) throw ConfigError("plan entries must be arrays");
        for (const auto& q : list) script[question].push_back(q.get<std::string>());
    }
    return ScriptedPlanner(std::move(script));
}

ScriptedPlanner ScriptedPlanner::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open planner script: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

std::vector<std::string> ScriptedPlanner::plan(const std::string& question, int n) {
    auto it = script_.find(question);
    if (it == script_.end() || it->second.empty()) return {question};
    std::vector<std::string> out = it->second;
    if (out.size() > static_cast<std::size_t>(n)) out.resize(static_cast<std::size_t>(n));
    return out;
}

LlmPlanner::LlmPlanner(ChatClient& chat, double temperature, std::uint64_t seed)
    : chat_(chat), temperature_(temperature), seed_(seed) {}

std::string LlmPlanner::planning_prompt(const std::string& question, int n) {
    std::ostringstream out;
    out << "Given the question: " << question << "\n";
    out << "Generate " << n << " search queries that:\n";
    out << "1. Rephrase using alternative terminology\n";
    out << "2. Expand abbreviations (e.g., PUE -> Power Usage Effectiveness)\n";
    out << "3. Add likely keywords from technical documents\n";
    out << "4. Decompose into sub-questions if compound\n";
    out << "Output as JSON array of strings.";
    return out.str();
}

std::vector<std::string> LlmPlanner::plan(const std::string& question, int n) {
    std::string raw;
    try {
        raw = chat_.complete(planning_prompt(question, n), temperature_, seed_);
    } catch (const Error&) {
        return {question};
    }
    // Find the first parseable JSON array of strings in the reply.
    for (std::size_t start = 0; start < raw.size(); ++start) {
        if (raw[start] != '[') continue;
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < raw.size(); ++i) {
            char c = raw[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '[') {
                ++depth;
            } else if (c == ']') {
                if (--depth == 0) {
                    try {
                        json j = json::parse(raw.substr(start, i - start + 1));
                        std::vector<std::string> queries;
                        for (const auto& q : j) {
                            if (q.is_string()) queries.push_back(q.get<std::string>());
                        }
                        if (!queries.empty()) return queries;
                    } catch (const json::exception&) {
                    }
                    break;
                }
            }
        }
    }
    return {question};
}

}  // namespace treeqa
