#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "treeqa/answerer.hpp"
#include "treeqa/embedder.hpp"
#include "treeqa/retriever.hpp"

namespace treeqa {

/// Encoder over HTTP. Request: {"texts": [...], "task": "passage"|"query"};
/// response: {"vectors": [[...], ...]}. The auth token, when set, is sent
/// as a bearer Authorization header.
class HttpEncoderClient : public EncoderClient {
  public:
    HttpEncoderClient(std::string endpoint, std::size_t dim, std::string auth_token = "");

    std::vector<Vector> embed_passages(const std::vector<std::string>& texts) override;
    Vector embed_query(const std::string& text) override;
    std::size_t dim() const override { return dim_; }
    std::string descriptor() const override { return "http"; }

  private:
    std::vector<Vector> request(const std::vector<std::string>& texts,
                                const std::string& task);

    std::string endpoint_;
    std::size_t dim_;
    std::string auth_token_;
};

/// Chat completion over HTTP. Request: {"prompt": ..., "temperature": ...,
/// "seed": ...}; response: {"text": "..."}.
class HttpChatClient : public ChatClient {
  public:
    explicit HttpChatClient(std::string endpoint, std::string auth_token = "");

    std::string complete(const std::string& prompt, double temperature,
                         std::uint64_t seed) override;

  private:
    std::string endpoint_;
    std::string auth_token_;
};

/// Deterministic chat stand-in that replays scripted responses. Each
/// question keyed in the script owns an ordered response list; the i-th
/// completion for that question returns entry i (the last entry repeats
/// once the list is exhausted). The question is recovered from the prompt's
/// "## Question" section, so replay works through the real prompt path.
/// Thread-safe; cursors advance per question.
class ReplayChatClient : public ChatClient {
  public:
    explicit ReplayChatClient(std::map<std::string, std::vector<std::string>> script);

    /// Loads {"responses": {"<question>": ["...", ...]}} from JSON text.
    static std::map<std::string, std::vector<std::string>> script_from_json(
        const std::string& json_text);
    static std::map<std::string, std::vector<std::string>> script_from_file(
        const std::string& path);

    std::string complete(const std::string& prompt, double temperature,
                         std::uint64_t seed) override;

  private:
    std::map<std::string, std::vector<std::string>> script_;
    std::map<std::string, std::size_t> cursor_;
    std::mutex mutex_;
};

/// Extracts the text of the "## Question" section from a rendered prompt.
std::string question_from_prompt(const std::string& prompt);

/// Planner that always answers with the original question.
class IdentityPlanner : public PlannerClient {
  public:
    std::vector<std::string> plan(const std::string& question, int n) override;
};

/// Planner with a fixed question -> queries map; unknown questions fall
/// back to the original question.
class ScriptedPlanner : public PlannerClient {
  public:
    explicit ScriptedPlanner(std::map<std::string, std::vector<std::string>> script);
    static ScriptedPlanner from_json(const std::string& json_text);
    static ScriptedPlanner from_file(const std::string& path);

    std::vector<std::string> plan(const std::string& question, int n) override;

  private:
    std::map<std::string, std::vector<std::string>> script_;
};

/// Planner backed by a chat model: prompts for n diverse queries and
/// parses a JSON array of strings out of the reply. Malformed output falls
/// back to exactly {question}.
class LlmPlanner : public PlannerClient {
  public:
    explicit LlmPlanner(ChatClient& chat, double temperature = 0.0,
                        std::uint64_t seed = 0);

    std::vector<std::string> plan(const std::string& question, int n) override;

    static std::string planning_prompt(const std::string& question, int n);

  private:
    ChatClient& chat_;
    double temperature_;
    std::uint64_t seed_;
};

}  // namespace treeqa
