#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace flightrag::llm {

enum class Provider { http_chat, scripted };

struct LlmSpec {
    Provider provider = Provider::scripted;
    std::string model_id;
    std::string endpoint;  // http_chat only
    double temperature = 0.0;
    int max_tokens = 512;
    std::string fixture_path;  // scripted only
    std::string api_key;
    bool strict = true;            // scripted: NoFixtureMatch instead of default_response
    std::string default_response;  // scripted, lenient mode
    std::chrono::milliseconds timeout{30000};
    int max_in_flight = 4;
};

inline constexpr std::string_view kDefaultEndpoint = "https://api.openai.com/v1/chat/completions";

// Parses the --llm flag: "http:<model_id>" or "scripted:<fixture_path>".
// Endpoint and key come from FLIGHTRAG_LLM_ENDPOINT / FLIGHTRAG_API_KEY.
LlmSpec parse_llm_flag(std::string_view flag);

class Llm {
public:
    virtual ~Llm() = default;
    virtual std::string complete(std::string_view system, std::string_view user) const = 0;
    virtual const LlmSpec& spec() const = 0;
};

using LlmHandle = std::shared_ptr<const Llm>;

struct FixtureRule {
    std::vector<std::string> match;
    std::string response;
};

std::vector<FixtureRule> load_fixture(const std::string& path);
std::vector<FixtureRule> parse_fixture(std::string_view jsonl);
std::string fixture_to_jsonl(const std::vector<FixtureRule>& rules);

// First rule (in file order) whose match strings all occur in system + "\n" + user.
class ScriptedLlm final : public Llm {
public:
    ScriptedLlm(std::vector<FixtureRule> rules, LlmSpec spec);
    ~ScriptedLlm() override;

    std::string complete(std::string_view system, std::string_view user) const override;
    const LlmSpec& spec() const override { return spec_; }
    std::size_t rule_count() const { return rules_.size(); }

private:
    struct Matcher;
    std::vector<FixtureRule> rules_;
    LlmSpec spec_;
    std::unique_ptr<Matcher> matcher_;
};

// Single-turn chat completion over HTTP with the common messages[] wire shape.
class HttpChatLlm final : public Llm {
public:
    explicit HttpChatLlm(LlmSpec spec);
    ~HttpChatLlm() override;

    std::string complete(std::string_view system, std::string_view user) const override;
    const LlmSpec& spec() const override { return spec_; }

private:
    struct Gate;
    LlmSpec spec_;
    std::unique_ptr<Gate> gate_;
};

LlmHandle make_llm(const LlmSpec& spec);

}  // namespace flightrag::llm
