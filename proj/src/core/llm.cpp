#include "flightrag/llm.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <queue>
#include <semaphore>
#include <sstream>
#include <unordered_map>

#include "flightrag/error.hpp"
#include "httplib.h"
#include "json.hpp"
#include "text_util.hpp"

namespace flightrag::llm {

using nlohmann::json;

LlmSpec parse_llm_flag(std::string_view flag) {
    LlmSpec spec;
    const auto colon = flag.find(':');
    if (colon == std::string_view::npos || colon + 1 >= flag.size())
        fail(Errc::invalid_argument,
             "LLM spec must be 'http:<model_id>' or 'scripted:<fixture_path>', got '" +
                 std::string(flag) + "'");
    const auto kind = flag.substr(0, colon);
    const auto rest = std::string(flag.substr(colon + 1));
    if (kind == "scripted") {
        spec.provider = Provider::scripted;
        spec.fixture_path = rest;
        spec.model_id = "scripted";
    } else if (kind == "http") {
        spec.provider = Provider::http_chat;
        spec.model_id = rest;
        const char* endpoint = std::getenv("FLIGHTRAG_LLM_ENDPOINT");
        spec.endpoint = endpoint && *endpoint ? endpoint : std::string(kDefaultEndpoint);
        if (const char* key = std::getenv("FLIGHTRAG_API_KEY")) spec.api_key = key;
    } else {
        fail(Errc::invalid_argument, "unknown LLM provider '" + std::string(kind) + "'");
    }
    return spec;
}

std::vector<FixtureRule> parse_fixture(std::string_view jsonl) {
    std::vector<FixtureRule> rules;
    std::size_t line_no = 0;
    for (const auto& line : detail::split(jsonl, '\n')) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        try {
            const json j = json::parse(line);
            FixtureRule rule;
            rule.match = j.at("match").get<std::vector<std::string>>();
            rule.response = j.at("response").get<std::string>();
            rules.push_back(std::move(rule));
        } catch (const json::exception& e) {
            fail(Errc::parse_error, "fixture line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rules;
}

std::vector<FixtureRule> load_fixture(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io, "cannot open fixture file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_fixture(ss.str());
}

std::string fixture_to_jsonl(const std::vector<FixtureRule>& rules) {
    std::string out;
    for (const auto& r : rules) {
        json j;
        j["match"] = r.match;
        j["response"] = r.response;
        out += j.dump() + "\n";
    }
    return out;
}

// Aho-Corasick automaton over every distinct match string, so one pass over
// the prompt tells which patterns occur.
struct ScriptedLlm::Matcher {
    struct Node {
        std::vector<std::pair<unsigned char, int>> next;  // sorted by byte
        int fail = 0;
        std::vector<int> outputs;  // pattern ids ending here (own + via fail links)
    };
    std::vector<Node> nodes{1};
    std::vector<std::vector<int>> rules_by_pattern;
    std::vector<int> rule_sizes;

    int child(int n, unsigned char c) const {
        const auto& nx = nodes[n].next;
        auto it = std::lower_bound(nx.begin(), nx.end(), std::make_pair(c, 0),
                                   [](const auto& a, const auto& b) { return a.first < b.first; });
        return it != nx.end() && it->first == c ? it->second : -1;
    }

    int add(std::string_view pattern) {
        int n = 0;
        for (unsigned char c : pattern) {
            int nx = child(n, c);
            if (nx < 0) {
                nx = static_cast<int>(nodes.size());
                nodes.emplace_back();
                auto& vec = nodes[n].next;
                auto it = std::lower_bound(
                    vec.begin(), vec.end(), std::make_pair(c, 0),
                    [](const auto& a, const auto& b) { return a.first < b.first; });
                vec.insert(it, {c, nx});
            }
            n = nx;
        }
        return n;
    }

    explicit Matcher(const std::vector<FixtureRule>& rules) {
        std::unordered_map<std::string, int> ids;
        std::vector<int> terminal;
        rule_sizes.resize(rules.size());
        for (std::size_t r = 0; r < rules.size(); ++r) {
            std::vector<int> seen;
            for (const auto& m : rules[r].match) {
                auto [it, inserted] = ids.emplace(m, static_cast<int>(ids.size()));
                if (inserted) {
                    rules_by_pattern.emplace_back();
                    terminal.push_back(add(m));
                }
                if (std::find(seen.begin(), seen.end(), it->second) != seen.end()) continue;
                seen.push_back(it->second);
                rules_by_pattern[it->second].push_back(static_cast<int>(r));
            }
            rule_sizes[r] = static_cast<int>(seen.size());
        }
        for (std::size_t p = 0; p < terminal.size(); ++p)
            nodes[terminal[p]].outputs.push_back(static_cast<int>(p));

        std::queue<int> q;
        for (const auto& [c, nx] : nodes[0].next) {
            nodes[nx].fail = 0;
            q.push(nx);
        }
        while (!q.empty()) {
            const int n = q.front();
            q.pop();
            for (const auto& [c, nx] : nodes[n].next) {
                int f = nodes[n].fail;
                while (f != 0 && child(f, c) < 0) f = nodes[f].fail;
                const int target = child(f, c);
                nodes[nx].fail = (target >= 0 && target != nx) ? target : 0;
                const auto& inherited = nodes[nodes[nx].fail].outputs;
                nodes[nx].outputs.insert(nodes[nx].outputs.end(), inherited.begin(), inherited.end());
                q.push(nx);
            }
        }
    }

    // Index of the first rule whose patterns all occur, or -1.
    int first_match(std::string_view text) const {
        std::vector<char> found(rules_by_pattern.size(), 0);
        int n = 0;
        for (unsigned char c : text) {
            while (n != 0 && child(n, c) < 0) n = nodes[n].fail;
            const int nx = child(n, c);
            n = nx < 0 ? 0 : nx;
            for (int p : nodes[n].outputs) found[p] = 1;
        }
        std::vector<int> hits(rule_sizes.size(), 0);
        int best = -1;
        for (std::size_t p = 0; p < found.size(); ++p) {
            if (!found[p]) continue;
            for (int r : rules_by_pattern[p])
                if (++hits[r] == rule_sizes[r] && (best < 0 || r < best)) best = r;
        }
        // Rules with no match strings match everything.
        for (std::size_t r = 0; r < rule_sizes.size(); ++r) {
            if (best >= 0 && static_cast<int>(r) >= best) break;
            if (rule_sizes[r] == 0) return static_cast<int>(r);
        }
        return best;
    }
};

ScriptedLlm::ScriptedLlm(std::vector<FixtureRule> rules, LlmSpec spec)
    : rules_(std::move(rules)), spec_(std::move(spec)),
      matcher_(std::make_unique<Matcher>(rules_)) {
    spec_.provider = Provider::scripted;
}

ScriptedLlm::~ScriptedLlm() = default;

std::string ScriptedLlm::complete(std::string_view system, std::string_view user) const {
    std::string prompt;
    prompt.reserve(system.size() + user.size() + 1);
    prompt.append(system).append("\n").append(user);
    const int r = matcher_->first_match(prompt);
    if (r >= 0) return rules_[static_cast<std::size_t>(r)].response;
    if (!spec_.strict) return spec_.default_response;
    std::string head(user.substr(0, std::min<std::size_t>(user.size(), 120)));
    fail(Errc::no_fixture_match, "no fixture rule matches prompt starting '" + head + "'");
}

struct HttpChatLlm::Gate {
    explicit Gate(int n) : slots(std::max(1, n)) {}
    std::counting_semaphore<1024> slots;
};

HttpChatLlm::HttpChatLlm(LlmSpec spec)
    : spec_(std::move(spec)), gate_(std::make_unique<Gate>(spec_.max_in_flight)) {
    spec_.provider = Provider::http_chat;
    if (spec_.endpoint.empty()) fail(Errc::invalid_argument, "http_chat provider needs an endpoint");
}

HttpChatLlm::~HttpChatLlm() = default;

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

Endpoint split_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) fail(Errc::invalid_argument, "bad endpoint URL '" + url + "'");
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

std::string HttpChatLlm::complete(std::string_view system, std::string_view user) const {
    json body;
    body["model"] = spec_.model_id;
    body["temperature"] = spec_.temperature;
    body["max_tokens"] = spec_.max_tokens;
    body["messages"] = json::array({{{"role", "system"}, {"content", std::string(system)}},
                                    {{"role", "user"}, {"content", std::string(user)}}});

    const Endpoint ep = split_endpoint(spec_.endpoint);
    httplib::Client client(ep.origin);
    client.set_connection_timeout(spec_.timeout);
    client.set_read_timeout(spec_.timeout);
    client.set_write_timeout(spec_.timeout);
    httplib::Headers headers;
    if (!spec_.api_key.empty()) headers.emplace("Authorization", "Bearer " + spec_.api_key);

    gate_->slots.acquire();
    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(ep.path, headers, body.dump(), "application/json");
    gate_->slots.release();

    if (!res) {
        const auto err = res.error();
        const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                               (err == httplib::Error::Read &&
                                std::chrono::steady_clock::now() - started >= spec_.timeout);
        if (timed_out) fail(Errc::timeout, "LLM request timed out after " +
                                               std::to_string(spec_.timeout.count()) + " ms");
        fail(Errc::llm_unavailable, "LLM endpoint unreachable: " + httplib::to_string(err));
    }
    if (res->status < 200 || res->status >= 300)
        fail(Errc::http_error, "LLM endpoint returned HTTP " + std::to_string(res->status));
    try {
        const json reply = json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        fail(Errc::http_error, std::string("malformed chat completion response: ") + e.what());
    }
}

LlmHandle make_llm(const LlmSpec& spec) {
    if (spec.provider == Provider::scripted) {
        if (spec.fixture_path.empty()) fail(Errc::invalid_argument, "scripted provider needs a fixture path");
        return std::make_shared<ScriptedLlm>(load_fixture(spec.fixture_path), spec);
    }
    return std::make_shared<HttpChatLlm>(spec);
}

}  // namespace flightrag::llm
