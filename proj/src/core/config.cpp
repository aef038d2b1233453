#include "flightrag/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "flightrag/error.hpp"
#include "text_util.hpp"

namespace flightrag {

namespace {

using detail::trim;

template <class T>
T parse_number(std::string_view key, std::string_view v) {
    T out{};
    const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || end != v.data() + v.size())
        fail(Errc::invalid_argument, std::string(key) + ": not a number: " + std::string(v));
    return out;
}

double parse_double(std::string_view key, std::string_view v) {
    // from_chars for double is missing on GCC 11
    std::string s(v);
    std::size_t used = 0;
    double out = 0;
    try {
        out = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size())
        fail(Errc::invalid_argument, std::string(key) + ": not a number: " + s);
    return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail(Errc::invalid_argument, std::string(key) + ": expected true or false: " + std::string(v));
}

std::string unquote(std::string_view v) {
    v = trim(v);
    if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front())
        return std::string(v.substr(1, v.size() - 2));
    return std::string(v);
}

std::string fmt_double(double d) {
    std::ostringstream ss;
    ss << d;
    return ss.str();
}

std::string last_component(const std::string& p) {
    if (p.empty()) return p;
    std::filesystem::path path(p);
    if (!path.has_filename()) path = path.parent_path();
    return path.filename().string();
}

// scripted:<path> keeps only the file name
std::string llm_for_snapshot(const std::string& flag) {
    const auto colon = flag.find(':');
    if (colon == std::string::npos || flag.compare(0, colon, "scripted") != 0) return flag;
    return "scripted:" + last_component(flag.substr(colon + 1));
}

}  // namespace

const std::map<std::string, std::string>& config_key_docs() {
    static const std::map<std::string, std::string> docs = {
        {"seed", "generator seed (integer)"},
        {"dataset", "dataset directory written by genqa"},
        {"llm", "scripted:<fixture.jsonl> or http:<model id>; default <dataset>/fixture.jsonl"},
        {"pipeline", "traditional, sql, graph or all"},
        {"task", "retrieval, answers, classification, queries, reasoning or all"},
        {"repeats", "classification repeats"},
        {"report_dir", "parent directory of eval run directories"},
        {"answer_sample", "number of questions sampled for answer grading"},
        {"port", "service port"},
        {"session_ttl_minutes", "idle session lifetime"},
        {"cors_origin", "Access-Control-Allow-Origin value"},
        {"retrieval.method", "bm25, tfidf_cos, tfidf_euc, lsi, vector, hybrid or mmr"},
        {"retrieval.k", "articles passed to the answer prompt"},
        {"retrieval.k1", "BM25 k1"},
        {"retrieval.b", "BM25 b"},
        {"retrieval.lsi_rank", "latent dimensions, 0 disables"},
        {"retrieval.embedding_dim", "hashing embedder width"},
        {"retrieval.hybrid_keyword_weight", "keyword share of the hybrid fusion"},
        {"retrieval.mmr_lambda", "relevance share of the MMR rerank"},
        {"answer.guard", "replace answers naming unverified entities (true/false)"},
        {"answer.max_prompt_chars", "prompt budget, 0 = unlimited"},
        {"answer.rules_fallback", "route by rules when the model fails (true/false)"},
        {"sql.style", "odp or crp"},
    };
    return docs;
}

void set_config_value(RunConfig& c, std::string_view key, std::string_view raw) {
    const std::string v = unquote(raw);
    auto& e = c.engine;
    if (key == "seed") c.seed = parse_number<std::uint64_t>(key, v);
    else if (key == "dataset") c.dataset = v;
    else if (key == "llm") c.llm = v;
    else if (key == "pipeline") c.pipeline = v;
    else if (key == "task") c.task = v;
    else if (key == "repeats") c.repeats = parse_number<std::size_t>(key, v);
    else if (key == "report_dir") c.report_dir = v;
    else if (key == "answer_sample") c.answer_sample = parse_number<std::size_t>(key, v);
    else if (key == "port") c.port = parse_number<int>(key, v);
    else if (key == "session_ttl_minutes") c.session_ttl_minutes = parse_number<std::size_t>(key, v);
    else if (key == "cors_origin") c.cors_origin = v;
    else if (key == "retrieval.method") {
        const auto m = retrieval::parse_method(v);
        if (!m) fail(Errc::invalid_argument, "retrieval.method: unknown method " + v);
        e.method = *m;
    } else if (key == "retrieval.k") e.k = parse_number<std::size_t>(key, v);
    else if (key == "retrieval.k1") e.index.k1 = parse_double(key, v);
    else if (key == "retrieval.b") e.index.b = parse_double(key, v);
    else if (key == "retrieval.lsi_rank") e.index.lsi_rank = parse_number<std::size_t>(key, v);
    else if (key == "retrieval.embedding_dim") e.index.embedding_dim = parse_number<std::size_t>(key, v);
    else if (key == "retrieval.hybrid_keyword_weight") e.hybrid_keyword_weight = parse_double(key, v);
    else if (key == "retrieval.mmr_lambda") e.mmr_lambda = parse_double(key, v);
    else if (key == "answer.guard") e.guard = parse_bool(key, v);
    else if (key == "answer.max_prompt_chars") e.max_prompt_chars = parse_number<std::size_t>(key, v);
    else if (key == "answer.rules_fallback") e.rules_fallback = parse_bool(key, v);
    else if (key == "sql.style") {
        if (v == "odp") e.sql_style = sql::PromptStyle::odp;
        else if (v == "crp") e.sql_style = sql::PromptStyle::crp;
        else fail(Errc::invalid_argument, "sql.style: expected odp or crp: " + v);
    } else {
        fail(Errc::invalid_argument, "unknown config key: " + std::string(key));
    }
}

RunConfig parse_config(std::string_view text, RunConfig base) {
    std::string section;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view l = trim(line);
        if (l.empty() || l.front() == '#') continue;
        const std::string where = "line " + std::to_string(line_no) + ": ";
        if (l.front() == '[') {
            if (l.back() != ']') fail(Errc::parse_error, where + "unterminated section header");
            section = std::string(trim(l.substr(1, l.size() - 2)));
            continue;
        }
        const auto eq = l.find('=');
        if (eq == std::string_view::npos) fail(Errc::parse_error, where + "expected key = value");
        std::string_view value = trim(l.substr(eq + 1));
        // trailing comment outside quotes
        if (!value.empty() && value.front() != '"' && value.front() != '\'') {
            if (const auto hash = value.find(" #"); hash != std::string_view::npos)
                value = trim(value.substr(0, hash));
        }
        std::string key(trim(l.substr(0, eq)));
        if (key.empty()) fail(Errc::parse_error, where + "empty key");
        if (!section.empty()) key = section + "." + key;
        try {
            set_config_value(base, key, value);
        } catch (const Error& e) {
            fail(e.code(), where + e.what());
        }
    }
    return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io, "cannot read config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

std::string get_config_value(const RunConfig& c, std::string_view key) {
    if (key == "dataset") return c.dataset;
    if (key == "llm") return c.llm;
    if (key == "report_dir") return c.report_dir;
    if (key == "port") return std::to_string(c.port);
    if (key == "session_ttl_minutes") return std::to_string(c.session_ttl_minutes);
    if (key == "cors_origin") return c.cors_origin;
    const auto snap = config_snapshot(c);
    if (const auto it = snap.find(std::string(key)); it != snap.end()) return it->second;
    fail(Errc::invalid_argument, "unknown config key: " + std::string(key));
}

std::map<std::string, std::string> config_snapshot(const RunConfig& c) {
    const auto& e = c.engine;
    return {
        {"seed", std::to_string(c.seed)},
        {"dataset", last_component(c.dataset)},
        {"llm", llm_for_snapshot(c.llm)},
        {"pipeline", c.pipeline},
        {"task", c.task},
        {"repeats", std::to_string(c.repeats)},
        {"answer_sample", std::to_string(c.answer_sample)},
        {"retrieval.method", std::string(retrieval::method_name(e.method))},
        {"retrieval.k", std::to_string(e.k)},
        {"retrieval.k1", fmt_double(e.index.k1)},
        {"retrieval.b", fmt_double(e.index.b)},
        {"retrieval.lsi_rank", std::to_string(e.index.lsi_rank)},
        {"retrieval.embedding_dim", std::to_string(e.index.embedding_dim)},
        {"retrieval.hybrid_keyword_weight", fmt_double(e.hybrid_keyword_weight)},
        {"retrieval.mmr_lambda", fmt_double(e.mmr_lambda)},
        {"answer.guard", e.guard ? "true" : "false"},
        {"answer.max_prompt_chars", std::to_string(e.max_prompt_chars)},
        {"answer.rules_fallback", e.rules_fallback ? "true" : "false"},
        {"sql.style", std::string(sql::style_name(e.sql_style))},
    };
}

}  // namespace flightrag
