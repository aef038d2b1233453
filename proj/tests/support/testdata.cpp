#include "testdata.hpp"

#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "flightrag/router.hpp"

namespace testsupport {

using namespace flightrag;

const datagen::Bundle& default_bundle() {
    static const datagen::Bundle bundle = datagen::generate_bundle(kSeed);
    return bundle;
}

llm::LlmHandle scripted(std::vector<llm::FixtureRule> rules, bool strict,
                        std::string default_response) {
    llm::LlmSpec spec;
    spec.provider = llm::Provider::scripted;
    spec.fixture_path = "(memory)";
    spec.strict = strict;
    spec.default_response = std::move(default_response);
    return std::make_shared<llm::ScriptedLlm>(std::move(rules), spec);
}

llm::LlmHandle default_model() {
    static const llm::LlmHandle model = scripted(datagen::build_fixture(default_bundle()));
    return model;
}

FewshotSet default_fewshot() {
    const auto& b = default_bundle();
    return {router::classification_examples(b.fewshot_classification), b.fewshot_sql,
            b.fewshot_graph, b.fewshot_answers};
}

const Engine& default_engine() {
    static const Engine engine(default_bundle().store, default_model(), EngineConfig{},
                               default_fewshot());
    return engine;
}

std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("flightrag_test_" + std::to_string(::getpid())) / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> words(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ' ') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

RandomCorpus random_corpus(std::size_t docs, std::size_t queries, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::string> vocab;
    for (int i = 0; i < 300; ++i) {
        std::string w;
        for (std::size_t n = 3 + rng.below(5); n > 0; --n) w += static_cast<char>('a' + rng.below(26));
        vocab.push_back(w);
    }
    RandomCorpus c;
    for (std::size_t d = 0; d < docs; ++d) {
        std::string text;
        for (std::size_t n = 5 + rng.below(40); n > 0; --n) {
            // Zipf-ish skew so some terms are common
            const std::size_t r = rng.below(vocab.size());
            text += vocab[rng.chance(0.5) ? r / 10 : r] + " ";
        }
        char id[32];
        std::snprintf(id, sizeof id, "doc-%04zu", d);
        c.articles.push_back({id, text, id});
    }
    for (std::size_t q = 0; q < queries; ++q) {
        std::string text;
        for (std::size_t n = 1 + rng.below(5); n > 0; --n) text += vocab[rng.below(vocab.size() / 3)] + " ";
        c.queries.push_back(text);
    }
    return c;
}

std::vector<std::vector<std::string>> corpus_tokens(const std::vector<Article>& articles) {
    std::vector<std::vector<std::string>> out;
    for (const auto& a : articles) out.push_back(words(a.text));
    return out;
}

std::vector<Article> evidence_for(const std::vector<const FlightRecord*>& recs) {
    std::vector<Article> out;
    for (const auto* r : recs) out.push_back({r->flight_uid, render_article_text(*r), r->flight_uid});
    return out;
}

std::string echo_answer(const std::vector<const FlightRecord*>& recs, Rng& rng) {
    std::string s;
    for (const auto* r : recs) {
        switch (rng.below(4)) {
            case 0: s += "Flight " + r->flight_nr + " is at ramp " + r->ramp + ". "; break;
            case 1: s += r->flight_nr + " is operated by " + r->airline_name + ". "; break;
            case 2: s += "Flight " + r->flight_nr + " is expected on the ramp at " + r->expected_on_ramp.to_string() + ". "; break;
            default:
                s += "The scheduled block time of " + r->flight_nr + " is " + r->scheduled_block.to_string() + ".";
                if (!r->bus_gate.empty()) s += " Passengers board at gate " + r->bus_gate + ".";
                s += " ";
        }
    }
    return s;
}

Injection fabricate(const FlightStore& store, Rng& rng) {
    switch (rng.below(4)) {
        case 0: {
            std::string nr;
            do {
                nr = "FR" + std::to_string(1000 + rng.below(9000));
            } while (store.find_flight_nr(nr));
            return {"Flight " + nr + " is also expected.", EntityKind::flight_nr};
        }
        case 1: return {"It moved to ramp A" + std::to_string(10 + rng.below(90)) + ".", EntityKind::ramp};
        case 2:
            return {"It leaves at 2031-0" + std::to_string(1 + rng.below(9)) + "-11 10:00:00+0000.",
                    EntityKind::timestamp};
        default: {
            static const char* foreign[] = {"Ryanair", "Emirates", "Qatar Airways", "Vueling", "Iberia"};
            return {std::string("It is a ") + foreign[rng.below(5)] + " service.", EntityKind::airline};
        }
    }
}

}  // namespace testsupport
