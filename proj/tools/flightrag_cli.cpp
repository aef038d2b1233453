#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "flightrag.h"
#include "json.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kInput = 2;
constexpr int kUsage = 64;

struct Failure {
    int code;
};

int exit_code_for(frag_status s) {
    switch (s) {
        case FRAG_OK: return kOk;
        case FRAG_ERR_IO: return kInput;
        case FRAG_ERR_INVALID_ARGUMENT: return kUsage;
        default: return kRuntime;
    }
}

void check(frag_status s) {
    if (s == FRAG_OK) return;
    std::cerr << "error: " << frag_last_error_kind() << ": " << frag_last_error() << "\n";
    throw Failure{exit_code_for(s)};
}

struct CStr {
    char* p = nullptr;
    ~CStr() { frag_string_free(p); }
    std::string str() const { return p ? p : ""; }
};

template <class T, void (*Free)(T*)>
struct Handle {
    T* p = nullptr;
    ~Handle() { Free(p); }
};
using Config = Handle<frag_config, frag_config_free>;
using Dataset = Handle<frag_dataset, frag_dataset_free>;
using Engine = Handle<frag_engine, frag_engine_free>;
using Server = Handle<frag_server, frag_server_free>;

// Flags shared by every subcommand; file settings first, flags on top.
struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> dataset;
    std::optional<std::string> llm;
};

void add_common(CLI::App* cmd, Common& c, bool data_flags) {
    cmd->add_option("--config", c.config_path, "settings file (key = value lines, [section] headers)");
    cmd->add_option("--seed", c.seed, "generator and sampling seed");
    if (data_flags) {
        cmd->add_option("--dataset", c.dataset, "dataset directory written by 'genqa --kind dataset'");
        cmd->add_option("--llm", c.llm,
                        "scripted:<fixture.jsonl> or http:<model id> (endpoint and key from "
                        "FLIGHTRAG_LLM_ENDPOINT / FLIGHTRAG_API_KEY); default: the dataset fixture");
    }
}

void load_config(Config& cfg, const Common& c) {
    check(frag_config_new(&cfg.p));
    if (!c.config_path.empty()) check(frag_config_load(cfg.p, c.config_path.c_str()));
    if (c.seed) check(frag_config_set(cfg.p, "seed", std::to_string(*c.seed).c_str()));
    if (c.dataset) check(frag_config_set(cfg.p, "dataset", c.dataset->c_str()));
    if (c.llm) check(frag_config_set(cfg.p, "llm", c.llm->c_str()));
}

void set(Config& cfg, const char* key, const std::string& value) { check(frag_config_set(cfg.p, key, value.c_str())); }

std::string get(const Config& cfg, const char* key) {
    CStr v;
    check(frag_config_get(cfg.p, key, &v.p));
    return v.str();
}

// The configured dataset, or one generated in memory from the seed.
void open_dataset(Dataset& ds, const Config& cfg) {
    const std::string dir = get(cfg, "dataset");
    if (!dir.empty()) {
        check(frag_dataset_load(dir.c_str(), &ds.p));
        return;
    }
    check(frag_dataset_generate(std::stoull(get(cfg, "seed")), 0, &ds.p));
}

int cmd_ingest(const Common& c, const std::string& csv) {
    Config cfg;
    load_config(cfg, c);
    size_t rows = 0;
    check(frag_ingest_csv(csv.c_str(), &rows));
    std::cout << rows << " rows\n";
    return kOk;
}

struct GenqaArgs {
    std::string kind = "dataset";
    std::size_t n = 0;
    std::string out;
    std::string flights;
    std::size_t flight_count = 0;
    std::size_t hallucinate_every = 0;
};

int cmd_genqa(const Common& c, const GenqaArgs& a) {
    Config cfg;
    load_config(cfg, c);
    const std::uint64_t seed = std::stoull(get(cfg, "seed"));
    if (a.kind == "dataset") {
        const std::string out = a.out.empty() ? "dataset-seed" + std::to_string(seed) : a.out;
        Dataset ds;
        check(frag_dataset_generate(seed, a.flight_count, &ds.p));
        check(frag_dataset_write(ds.p, out.c_str(), a.hallucinate_every));
        std::cout << out << "\n";
        return kOk;
    }
    CStr jsonl;
    check(frag_genqa(cfg.p, a.kind.c_str(), a.n, a.flights.empty() ? nullptr : a.flights.c_str(), &jsonl.p));
    const std::string out = a.out.empty() ? a.kind + ".jsonl" : a.out;
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    f << jsonl.str();
    if (!f) {
        std::cerr << "error: cannot write " << out << "\n";
        return kRuntime;
    }
    std::cout << out << "\n";
    return kOk;
}

int cmd_ask(const Common& c, const std::string& pipeline, const std::string& question, bool raw_json) {
    Config cfg;
    load_config(cfg, c);
    Dataset ds;
    open_dataset(ds, cfg);
    Engine engine;
    check(frag_engine_create(ds.p, cfg.p, &engine.p));
    CStr out;
    check(frag_ask(engine.p, question.c_str(), pipeline.c_str(), &out.p));
    if (raw_json) {
        std::cout << out.str() << "\n";
        return kOk;
    }
    const auto j = nlohmann::json::parse(out.str());
    std::cout << j.value("answer", "") << "\n";
    if (j.value("needs_clarification", false)) std::cout << "[needs clarification]\n";
    std::cout << "category: " << j.value("category", "") << "  pipeline: " << j.value("pipeline", "") << "\n";
    for (const auto& e : j["evidence"]) {
        if (e.value("type", "") == "article") {
            std::cout << "evidence: article " << e.value("doc_id", "") << "\n";
            continue;
        }
        std::cout << "evidence: " << e.value("query", "");
        if (e.contains("row_count") && !e["row_count"].is_null()) std::cout << "  (" << e["row_count"] << " rows)";
        if (e.contains("error")) std::cout << "  error: " << e["error"].get<std::string>();
        std::cout << "\n";
    }
    for (const auto& f : j["flags"])
        std::cout << "unverified " << f.value("kind", "") << ": " << f.value("entity", "") << "\n";
    return kOk;
}

struct EvalArgs {
    std::optional<std::string> pipeline;
    std::optional<std::string> task;
    std::optional<std::size_t> repeats;
    std::optional<std::string> report_dir;
    std::optional<std::size_t> answer_sample;
};

int cmd_eval(const Common& c, const EvalArgs& a) {
    Config cfg;
    load_config(cfg, c);
    if (a.pipeline) set(cfg, "pipeline", *a.pipeline);
    if (a.task) set(cfg, "task", *a.task);
    if (a.repeats) set(cfg, "repeats", std::to_string(*a.repeats));
    if (a.report_dir) set(cfg, "report_dir", *a.report_dir);
    if (a.answer_sample) set(cfg, "answer_sample", std::to_string(*a.answer_sample));
    if (get(cfg, "dataset").empty()) {
        std::cerr << "error: eval needs --dataset (or dataset = ... in the config file)\n";
        return kUsage;
    }
    Dataset ds;
    open_dataset(ds, cfg);
    Engine engine;
    check(frag_engine_create(ds.p, cfg.p, &engine.p));
    CStr dir, text;
    check(frag_eval(engine.p, ds.p, cfg.p, &dir.p, &text.p));
    std::cout << text.str() << "\nrun directory: " << dir.str() << "\n";
    return kOk;
}

std::atomic<bool> g_interrupted{false};
extern "C" void on_signal(int) { g_interrupted = true; }

int cmd_serve(const Common& c, std::optional<int> port, const std::string& host) {
    Config cfg;
    load_config(cfg, c);
    if (port) set(cfg, "port", std::to_string(*port));
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    Dataset ds;
    open_dataset(ds, cfg);
    Engine engine;
    check(frag_engine_create(ds.p, cfg.p, &engine.p));
    Server srv;
    check(frag_server_create(engine.p, cfg.p, &srv.p));
    int bound = 0;
    check(frag_server_bind(srv.p, host.c_str(), std::stoi(get(cfg, "port")), &bound));
    std::cout << "listening on http://" << host << ":" << bound << " (" << frag_dataset_flight_count(ds.p)
              << " flights)" << std::endl;

    std::atomic<bool> done{false};
    std::thread watcher([&] {
        while (!done && !g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(50));
        frag_server_stop(srv.p);
    });
    const frag_status s = g_interrupted ? FRAG_OK : frag_server_run(srv.p);
    done = true;
    watcher.join();
    check(s);
    std::cout << "stopped" << std::endl;
    return kOk;
}

std::string config_footer() {
    CStr keys;
    if (frag_config_keys(&keys.p) != FRAG_OK) return {};
    std::string table;
    std::istringstream in(keys.str());
    for (std::string line; std::getline(in, line);) {
        const auto tab = line.find('\t');
        std::string key = line.substr(0, tab);
        key.resize(std::max<std::size_t>(key.size() + 2, 34), ' ');
        table += "  " + key + (tab == std::string::npos ? "" : line.substr(tab + 1)) + "\n";
    }
    return "\nConfig file keys (flags override the file):\n" + table +
           "\nExit codes: 0 ok, 1 runtime failure, 2 missing or unreadable input, 64 usage error.";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conversational flight information over retrieval, SQL and graph pipelines"};
    app.require_subcommand(1);
    app.footer(config_footer());
    app.set_version_flag("--version", frag_version());

    const std::vector<std::string> pipelines = {"traditional", "sql", "graph"};

    Common ingest_c;
    std::string ingest_csv;
    auto* ingest = app.add_subcommand("ingest", "validate a flight table CSV and print its row count");
    add_common(ingest, ingest_c, false);
    ingest->add_option("csv", ingest_csv, "flight table CSV")->required();

    Common genqa_c;
    GenqaArgs genqa_a;
    auto* genqa = app.add_subcommand("genqa", "generate a dataset directory or one question set");
    add_common(genqa, genqa_c, false);
    genqa->add_option("--kind", genqa_a.kind, "dataset, straightforward, ambiguous, classification or reasoning")
        ->check(CLI::IsMember({"dataset", "straightforward", "ambiguous", "classification", "reasoning"}))
        ->capture_default_str();
    genqa->add_option("--n", genqa_a.n, "number of questions (question kinds)");
    genqa->add_option("--out", genqa_a.out, "output file or directory (default <kind>.jsonl / dataset-seed<seed>)");
    genqa->add_option("--flights", genqa_a.flights, "flight CSV to draw questions from (question kinds)");
    genqa->add_option("--flight-count", genqa_a.flight_count, "generated flights (dataset kind, default 1350)");
    genqa->add_option("--hallucinate-every", genqa_a.hallucinate_every,
                      "every k-th gate-list fixture reply names an invented flight (dataset kind)");

    Common ask_c;
    std::string ask_pipeline = "graph", ask_question;
    bool ask_json = false;
    auto* ask = app.add_subcommand("ask", "answer one question and print the reply with its evidence");
    add_common(ask, ask_c, true);
    ask->add_option("--pipeline", ask_pipeline, "traditional, sql or graph")
        ->check(CLI::IsMember(pipelines))
        ->capture_default_str();
    ask->add_flag("--json", ask_json, "print the reply object only");
    ask->add_option("question", ask_question, "the question")->required();

    Common eval_c;
    EvalArgs eval_a;
    auto* eval = app.add_subcommand("eval", "run the evaluation and write a report directory");
    add_common(eval, eval_c, true);
    eval->add_option("--pipeline", eval_a.pipeline, "traditional, sql, graph or all")
        ->check(CLI::IsMember({"traditional", "sql", "graph", "all"}));
    eval->add_option("--task", eval_a.task, "retrieval, answers, classification, queries, reasoning or all")
        ->check(CLI::IsMember({"retrieval", "answers", "classification", "queries", "reasoning", "all"}));
    eval->add_option("--repeats", eval_a.repeats, "classification repeats (default 5)")->check(CLI::PositiveNumber);
    eval->add_option("--report-dir", eval_a.report_dir, "parent of the run directory (default reports)");
    eval->add_option("--answer-sample", eval_a.answer_sample, "questions sampled for answer grading (default 100)");

    Common serve_c;
    std::optional<int> serve_port;
    std::string serve_host = "127.0.0.1";
    auto* serve = app.add_subcommand("serve", "serve the HTTP JSON API until interrupted");
    add_common(serve, serve_c, true);
    serve->add_option("--port", serve_port, "listen port (default 8080)")->check(CLI::Range(0, 65535));
    serve->add_option("--host", serve_host, "listen address")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*ingest) return cmd_ingest(ingest_c, ingest_csv);
        if (*genqa) return cmd_genqa(genqa_c, genqa_a);
        if (*ask) return cmd_ask(ask_c, ask_pipeline, ask_question, ask_json);
        if (*eval) return cmd_eval(eval_c, eval_a);
        if (*serve) return cmd_serve(serve_c, serve_port, serve_host);
    } catch (const Failure& f) {
        return f.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return kUsage;
}
