#include "flightrag.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "flightrag/config.hpp"
#include "flightrag/datagen.hpp"
#include "flightrag/engine.hpp"
#include "flightrag/error.hpp"
#include "flightrag/evalharness.hpp"
#include "flightrag/router.hpp"
#include "flightrag/service.hpp"

using namespace flightrag;

struct frag_config {
    RunConfig run;
};

struct frag_dataset {
    datagen::Bundle bundle;
    std::filesystem::path dir;  // empty when generated in memory
};

struct frag_engine {
    std::shared_ptr<const Engine> engine;
    RunConfig run;  // settings the engine was built with
};

struct frag_server {
    std::unique_ptr<service::Service> svc;
    std::unique_ptr<service::HttpServer> http;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_kind;

frag_status status_of(Errc c) {
    switch (c) {
        case Errc::io: return FRAG_ERR_IO;
        case Errc::invalid_argument: return FRAG_ERR_INVALID_ARGUMENT;
        case Errc::llm_unavailable:
        case Errc::http_error:
        case Errc::timeout:
        case Errc::no_fixture_match: return FRAG_ERR_LLM;
        case Errc::unparseable_after_retry:
        case Errc::unknown_column:
        case Errc::unknown_table:
        case Errc::forbidden_statement:
        case Errc::multiple_statements:
        case Errc::unknown_label:
        case Errc::unknown_rel_type:
        case Errc::unknown_property: return FRAG_ERR_QUERY;
        case Errc::missing_variable:
        case Errc::internal: return FRAG_ERR_INTERNAL;
        default: return FRAG_ERR_DATA;
    }
}

frag_status set_error(frag_status s, std::string kind, std::string message) {
    g_kind = std::move(kind);
    g_error = std::move(message);
    return s;
}

template <class F>
frag_status guarded(F&& f) {
    try {
        f();
        g_error.clear();
        g_kind.clear();
        return FRAG_OK;
    } catch (const Error& e) {
        return set_error(status_of(e.code()), std::string(errc_name(e.code())), e.what());
    } catch (const std::bad_alloc&) {
        return set_error(FRAG_ERR_INTERNAL, "OutOfMemory", "out of memory");
    } catch (const std::exception& e) {
        return set_error(FRAG_ERR_INTERNAL, "Internal", e.what());
    }
}

frag_status null_arg(const char* what) {
    return set_error(FRAG_ERR_INVALID_ARGUMENT, "InvalidArgument", std::string(what) + " must not be NULL");
}

char* dup(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(Errc::io, "cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

llm::LlmHandle model_for(const frag_dataset& ds, const std::string& flag, std::string& described) {
    if (!flag.empty()) {
        described = flag;
        return llm::make_llm(llm::parse_llm_flag(flag));
    }
    llm::LlmSpec spec;
    spec.provider = llm::Provider::scripted;
    if (!ds.dir.empty() && std::filesystem::exists(ds.dir / "fixture.jsonl")) {
        spec.fixture_path = (ds.dir / "fixture.jsonl").string();
        described = "scripted:" + spec.fixture_path;
        return std::make_shared<llm::ScriptedLlm>(llm::load_fixture(spec.fixture_path), spec);
    }
    spec.fixture_path = "(generated)";
    described = "scripted:generated";
    return std::make_shared<llm::ScriptedLlm>(datagen::build_fixture(ds.bundle), spec);
}

}  // namespace

extern "C" {

const char* frag_version(void) { return "0.1.0"; }
const char* frag_last_error(void) { return g_error.c_str(); }
const char* frag_last_error_kind(void) { return g_kind.c_str(); }
void frag_string_free(char* s) { std::free(s); }

frag_status frag_config_new(frag_config** out) {
    if (!out) return null_arg("out");
    return guarded([&] { *out = new frag_config{}; });
}

void frag_config_free(frag_config* cfg) { delete cfg; }

frag_status frag_config_load(frag_config* cfg, const char* path) {
    if (!cfg || !path) return null_arg("cfg/path");
    return guarded([&] { cfg->run = load_config(path, cfg->run); });
}

frag_status frag_config_set(frag_config* cfg, const char* key, const char* value) {
    if (!cfg || !key || !value) return null_arg("cfg/key/value");
    return guarded([&] { set_config_value(cfg->run, key, value); });
}

frag_status frag_config_get(const frag_config* cfg, const char* key, char** out_value) {
    if (!cfg || !key || !out_value) return null_arg("cfg/key/out_value");
    return guarded([&] { *out_value = dup(get_config_value(cfg->run, key)); });
}

frag_status frag_config_keys(char** out_text) {
    if (!out_text) return null_arg("out_text");
    return guarded([&] {
        std::string text;
        for (const auto& [k, doc] : config_key_docs()) text += k + "\t" + doc + "\n";
        *out_text = dup(text);
    });
}

frag_status frag_ingest_csv(const char* path, size_t* out_rows) {
    if (!path || !out_rows) return null_arg("path/out_rows");
    return guarded([&] { *out_rows = ingest_csv(path).size(); });
}

frag_status frag_genqa(const frag_config* cfg, const char* kind, size_t n, const char* flights_csv,
                       char** out_jsonl) {
    if (!cfg || !kind || !out_jsonl) return null_arg("cfg/kind/out_jsonl");
    return guarded([&] {
        const std::uint64_t seed = cfg->run.seed;
        const FlightStore store =
            flights_csv ? ingest_csv(flights_csv) : datagen::generate_flights(datagen::BundleSizes{}.flights, seed);
        const std::string k = kind;
        std::vector<datagen::QaPair> pairs;
        if (n > 0) {
            if (k == "straightforward") pairs = datagen::generate_straightforward(store, n, seed);
            else if (k == "ambiguous") pairs = datagen::generate_ambiguous(store, n, seed);
            else if (k == "classification") pairs = datagen::generate_classification(store, n, seed);
            else if (k == "reasoning") pairs = datagen::generate_reasoning(store, n, seed);
            else fail(Errc::invalid_argument, "unknown question kind: " + k);
        } else if (k != "straightforward" && k != "ambiguous" && k != "classification" && k != "reasoning") {
            fail(Errc::invalid_argument, "unknown question kind: " + k);
        }
        *out_jsonl = dup(datagen::qa_to_jsonl(pairs));
    });
}

frag_status frag_dataset_generate(uint64_t seed, size_t flights, frag_dataset** out) {
    if (!out) return null_arg("out");
    return guarded([&] {
        datagen::BundleSizes sizes;
        if (flights) sizes.flights = flights;
        auto ds = std::make_unique<frag_dataset>();
        ds->bundle = datagen::generate_bundle(seed, sizes);
        *out = ds.release();
    });
}

frag_status frag_dataset_load(const char* dir, frag_dataset** out) {
    if (!dir || !out) return null_arg("dir/out");
    return guarded([&] {
        auto ds = std::make_unique<frag_dataset>();
        ds->bundle = datagen::read_bundle(dir);
        ds->dir = dir;
        *out = ds.release();
    });
}

frag_status frag_dataset_write(const frag_dataset* ds, const char* dir, size_t hallucinate_every) {
    if (!ds || !dir) return null_arg("ds/dir");
    return guarded([&] { datagen::write_bundle(ds->bundle, dir, {.hallucinate_every = hallucinate_every}); });
}

size_t frag_dataset_flight_count(const frag_dataset* ds) { return ds ? ds->bundle.store.size() : 0; }

void frag_dataset_free(frag_dataset* ds) { delete ds; }

frag_status frag_engine_create(const frag_dataset* ds, const frag_config* cfg, frag_engine** out) {
    if (!ds || !cfg || !out) return null_arg("ds/cfg/out");
    return guarded([&] {
        auto h = std::make_unique<frag_engine>();
        h->run = cfg->run;
        auto model = model_for(*ds, cfg->run.llm, h->run.llm);
        const auto& b = ds->bundle;
        FewshotSet fewshot{router::classification_examples(b.fewshot_classification), b.fewshot_sql,
                           b.fewshot_graph, b.fewshot_answers};
        h->engine = std::make_shared<const Engine>(b.store, std::move(model), cfg->run.engine, std::move(fewshot));
        *out = h.release();
    });
}

void frag_engine_free(frag_engine* engine) { delete engine; }

frag_status frag_ask(const frag_engine* engine, const char* question, const char* pipeline, char** out_json) {
    if (!engine || !question || !pipeline || !out_json) return null_arg("engine/question/pipeline/out_json");
    return guarded([&] {
        const auto p = parse_pipeline(pipeline);
        if (!p) fail(Errc::invalid_argument, std::string("unknown pipeline: ") + pipeline);
        if (std::string_view(question).empty()) fail(Errc::invalid_argument, "question is empty");
        *out_json = dup(service::ask_response_json(engine->engine->ask(question, *p)));
    });
}

frag_status frag_eval(const frag_engine* engine, const frag_dataset* ds, const frag_config* cfg, char** out_run_dir,
                      char** out_report_text) {
    if (!engine || !ds || !cfg) return null_arg("engine/ds/cfg");
    return guarded([&] {
        RunConfig run = cfg->run;
        run.engine = engine->run.engine;
        run.llm = engine->run.llm;
        run.dataset = ds->dir.empty() ? "generated-seed" + std::to_string(ds->bundle.seed) : ds->dir.string();
        const auto report = eval::run_eval(ds->bundle, *engine->engine, eval::plan_from_config(run), run);
        const auto dir = eval::write_run(report, run.report_dir);
        const std::string text = read_text(dir / "report.txt");
        char* d = out_run_dir ? dup(dir.string()) : nullptr;
        try {
            if (out_report_text) *out_report_text = dup(text);
        } catch (...) {
            std::free(d);
            throw;
        }
        if (out_run_dir) *out_run_dir = d;
    });
}

frag_status frag_server_create(const frag_engine* engine, const frag_config* cfg, frag_server** out) {
    if (!engine || !cfg || !out) return null_arg("engine/cfg/out");
    return guarded([&] {
        service::ServiceOptions o;
        o.session_ttl = std::chrono::minutes(cfg->run.session_ttl_minutes);
        o.cors_origin = cfg->run.cors_origin;
        auto s = std::make_unique<frag_server>();
        s->svc = std::make_unique<service::Service>(engine->engine, o);
        s->http = std::make_unique<service::HttpServer>(*s->svc);
        *out = s.release();
    });
}

frag_status frag_server_bind(frag_server* srv, const char* host, int port, int* out_port) {
    if (!srv || !host) return null_arg("srv/host");
    if (port < 0 || port > 65535)
        return set_error(FRAG_ERR_INVALID_ARGUMENT, "InvalidArgument", "port out of range");
    if (!srv->http->bind(host, port))
        return set_error(FRAG_ERR_BIND, "BindFailed",
                         "cannot bind " + std::string(host) + ":" + std::to_string(port));
    if (out_port) *out_port = srv->http->port();
    return FRAG_OK;
}

frag_status frag_server_run(frag_server* srv) {
    if (!srv) return null_arg("srv");
    return guarded([&] { srv->http->listen(); });
}

void frag_server_stop(frag_server* srv) {
    if (srv) srv->http->stop();
}

void frag_server_free(frag_server* srv) { delete srv; }

}  // extern "C"
