#ifndef FLIGHTRAG_H
#define FLIGHTRAG_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(FLIGHTRAG_BUILDING)
#define FLIGHTRAG_API __attribute__((visibility("default")))
#else
#define FLIGHTRAG_API
#endif

typedef enum frag_status {
    FRAG_OK = 0,
    FRAG_ERR_INVALID_ARGUMENT = 1, /* bad parameter, unknown name or setting */
    FRAG_ERR_IO = 2,               /* file or directory missing or unwritable */
    FRAG_ERR_DATA = 3,             /* malformed or inconsistent input data */
    FRAG_ERR_LLM = 4,              /* model backend unavailable or failing */
    FRAG_ERR_QUERY = 5,            /* generated query rejected or not executable */
    FRAG_ERR_BIND = 6,             /* server address unavailable */
    FRAG_ERR_INTERNAL = 7
} frag_status;

typedef struct frag_config frag_config;
typedef struct frag_dataset frag_dataset;
typedef struct frag_engine frag_engine;
typedef struct frag_server frag_server;

FLIGHTRAG_API const char* frag_version(void);

/* Details of the last failure on the calling thread. The kind is a stable
   CamelCase name such as "DuplicateUid". Both stay valid until the next call. */
FLIGHTRAG_API const char* frag_last_error(void);
FLIGHTRAG_API const char* frag_last_error_kind(void);

/* Every char** result is allocated by the library. */
FLIGHTRAG_API void frag_string_free(char* s);

/* Run settings. Keys as in config files, e.g. "seed", "retrieval.method". */
FLIGHTRAG_API frag_status frag_config_new(frag_config** out);
FLIGHTRAG_API void frag_config_free(frag_config* cfg);
FLIGHTRAG_API frag_status frag_config_load(frag_config* cfg, const char* path);
FLIGHTRAG_API frag_status frag_config_set(frag_config* cfg, const char* key, const char* value);
/* Current value of one key; see frag_config_keys for the list. */
FLIGHTRAG_API frag_status frag_config_get(const frag_config* cfg, const char* key, char** out_value);
/* "key<TAB>description" lines. */
FLIGHTRAG_API frag_status frag_config_keys(char** out_text);

/* Validates a flight table CSV and reports its row count. */
FLIGHTRAG_API frag_status frag_ingest_csv(const char* path, size_t* out_rows);

/* Generated question set as JSON lines. kind: straightforward, ambiguous,
   classification or reasoning. Flights come from flights_csv, or are
   generated from the config seed when it is NULL. */
FLIGHTRAG_API frag_status frag_genqa(const frag_config* cfg, const char* kind, size_t n,
                                     const char* flights_csv, char** out_jsonl);

/* flights = 0 means the default size. */
FLIGHTRAG_API frag_status frag_dataset_generate(uint64_t seed, size_t flights, frag_dataset** out);
FLIGHTRAG_API frag_status frag_dataset_load(const char* dir, frag_dataset** out);
/* hallucinate_every: every k-th gate-list reply in fixture.jsonl names an
   invented flight (0 = never). */
FLIGHTRAG_API frag_status frag_dataset_write(const frag_dataset* ds, const char* dir,
                                             size_t hallucinate_every);
FLIGHTRAG_API size_t frag_dataset_flight_count(const frag_dataset* ds);
FLIGHTRAG_API void frag_dataset_free(frag_dataset* ds);

/* The "llm" key selects the model; empty uses the dataset's own fixture. */
FLIGHTRAG_API frag_status frag_engine_create(const frag_dataset* ds, const frag_config* cfg,
                                             frag_engine** out);
FLIGHTRAG_API void frag_engine_free(frag_engine* engine);

/* pipeline: traditional, sql or graph. Result is the /v1/ask JSON object
   without session fields. */
FLIGHTRAG_API frag_status frag_ask(const frag_engine* engine, const char* question,
                                   const char* pipeline, char** out_json);

/* Runs the evaluation selected by "pipeline", "task" and "repeats" and writes
   report.json, report.csv, report.txt and confusion.csv under
   <report_dir>/<run id>. Either output may be NULL. */
FLIGHTRAG_API frag_status frag_eval(const frag_engine* engine, const frag_dataset* ds,
                                    const frag_config* cfg, char** out_run_dir,
                                    char** out_report_text);

/* HTTP service over an engine; the engine must outlive the server. */
FLIGHTRAG_API frag_status frag_server_create(const frag_engine* engine, const frag_config* cfg,
                                             frag_server** out);
/* port 0 picks a free port; the bound port is stored in out_port. */
FLIGHTRAG_API frag_status frag_server_bind(frag_server* srv, const char* host, int port,
                                           int* out_port);
/* Blocks until frag_server_stop. */
FLIGHTRAG_API frag_status frag_server_run(frag_server* srv);
/* Safe to call from another thread. */
FLIGHTRAG_API void frag_server_stop(frag_server* srv);
FLIGHTRAG_API void frag_server_free(frag_server* srv);

#ifdef __cplusplus
}
#endif

#endif
