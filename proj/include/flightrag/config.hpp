#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "flightrag/engine.hpp"

namespace flightrag {

// Settings shared by every CLI subcommand. File format, one setting per line:
//
//   # comment
//   seed = 42
//   [retrieval]
//   method = "bm25"        -> key retrieval.method
//
// Keys are listed in config_keys(); unknown keys are rejected.
struct RunConfig {
    std::uint64_t seed = 42;
    std::string dataset;     // bundle directory
    std::string llm;         // --llm flag syntax; empty = <dataset>/fixture.jsonl
    std::string pipeline = "all";
    std::string task = "all";
    std::size_t repeats = 5;
    std::string report_dir = "reports";
    std::size_t answer_sample = 100;
    EngineConfig engine;
    int port = 8080;
    std::size_t session_ttl_minutes = 15;
    std::string cors_origin = "*";
};

const std::map<std::string, std::string>& config_key_docs();

// Applies key=value lines on top of `base`. Errors carry the line number.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
// One key, value as written in a file (quotes optional).
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);
std::string get_config_value(const RunConfig& config, std::string_view key);

// Every key with its current value; paths are reduced to their last component.
std::map<std::string, std::string> config_snapshot(const RunConfig& config);

}  // namespace flightrag
