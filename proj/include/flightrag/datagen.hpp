#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flightrag/category.hpp"
#include "flightrag/flight_store.hpp"
#include "flightrag/llm.hpp"
#include "flightrag/prompting.hpp"

namespace flightrag::datagen {

struct AirlineInfo {
    std::string_view prefix;
    std::string_view name;
    std::string_view alias;  // how operators refer to it in questions
    std::string_view registration_prefix;
    int weight;
};

std::span<const AirlineInfo> airlines();
const AirlineInfo* airline_by_prefix(std::string_view prefix);
// Airline prefix of a flight number ("KL" for "KL1000").
std::string_view flight_prefix(std::string_view flight_nr);

struct FlightGenOptions {
    double connecting_fraction = 0.3;
    double bus_fraction = 0.3;
    double dual_gate_fraction = 0.1;  // bus-gate assignments that reuse a ramp code
};

FlightStore generate_flights(std::size_t n, std::uint64_t seed, const FlightGenOptions& options = {});

// Answer of every pair whose correct reply is a clarification request.
inline constexpr std::string_view kClarify = "CLARIFY";

struct QaPair {
    std::string question;
    std::string answer;
    QuestionCategory category = QuestionCategory::straightforward;
    std::string grounding_uid;
    std::string template_id;
    std::uint64_t seed = 0;
    // Template slot values (flight, gate, time, airline, field...).
    std::map<std::string, std::string> params;

    bool needs_clarification() const { return answer == kClarify; }
    friend bool operator==(const QaPair&, const QaPair&) = default;
};

std::vector<QaPair> generate_straightforward(const FlightStore& store, std::size_t n,
                                             std::uint64_t seed);
// Round-robin over the six ambiguous categories, then shuffled.
std::vector<QaPair> generate_ambiguous(const FlightStore& store, std::size_t n, std::uint64_t seed);
// Like generate_ambiguous but also mixes in straightforward questions.
std::vector<QaPair> generate_classification(const FlightStore& store, std::size_t n,
                                            std::uint64_t seed);
std::vector<QaPair> generate_reasoning(const FlightStore& store, std::size_t n, std::uint64_t seed);
// per_category examples of each ambiguous category.
std::vector<QaPair> generate_classification_fewshot(const FlightStore& store,
                                                    std::size_t per_category, std::uint64_t seed);

enum class QueryKind { sql, graph };

struct GoldQuery {
    std::string question;
    std::string query;
    std::vector<std::vector<std::string>> expected_rows;
    std::string template_id;
    QuestionCategory category = QuestionCategory::straightforward;

    friend bool operator==(const GoldQuery&, const GoldQuery&) = default;
};

// Reference query for a pair, or nullopt for clarification-only pairs.
std::optional<GoldQuery> gold_query(const FlightStore& store, const QaPair& pair, QueryKind kind);
std::vector<GoldQuery> gold_queries(const FlightStore& store, const std::vector<QaPair>& pairs,
                                    QueryKind kind);

// Reference natural-language answer used for few-shot answers and fixtures.
std::string answer_sentence(const QaPair& pair);

struct BundleSizes {
    std::size_t flights = 1350;
    std::size_t straightforward = 150;
    std::size_t ambiguous = 185;
    std::size_t classification = 220;
    std::size_t reasoning = 30;
    std::size_t fewshot_sql = 47;
    std::size_t fewshot_classification_per_category = 10;
    std::size_t fewshot_answers = 20;
};

// Everything an evaluation run needs: the store, the QA sets, few-shot
// examples and the reference queries.
struct Bundle {
    std::uint64_t seed = 0;
    FlightStore store;
    std::vector<QaPair> straightforward;
    std::vector<QaPair> ambiguous;
    std::vector<QaPair> classification;
    std::vector<QaPair> reasoning;
    std::vector<QaPair> fewshot_classification;
    std::vector<prompting::Example> fewshot_sql;
    std::vector<prompting::Example> fewshot_graph;
    std::vector<prompting::Example> fewshot_answers;
    std::vector<GoldQuery> gold_sql;
    std::vector<GoldQuery> gold_graph;
};

Bundle generate_bundle(std::uint64_t seed, const BundleSizes& sizes = {});
Bundle generate_bundle(FlightStore store, std::uint64_t seed, const BundleSizes& sizes = {});

struct FixtureOptions {
    // Every k-th gate-list answer names a flight that does not exist (0 = never).
    std::size_t hallucinate_every = 0;
};

// Scripted-LLM rules answering every prompt an evaluation of the bundle issues.
std::vector<llm::FixtureRule> build_fixture(const Bundle& bundle, const FixtureOptions& options = {});

void write_bundle(const Bundle& bundle, const std::filesystem::path& dir,
                  const FixtureOptions& options = {});
Bundle read_bundle(const std::filesystem::path& dir);

std::string qa_to_jsonl(const std::vector<QaPair>& pairs);
std::vector<QaPair> qa_from_jsonl(std::string_view text);
std::string examples_to_jsonl(const std::vector<prompting::Example>& examples);
std::vector<prompting::Example> examples_from_jsonl(std::string_view text);
std::string gold_to_jsonl(const std::vector<GoldQuery>& gold, QueryKind kind);
std::vector<GoldQuery> gold_from_jsonl(std::string_view text, QueryKind kind);

// Optional enrichment: asks the model to reword each question. Answers and
// slots are kept; a rewrite that drops a slot value is discarded.
std::vector<QaPair> paraphrase(const std::vector<QaPair>& pairs, const llm::Llm& model);

}  // namespace flightrag::datagen
