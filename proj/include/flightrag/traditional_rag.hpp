#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flightrag/flight_store.hpp"
#include "flightrag/llm.hpp"
#include "flightrag/prompting.hpp"
#include "flightrag/retrieval.hpp"

namespace flightrag {

enum class Pipeline { traditional, sql, graph };

std::string_view pipeline_name(Pipeline p);
std::optional<Pipeline> parse_pipeline(std::string_view name);

enum class EntityKind { flight_nr, gate, ramp, airline, timestamp };

std::string_view entity_kind_name(EntityKind k);

struct EntityFlag {
    std::string entity;
    EntityKind kind = EntityKind::flight_nr;

    friend bool operator==(const EntityFlag&, const EntityFlag&) = default;
};

struct RagAnswer {
    std::string text;
    std::vector<std::string> evidence_doc_ids;
    Pipeline pipeline = Pipeline::traditional;
    bool flagged_hallucination = false;
    std::vector<EntityFlag> flags;
};

struct ExtractedEntity {
    std::string text;
    EntityKind kind;
};

// Flight numbers, gate/ramp codes, airline names and timestamps, in text order.
std::vector<ExtractedEntity> extract_entities(std::string_view text);

struct GuardResult {
    std::vector<EntityFlag> flags;
    std::string sanitized_text;  // the input text when nothing was flagged
};

// Flags every extracted entity found neither in the evidence nor in the store.
GuardResult guard_hallucination(std::string_view answer, std::span<const Article> evidence,
                                const FlightStore& store);

struct TraditionalOptions {
    retrieval::Method method = retrieval::Method::bm25;
    std::size_t k = 10;
    bool guard = true;
    std::vector<prompting::Example> fewshot;
    std::size_t max_prompt_chars = 0;
    // When set, evidence is every article whose ramp or bus gate equals it.
    std::optional<std::string> gate;
    double hybrid_keyword_weight = 0.9;
    double mmr_lambda = 0.5;
};

retrieval::RankedList retrieve(const retrieval::IndexBundle& index, std::string_view query,
                               retrieval::Method method, std::size_t k,
                               double hybrid_keyword_weight = 0.9, double mmr_lambda = 0.5);

// `articles` must be the corpus the index was built from, in the same order.
RagAnswer answer_traditional(std::string_view question, const retrieval::IndexBundle& index,
                             const std::vector<Article>& articles, const FlightStore& store,
                             const llm::Llm& model, const TraditionalOptions& options = {});

}  // namespace flightrag
