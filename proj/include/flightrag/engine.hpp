#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flightrag/category.hpp"
#include "flightrag/flight_store.hpp"
#include "flightrag/graphrag.hpp"
#include "flightrag/llm.hpp"
#include "flightrag/prompting.hpp"
#include "flightrag/retrieval.hpp"
#include "flightrag/router.hpp"
#include "flightrag/schema.hpp"
#include "flightrag/sqlrag.hpp"
#include "flightrag/traditional_rag.hpp"

namespace flightrag {

struct EngineConfig {
    retrieval::IndexConfig index;
    retrieval::Method method = retrieval::Method::bm25;
    std::size_t k = 10;
    double hybrid_keyword_weight = 0.9;
    double mmr_lambda = 0.5;
    bool guard = true;
    sql::PromptStyle sql_style = sql::PromptStyle::odp;
    std::size_t max_prompt_chars = 0;
    bool rules_fallback = true;
};

struct FewshotSet {
    std::vector<prompting::Example> classification;
    std::vector<prompting::Example> sql;
    std::vector<prompting::Example> graph;
    std::vector<prompting::Example> answers;
};

struct AskResponse {
    std::string answer;
    QuestionCategory category = QuestionCategory::straightforward;
    router::Action action = router::Action::direct_answer;
    Pipeline pipeline = Pipeline::traditional;
    bool needs_clarification = false;
    std::vector<std::string> evidence_doc_ids;  // traditional
    std::string query;                          // sql / graph
    std::optional<std::size_t> row_count;       // sql / graph
    std::vector<EntityFlag> flags;
    // Set when the generated query could not be run; the answer then says so.
    std::string query_error;
};

class Engine {
public:
    Engine(FlightStore store, llm::LlmHandle model, EngineConfig config = {},
           FewshotSet fewshot = {});

    const FlightStore& store() const { return store_; }
    const std::vector<Article>& articles() const { return articles_; }
    const retrieval::IndexBundle& index() const { return *index_; }
    const graph::PropertyGraph& graph() const { return *graph_; }
    const SchemaDescription& graph_schema() const { return graph_schema_; }
    const EngineConfig& config() const { return config_; }
    const llm::Llm* model() const { return model_.get(); }

    router::RouteDecision route(std::string_view question) const;
    // Model failures propagate as Error with is_llm_failure().
    AskResponse ask(std::string_view question, Pipeline pipeline) const;
    AskResponse answer(std::string_view question, Pipeline pipeline,
                       const router::RouteDecision& decision) const;
    // Query text the sql or graph pipeline would run for the question, unrouted.
    std::string generate_query(std::string_view question, Pipeline pipeline) const;

private:
    FlightStore store_;
    llm::LlmHandle model_;
    EngineConfig config_;
    FewshotSet fewshot_;
    std::vector<Article> articles_;
    std::unique_ptr<retrieval::IndexBundle> index_;
    std::unique_ptr<graph::PropertyGraph> graph_;
    SchemaDescription graph_schema_;

    router::RouterOptions router_options() const;
};

}  // namespace flightrag
