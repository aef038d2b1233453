#include "flightrag/engine.hpp"

#include "flightrag/error.hpp"

namespace flightrag {

namespace {

constexpr std::string_view kQueryFailedAnswer =
    "I could not answer this question from the flight data.";

const llm::Llm& require(const llm::LlmHandle& model) {
    if (!model) fail(Errc::llm_unavailable, "no language model configured");
    return *model;
}

}  // namespace

Engine::Engine(FlightStore store, llm::LlmHandle model, EngineConfig config, FewshotSet fewshot)
    : store_(std::move(store)),
      model_(std::move(model)),
      config_(std::move(config)),
      fewshot_(std::move(fewshot)) {
    if (store_.empty()) fail(Errc::empty_store, "flight store is empty");
    articles_ = render_articles(store_);
    index_ = std::make_unique<retrieval::IndexBundle>(
        retrieval::IndexBundle::build(articles_, config_.index));
    graph_ = std::make_unique<graph::PropertyGraph>(graph::build_graph(store_));
    graph_schema_ = graph::introspect_schema(*graph_);
}

router::RouterOptions Engine::router_options() const {
    router::RouterOptions o;
    o.fewshot = fewshot_.classification;
    o.max_prompt_chars = config_.max_prompt_chars;
    o.rules_fallback = config_.rules_fallback;
    return o;
}

router::RouteDecision Engine::route(std::string_view question) const {
    return router::route(question, model_.get(), router_options());
}

AskResponse Engine::ask(std::string_view question, Pipeline pipeline) const {
    return answer(question, pipeline, route(question));
}

AskResponse Engine::answer(std::string_view question, Pipeline pipeline,
                           const router::RouteDecision& decision) const {
    AskResponse r;
    r.category = decision.category;
    r.action = decision.action;
    r.pipeline = pipeline;
    if (decision.action == router::Action::clarify ||
        decision.action == router::Action::partial_number_clarify) {
        r.answer = decision.clarification_text;
        r.needs_clarification = true;
        return r;
    }
    const llm::Llm& model = require(model_);

    if (pipeline == Pipeline::traditional) {
        TraditionalOptions o;
        o.method = config_.method;
        o.k = config_.k;
        o.guard = config_.guard;
        o.fewshot = fewshot_.answers;
        o.max_prompt_chars = config_.max_prompt_chars;
        o.hybrid_keyword_weight = config_.hybrid_keyword_weight;
        o.mmr_lambda = config_.mmr_lambda;
        if (decision.action == router::Action::gate_retrieval) o.gate = decision.extraction.gate;
        RagAnswer a = answer_traditional(question, *index_, articles_, store_, model, o);
        r.answer = std::move(a.text);
        r.evidence_doc_ids = std::move(a.evidence_doc_ids);
        r.flags = std::move(a.flags);
        return r;
    }

    try {
        r.query = generate_query(question, pipeline);
        const QueryResult result =
            pipeline == Pipeline::sql
                ? sql::execute_sql(store_, sql::SqlQuery::from(r.query))
                : graph::execute_graph(*graph_, graph::GraphQuery::parse(r.query));
        r.row_count = result.rows.size();
        r.answer = sql::answer_from_rows(question, r.query, result, &model).text;
    } catch (const Error& e) {
        if (e.is_llm_failure()) throw;
        r.query_error = std::string(errc_name(e.code())) + ": " + e.what();
        r.answer = std::string(kQueryFailedAnswer);
    }
    return r;
}

std::string Engine::generate_query(std::string_view question, Pipeline pipeline) const {
    const llm::Llm& model = require(model_);
    if (pipeline == Pipeline::sql) {
        sql::TextToSqlOptions o;
        o.style = config_.sql_style;
        o.fewshot = fewshot_.sql;
        o.max_prompt_chars = config_.max_prompt_chars;
        o.row_count = store_.size();
        return sql::text_to_sql(question, model, o).text;
    }
    if (pipeline == Pipeline::graph) {
        graph::TextToGraphOptions o;
        o.fewshot = fewshot_.graph;
        o.max_prompt_chars = config_.max_prompt_chars;
        return graph::text_to_graph_query(question, model, graph_schema_, o).text();
    }
    fail(Errc::invalid_argument, "the traditional pipeline generates no query");
}

}  // namespace flightrag
