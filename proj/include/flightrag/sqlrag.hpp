#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "flightrag/flight_store.hpp"
#include "flightrag/llm.hpp"
#include "flightrag/prompting.hpp"
#include "flightrag/query_result.hpp"
#include "flightrag/schema.hpp"

namespace flightrag::sql {

// Lowercases SQL keywords outside quotes, collapses whitespace, strips a
// trailing semicolon.
std::string normalize_sql(std::string_view text);

struct SqlQuery {
    std::string text;
    std::string normalized;

    static SqlQuery from(std::string_view text) {
        return SqlQuery{std::string(text), normalize_sql(text)};
    }
};

// Only single SELECT statements pass; the query is returned untouched.
SqlQuery sanitize_sql(const SqlQuery& query);

// The one table is `flights`, one column per flight field.
QueryResult execute_sql(const FlightStore& store, const SqlQuery& query);

SchemaDescription flight_table_schema(std::size_t row_count = 0);

enum class PromptStyle { odp, crp };
std::string_view style_name(PromptStyle s);

struct TextToSqlOptions {
    PromptStyle style = PromptStyle::odp;
    std::vector<prompting::Example> fewshot;
    std::size_t max_prompt_chars = 0;
    std::size_t row_count = 0;  // shown in the schema
};

SqlQuery text_to_sql(std::string_view question, const llm::Llm& model,
                     const TextToSqlOptions& options = {});

bool exact_match(const SqlQuery& predicted, const SqlQuery& gold);

// Column-order-insensitive multiset comparison of two results.
bool results_equivalent(const QueryResult& a, const QueryResult& b);

// False (with the reason) when either query fails to execute.
bool execution_match(const FlightStore& store, const SqlQuery& predicted, const SqlQuery& gold,
                     std::string* reason = nullptr);

inline constexpr std::string_view kNoMatchAnswer = "No matching flights found.";

struct RowsAnswer {
    std::string text;
    bool templated = false;  // model unavailable, deterministic wording used
};

// Deterministic wording of a result.
std::string verbalize_rows(const QueryResult& result);

// Model verbalization of a result; empty results never reach the model and
// model failures fall back to verbalize_rows. `model` may be null.
RowsAnswer answer_from_rows(std::string_view question, std::string_view query_text,
                            const QueryResult& result, const llm::Llm* model);

}  // namespace flightrag::sql
