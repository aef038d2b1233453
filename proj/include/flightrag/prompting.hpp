#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flightrag/schema.hpp"

namespace flightrag::prompting {

enum class Style {
    classification,
    extraction,
    clarification,
    answer_gen,
    sql_odp,
    sql_crp,
    graph_schema,
    paraphrase,
    sql_bsp,
    sql_trp,
    sql_asp,
};

std::string_view style_name(Style s);

struct PromptTemplate {
    std::string id;
    Style style = Style::answer_gen;
    std::string body;
    std::set<std::string> required_vars;
    std::string example_label = "Output";
};

// One few-shot demonstration. `answer` may be empty.
struct Example {
    std::string question;
    std::string output;
    std::string answer;
};

// Phrases that identify each rendered prompt kind. Scripted fixtures key on
// these together with the "User question: ...\n" line.
inline constexpr std::string_view kClassificationMarker = "Question classification task.";
inline constexpr std::string_view kGateExtractionMarker = "Gate extraction task.";
inline constexpr std::string_view kTraditionalAnswerMarker =
    "You are a flight information assistant for airport operators.";
inline constexpr std::string_view kRowsAnswerMarker =
    "Turn the query result below into a short answer";
inline constexpr std::string_view kSqlMarker =
    "SQLite SELECT statement that answers the user question";
inline constexpr std::string_view kGraphMarker = "Task: generate a Cypher query";
inline constexpr std::string_view kQuestionPrefix = "User question: ";

// "User question: <q>\n", the line every task prompt ends with.
std::string question_line(std::string_view question);

PromptTemplate parse_template(std::string_view text);

// Every template shipped in assets/prompts, sorted by id.
std::span<const PromptTemplate> catalogue();
const PromptTemplate& get_template(std::string_view id);

// Fills {{name}} placeholders from vars and {{fewshot}} with the examples in
// order. With max_chars > 0, examples are dropped from the tail until the
// prompt fits; the other parts are never cut.
std::string render(const PromptTemplate& tmpl, const std::map<std::string, std::string>& vars,
                   const std::vector<Example>& fewshot = {}, std::size_t max_chars = 0);

std::map<std::string, std::string> build_schema_vars(SchemaKind kind,
                                                     const SchemaDescription& schema);

// One line per flight field: label, column name and meaning.
std::string field_glossary();

}  // namespace flightrag::prompting
