#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flightrag/category.hpp"
#include "flightrag/datagen.hpp"
#include "flightrag/llm.hpp"
#include "flightrag/prompting.hpp"

namespace flightrag::router {

struct ExtractionResult {
    std::optional<std::string> gate;
    std::optional<std::string> airline;
    std::optional<std::string> partial_number;

    // The ['0'] reply: nothing could be extracted.
    bool sentinel_zero() const { return !gate && !airline && !partial_number; }
    friend bool operator==(const ExtractionResult&, const ExtractionResult&) = default;
};

enum class Action { direct_answer, gate_retrieval, next_flight, clarify, partial_number_clarify };

std::string_view action_name(Action a);

struct RouteDecision {
    QuestionCategory category = QuestionCategory::straightforward;
    Action action = Action::direct_answer;
    ExtractionResult extraction;
    std::string clarification_text;
};

struct RouterOptions {
    std::vector<prompting::Example> fewshot;
    std::size_t max_prompt_chars = 0;
    // When false, model failures propagate instead of falling back to rules.
    bool rules_fallback = true;
};

// Few-shot examples for the classification prompt, output "['k']".
std::vector<prompting::Example> classification_examples(const std::vector<datagen::QaPair>& pairs);

// Parses "['3']" style replies.
std::optional<QuestionCategory> parse_classification_reply(std::string_view reply);

QuestionCategory classify_rules(std::string_view question);

// model may be null, which means rules only.
QuestionCategory classify(std::string_view question, const llm::Llm* model,
                          const RouterOptions& options = {});

// "C5" -> "C05"; nullopt when the text is not a letter plus one or two digits.
std::optional<std::string> normalize_gate(std::string_view code);

// Gate slot only. Model reply first, then the pattern rule.
ExtractionResult extract_gate(std::string_view question, const llm::Llm* model,
                              const RouterOptions& options = {});

// Every slot by pattern: gate, first airline mention, prefix-less number.
ExtractionResult extract_slots(std::string_view question);

RouteDecision route(std::string_view question, const llm::Llm* model,
                    const RouterOptions& options = {});

// Second turn of a clarification round.
std::string merge_followup(std::string_view original, std::string_view followup);

struct AirlineMention {
    std::string text;       // as written
    std::string canonical;  // lexicon name
    std::size_t pos = 0;
};

// Longest non-overlapping lexicon matches on word boundaries, case-insensitive.
// The lexicon covers the generated carriers plus other well-known airlines.
std::vector<AirlineMention> find_airlines(std::string_view text);

}  // namespace flightrag::router
