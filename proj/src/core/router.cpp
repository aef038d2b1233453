#include "flightrag/router.hpp"

#include <algorithm>
#include <array>
#include <regex>

#include "flightrag/error.hpp"
#include "text_util.hpp"

namespace flightrag::router {

namespace {

using detail::is_alnum;
using detail::is_alpha;
using detail::is_digit;

struct LexiconEntry {
    std::string pattern;  // lowercase
    std::string canonical;
    std::string alias;
};

const std::vector<LexiconEntry>& lexicon() {
    static const std::vector<LexiconEntry> entries = [] {
        std::vector<LexiconEntry> out;
        for (const auto& a : datagen::airlines()) {
            out.push_back({detail::to_lower(a.name), std::string(a.name), std::string(a.alias)});
            out.push_back({detail::to_lower(a.alias), std::string(a.name), std::string(a.alias)});
        }
        const std::array<std::pair<const char*, const char*>, 16> others = {{
            {"Ryanair", "Ryanair"},
            {"United Airlines", "United"},
            {"United", "United"},
            {"Emirates", "Emirates"},
            {"Qatar Airways", "Qatar Airways"},
            {"Turkish Airlines", "Turkish Airlines"},
            {"Vueling", "Vueling"},
            {"Wizz Air", "Wizz Air"},
            {"Iberia", "Iberia"},
            {"SAS", "SAS"},
            {"Swiss", "Swiss"},
            {"American Airlines", "American"},
            {"Air Canada", "Air Canada"},
            {"Singapore Airlines", "Singapore Airlines"},
            {"Norwegian", "Norwegian"},
            {"TUI", "TUI"},
        }};
        for (const auto& [name, alias] : others)
            out.push_back({detail::to_lower(name), name, alias});
        std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
            return x.pattern.size() > y.pattern.size();
        });
        return out;
    }();
    return entries;
}

bool boundary_before(std::string_view s, std::size_t pos) {
    return pos == 0 || !is_alnum(s[pos - 1]);
}

bool boundary_after(std::string_view s, std::size_t end) {
    return end >= s.size() || !is_alnum(s[end]);
}

bool has_word(std::string_view lower, std::string_view word) {
    for (std::size_t pos = lower.find(word); pos != std::string_view::npos;
         pos = lower.find(word, pos + 1)) {
        if (boundary_before(lower, pos) && boundary_after(lower, pos + word.size())) return true;
    }
    return false;
}

const std::regex& clock_re() {
    static const std::regex re(R"(\d{4}-\d{2}-\d{2}[ T]\d{2}:\d{2}(:\d{2})?|\b\d{1,2}:\d{2}\b)");
    return re;
}

bool has_time_reference(std::string_view question) {
    const std::string lower = detail::to_lower(question);
    static constexpr std::array<std::string_view, 18> words = {
        "currently", "at this moment", "right now", "now",     "when",    "last hour",
        "next hour", "soon",           "ago",       "later",   "a while", "after",
        "before",    "earlier",        "tonight",   "today",   "moment",  "this morning"};
    for (auto w : words)
        if (has_word(lower, w)) return true;
    return std::regex_search(lower, clock_re());
}

bool has_next_keyword(std::string_view question) {
    const std::string lower = detail::to_lower(question);
    return has_word(lower, "next") || has_word(lower, "connecting") ||
           has_word(lower, "connection");
}

// Full flight numbers: a known carrier prefix followed by four digits.
std::optional<std::string> find_full_flight_nr(std::string_view q) {
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (!is_alpha(q[i]) || !boundary_before(q, i)) continue;
        std::size_t j = i;
        while (j < q.size() && is_alpha(q[j])) ++j;
        std::size_t k = j;
        while (k < q.size() && is_digit(q[k])) ++k;
        if (k - j == 4 && boundary_after(q, k)) {
            const std::string prefix = detail::to_upper(q.substr(i, j - i));
            if (datagen::airline_by_prefix(prefix)) return std::string(q.substr(i, k - i));
        }
        i = j;
    }
    return std::nullopt;
}

std::optional<std::string> find_gate(std::string_view q) {
    const std::string lower = detail::to_lower(q);
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (!is_alpha(q[i]) || !boundary_before(q, i)) continue;
        std::size_t k = i + 1;
        while (k < q.size() && is_digit(q[k])) ++k;
        const std::size_t digits = k - i - 1;
        if (digits < 1 || digits > 2 || !boundary_after(q, k)) continue;
        bool ok = std::isupper(static_cast<unsigned char>(q[i])) != 0;
        if (!ok) {
            // lowercase codes only right after "gate", "ramp" or "at"
            std::string_view before = std::string_view(lower).substr(0, i);
            while (!before.empty() && before.back() == ' ') before.remove_suffix(1);
            for (std::string_view w : {"gate", "ramp", "at"})
                if (before.size() >= w.size() && before.substr(before.size() - w.size()) == w &&
                    boundary_before(before, before.size() - w.size()))
                    ok = true;
        }
        if (ok) return normalize_gate(q.substr(i, k - i));
    }
    return std::nullopt;
}

// Two to four digits standing alone: not part of a code, time or date.
std::optional<std::string> find_partial_number(std::string_view q) {
    const std::string stripped = std::regex_replace(std::string(q), clock_re(), " ");
    std::string_view s = stripped;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!is_digit(s[i])) continue;
        std::size_t k = i;
        while (k < s.size() && is_digit(s[k])) ++k;
        const bool clean_before = i == 0 || !(is_alnum(s[i - 1]) || s[i - 1] == '-' ||
                                             s[i - 1] == '+' || s[i - 1] == ':');
        const bool clean_after =
            k >= s.size() || !(is_alnum(s[k]) || s[k] == '-' || s[k] == ':');
        if (clean_before && clean_after && k - i >= 2 && k - i <= 4)
            return std::string(s.substr(i, k - i));
        i = k;
    }
    return std::nullopt;
}

std::string clarification_for(const ExtractionResult& slots) {
    std::string subject = "the flight";
    if (slots.airline) {
        for (const auto& e : lexicon())
            if (e.canonical == *slots.airline) {
                subject = "the " + e.alias + " flight";
                break;
            }
    }
    return prompting::render(prompting::get_template("clarify_airline"), {{"subject", subject}});
}

}  // namespace

std::string_view action_name(Action a) {
    switch (a) {
        case Action::direct_answer: return "direct_answer";
        case Action::gate_retrieval: return "gate_retrieval";
        case Action::next_flight: return "next_flight";
        case Action::clarify: return "clarify";
        case Action::partial_number_clarify: return "partial_number_clarify";
    }
    return "unknown";
}

std::vector<AirlineMention> find_airlines(std::string_view text) {
    const std::string lower = detail::to_lower(text);
    std::vector<AirlineMention> out;
    std::vector<bool> taken(lower.size(), false);
    for (const auto& e : lexicon()) {
        for (std::size_t pos = lower.find(e.pattern); pos != std::string::npos;
             pos = lower.find(e.pattern, pos + 1)) {
            const std::size_t end = pos + e.pattern.size();
            if (!boundary_before(lower, pos) || !boundary_after(lower, end)) continue;
            if (std::any_of(taken.begin() + static_cast<std::ptrdiff_t>(pos),
                            taken.begin() + static_cast<std::ptrdiff_t>(end),
                            [](bool b) { return b; }))
                continue;
            std::fill(taken.begin() + static_cast<std::ptrdiff_t>(pos),
                      taken.begin() + static_cast<std::ptrdiff_t>(end), true);
            out.push_back({std::string(text.substr(pos, end - pos)), e.canonical, pos});
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.pos < b.pos; });
    return out;
}

std::vector<prompting::Example> classification_examples(
    const std::vector<datagen::QaPair>& pairs) {
    std::vector<prompting::Example> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs)
        out.push_back({p.question, "['" + std::to_string(category_code(p.category)) + "']", ""});
    return out;
}

std::optional<QuestionCategory> parse_classification_reply(std::string_view reply) {
    static const std::regex re(R"(\[\s*['"]?\s*([0-6])\s*['"]?\s*\])");
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_search(reply.begin(), reply.end(), m, re)) return std::nullopt;
    return static_cast<QuestionCategory>(m[1].str()[0] - '0');
}

QuestionCategory classify_rules(std::string_view question) {
    const bool timed = has_time_reference(question);
    if (find_full_flight_nr(question))
        return has_next_keyword(question) ? QuestionCategory::nfq
                                          : QuestionCategory::straightforward;
    if (find_gate(question)) return timed ? QuestionCategory::taq : QuestionCategory::bgq;
    if (!find_airlines(question).empty())
        return timed ? QuestionCategory::twaq : QuestionCategory::bqa;
    if (find_partial_number(question)) return QuestionCategory::afq;
    return QuestionCategory::straightforward;
}

QuestionCategory classify(std::string_view question, const llm::Llm* model,
                          const RouterOptions& options) {
    if (!model) return classify_rules(question);
    const std::string prompt =
        prompting::render(prompting::get_template("classification"),
                          {{"question", std::string(question)}}, options.fewshot,
                          options.max_prompt_chars);
    try {
        if (auto c = parse_classification_reply(model->complete("", prompt))) return *c;
    } catch (const Error& e) {
        if (!e.is_llm_failure() || !options.rules_fallback) throw;
    }
    return classify_rules(question);
}

std::optional<std::string> normalize_gate(std::string_view code) {
    code = detail::trim(code);
    if (code.size() < 2 || code.size() > 3 || !is_alpha(code[0])) return std::nullopt;
    for (std::size_t i = 1; i < code.size(); ++i)
        if (!is_digit(code[i])) return std::nullopt;
    std::string out(1, static_cast<char>(std::toupper(static_cast<unsigned char>(code[0]))));
    if (code.size() == 2) out += '0';
    out += code.substr(1);
    return out;
}

ExtractionResult extract_gate(std::string_view question, const llm::Llm* model,
                              const RouterOptions& options) {
    ExtractionResult out;
    if (model) {
        const std::string prompt =
            prompting::render(prompting::get_template("gate_extraction"),
                              {{"question", std::string(question)}}, {}, options.max_prompt_chars);
        try {
            const std::string reply = model->complete("", prompt);
            static const std::regex re(R"(([A-Za-z]\d{1,2})(?![0-9A-Za-z]))");
            static const std::regex zero(R"(\[\s*['"]?0['"]?\s*\])");
            std::smatch m;
            if (std::regex_search(reply, zero)) return out;
            if (std::regex_search(reply, m, re)) {
                out.gate = normalize_gate(m[1].str());
                if (out.gate) return out;
            }
        } catch (const Error& e) {
            if (!e.is_llm_failure() || !options.rules_fallback) throw;
        }
    }
    out.gate = find_gate(question);
    return out;
}

ExtractionResult extract_slots(std::string_view question) {
    ExtractionResult out;
    out.gate = find_gate(question);
    if (auto airlines = find_airlines(question); !airlines.empty())
        out.airline = airlines.front().canonical;
    if (!find_full_flight_nr(question)) out.partial_number = find_partial_number(question);
    return out;
}

RouteDecision route(std::string_view question, const llm::Llm* model,
                    const RouterOptions& options) {
    RouteDecision d;
    d.category = classify(question, model, options);
    switch (d.category) {
        case QuestionCategory::taq:
        case QuestionCategory::bgq:
            d.extraction = extract_gate(question, model, options);
            if (d.extraction.sentinel_zero()) {
                d.action = Action::clarify;
                d.clarification_text = clarification_for(extract_slots(question));
            } else {
                d.action = Action::gate_retrieval;
            }
            break;
        case QuestionCategory::nfq:
            d.action = Action::next_flight;
            d.extraction = extract_slots(question);
            break;
        case QuestionCategory::twaq:
        case QuestionCategory::bqa:
            d.action = Action::clarify;
            d.extraction = extract_slots(question);
            d.clarification_text = clarification_for(d.extraction);
            break;
        case QuestionCategory::afq:
            d.action = Action::partial_number_clarify;
            d.extraction = extract_slots(question);
            d.clarification_text =
                prompting::render(prompting::get_template("clarify_partial_number"), {});
            break;
        case QuestionCategory::straightforward:
            d.action = Action::direct_answer;
            d.extraction = extract_slots(question);
            break;
    }
    return d;
}

std::string merge_followup(std::string_view original, std::string_view followup) {
    return "Original question: " + std::string(detail::trim(original)) +
           " Additional information: " + std::string(detail::trim(followup));
}

}  // namespace flightrag::router
