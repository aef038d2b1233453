#include "flightrag/traditional_rag.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include "flightrag/error.hpp"
#include "flightrag/router.hpp"
#include "text_util.hpp"

namespace flightrag {

namespace {

const std::regex& timestamp_re() {
    static const std::regex re(
        R"(\d{4}-\d{2}-\d{2}[ T]\d{2}:\d{2}(?::\d{2})?(?:Z|[+-]\d{2}:?\d{2})?)");
    return re;
}

bool contains_word_ci(std::string_view haystack_lower, std::string_view needle) {
    const std::string n = detail::to_lower(needle);
    for (std::size_t pos = haystack_lower.find(n); pos != std::string_view::npos;
         pos = haystack_lower.find(n, pos + 1)) {
        const std::size_t end = pos + n.size();
        const bool before = pos == 0 || !detail::is_alnum(haystack_lower[pos - 1]);
        const bool after = end >= haystack_lower.size() || !detail::is_alnum(haystack_lower[end]);
        if (before && after) return true;
    }
    return false;
}

std::vector<Timestamp> timestamps_in(std::string_view text) {
    std::vector<Timestamp> out;
    const std::string s(text);
    for (auto it = std::sregex_iterator(s.begin(), s.end(), timestamp_re());
         it != std::sregex_iterator(); ++it)
        if (auto t = Timestamp::parse(it->str())) out.push_back(*t);
    return out;
}

bool store_has_gate(const FlightStore& store, std::string_view code) {
    return std::any_of(store.records().begin(), store.records().end(), [&](const FlightRecord& r) {
        return detail::iequals(r.ramp, code) || detail::iequals(r.bus_gate, code) ||
               detail::iequals(r.previous_ramp, code);
    });
}

bool store_has_airline(const FlightStore& store, const router::AirlineMention& m) {
    return std::any_of(store.records().begin(), store.records().end(), [&](const FlightRecord& r) {
        return detail::iequals(r.airline_name, m.canonical) ||
               contains_word_ci(detail::to_lower(r.airline_name), m.text);
    });
}

bool store_has_timestamp(const FlightStore& store, Timestamp t) {
    std::vector<std::size_t> ts_fields;
    for (std::size_t i = 0; i < flight_fields().size(); ++i)
        if (flight_fields()[i].kind == FieldKind::timestamp) ts_fields.push_back(i);
    for (const auto& r : store.records())
        for (std::size_t f : ts_fields) {
            const Value v = field_value(r, f);
            if (v.is_timestamp() && v.as_timestamp() == t) return true;
        }
    return false;
}

}  // namespace

std::string_view pipeline_name(Pipeline p) {
    switch (p) {
        case Pipeline::traditional: return "traditional";
        case Pipeline::sql: return "sql";
        case Pipeline::graph: return "graph";
    }
    return "unknown";
}

std::optional<Pipeline> parse_pipeline(std::string_view name) {
    for (Pipeline p : {Pipeline::traditional, Pipeline::sql, Pipeline::graph})
        if (detail::iequals(name, pipeline_name(p))) return p;
    return std::nullopt;
}

std::string_view entity_kind_name(EntityKind k) {
    switch (k) {
        case EntityKind::flight_nr: return "flight_nr";
        case EntityKind::gate: return "gate";
        case EntityKind::ramp: return "ramp";
        case EntityKind::airline: return "airline";
        case EntityKind::timestamp: return "timestamp";
    }
    return "unknown";
}

std::vector<ExtractedEntity> extract_entities(std::string_view text) {
    struct Hit {
        std::size_t pos;
        ExtractedEntity entity;
    };
    std::vector<Hit> hits;
    std::string masked(text);
    {
        const std::string s(text);
        for (auto it = std::sregex_iterator(s.begin(), s.end(), timestamp_re());
             it != std::sregex_iterator(); ++it) {
            const auto pos = static_cast<std::size_t>(it->position());
            hits.push_back({pos, {it->str(), EntityKind::timestamp}});
            std::fill(masked.begin() + it->position(),
                      masked.begin() + it->position() + it->length(), ' ');
        }
    }
    static const std::regex flight_re(R"(\b[A-Z]{2,3}\d{3,4}\b)");
    static const std::regex gate_re(R"(\b[A-Z]\d{1,2}\b)");
    for (auto it = std::sregex_iterator(masked.begin(), masked.end(), flight_re);
         it != std::sregex_iterator(); ++it)
        hits.push_back({static_cast<std::size_t>(it->position()), {it->str(), EntityKind::flight_nr}});
    for (auto it = std::sregex_iterator(masked.begin(), masked.end(), gate_re);
         it != std::sregex_iterator(); ++it) {
        const std::string code = it->str();
        hits.push_back({static_cast<std::size_t>(it->position()),
                        {code, code[0] == 'S' ? EntityKind::gate : EntityKind::ramp}});
    }
    for (const auto& m : router::find_airlines(masked))
        hits.push_back({m.pos, {m.text, EntityKind::airline}});
    std::stable_sort(hits.begin(), hits.end(),
                     [](const Hit& a, const Hit& b) { return a.pos < b.pos; });
    std::vector<ExtractedEntity> out;
    out.reserve(hits.size());
    for (auto& h : hits) out.push_back(std::move(h.entity));
    return out;
}

GuardResult guard_hallucination(std::string_view answer, std::span<const Article> evidence,
                                const FlightStore& store) {
    std::string evidence_lower;
    for (const auto& a : evidence) {
        evidence_lower += detail::to_lower(a.text);
        evidence_lower += '\n';
    }
    std::vector<Timestamp> evidence_times;
    bool times_loaded = false;

    GuardResult out;
    std::vector<std::string> verified;
    std::set<std::string> seen;
    for (const auto& e : extract_entities(answer)) {
        bool in_evidence = false;
        bool known = false;
        switch (e.kind) {
            case EntityKind::flight_nr:
                in_evidence = contains_word_ci(evidence_lower, e.text);
                known = in_evidence || store.find_flight_nr(e.text) != nullptr;
                break;
            case EntityKind::gate:
            case EntityKind::ramp: {
                const std::string code = router::normalize_gate(e.text).value_or(e.text);
                in_evidence = contains_word_ci(evidence_lower, code) ||
                              contains_word_ci(evidence_lower, e.text);
                known = in_evidence || store_has_gate(store, code);
                break;
            }
            case EntityKind::airline: {
                in_evidence = contains_word_ci(evidence_lower, e.text);
                if (!in_evidence) {
                    const auto mentions = router::find_airlines(e.text);
                    known = !mentions.empty() && store_has_airline(store, mentions.front());
                }
                known = known || in_evidence;
                break;
            }
            case EntityKind::timestamp: {
                const auto t = Timestamp::parse(e.text);
                if (!times_loaded) {
                    for (const auto& a : evidence)
                        for (auto x : timestamps_in(a.text)) evidence_times.push_back(x);
                    times_loaded = true;
                }
                in_evidence = t && std::find(evidence_times.begin(), evidence_times.end(), *t) !=
                                       evidence_times.end();
                known = in_evidence || (t && store_has_timestamp(store, *t));
                break;
            }
        }
        if (!known) {
            EntityFlag flag{e.text, e.kind};
            if (std::find(out.flags.begin(), out.flags.end(), flag) == out.flags.end())
                out.flags.push_back(std::move(flag));
        } else if (in_evidence && seen.insert(e.text).second) {
            verified.push_back(e.text);
        }
    }

    if (out.flags.empty()) {
        out.sanitized_text = std::string(answer);
        return out;
    }
    if (verified.empty()) {
        for (const auto& a : evidence) {
            const std::string_view text = a.text;
            const std::string_view label = "flight number: ";
            if (text.substr(0, label.size()) != label) continue;
            const auto end = text.find(';');
            verified.emplace_back(text.substr(label.size(), end - label.size()));
            if (verified.size() == 10) break;
        }
    }
    out.sanitized_text =
        prompting::render(prompting::get_template("refusal"),
                          {{"verified", verified.empty() ? "none" : detail::join(verified, ", ")}});
    return out;
}

retrieval::RankedList retrieve(const retrieval::IndexBundle& index, std::string_view query,
                               retrieval::Method method, std::size_t k,
                               double hybrid_keyword_weight, double mmr_lambda) {
    using retrieval::Method;
    switch (method) {
        case Method::bm25: return retrieval::search_bm25(index, query, k);
        case Method::tfidf_cos: return retrieval::search_tfidf(index, query, k, retrieval::Metric::cosine);
        case Method::tfidf_euc:
            return retrieval::search_tfidf(index, query, k, retrieval::Metric::euclidean);
        case Method::lsi: return retrieval::search_lsi(index, query, k);
        case Method::vector: return retrieval::search_vector(index, query, k);
        case Method::hybrid:
            return retrieval::search_hybrid(index, query, k, hybrid_keyword_weight,
                                            1.0 - hybrid_keyword_weight);
        case Method::mmr: {
            const auto pool = retrieval::search_bm25(index, query, std::max<std::size_t>(2 * k, 30));
            if (pool.empty()) return retrieval::RankedList{{}, Method::mmr};
            return retrieval::rerank_mmr(pool, index, query, mmr_lambda, k);
        }
    }
    fail(Errc::invalid_argument, "unknown retrieval method");
}

RagAnswer answer_traditional(std::string_view question, const retrieval::IndexBundle& index,
                             const std::vector<Article>& articles, const FlightStore& store,
                             const llm::Llm& model, const TraditionalOptions& options) {
    if (articles.size() != index.doc_count())
        fail(Errc::invalid_argument, "article list does not match the index");

    std::vector<const Article*> evidence;
    if (options.gate) {
        std::set<std::string> uids;
        for (const char* field : {"ramp", "bus_gate"})
            for (const auto& r : lookup(store, field, *options.gate)) uids.insert(r.flight_uid);
        for (const auto& a : articles)
            if (uids.count(a.source_uid)) evidence.push_back(&a);
    } else {
        const auto ranked = retrieve(index, question, options.method, options.k,
                                     options.hybrid_keyword_weight, options.mmr_lambda);
        for (const auto& e : ranked.entries)
            if (auto d = index.doc_index(e.doc_id)) evidence.push_back(&articles[*d]);
    }

    std::string article_block;
    for (const auto* a : evidence) {
        article_block += a->text;
        article_block += '\n';
    }
    if (evidence.empty()) article_block = "(no records found)\n";
    const std::string prompt = prompting::render(
        prompting::get_template("traditional_answer"),
        {{"glossary", prompting::field_glossary()},
         {"articles", article_block},
         {"question", std::string(question)}},
        options.fewshot, options.max_prompt_chars);

    RagAnswer out;
    out.pipeline = Pipeline::traditional;
    out.text = std::string(detail::trim(model.complete("", prompt)));
    for (const auto* a : evidence) out.evidence_doc_ids.push_back(a->doc_id);
    if (options.guard) {
        std::vector<Article> ev;
        ev.reserve(evidence.size());
        for (const auto* a : evidence) ev.push_back(*a);
        auto guard = guard_hallucination(out.text, ev, store);
        out.flags = std::move(guard.flags);
        out.flagged_hallucination = !out.flags.empty();
        out.text = std::move(guard.sanitized_text);
    }
    return out;
}

}  // namespace flightrag
