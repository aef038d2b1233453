#include "criteria.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "flightrag/config.hpp"
#include "flightrag/datagen.hpp"
#include "flightrag/error.hpp"
#include "flightrag/evalharness.hpp"
#include "flightrag/graphrag.hpp"
#include "flightrag/retrieval.hpp"
#include "flightrag/rng.hpp"
#include "flightrag/router.hpp"
#include "flightrag/sqlrag.hpp"
#include "flightrag/traditional_rag.hpp"
#include "oracles.hpp"
#include "testdata.hpp"

namespace criteria {

using namespace flightrag;
using namespace flightrag::retrieval;

namespace {

// Collects problems; keeps the first few for the report line.
class Problems {
public:
    void add(std::string what) {
        if (list_.size() < 3) list_.push_back(std::move(what));
        ++count_;
    }
    bool any() const { return count_ > 0; }
    Outcome result(std::string summary) const {
        if (!any()) return {true, std::move(summary)};
        std::string d = std::to_string(count_) + " problem(s): ";
        for (std::size_t i = 0; i < list_.size(); ++i) d += (i ? "; " : "") + list_[i];
        return {false, d};
    }

private:
    std::vector<std::string> list_;
    std::size_t count_ = 0;
};

double seconds_since(std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

std::string fixed(double v, int digits) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(digits);
    ss << v;
    return ss.str();
}

std::string pct(double v) { return fixed(100.0 * v, 2) + "%"; }

bool near(double a, double b) { return std::fabs(a - b) <= 1e-9; }

std::vector<std::string> argsort(const std::vector<double>& scores, const std::vector<Article>& docs,
                                 bool ascending) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return ascending ? scores[a] < scores[b] : scores[a] > scores[b];
        return docs[a].doc_id < docs[b].doc_id;
    });
    std::vector<std::string> out;
    for (auto i : idx) out.push_back(docs[i].doc_id);
    return out;
}

RankedList ranks_to_list(const std::vector<std::string>& ids) {
    RankedList l;
    for (std::size_t i = 0; i < ids.size(); ++i) l.entries.push_back({ids[i], 1.0 / static_cast<double>(i + 1)});
    return l;
}

std::vector<std::vector<std::string>> sorted(std::vector<std::vector<std::string>> rows) {
    std::sort(rows.begin(), rows.end());
    return rows;
}

oracle::GraphCounts counts_of(const graph::PropertyGraph& g) {
    oracle::GraphCounts c;
    for (const auto& n : g.nodes()) ++c.nodes[n.label];
    for (const auto& e : g.edges()) ++c.edges[e.type];
    return c;
}

// Flights crowded onto three ramps with coarse times, so NEXT_AT_RAMP ties occur.
FlightStore crowded_store(std::uint64_t seed) {
    const FlightStore base = datagen::generate_flights(200, seed);
    std::vector<FlightRecord> recs(base.records().begin(), base.records().end());
    Rng rng(seed);
    for (auto& r : recs) {
        r.ramp = std::string("D0") + static_cast<char>('1' + rng.below(3));
        r.pier = "D";
        r.expected_on_ramp = Timestamp::from_epoch(1684022400 + 600 * static_cast<std::int64_t>(rng.below(20)));
        r.expected_off_ramp = r.expected_on_ramp.plus_minutes(60);
    }
    return FlightStore::from_records(std::move(recs));
}

}  // namespace

Outcome bm25_matches_formula() {
    const auto start = std::chrono::steady_clock::now();
    const auto c = testsupport::random_corpus(200, 50, 11);
    const IndexBundle ix = IndexBundle::build(c.articles, {.lsi_rank = 0});
    const auto toks = testsupport::corpus_tokens(c.articles);
    Problems p;
    double worst = 0;
    for (const auto& q : c.queries) {
        const auto got = bm25_scores(ix, q);
        const auto want = oracle::bm25(toks, testsupport::words(q), 1.2, 0.75);
        if (got.size() != want.size()) {
            p.add("score vector size");
            continue;
        }
        for (std::size_t d = 0; d < got.size(); ++d) worst = std::max(worst, std::fabs(got[d] - want[d]));
        const auto ranked = search_bm25(ix, q, 10);
        const auto order = argsort(want, c.articles, false);
        for (std::size_t i = 0; i < ranked.size(); ++i)
            if (ranked.entries[i].doc_id != order[i]) p.add("rank order differs for '" + q + "'");
    }
    if (worst > 1e-9) p.add("max |score - formula| = " + std::to_string(worst));
    const double secs = seconds_since(start);
    if (secs >= 5.0) p.add("took " + fixed(secs, 2) + " s");
    std::ostringstream err;
    err << std::scientific << std::setprecision(1) << worst;
    return p.result("200 docs, 50 queries, max error " + err.str() + ", " + fixed(secs, 2) + " s");
}

Outcome tfidf_and_vector_match_linear_algebra() {
    const auto c = testsupport::random_corpus(200, 50, 11);
    const IndexBundle ix = IndexBundle::build(c.articles, {.lsi_rank = 0});
    const auto toks = testsupport::corpus_tokens(c.articles);
    std::vector<std::vector<double>> raw;
    for (const auto& a : c.articles) raw.push_back(ix.embedder().embed(a.text));
    Problems p;
    std::size_t compared = 0;
    for (const auto& q : c.queries) {
        const auto want = oracle::tfidf(toks, testsupport::words(q));
        for (std::size_t d = 0; d < c.articles.size(); ++d) {
            if (!near(tfidf_cosine(ix, q, d), want.cosine[d])) p.add("cosine differs, doc " + std::to_string(d));
            if (!near(tfidf_euclidean(ix, q, d), want.euclidean[d])) p.add("euclidean differs, doc " + std::to_string(d));
            compared += 2;
        }
        for (const auto& e : search_tfidf(ix, q, 15, Metric::cosine).entries)
            if (!near(e.score, want.cosine[*ix.doc_index(e.doc_id)])) p.add("ranked cosine score differs");
        const auto euc = search_tfidf(ix, q, 15, Metric::euclidean);
        const auto euc_order = argsort(want.euclidean, c.articles, true);
        for (std::size_t i = 0; i < euc.size(); ++i)
            if (!near(want.euclidean[*ix.doc_index(euc.entries[i].doc_id)],
                      want.euclidean[*ix.doc_index(euc_order[i])]))
                p.add("euclidean ranking differs at rank " + std::to_string(i + 1));

        const auto vwant = oracle::cosine_all(raw, ix.embedder().embed(q));
        const auto vgot = search_vector(ix, q, c.articles.size());
        const auto vorder = argsort(vwant, c.articles, false);
        if (vgot.size() != c.articles.size()) p.add("vector search returned " + std::to_string(vgot.size()));
        for (std::size_t i = 0; i < vgot.size(); ++i) {
            if (!near(vgot.entries[i].score, vwant[*ix.doc_index(vgot.entries[i].doc_id)])) p.add("vector score differs");
            if (!near(vgot.entries[i].score, vwant[*ix.doc_index(vorder[i])])) p.add("vector ranking differs");
            ++compared;
        }
    }
    return p.result(std::to_string(compared) + " scores within 1e-9");
}

Outcome rrf_fusion() {
    Problems p;
    const std::vector<std::string> ids = {"d1", "d2", "d3"};
    std::size_t cases = 0;
    for (unsigned mask_a = 0; mask_a < 8; ++mask_a)
        for (unsigned mask_b = 0; mask_b < 8; ++mask_b) {
            std::vector<std::size_t> sa, sb;
            for (std::size_t i = 0; i < 3; ++i) {
                if (mask_a & (1u << i)) sa.push_back(i);
                if (mask_b & (1u << i)) sb.push_back(i);
            }
            do {
                std::vector<std::size_t> sb2 = sb;
                do {
                    std::vector<std::string> la, lb;
                    for (auto i : sa) la.push_back(ids[i]);
                    for (auto i : sb2) lb.push_back(ids[i]);
                    for (auto [wa, wb] : {std::pair{0.9, 0.1}, std::pair{0.5, 0.5}, std::pair{1.0, 0.0}}) {
                        const auto fused = fuse_rrf(ranks_to_list(la), ranks_to_list(lb), 3, wa, wb, 60);
                        std::vector<RankedEntry> want;
                        for (std::size_t d = 0; d < 3; ++d) {
                            std::optional<std::size_t> ra, rb;
                            for (std::size_t i = 0; i < sa.size(); ++i)
                                if (sa[i] == d) ra = i + 1;
                            for (std::size_t i = 0; i < sb2.size(); ++i)
                                if (sb2[i] == d) rb = i + 1;
                            const double s = oracle::rrf(ra, rb, wa, wb, 60);
                            if (s > 0) want.push_back({ids[d], s});
                        }
                        std::sort(want.begin(), want.end(), [](const auto& x, const auto& y) {
                            return x.score != y.score ? x.score > y.score : x.doc_id < y.doc_id;
                        });
                        if (fused.entries != want) p.add("fusion differs from formula");
                        ++cases;
                    }
                } while (std::next_permutation(sb2.begin(), sb2.end()));
            } while (std::next_permutation(sa.begin(), sa.end()));
        }

    const auto c = testsupport::random_corpus(200, 50, 11);
    const IndexBundle ix = IndexBundle::build(c.articles, {.lsi_rank = 0});
    for (const auto& q : c.queries)
        if (search_hybrid(ix, q, 30, 1.0, 0.0).doc_ids() != search_bm25(ix, q, 30).doc_ids())
            p.add("weights (1,0) differ from BM25 for '" + q + "'");

    Rng rng(23);
    std::size_t monotone = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<std::string> docs;
        for (int i = 0; i < 20; ++i) docs.push_back("d" + std::to_string(i));
        auto la = docs, lb = docs;
        rng.shuffle(la);
        rng.shuffle(lb);
        const std::string target = docs[rng.below(docs.size())];
        const double wa = rng.uniform(), wb = rng.uniform() + 1e-3;
        auto score_of = [&] {
            for (const auto& e : fuse_rrf(ranks_to_list(la), ranks_to_list(lb), 20, wa, wb, 60).entries)
                if (e.doc_id == target) return e.score;
            return 0.0;
        };
        const double before = score_of();
        auto& list = rng.chance(0.5) ? la : lb;
        const auto pos = static_cast<std::size_t>(std::find(list.begin(), list.end(), target) - list.begin());
        if (pos > 0) std::swap(list[pos], list[rng.below(pos)]);
        if (score_of() < before) p.add("promoting a document lowered its fused score");
        else ++monotone;
    }
    return p.result(std::to_string(cases) + " enumerated fusions exact, (1,0) = BM25 on 50 queries, " +
                    std::to_string(monotone) + "/1000 monotone");
}

Outcome retrieval_structure() {
    const auto& b = testsupport::default_bundle();
    const auto& engine = testsupport::default_engine();
    Problems p;
    if (b.store.size() != 1350) p.add("store has " + std::to_string(b.store.size()) + " flights");
    if (b.straightforward.size() != 150) p.add(std::to_string(b.straightforward.size()) + " questions");
    const auto acc = eval::eval_retrieval(engine.index(), b.straightforward,
                                          {Method::bm25, Method::tfidf_cos, Method::tfidf_euc, Method::lsi,
                                           Method::vector, Method::hybrid, Method::mmr},
                                          engine.config().hybrid_keyword_weight, engine.config().mmr_lambda);
    std::size_t bm25_hits = 0;
    for (const auto& q : b.straightforward)
        bm25_hits += search_bm25(engine.index(), q.question, 10).rank_of(q.grounding_uid).has_value();
    if (bm25_hits != b.straightforward.size())
        p.add("bm25 top10 " + std::to_string(bm25_hits) + "/" + std::to_string(b.straightforward.size()));
    for (const auto& [name, m] : acc) {
        if (!m.top1 || !m.top10 || !m.top30) {
            p.add(name + " missing accuracies");
            continue;
        }
        if (!(*m.top1 <= *m.top10 && *m.top10 <= *m.top30)) p.add(name + " not monotone in k");
    }
    return p.result("bm25 top10 " + std::to_string(bm25_hits) + "/150, top1 <= top10 <= top30 for " +
                    std::to_string(acc.size()) + " methods");
}

Outcome sql_executor_matches_full_scan() {
    const FlightStore store = datagen::generate_flights(300, 17);
    Rng rng(2024);
    Problems p;
    std::size_t nonempty = 0;
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < 1000; ++i) {
        const auto c = oracle::random_sql_case(store, rng);
        try {
            const auto got = sql::execute_sql(store, sql::SqlQuery::from(c.sql)).text_rows();
            if (c.ordered ? got != c.rows : sorted(got) != sorted(c.rows)) p.add("rows differ: " + c.sql);
        } catch (const Error& e) {
            p.add(c.sql + " -> " + e.what());
        }
        nonempty += !c.rows.empty();
    }
    const double secs = seconds_since(start);
    if (secs >= 30.0) p.add("took " + fixed(secs, 2) + " s");
    if (nonempty < 300) p.add("only " + std::to_string(nonempty) + " queries had rows");
    return p.result("1000 queries agree (" + std::to_string(nonempty) + " non-empty), " + fixed(secs, 2) + " s");
}

Outcome match_metric_contracts() {
    const auto& b = testsupport::default_bundle();
    const auto& store = b.store;
    Problems p;
    // gold queries plus cosmetic variants of each
    std::vector<sql::SqlQuery> qs;
    for (std::size_t i = 0; i < b.gold_sql.size() && i < 80; ++i) {
        const std::string& q = b.gold_sql[i].query;
        qs.push_back(sql::SqlQuery::from(q));
        std::string spaced;
        for (char ch : q) spaced += ch == ' ' ? std::string("  ") : std::string(1, ch);
        qs.push_back(sql::SqlQuery::from(spaced + " ;"));
        std::string lowered = q;
        if (lowered.rfind("SELECT", 0) == 0) lowered.replace(0, 6, "select");
        qs.push_back(sql::SqlQuery::from(lowered));
    }
    std::size_t pairs = 0, em_pairs = 0;
    for (std::size_t i = 0; i < qs.size(); ++i) {
        if (!sql::exact_match(qs[i], qs[i])) p.add("EM not reflexive: " + qs[i].text);
        for (std::size_t j = i + 1; j < qs.size(); ++j) {
            const bool ab = sql::exact_match(qs[i], qs[j]);
            if (ab != sql::exact_match(qs[j], qs[i])) p.add("EM not symmetric: " + qs[i].text + " / " + qs[j].text);
            if (ab) {
                ++em_pairs;
                if (!sql::execution_match(store, qs[i], qs[j])) p.add("EM without EX: " + qs[i].text);
            }
            ++pairs;
        }
    }
    const auto gold = sql::SqlQuery::from("SELECT flight_nr, ramp FROM flights WHERE pier = 'D'");
    if (!sql::execution_match(store, sql::SqlQuery::from("SELECT ramp, flight_nr FROM flights WHERE pier = 'D'"), gold))
        p.add("column order changed EX");
    if (sql::exact_match(sql::SqlQuery::from("SELECT ramp, flight_nr FROM flights WHERE pier = 'D'"), gold))
        p.add("reordered columns counted as EM");
    if (sql::execution_match(store, sql::SqlQuery::from("SELECT flight_nr FROM flights WHERE pier = 'D'"), gold))
        p.add("dropped column still EX");
    return p.result(std::to_string(qs.size()) + " queries, " + std::to_string(pairs) + " pairs, " +
                    std::to_string(em_pairs) + " EM pairs all EX, column-order fixture ok");
}

Outcome graph_construction() {
    Problems p;
    std::vector<FlightStore> stores;
    stores.push_back(testsupport::default_bundle().store);
    for (std::uint64_t seed : {1u, 2u, 3u, 11u}) stores.push_back(datagen::generate_flights(200, seed));
    stores.push_back(crowded_store(12));
    stores.push_back(crowded_store(13));
    std::size_t next_checked = 0;
    for (std::size_t s = 0; s < stores.size(); ++s) {
        const auto& store = stores[s];
        const auto g = graph::build_graph(store);
        const auto got = counts_of(g);
        const auto want = oracle::count_graph(store);
        if (got.nodes != want.nodes) p.add("node counts differ, store " + std::to_string(s));
        if (got.edges != want.edges) p.add("edge counts differ, store " + std::to_string(s));
        if (s == 0) continue;  // NEXT_AT_RAMP check on the 200-flight stores
        for (const auto& r : store.records()) {
            const std::size_t node = *g.find_node("flight:" + r.flight_uid);
            std::optional<std::string> next;
            std::size_t n = 0;
            for (std::size_t e : g.out_edges(node)) {
                if (g.edges()[e].type != "NEXT_AT_RAMP") continue;
                ++n;
                next = g.nodes()[g.edges()[e].to].properties.at("flight_uid").to_string();
            }
            if (n > 1) p.add("several NEXT_AT_RAMP edges from " + r.flight_uid);
            if (next != oracle::next_at_ramp_uid(store, r.flight_uid)) p.add("NEXT_AT_RAMP differs at " + r.flight_uid);
            const auto by_nr = graph::next_flight_oracle(store, r.flight_nr, graph::NextMode::same_ramp);
            if (by_nr.has_value() != next.has_value() || (next && *by_nr != store.find_uid(*next)->flight_nr))
                p.add("next_flight_oracle disagrees at " + r.flight_nr);
            ++next_checked;
        }
    }
    return p.result(std::to_string(stores.size()) + " stores counted, " + std::to_string(next_checked) +
                    " NEXT_AT_RAMP edges checked");
}

Outcome reasoning_end_to_end() {
    const auto& b = testsupport::default_bundle();
    const auto& engine = testsupport::default_engine();
    const auto& store = b.store;
    Problems p;
    if (b.reasoning.size() != 30) p.add(std::to_string(b.reasoning.size()) + " reasoning questions");
    std::size_t correct = 0;
    for (const auto& q : b.reasoning) {
        const auto* subject = store.find_flight_nr(q.params.at("flight"));
        if (!subject) {
            p.add("unknown subject " + q.params.at("flight"));
            continue;
        }
        // expected answer from the records alone
        std::string want;
        if (q.template_id == "rs_next_same_ramp") {
            const auto uid = oracle::next_at_ramp_uid(store, subject->flight_uid);
            if (uid) want = store.find_uid(*uid)->flight_nr;
        } else {
            for (const auto& r : store.records())
                if (r.flight_nr == subject->connecting_flight_nr) want = r.expected_on_ramp.to_string();
        }
        if (want.empty() || want != q.answer) {
            p.add("dataset answer for '" + q.question + "' is '" + q.answer + "', records give '" + want + "'");
            continue;
        }
        const auto r = engine.ask(q.question, Pipeline::graph);
        if (!r.needs_clarification && eval::answer_matches(r.answer, want)) ++correct;
        else p.add("'" + q.question + "' -> '" + r.answer + "'");
    }
    return p.result(std::to_string(correct) + "/" + std::to_string(b.reasoning.size()) +
                    " through the graph pipeline (live-model reference 68.75%, not asserted)");
}

Outcome classification() {
    const auto& b = testsupport::default_bundle();
    const auto model = testsupport::default_model();
    router::RouterOptions options;
    options.fewshot = testsupport::default_fewshot().classification;
    Problems p;
    if (b.fewshot_classification.size() != 60) p.add("few-shot set has " + std::to_string(b.fewshot_classification.size()));
    for (const auto& q : b.fewshot_classification) {
        const auto by_model = router::classify(q.question, model.get(), options);
        const auto by_rules = router::classify_rules(q.question);
        if (by_model != by_rules) p.add("rules and model disagree on '" + q.question + "'");
    }
    if (b.classification.size() != 220) p.add("classification set has " + std::to_string(b.classification.size()));
    const auto stats = eval::eval_classification(model.get(), options, b.classification, 5);
    const auto& cm = stats.confusion;
    const std::set<std::pair<std::string, std::string>> tolerated = {
        {"TAQ", "BGQ"}, {"BGQ", "TAQ"}, {"TWAQ", "BQA"}, {"BQA", "TWAQ"}};
    for (std::size_t i = 0; i < cm.labels.size(); ++i)
        for (std::size_t j = 0; j < cm.labels.size(); ++j)
            if (i != j && cm.counts[i][j] > 0 && !tolerated.count({cm.labels[i], cm.labels[j]}))
                p.add(cm.labels[i] + " read as " + cm.labels[j] + " x" + std::to_string(cm.counts[i][j]));
    if (stats.run_accuracies.size() != 5) p.add(std::to_string(stats.run_accuracies.size()) + " runs");
    const auto [lo, hi] = std::minmax_element(stats.run_accuracies.begin(), stats.run_accuracies.end());
    if (lo != stats.run_accuracies.end() && *lo != *hi) p.add("runs vary from " + pct(*lo) + " to " + pct(*hi));
    if (stats.mean() < 0.90) p.add("mean accuracy " + pct(stats.mean()));
    return p.result("60/60 few-shot agree, mean " + pct(stats.mean()) +
                    " over 5 identical runs, confusion inside TAQ/BGQ and TWAQ/BQA");
}

Outcome hallucination_guard() {
    const auto& store = testsupport::default_engine().store();
    Problems p;
    Rng rng(78);
    std::size_t caught = 0, injected = 0;
    std::set<EntityKind> kinds;
    for (int i = 0; i < 200; ++i) {
        std::vector<const FlightRecord*> recs;
        for (std::size_t n = 1 + rng.below(3); n > 0; --n) recs.push_back(&store.records()[rng.below(store.size())]);
        const auto inj = testsupport::fabricate(store, rng);
        const std::string answer = testsupport::echo_answer(recs, rng) + inj.text;
        const auto g = guard_hallucination(answer, testsupport::evidence_for(recs), store);
        ++injected;
        kinds.insert(inj.kind);
        if (std::any_of(g.flags.begin(), g.flags.end(), [&](const EntityFlag& f) { return f.kind == inj.kind; }))
            ++caught;
        else
            p.add("missed: " + answer);
    }
    if (kinds.size() != 4) p.add("only " + std::to_string(kinds.size()) + " entity kinds injected");
    Rng echo_rng(77);
    std::size_t false_positives = 0, echoes = 0;
    for (int i = 0; i < 150; ++i) {
        std::vector<const FlightRecord*> recs;
        for (std::size_t n = 1 + echo_rng.below(4); n > 0; --n)
            recs.push_back(&store.records()[echo_rng.below(store.size())]);
        const std::string answer = testsupport::echo_answer(recs, echo_rng);
        const auto g = guard_hallucination(answer, testsupport::evidence_for(recs), store);
        ++echoes;
        if (!g.flags.empty() || g.sanitized_text != answer) {
            ++false_positives;
            p.add("flagged echo: " + answer);
        }
    }
    return p.result("recall " + std::to_string(caught) + "/" + std::to_string(injected) + ", false positives " +
                    std::to_string(false_positives) + "/" + std::to_string(echoes));
}

Outcome sanitizer_rejects_attacks() {
    static const char* const attacks[] = {
        "DROP TABLE flights",
        "delete from flights",
        "INSERT INTO flights VALUES (1)",
        "UPDATE flights SET ramp = 'A01'",
        "ALTER TABLE flights ADD x",
        "CREATE TABLE t (x)",
        "ATTACH DATABASE 'x' AS y",
        "PRAGMA table_info(flights)",
        "WITH x AS (SELECT 1) SELECT * FROM x",
        "REPLACE INTO flights VALUES (1)",
        "VACUUM",
        "EXPLAIN SELECT * FROM flights",
        "SELECT * INTO backup FROM flights",
        "SELECT * FROM flights; DROP TABLE flights",
        "SELECT 1; SELECT 2",
        "SELECT * FROM flights;;DELETE FROM flights",
        "",
        "   ",
        "(SELECT * FROM flights)",
        "hello world",
    };
    Problems p;
    std::size_t rejected = 0;
    for (const char* a : attacks) {
        try {
            sql::sanitize_sql(sql::SqlQuery::from(a));
            p.add(std::string("accepted: ") + a);
        } catch (const Error&) {
            ++rejected;
        }
    }
    for (const char* ok : {"SELECT * FROM flights;", "SELECT * FROM flights WHERE flight_state = 'drop table'"}) {
        try {
            sql::sanitize_sql(sql::SqlQuery::from(ok));
        } catch (const Error& e) {
            p.add(std::string("rejected benign query: ") + ok);
        }
    }
    return p.result(std::to_string(rejected) + "/" + std::to_string(std::size(attacks)) + " attacks rejected");
}

Outcome golden_run() {
    Problems p;
    const auto root = testsupport::temp_dir("golden");
    const auto dataset = root / "golden-dataset";
    datagen::write_bundle(testsupport::default_bundle(), dataset);
    const datagen::Bundle bundle = datagen::read_bundle(dataset);

    RunConfig run;
    run.dataset = dataset.string();
    run.llm = "scripted:" + (dataset / "fixture.jsonl").string();
    FewshotSet fewshot{router::classification_examples(bundle.fewshot_classification), bundle.fewshot_sql,
                       bundle.fewshot_graph, bundle.fewshot_answers};
    const Engine engine(bundle.store, llm::make_llm(llm::parse_llm_flag(run.llm)), run.engine, std::move(fewshot));
    const auto plan = eval::plan_from_config(run);

    std::vector<std::filesystem::path> dirs;
    for (const char* parent : {"first", "second"})
        dirs.push_back(eval::write_run(eval::run_eval(bundle, engine, plan, run), root / parent));
    const std::filesystem::path golden = std::filesystem::path(FLIGHTRAG_TEST_DIR) / "golden";
    std::size_t files = 0;
    for (const char* name : {"report.json", "report.csv", "report.txt", "confusion.csv"}) {
        const auto a = testsupport::read_file(dirs[0] / name);
        const auto b = testsupport::read_file(dirs[1] / name);
        if (a.empty()) p.add(std::string(name) + " empty");
        if (a != b) p.add(std::string(name) + " differs between runs");
        if (!std::filesystem::exists(golden / name)) p.add(std::string("no golden ") + name);
        else if (a != testsupport::read_file(golden / name))
            p.add(std::string(name) + " differs from tests/golden (tools/regen_golden.sh rewrites it)");
        ++files;
    }
    if (dirs[0].filename() != dirs[1].filename()) p.add("run ids differ");
    return p.result(std::to_string(files) + " report files identical across two runs and equal to tests/golden (" +
                    dirs[0].filename().string() + ")");
}

std::vector<Criterion> all() {
    return {
        {"BM25 equals the literal formula", bm25_matches_formula},
        {"TF-IDF and vector search equal linear-algebra oracles", tfidf_and_vector_match_linear_algebra},
        {"RRF fusion", rrf_fusion},
        {"Retrieval structure on the synthetic dataset", retrieval_structure},
        {"SQL executor equals full-scan interpreter", sql_executor_matches_full_scan},
        {"EM/EX metric contracts", match_metric_contracts},
        {"Graph construction", graph_construction},
        {"Reasoning questions through the graph pipeline", reasoning_end_to_end},
        {"Question classification", classification},
        {"Hallucination guard", hallucination_guard},
        {"SQL sanitizer", sanitizer_rejects_attacks},
        {"Golden evaluation run", golden_run},
    };
}

}  // namespace criteria
