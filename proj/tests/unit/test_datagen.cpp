#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "flightrag/datagen.hpp"
#include "flightrag/error.hpp"
#include "flightrag/graphrag.hpp"
#include "oracles.hpp"
#include "testdata.hpp"

using namespace flightrag;
using namespace flightrag::datagen;
using QC = QuestionCategory;

namespace {

std::string csv_of(const FlightStore& store) {
    std::ostringstream out;
    write_csv(store, out);
    return out.str();
}

std::vector<const FlightRecord*> at_gate(const FlightStore& store, const std::string& gate) {
    std::vector<const FlightRecord*> out;
    for (const auto& r : store.records())
        if (r.ramp == gate || r.bus_gate == gate) out.push_back(&r);
    return out;
}

std::string sorted_join(std::vector<std::string> items) {
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
    return out;
}

}  // namespace

TEST(Flights, DeterministicPerSeed) {
    EXPECT_EQ(csv_of(generate_flights(400, 7)), csv_of(generate_flights(400, 7)));
    EXPECT_NE(csv_of(generate_flights(400, 7)), csv_of(generate_flights(400, 8)));
}

TEST(Flights, RecordsFollowTheGenerationRules) {
    const std::regex uid("^UID-\\d{6}$"), ramp("^[B-H]\\d{2}$"), bus("^(S\\d{2}|[B-H]\\d{2})$");
    for (std::uint64_t seed : {1u, 42u, 99u}) {
        const FlightStore store = generate_flights(600, seed);
        std::set<std::string> uids, numbers;
        for (const auto& r : store.records()) {
            EXPECT_TRUE(uids.insert(r.flight_uid).second);
            EXPECT_TRUE(numbers.insert(r.flight_nr).second);
            EXPECT_TRUE(std::regex_match(r.flight_uid, uid));
            EXPECT_TRUE(is_valid_flight_nr(r.flight_nr)) << r.flight_nr;
            const AirlineInfo* a = airline_by_prefix(flight_prefix(r.flight_nr));
            ASSERT_NE(a, nullptr) << r.flight_nr;
            EXPECT_EQ(r.airline_name, a->name);
            EXPECT_EQ(r.flight_nr.size(), a->prefix.size() + 4);
            EXPECT_EQ(r.aircraft_registration.rfind(std::string(a->registration_prefix), 0), 0u);
            EXPECT_TRUE(std::regex_match(r.ramp, ramp)) << r.ramp;
            EXPECT_EQ(r.pier, r.ramp.substr(0, 1));
            EXPECT_EQ(r.bus_service == BusService::remote, !r.bus_gate.empty());
            if (!r.bus_gate.empty()) {
                EXPECT_TRUE(std::regex_match(r.bus_gate, bus)) << r.bus_gate;
                EXPECT_NE(r.bus_gate, r.ramp);
            }
            if (r.direction == Direction::departure) {
                EXPECT_EQ(r.expected_on_ramp, r.scheduled_block.plus_minutes(-45));
                EXPECT_EQ(r.expected_off_ramp, r.scheduled_block.plus_minutes(30));
            } else {
                EXPECT_EQ(r.expected_on_ramp, r.scheduled_block);
                EXPECT_EQ(r.expected_off_ramp, r.scheduled_block.plus_minutes(60));
                EXPECT_FALSE(r.push_back);
            }
            EXPECT_GE(r.mtt_minutes, 25);
            EXPECT_LE(r.mtt_minutes, 60);
            EXPECT_LE(r.mtt_single_leg_minutes, r.mtt_minutes);
            if (a->prefix == "KL" || a->prefix == "HV") EXPECT_EQ(r.main_ground_handler, "KLM Ground Services");
            EXPECT_LT(r.modified_at, r.scheduled_block);
            if (r.actual_off_ramp) {
                EXPECT_EQ(r.flight_state, "departed");
                EXPECT_GT(*r.actual_take_off, *r.actual_off_ramp);
            }
        }
    }
}

TEST(Flights, AirlineMixTracksWeights) {
    const FlightStore store = generate_flights(5000, 3);
    std::map<std::string, double> share;
    for (const auto& r : store.records()) share[r.airline_name] += 1.0 / 5000;
    int total = 0;
    for (const auto& a : airlines()) total += a.weight;
    for (const auto& a : airlines())
        EXPECT_NEAR(share[std::string(a.name)], static_cast<double>(a.weight) / total, 0.03) << a.name;
}

TEST(Flights, ConnectionsResolveToLaterFlightsOfTheSameAirline) {
    const FlightStore store = generate_flights(1350, 42);
    std::set<std::string> targets;
    std::size_t connections = 0;
    for (const auto& r : store.records()) {
        if (r.connecting_flight_nr.empty()) {
            EXPECT_TRUE(r.connecting_flight_uid.empty());
            continue;
        }
        ++connections;
        const FlightRecord* c = store.find_uid(r.connecting_flight_uid);
        ASSERT_NE(c, nullptr);
        EXPECT_EQ(c->flight_nr, r.connecting_flight_nr);
        EXPECT_EQ(c->airline_name, r.airline_name);
        EXPECT_GT(c->scheduled_block, r.scheduled_block.plus_minutes(r.mtt_minutes));
        EXPECT_TRUE(targets.insert(c->flight_uid).second) << "two flights connect into " << c->flight_nr;
    }
    EXPECT_GT(connections, 1350 * 0.2);
    EXPECT_LT(connections, 1350 * 0.35);
}

TEST(Flights, DualUseGatesExist) {
    const FlightStore store = generate_flights(1350, 42);
    std::set<std::string> ramps;
    for (const auto& r : store.records()) ramps.insert(r.ramp);
    std::size_t dual = 0, bus = 0;
    for (const auto& r : store.records()) {
        if (r.bus_gate.empty()) continue;
        ++bus;
        if (r.bus_gate[0] != 'S') {
            ++dual;
            EXPECT_TRUE(ramps.count(r.bus_gate));
        }
    }
    EXPECT_GT(dual, 0u);
    EXPECT_LT(static_cast<double>(dual) / bus, 0.2);
}

TEST(Flights, Limits) {
    EXPECT_TRUE(generate_flights(0, 1).empty());
    EXPECT_EQ(generate_flights(1, 1).size(), 1u);
    EXPECT_THROW(generate_flights(7 * 9000 + 1, 1), Error);
}

TEST(Questions, StraightforwardAnswersAreFieldValues) {
    const auto& b = testsupport::default_bundle();
    ASSERT_EQ(b.straightforward.size(), 150u);
    for (const auto& p : b.straightforward) {
        EXPECT_EQ(p.category, QC::straightforward);
        const FlightRecord* r = b.store.find_uid(p.grounding_uid);
        ASSERT_NE(r, nullptr);
        EXPECT_EQ(r->flight_nr, p.params.at("flight"));
        EXPECT_NE(p.question.find(r->flight_nr), std::string::npos);
        EXPECT_EQ(field_text(*r, *field_index(p.params.at("field"))), p.answer);
        EXPECT_FALSE(p.answer.empty());
    }
}

TEST(Questions, GateAnswersMatchBruteForce) {
    const auto& b = testsupport::default_bundle();
    std::size_t checked = 0, timed = 0;
    for (const auto* set : {&b.ambiguous, &b.classification})
        for (const auto& p : *set) {
            if (!p.params.count("gate")) continue;
            const std::string gate = p.params.at("gate");
            const auto flights = at_gate(b.store, gate);
            ASSERT_FALSE(flights.empty());
            if (p.params.count("time")) {
                const Timestamp t = *Timestamp::parse(p.params.at("time"));
                const FlightRecord* hit = b.store.find_uid(p.grounding_uid);
                ASSERT_NE(hit, nullptr);
                EXPECT_EQ(hit->flight_nr, p.answer);
                EXPECT_GE(hit->scheduled_block, t);
                // some flight at the gate is exactly one hour after T, so the answer is within it
                EXPECT_LE(hit->scheduled_block, t.plus_minutes(60));
                for (const auto* f : flights)
                    if (f->scheduled_block >= t)
                        EXPECT_TRUE(f->scheduled_block > hit->scheduled_block ||
                                    (f->scheduled_block == hit->scheduled_block &&
                                     f->flight_uid >= hit->flight_uid));
                ++timed;
            } else if (p.template_id == "bgq_airline") {
                std::vector<std::string> names;
                for (const auto* f : flights) names.push_back(f->airline_name);
                EXPECT_EQ(p.answer, sorted_join(names));
            } else {
                std::vector<std::string> nrs;
                for (const auto* f : flights) nrs.push_back(f->flight_nr);
                EXPECT_EQ(p.answer, sorted_join(nrs));
            }
            ++checked;
        }
    EXPECT_GT(checked, 50u);
    EXPECT_GT(timed, 0u);
}

TEST(Questions, ClarificationPairsCarryTheirSlots) {
    const auto& b = testsupport::default_bundle();
    for (const auto& p : b.ambiguous) {
        const bool clarify = p.category == QC::twaq || p.category == QC::bqa || p.category == QC::afq;
        EXPECT_EQ(p.needs_clarification(), clarify) << p.question;
        if (p.category == QC::afq) {
            const std::string& digits = p.params.at("digits");
            EXPECT_EQ(digits.size(), 4u);
            EXPECT_NE(p.question.find(p.template_id == "afq_what_gate" ? p.params.at("digits_short")
                                                                        : digits),
                      std::string::npos);
        }
        if (p.category == QC::twaq || p.category == QC::bqa)
            EXPECT_NE(p.question.find(p.template_id == "bqa_where" ? p.params.at("airline_lower")
                                                                    : p.params.at("airline")),
                      std::string::npos);
    }
}

TEST(Questions, CategoryHistogramIsRoundRobin) {
    const auto& b = testsupport::default_bundle();
    std::map<QC, std::size_t> amb, cls, few;
    for (const auto& p : b.ambiguous) ++amb[p.category];
    for (const auto& p : b.classification) ++cls[p.category];
    for (const auto& p : b.fewshot_classification) ++few[p.category];
    EXPECT_EQ(amb.size(), 6u);
    for (QC c : kAmbiguousCategories) {
        EXPECT_EQ(amb[c], c == QC::afq ? 30u : 31u) << category_name(c);
        EXPECT_EQ(few[c], 10u);
    }
    EXPECT_EQ(cls[QC::straightforward], 32u);
    EXPECT_EQ(cls[QC::taq], 32u);
    EXPECT_EQ(cls[QC::bgq], 32u);
    for (QC c : {QC::nfq, QC::twaq, QC::bqa, QC::afq}) EXPECT_EQ(cls[c], 31u);
}

TEST(Questions, NextFlightAnswersMatchOracles) {
    const auto& b = testsupport::default_bundle();
    for (const auto* set : {&b.ambiguous, &b.reasoning})
        for (const auto& p : *set) {
            const FlightRecord* s = b.store.find_flight_nr(p.params.count("flight") ? p.params.at("flight") : "");
            if (p.template_id == "nfq_same_ramp" || p.template_id == "rs_next_same_ramp") {
                ASSERT_NE(s, nullptr);
                const auto uid = oracle::next_at_ramp_uid(b.store, s->flight_uid);
                ASSERT_TRUE(uid);
                EXPECT_EQ(b.store.find_uid(*uid)->flight_nr, p.answer);
                EXPECT_EQ(graph::next_flight_oracle(b.store, s->flight_nr, graph::NextMode::same_ramp),
                          p.answer);
            } else if (p.template_id == "nfq_connecting") {
                ASSERT_NE(s, nullptr);
                EXPECT_EQ(s->connecting_flight_nr, p.answer);
            } else if (p.template_id == "rs_connecting_on_ramp") {
                ASSERT_NE(s, nullptr);
                EXPECT_EQ(b.store.find_uid(s->connecting_flight_uid)->expected_on_ramp.to_string(), p.answer);
            }
        }
}

TEST(Questions, ReasoningAlternatesFamilies) {
    const auto& b = testsupport::default_bundle();
    ASSERT_EQ(b.reasoning.size(), 30u);
    for (std::size_t i = 0; i < b.reasoning.size(); ++i) {
        EXPECT_EQ(b.reasoning[i].template_id, i % 2 ? "rs_next_same_ramp" : "rs_connecting_on_ramp");
        EXPECT_EQ(b.reasoning[i].category, QC::nfq);
    }
}

TEST(Questions, ReasoningNeedsConnections) {
    const FlightStore store = generate_flights(200, 5, {.connecting_fraction = 0.0});
    try {
        generate_reasoning(store, 10, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::no_connecting_flights);
    }
}

TEST(Questions, EmptyStoreIsRejected) {
    const FlightStore empty;
    for (auto gen : {&generate_straightforward, &generate_ambiguous, &generate_classification}) {
        try {
            gen(empty, 5, 1);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), Errc::empty_store);
        }
    }
}

TEST(Questions, DeterministicPerSeed) {
    const FlightStore store = generate_flights(300, 4);
    EXPECT_EQ(generate_ambiguous(store, 60, 9), generate_ambiguous(store, 60, 9));
    EXPECT_EQ(generate_straightforward(store, 60, 9), generate_straightforward(store, 60, 9));
    EXPECT_NE(generate_ambiguous(store, 60, 9), generate_ambiguous(store, 60, 10));
}

TEST(Bundle, SizesAndFewshot) {
    const auto& b = testsupport::default_bundle();
    EXPECT_EQ(b.store.size(), 1350u);
    EXPECT_EQ(b.ambiguous.size(), 185u);
    EXPECT_EQ(b.classification.size(), 220u);
    EXPECT_EQ(b.fewshot_sql.size(), 47u);
    EXPECT_EQ(b.fewshot_graph.size(), 47u);
    EXPECT_EQ(b.fewshot_answers.size(), 20u);
    for (std::size_t i = 0; i < b.fewshot_sql.size(); ++i)
        EXPECT_EQ(b.fewshot_sql[i].question, b.fewshot_graph[i].question);
    std::size_t answerable = 0;
    for (const auto& p : b.ambiguous) answerable += !p.needs_clarification();
    EXPECT_EQ(b.gold_sql.size(), 150 + answerable + 30);
    EXPECT_EQ(b.gold_graph.size(), b.gold_sql.size());
}

TEST(Bundle, WriteReadRoundTrip) {
    const auto& b = testsupport::default_bundle();
    const auto dir = testsupport::temp_dir("bundle_rt");
    write_bundle(b, dir);
    for (const char* f : {"flights.csv", "straightforward.jsonl", "ambiguous.jsonl", "classification.jsonl",
                          "reasoning.jsonl", "fewshot_classification.jsonl", "fewshot_sql.jsonl",
                          "fewshot_graph.jsonl", "fewshot_answers.jsonl", "gold_sql.jsonl",
                          "gold_graph.jsonl", "fixture.jsonl", "manifest.json"})
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    const Bundle r = read_bundle(dir);
    EXPECT_EQ(r.seed, b.seed);
    EXPECT_EQ(csv_of(r.store), csv_of(b.store));
    EXPECT_EQ(r.straightforward, b.straightforward);
    EXPECT_EQ(r.ambiguous, b.ambiguous);
    EXPECT_EQ(r.classification, b.classification);
    EXPECT_EQ(r.reasoning, b.reasoning);
    EXPECT_EQ(r.fewshot_classification, b.fewshot_classification);
    EXPECT_EQ(r.gold_sql, b.gold_sql);
    EXPECT_EQ(r.gold_graph, b.gold_graph);
    ASSERT_EQ(r.fewshot_sql.size(), b.fewshot_sql.size());
    for (std::size_t i = 0; i < r.fewshot_sql.size(); ++i) {
        EXPECT_EQ(r.fewshot_sql[i].question, b.fewshot_sql[i].question);
        EXPECT_EQ(r.fewshot_sql[i].output, b.fewshot_sql[i].output);
    }
    EXPECT_EQ(llm::load_fixture((dir / "fixture.jsonl").string()).size(), build_fixture(b).size());

    // a second write is byte-identical
    const auto dir2 = testsupport::temp_dir("bundle_rt2");
    write_bundle(generate_bundle(testsupport::kSeed), dir2);
    for (const char* f : {"flights.csv", "ambiguous.jsonl", "gold_graph.jsonl", "fixture.jsonl"})
        EXPECT_EQ(testsupport::read_file(dir / f), testsupport::read_file(dir2 / f)) << f;
}

TEST(Bundle, ReadRejectsMissingDirectoryAndBadLines) {
    try {
        read_bundle("/nonexistent/flightrag");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::io);
    }
    EXPECT_THROW(qa_from_jsonl("{\"question\": 1}\n"), Error);
    EXPECT_THROW(qa_from_jsonl("not json\n"), Error);
    EXPECT_TRUE(qa_from_jsonl("\n\n").empty());
}

TEST(Fixture, HallucinationInjectionNamesUnknownFlights) {
    const auto& b = testsupport::default_bundle();
    const auto clean = build_fixture(b);
    const auto dirty = build_fixture(b, {.hallucinate_every = 3});
    ASSERT_EQ(clean.size(), dirty.size());
    std::size_t injected = 0;
    const std::regex fr("Flight (FR\\d{4}) is also expected");
    for (std::size_t i = 0; i < clean.size(); ++i) {
        if (clean[i].response == dirty[i].response) continue;
        std::smatch m;
        ASSERT_TRUE(std::regex_search(dirty[i].response, m, fr));
        EXPECT_EQ(b.store.find_flight_nr(m[1].str()), nullptr);
        ++injected;
    }
    EXPECT_GT(injected, 5u);
}

TEST(Fixture, LastRuleIsTheAnswerCatchAll) {
    const auto rules = build_fixture(testsupport::default_bundle());
    ASSERT_FALSE(rules.empty());
    EXPECT_EQ(rules.back().match, std::vector<std::string>{std::string(prompting::kTraditionalAnswerMarker)});
    std::set<std::vector<std::string>> seen;
    for (const auto& r : rules) EXPECT_TRUE(seen.insert(r.match).second);
}

TEST(Paraphrase, KeepsSlotsOrFallsBack) {
    const FlightStore store = generate_flights(50, 2);
    auto pairs = generate_straightforward(store, 2, 3);
    const std::string f0 = pairs[0].params.at("flight");
    const auto model = testsupport::scripted(
        {{{"Rewrite the question", "User question: " + pairs[0].question}, "Tell me about " + f0 + " please"},
         {{"Rewrite the question"}, "Tell me about that flight"}});
    const auto out = paraphrase(pairs, *model);
    EXPECT_EQ(out[0].question, "Tell me about " + f0 + " please");
    EXPECT_EQ(out[0].answer, pairs[0].answer);
    EXPECT_EQ(out[1].question, pairs[1].question);
}
