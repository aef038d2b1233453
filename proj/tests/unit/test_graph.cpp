#include <gtest/gtest.h>

#include <algorithm>

#include "flightrag/datagen.hpp"
#include "flightrag/error.hpp"
#include "flightrag/graphrag.hpp"
#include "flightrag/rng.hpp"
#include "flightrag/sqlrag.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "testdata.hpp"

using namespace flightrag;
using namespace flightrag::graph;

namespace {

Errc code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return Errc::internal;
}

QueryResult run(const PropertyGraph& g, std::string_view q) { return execute_graph(g, GraphQuery::parse(q)); }

std::vector<std::vector<std::string>> sorted(std::vector<std::vector<std::string>> rows) {
    std::sort(rows.begin(), rows.end());
    return rows;
}

oracle::GraphCounts counts_of(const PropertyGraph& g) {
    oracle::GraphCounts c;
    for (const auto& n : g.nodes()) ++c.nodes[n.label];
    for (const auto& e : g.edges()) ++c.edges[e.type];
    return c;
}

// Store whose flights share a handful of ramps and on-ramp times, so ties are common.
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

TEST(Build, CountsMatchRecordOracle) {
    for (const FlightStore* store : {&testsupport::default_bundle().store})
        EXPECT_EQ(counts_of(build_graph(*store)).nodes, oracle::count_graph(*store).nodes);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const FlightStore store = datagen::generate_flights(200, seed);
        const auto got = counts_of(build_graph(store));
        const auto want = oracle::count_graph(store);
        EXPECT_EQ(got.nodes, want.nodes);
        EXPECT_EQ(got.edges, want.edges);
    }
    const FlightStore crowded = crowded_store(4);
    EXPECT_EQ(counts_of(build_graph(crowded)).edges, oracle::count_graph(crowded).edges);
}

TEST(Build, EdgesConnectTheDeclaredLabels) {
    const auto& g = testsupport::default_engine().graph();
    const std::map<std::string, std::pair<std::string, std::string>> shape = {
        {"AT_RAMP", {"Flight", "Ramp"}},         {"AT_BUS_GATE", {"Flight", "BusGate"}},
        {"AT_PIER", {"Flight", "Pier"}},         {"OPERATED_BY", {"Flight", "Airline"}},
        {"CONNECTS_TO", {"Flight", "Flight"}},   {"NEXT_AT_RAMP", {"Flight", "Flight"}}};
    for (const auto& e : g.edges()) {
        const auto& [from, to] = shape.at(e.type);
        EXPECT_EQ(g.nodes()[e.from].label, from);
        EXPECT_EQ(g.nodes()[e.to].label, to);
    }
    for (const auto& n : g.nodes()) {
        EXPECT_EQ(n.id.substr(0, n.id.find(':')),
                  n.label == "Flight" ? "flight" : n.label == "Ramp" ? "ramp" : n.label == "BusGate" ? "bus_gate"
                                                               : n.label == "Pier"  ? "pier" : "airline");
        for (const auto& [k, v] : n.properties) EXPECT_FALSE(v.is_null()) << n.id << "." << k;
    }
    EXPECT_TRUE(g.find_node("airline:KL"));
    EXPECT_FALSE(g.find_node("airline:ZZ"));
}

TEST(Build, NextAtRampMatchesScanOracle) {
    std::vector<FlightStore> stores;
    stores.push_back(datagen::generate_flights(200, 11));
    stores.push_back(crowded_store(12));
    stores.push_back(crowded_store(13));
    for (const auto& store : stores) {
        const PropertyGraph g = build_graph(store);
        for (const auto& r : store.records()) {
            const std::size_t node = *g.find_node("flight:" + r.flight_uid);
            std::optional<std::string> got;
            for (std::size_t e : g.out_edges(node)) {
                if (g.edges()[e].type != "NEXT_AT_RAMP") continue;
                EXPECT_FALSE(got) << "two NEXT_AT_RAMP edges from " << r.flight_uid;
                got = g.nodes()[g.edges()[e].to].properties.at("flight_uid").to_string();
            }
            const auto want = oracle::next_at_ramp_uid(store, r.flight_uid);
            EXPECT_EQ(got, want) << r.flight_uid;
            const auto by_nr = next_flight_oracle(store, r.flight_nr, NextMode::same_ramp);
            EXPECT_EQ(by_nr.has_value(), want.has_value());
            if (want) EXPECT_EQ(*by_nr, store.find_uid(*want)->flight_nr);
        }
    }
}

TEST(Build, DanglingConnections) {
    const FlightStore base = datagen::generate_flights(20, 5);
    std::vector<FlightRecord> recs(base.records().begin(), base.records().end());
    recs[3].connecting_flight_nr = "KL9999";
    recs[3].connecting_flight_uid = "";
    const FlightStore store = FlightStore::from_records(recs);
    if (store.find_flight_nr("KL9999")) GTEST_SKIP();
    EXPECT_EQ(code_of([&] { build_graph(store); }), Errc::dangling_connection);
    std::vector<std::string> warnings;
    const PropertyGraph g = build_graph(store, {.skip_dangling = true}, &warnings);
    ASSERT_EQ(warnings.size(), 1u);
    EXPECT_NE(warnings[0].find("KL9999"), std::string::npos);
    EXPECT_EQ(g.nodes_with_label("Flight").size(), 20u);
}

TEST(Build, EmptyStoreGivesEmptyGraph) {
    const PropertyGraph g = build_graph(FlightStore{});
    EXPECT_TRUE(g.nodes().empty());
    EXPECT_TRUE(g.nodes_with_label("Flight").empty());
    EXPECT_TRUE(g.property_names("Flight").empty());
}

TEST(Schema, IntrospectionReportsLabelsAndRelationships) {
    const auto& engine = testsupport::default_engine();
    const auto s = introspect_schema(engine.graph());
    EXPECT_EQ(s.kind, SchemaKind::graph);
    std::map<std::string, std::size_t> labels;
    for (const auto& e : s.entities) labels[e.name] = e.count;
    const auto want = oracle::count_graph(engine.store());
    EXPECT_EQ(labels, want.nodes);
    std::map<std::string, std::size_t> rels;
    for (const auto& r : s.relationships) rels[r.type] += r.count;
    EXPECT_EQ(rels, want.edges);
}

TEST(Query, GoldQueriesReproduceExpectedRows) {
    const auto& b = testsupport::default_bundle();
    const auto& g = testsupport::default_engine().graph();
    for (const auto& gold : b.gold_graph) {
        const auto result = run(g, gold.query);
        EXPECT_EQ(sorted(result.text_rows()), sorted(gold.expected_rows)) << gold.query;
    }
}

TEST(Query, CanonicalFormIsAFixedPoint) {
    const auto& b = testsupport::default_bundle();
    for (const auto& gold : b.gold_graph) {
        const auto q = GraphQuery::parse(gold.query);
        EXPECT_EQ(GraphQuery::parse(q.canonical()).canonical(), q.canonical()) << gold.query;
    }
}

TEST(Query, AgreesWithSqlOnGateLookups) {
    const FlightStore store = datagen::generate_flights(300, 21);
    const PropertyGraph g = build_graph(store);
    Rng rng(3);
    for (int i = 0; i < 60; ++i) {
        const auto& r = store.records()[rng.below(store.size())];
        const std::string gate = rng.chance(0.5) && !r.bus_gate.empty() ? r.bus_gate : r.ramp;
        const auto via_graph = run(g, "MATCH (f:Flight) WHERE f.ramp = '" + gate + "' OR f.bus_gate = '" + gate +
                                          "' RETURN f.flight_nr");
        const auto via_edges = run(g, "MATCH (f:Flight)-[:AT_RAMP]->(r:Ramp {code: '" + gate +
                                          "'}) RETURN f.flight_nr");
        const auto via_sql = sql::execute_sql(
            store, sql::SqlQuery::from("SELECT flight_nr FROM flights WHERE ramp = '" + gate + "' OR bus_gate = '" +
                                       gate + "'"));
        EXPECT_TRUE(sql::results_equivalent(via_graph, via_sql)) << gate;
        const auto ramp_only = sql::execute_sql(
            store, sql::SqlQuery::from("SELECT flight_nr FROM flights WHERE ramp = '" + gate + "'"));
        EXPECT_EQ(sorted(via_edges.text_rows()), sorted(ramp_only.text_rows())) << gate;
    }
}

TEST(Query, Semantics) {
    const auto& engine = testsupport::default_engine();
    const auto& g = engine.graph();
    const std::string n = std::to_string(engine.store().size());
    EXPECT_EQ(run(g, "MATCH (f:Flight) RETURN count(*)").text_rows()[0][0], n);
    EXPECT_EQ(run(g, "MATCH (a:Airline) RETURN a.code ORDER BY a.code LIMIT 2").text_rows(),
              (std::vector<std::vector<std::string>>{{"AF"}, {"BA"}}));
    EXPECT_EQ(run(g, "MATCH (p:Pier) RETURN p.code ORDER BY p.code DESC LIMIT 1").text_rows()[0][0], "H");
    // direction matters; undirected matches both ways
    const auto out = run(g, "MATCH (a:Flight)-[:CONNECTS_TO]->(b:Flight) RETURN count(*)").text_rows()[0][0];
    const auto in = run(g, "MATCH (a:Flight)<-[:CONNECTS_TO]-(b:Flight) RETURN count(*)").text_rows()[0][0];
    const auto both = run(g, "MATCH (a:Flight)-[:CONNECTS_TO]-(b:Flight) RETURN count(*)").text_rows()[0][0];
    EXPECT_EQ(out, in);
    EXPECT_EQ(std::stoi(both), 2 * std::stoi(out));
    // codes compare case-insensitively
    EXPECT_EQ(run(g, "MATCH (r:Ramp {code: 'd07'}) RETURN r.code").text_rows(),
              run(g, "MATCH (r:Ramp {code: 'D07'}) RETURN r.code").text_rows());
    EXPECT_EQ(run(g, "MATCH (f:Flight) WHERE f.flight_nr STARTS WITH 'KL' RETURN count(*)").text_rows()[0][0],
              sql::execute_sql(engine.store(), sql::SqlQuery::from("SELECT COUNT(*) FROM flights WHERE flight_nr LIKE 'KL%'"))
                  .text_rows()[0][0]);
    EXPECT_EQ(run(g, "MATCH (a:Airline) RETURN count(*)").text_rows()[0][0],
              "7");
}

TEST(Query, ErrorKinds) {
    const auto& g = testsupport::default_engine().graph();
    EXPECT_EQ(code_of([&] { run(g, "MATCH (x:Gate) RETURN x"); }), Errc::unknown_label);
    EXPECT_EQ(code_of([&] { run(g, "MATCH (a:Flight)-[:FLIES_TO]->(b) RETURN b"); }), Errc::unknown_rel_type);
    EXPECT_EQ(code_of([&] { run(g, "MATCH (f:Flight) RETURN f.gate_nr"); }), Errc::unknown_property);
    EXPECT_EQ(code_of([&] { run(g, "MATCH (f:Flight {colour: 'red'}) RETURN f"); }), Errc::unknown_property);
    EXPECT_EQ(code_of([&] { run(g, "MATCH (f:Flight) RETURN x.ramp"); }), Errc::parse_error);
    EXPECT_EQ(code_of([&] { run(g, "MATCH (a)-[*]->(b) RETURN b"); }), Errc::parse_error);
    EXPECT_EQ(code_of([&] { run(g, "MATCH (f:Flight) DELETE f"); }), Errc::parse_error);
    EXPECT_EQ(code_of([&] { run(g, "CREATE (f:Flight)"); }), Errc::parse_error);
    EXPECT_EQ(code_of([&] { run(g, "MATCH (f:Flight) RETURN f.ramp, count(*)"); }), Errc::parse_error);
    EXPECT_EQ(code_of([&] { run(g, ""); }), Errc::parse_error);
}

TEST(TextToGraph, FencesRetryAndFailure) {
    const auto& engine = testsupport::default_engine();
    const auto fenced = testsupport::scripted(
        {{{"User question: q\n"}, "```cypher\nMATCH (f:Flight) RETURN count(*)\n```"}});
    EXPECT_EQ(text_to_graph_query("q", *fenced, engine.graph_schema()).text(), "MATCH (f:Flight) RETURN count(*)");
    const auto retry = testsupport::scripted({{{"could not be parsed"}, "MATCH (p:Pier) RETURN p.code"},
                                              {{"User question: q\n"}, "SELECT 1"}});
    EXPECT_EQ(text_to_graph_query("q", *retry, engine.graph_schema()).text(), "MATCH (p:Pier) RETURN p.code");
    const auto hopeless = testsupport::scripted({{{"User question: q\n"}, "no"}});
    EXPECT_EQ(code_of([&] { text_to_graph_query("q", *hopeless, engine.graph_schema()); }),
              Errc::unparseable_after_retry);
}

TEST(TextToGraph, ReasoningQuestionsThroughTheBundleModel) {
    const auto& b = testsupport::default_bundle();
    const auto& engine = testsupport::default_engine();
    const auto model = testsupport::default_model();
    std::size_t correct = 0;
    for (const auto& p : b.reasoning) {
        const auto q = text_to_graph_query(p.question, *model, engine.graph_schema(), {b.fewshot_graph, 0});
        const auto rows = execute_graph(engine.graph(), q).text_rows();
        correct += rows.size() == 1 && rows[0][0] == p.answer;
    }
    EXPECT_EQ(correct, b.reasoning.size());
}

TEST(NextFlightOracle, Modes) {
    const auto& store = testsupport::default_bundle().store;
    for (const auto& r : store.records()) {
        if (r.connecting_flight_nr.empty()) continue;
        EXPECT_EQ(next_flight_oracle(store, r.flight_nr, NextMode::same_airline), r.connecting_flight_nr);
        break;
    }
    EXPECT_EQ(code_of([&] { next_flight_oracle(store, "ZZ0000", NextMode::same_ramp); }), Errc::unknown_flight);
}

TEST(Export, OneJsonObjectPerNodeAndEdge) {
    const PropertyGraph g = build_graph(datagen::generate_flights(30, 8));
    const std::string out = export_jsonl(g);
    std::size_t nodes = 0, edges = 0;
    std::size_t start = 0;
    while (start < out.size()) {
        const auto end = out.find('\n', start);
        const auto j = nlohmann::json::parse(out.substr(start, end - start));
        (j["kind"] == "node" ? nodes : edges)++;
        start = end + 1;
    }
    EXPECT_EQ(nodes, g.nodes().size());
    EXPECT_EQ(edges, g.edges().size());
}
