#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>

#include "flightrag/datagen.hpp"
#include "flightrag/error.hpp"
#include "flightrag/rng.hpp"
#include "flightrag/sqlrag.hpp"
#include "oracles.hpp"
#include "testdata.hpp"

using namespace flightrag;
using namespace flightrag::sql;

namespace {

Errc code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return Errc::internal;
}

QueryResult run(const FlightStore& store, std::string_view text) {
    return execute_sql(store, SqlQuery::from(text));
}

std::vector<std::vector<std::string>> sorted(std::vector<std::vector<std::string>> rows) {
    std::sort(rows.begin(), rows.end());
    return rows;
}

const FlightStore& small_store() {
    static const FlightStore s = datagen::generate_flights(300, 17);
    return s;
}

}  // namespace

TEST(Execute, MatchesFullScanOracleOnRandomQueries) {
    const FlightStore& store = small_store();
    Rng rng(2024);
    const auto start = std::chrono::steady_clock::now();
    std::size_t nonempty = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto c = oracle::random_sql_case(store, rng);
        QueryResult got;
        try {
            got = run(store, c.sql);
        } catch (const Error& e) {
            ADD_FAILURE() << c.sql << " -> " << e.what();
            continue;
        }
        if (c.ordered)
            EXPECT_EQ(got.text_rows(), c.rows) << c.sql;
        else
            EXPECT_EQ(sorted(got.text_rows()), sorted(c.rows)) << c.sql;
        nonempty += !c.rows.empty();
    }
    EXPECT_GT(nonempty, 300u);
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 30.0);
}

TEST(Execute, GoldQueriesReproduceExpectedRows) {
    const auto& b = testsupport::default_bundle();
    ASSERT_FALSE(b.gold_sql.empty());
    for (const auto& g : b.gold_sql) {
        const auto result = run(b.store, g.query);
        EXPECT_EQ(sorted(result.text_rows()), sorted(g.expected_rows)) << g.query;
    }
}

TEST(Execute, Semantics) {
    const FlightStore& store = small_store();
    const auto& r = store.records()[0];
    // codes compare case-insensitively, text does not
    EXPECT_EQ(run(store, "SELECT flight_uid FROM flights WHERE flight_nr = '" +
                             std::string(1, static_cast<char>(std::tolower(r.flight_nr[0]))) + r.flight_nr.substr(1) + "'")
                  .rows.size(),
              1u);
    EXPECT_EQ(run(store, "select count(*) from flights").text_rows(),
              (std::vector<std::vector<std::string>>{{"300"}}));
    // NULLs sort first ascending and last descending
    const auto asc = run(store, "SELECT actual_block FROM flights ORDER BY actual_block").text_rows();
    EXPECT_EQ(asc.front()[0], "");
    EXPECT_NE(asc.back()[0], "");
    const auto desc = run(store, "SELECT actual_block FROM flights ORDER BY actual_block DESC").text_rows();
    EXPECT_EQ(desc.back()[0], "");
    // NULL never equals anything, including under NOT
    const auto nulls = run(store, "SELECT COUNT(*) FROM flights WHERE actual_block IS NULL").text_rows()[0][0];
    const auto eq = run(store, "SELECT COUNT(*) FROM flights WHERE actual_block = actual_block").text_rows()[0][0];
    EXPECT_EQ(std::stoi(nulls) + std::stoi(eq), 300);
    EXPECT_EQ(run(store, "SELECT COUNT(*) FROM flights WHERE NOT (actual_block = '2000-01-01 00:00:00+0000')")
                  .text_rows()[0][0],
              eq);
    // LIMIT/OFFSET after DISTINCT
    const auto piers = run(store, "SELECT DISTINCT pier FROM flights ORDER BY pier LIMIT 3 OFFSET 1").text_rows();
    EXPECT_EQ(piers, (std::vector<std::vector<std::string>>{{"C"}, {"D"}, {"E"}}));
    EXPECT_EQ(run(store, "SELECT * FROM flights LIMIT 1").columns.size(), flight_fields().size());
}

TEST(Execute, ErrorKinds) {
    const FlightStore& store = small_store();
    EXPECT_EQ(code_of([&] { run(store, "SELECT gate_nr FROM flights"); }), Errc::unknown_column);
    EXPECT_EQ(code_of([&] { run(store, "SELECT flight_nr FROM planes"); }), Errc::unknown_table);
    EXPECT_EQ(code_of([&] { run(store, "SELECT a.flight_nr FROM flights a, flights b"); }), Errc::parse_error);
    EXPECT_EQ(code_of([&] { run(store, "SELECT flight_nr, COUNT(*) FROM flights"); }), Errc::parse_error);
    EXPECT_EQ(code_of([&] { run(store, "SELECT FROM flights"); }), Errc::parse_error);
    EXPECT_EQ(code_of([&] { run(store, "SELECT flight_nr FROM flights WHERE"); }), Errc::parse_error);
    EXPECT_EQ(code_of([&] { run(store, "SELECT flight_nr FROM flights WHERE ramp = 'D07"); }), Errc::parse_error);
}

TEST(Sanitize, RejectsEverythingButOneSelect) {
    struct Attack {
        const char* sql;
        Errc code;
    };
    const Attack attacks[] = {
        {"DROP TABLE flights", Errc::forbidden_statement},
        {"delete from flights", Errc::forbidden_statement},
        {"INSERT INTO flights VALUES (1)", Errc::forbidden_statement},
        {"UPDATE flights SET ramp = 'A01'", Errc::forbidden_statement},
        {"ALTER TABLE flights ADD x", Errc::forbidden_statement},
        {"CREATE TABLE t (x)", Errc::forbidden_statement},
        {"ATTACH DATABASE 'x' AS y", Errc::forbidden_statement},
        {"PRAGMA table_info(flights)", Errc::forbidden_statement},
        {"WITH x AS (SELECT 1) SELECT * FROM x", Errc::forbidden_statement},
        {"REPLACE INTO flights VALUES (1)", Errc::forbidden_statement},
        {"VACUUM", Errc::forbidden_statement},
        {"EXPLAIN SELECT * FROM flights", Errc::forbidden_statement},
        {"SELECT * INTO backup FROM flights", Errc::forbidden_statement},
        {"SELECT * FROM flights; DROP TABLE flights", Errc::multiple_statements},
        {"SELECT 1; SELECT 2", Errc::multiple_statements},
        {"SELECT * FROM flights;;DELETE FROM flights", Errc::multiple_statements},
        {"", Errc::parse_error},
        {"   ", Errc::parse_error},
        {"(SELECT * FROM flights)", Errc::parse_error},
        {"hello world", Errc::parse_error},
    };
    for (const auto& a : attacks)
        EXPECT_EQ(code_of([&] { sanitize_sql(SqlQuery::from(a.sql)); }), a.code) << a.sql;
    EXPECT_NO_THROW(sanitize_sql(SqlQuery::from("SELECT * FROM flights;")));
    EXPECT_NO_THROW(sanitize_sql(SqlQuery::from("SELECT * FROM flights WHERE flight_state = 'drop table'")));
    EXPECT_NO_THROW(sanitize_sql(SqlQuery::from("SELECT * FROM flights WHERE ramp = 'INTO'")));
    // the store is untouched by any attack
    EXPECT_EQ(run(small_store(), "SELECT COUNT(*) FROM flights").text_rows()[0][0], "300");
}

TEST(ExactMatch, NormalisesKeywordsAndWhitespaceOnly) {
    const auto a = SqlQuery::from("SELECT ramp FROM flights WHERE flight_nr = 'KL1000';");
    EXPECT_TRUE(exact_match(SqlQuery::from("select   ramp\nfrom flights where flight_nr = 'KL1000'"), a));
    EXPECT_FALSE(exact_match(SqlQuery::from("SELECT ramp FROM flights WHERE flight_nr = 'kl1000'"), a));
    EXPECT_FALSE(exact_match(SqlQuery::from("SELECT RAMP FROM flights WHERE flight_nr = 'KL1000'"), a));
    EXPECT_EQ(normalize_sql("SELECT  'A  b' FROM x ;"), "select 'A  b' from x");
    EXPECT_EQ(normalize_sql("Select 'it''s' ; ;"), "select 'it''s'");
}

TEST(ExecutionMatch, ColumnOrderAndRowOrderDoNotMatter) {
    const FlightStore& store = small_store();
    const auto gold = SqlQuery::from("SELECT flight_nr, ramp FROM flights WHERE pier = 'D'");
    EXPECT_TRUE(execution_match(store, SqlQuery::from("SELECT ramp, flight_nr FROM flights WHERE pier = 'd'"), gold));
    EXPECT_TRUE(execution_match(
        store, SqlQuery::from("SELECT flight_nr, ramp FROM flights WHERE ramp LIKE 'D%' ORDER BY ramp DESC"), gold));
    std::string reason;
    EXPECT_FALSE(execution_match(store, SqlQuery::from("SELECT flight_nr FROM flights WHERE pier = 'D'"), gold, &reason));
    EXPECT_EQ(reason, "results differ");
    EXPECT_FALSE(execution_match(store, SqlQuery::from("DROP TABLE flights"), gold, &reason));
    EXPECT_EQ(reason.rfind("predicted query failed", 0), 0u);
    EXPECT_FALSE(execution_match(store, gold, SqlQuery::from("SELECT nope FROM flights"), &reason));
    EXPECT_EQ(reason.rfind("gold query failed", 0), 0u);
}

TEST(ExecutionMatch, MultisetsAndTypes) {
    QueryResult a{{"x", "y"}, {{Value(1), Value("a")}, {Value(1), Value("a")}, {Value(2), Value("b")}}};
    QueryResult b{{"y", "x"}, {{Value("b"), Value(2)}, {Value("a"), Value(1)}, {Value("a"), Value(1)}}};
    EXPECT_TRUE(results_equivalent(a, b));
    QueryResult c{{"y", "x"}, {{Value("b"), Value(2)}, {Value("b"), Value(2)}, {Value("a"), Value(1)}}};
    EXPECT_FALSE(results_equivalent(a, c));
    QueryResult d{{"x"}, {{Value(1)}}}, e{{"x"}, {{Value("1")}}};
    EXPECT_FALSE(results_equivalent(d, e));
    EXPECT_TRUE(results_equivalent(QueryResult{{"x"}, {}}, QueryResult{{"z"}, {}}));
    EXPECT_FALSE(results_equivalent(QueryResult{{"x"}, {}}, QueryResult{{"x", "y"}, {}}));
}

TEST(TextToSql, StripsFencesAndRetriesOnce) {
    const auto fenced = testsupport::scripted({{{"User question: q\n"}, "```sql\nSELECT ramp FROM flights\n```"}});
    EXPECT_EQ(text_to_sql("q", *fenced).text, "SELECT ramp FROM flights");

    const auto retry = testsupport::scripted({
        {{"User question: q\n", "could not be parsed"}, "SELECT ramp FROM flights"},
        {{"User question: q\n"}, "I think the answer is D07"},
    });
    EXPECT_EQ(text_to_sql("q", *retry).text, "SELECT ramp FROM flights");

    const auto hopeless = testsupport::scripted({{{"User question: q\n"}, "no idea"}});
    EXPECT_EQ(code_of([&] { text_to_sql("q", *hopeless); }), Errc::unparseable_after_retry);

    const auto evil = testsupport::scripted({{{"User question: q\n"}, "DROP TABLE flights"}});
    EXPECT_EQ(code_of([&] { text_to_sql("q", *evil); }), Errc::forbidden_statement);

    const auto silent = testsupport::scripted({});
    EXPECT_EQ(code_of([&] { text_to_sql("q", *silent); }), Errc::no_fixture_match);
}

TEST(TextToSql, BothPromptStylesReachTheModel) {
    const auto& b = testsupport::default_bundle();
    const auto model = testsupport::default_model();
    for (auto style : {PromptStyle::odp, PromptStyle::crp}) {
        TextToSqlOptions o;
        o.style = style;
        o.fewshot = b.fewshot_sql;
        o.row_count = b.store.size();
        const auto q = text_to_sql(b.gold_sql[0].question, *model, o);
        EXPECT_TRUE(exact_match(q, SqlQuery::from(b.gold_sql[0].query)));
    }
}

TEST(Verbalize, Wording) {
    EXPECT_EQ(verbalize_rows(QueryResult{{"ramp"}, {}}), kNoMatchAnswer);
    EXPECT_EQ(verbalize_rows(QueryResult{{"ramp"}, {{Value("D07")}}}), "The ramp is D07.");
    EXPECT_EQ(verbalize_rows(QueryResult{{"f.ramp"}, {{Value("D07")}}}), "The ramp is D07.");
    EXPECT_EQ(verbalize_rows(QueryResult{{"flight_nr"}, {{Value("KL1")}, {Value()}}}),
              "Found 2 results for flight number: KL1, (none).");
    const auto model = testsupport::scripted({{{"Turn the query result"}, "Ramp D07."}});
    EXPECT_EQ(answer_from_rows("q", "SELECT", QueryResult{{"ramp"}, {{Value("D07")}}}, model.get()).text, "Ramp D07.");
    const auto dead = testsupport::scripted({});
    const auto fallback = answer_from_rows("q", "SELECT", QueryResult{{"ramp"}, {{Value("D07")}}}, dead.get());
    EXPECT_TRUE(fallback.templated);
    EXPECT_EQ(fallback.text, "The ramp is D07.");
    EXPECT_EQ(answer_from_rows("q", "SELECT", QueryResult{{"ramp"}, {}}, model.get()).text, kNoMatchAnswer);
}

TEST(Schema, OneColumnPerField) {
    const auto s = flight_table_schema(12);
    ASSERT_EQ(s.entities.size(), 1u);
    EXPECT_EQ(s.entities[0].name, "flights");
    EXPECT_EQ(s.entities[0].properties.size(), flight_fields().size());
}
