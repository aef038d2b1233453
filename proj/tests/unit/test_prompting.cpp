#include <gtest/gtest.h>

#include <set>

#include "flightrag/error.hpp"
#include "flightrag/graphrag.hpp"
#include "flightrag/prompting.hpp"
#include "flightrag/sqlrag.hpp"
#include "testdata.hpp"

using namespace flightrag;
using namespace flightrag::prompting;

namespace {

Errc code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return Errc::internal;
}

std::map<std::string, std::string> dummy_vars(const PromptTemplate& t) {
    std::map<std::string, std::string> vars;
    for (const auto& v : t.required_vars) vars[v] = "<" + v + ">";
    return vars;
}

}  // namespace

TEST(Catalogue, EveryShippedTemplateParsesAndRenders) {
    const auto all = catalogue();
    std::set<std::string> ids;
    for (const auto& t : all) {
        EXPECT_TRUE(ids.insert(t.id).second);
        const std::string out = render(t, dummy_vars(t), {{"q", "o", "a"}});
        EXPECT_EQ(out.find("{{"), std::string::npos) << t.id;
        for (const auto& v : t.required_vars) EXPECT_NE(out.find("<" + v + ">"), std::string::npos) << t.id;
    }
    for (const char* id : {"classification", "gate_extraction", "clarify_airline", "clarify_partial_number",
                           "traditional_answer", "rows_answer", "sql_odp", "sql_crp", "graph_schema",
                           "refusal", "paraphrase"})
        EXPECT_TRUE(ids.count(id)) << id;
    EXPECT_TRUE(std::is_sorted(all.begin(), all.end(),
                               [](const auto& a, const auto& b) { return a.id < b.id; }));
    EXPECT_EQ(code_of([] { get_template("nope"); }), Errc::invalid_argument);
}

TEST(Catalogue, TaskMarkersAppearInTheirTemplates) {
    const auto has = [](const char* id, std::string_view marker) {
        const auto& t = get_template(id);
        return render(t, dummy_vars(t)).find(marker) != std::string::npos;
    };
    EXPECT_TRUE(has("classification", kClassificationMarker));
    EXPECT_TRUE(has("gate_extraction", kGateExtractionMarker));
    EXPECT_TRUE(has("traditional_answer", kTraditionalAnswerMarker));
    EXPECT_TRUE(has("rows_answer", kRowsAnswerMarker));
    EXPECT_TRUE(has("sql_odp", kSqlMarker));
    EXPECT_TRUE(has("sql_crp", kSqlMarker));
    EXPECT_TRUE(has("graph_schema", kGraphMarker));
}

TEST(Render, MissingVariableIsNamed) {
    const auto& t = get_template("classification");
    try {
        render(t, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::missing_variable);
        EXPECT_EQ(std::string(e.what()), *t.required_vars.begin());
    }
}

TEST(Render, FewshotKeepsOrderAndTruncatesFromTheTail) {
    const PromptTemplate t = parse_template(
        "---\nid: demo\nstyle: sql_odp\nrequired_vars: question\nexample_label: SQL\n---\n"
        "Header\n{{fewshot}}Q: {{question}}\n");
    const std::vector<Example> shots = {{"q1", "s1", ""}, {"q2", "s2", "a2"}, {"q3", "s3", ""}};
    const std::string full = render(t, {{"question", "why"}}, shots);
    EXPECT_EQ(full,
              "Header\nExample question: q1\nSQL: s1\n\nExample question: q2\nSQL: s2\nAnswer: a2\n\n"
              "Example question: q3\nSQL: s3\n\nQ: why\n");
    EXPECT_EQ(render(t, {{"question", "why"}}, shots, full.size()), full);
    const std::string cut = render(t, {{"question", "why"}}, shots, full.size() - 1);
    EXPECT_EQ(cut.find("q3"), std::string::npos);
    EXPECT_NE(cut.find("q2"), std::string::npos);
    // the fixed parts survive even when nothing fits
    EXPECT_EQ(render(t, {{"question", "why"}}, shots, 5), "Header\nQ: why\n");
    for (std::size_t limit = 20; limit < full.size(); limit += 7) {
        const std::string s = render(t, {{"question", "why"}}, shots, limit);
        EXPECT_TRUE(s.size() <= limit || s == "Header\nQ: why\n");
    }
}

TEST(ParseTemplate, RejectsMalformedFrontMatter) {
    EXPECT_EQ(code_of([] { parse_template("no front matter"); }), Errc::parse_error);
    EXPECT_EQ(code_of([] { parse_template("---\nid: x\n"); }), Errc::parse_error);
    EXPECT_EQ(code_of([] { parse_template("---\nid: x\n---\nbody"); }), Errc::parse_error);
    EXPECT_EQ(code_of([] { parse_template("---\nid: x\nstyle: weird\n---\nbody"); }), Errc::invalid_argument);
    EXPECT_EQ(code_of([] { parse_template("---\nid: x\nstyle: paraphrase\ncolour: red\n---\nb"); }),
              Errc::parse_error);
    const auto t = parse_template("---\nid: x\nstyle: paraphrase\nrequired_vars: a, b\n---\n{{a}}{{b}}");
    EXPECT_EQ(t.required_vars, (std::set<std::string>{"a", "b"}));
    EXPECT_EQ(render(t, {{"a", "1"}, {"b", "2"}}), "12");
    const auto open = parse_template("---\nid: y\nstyle: paraphrase\n---\n{{a");
    EXPECT_EQ(code_of([&] { render(open, {}); }), Errc::parse_error);
}

TEST(SchemaVars, SqlDdlListsEveryColumn) {
    const auto vars = build_schema_vars(SchemaKind::sql, sql::flight_table_schema(1350));
    const std::string& ddl = vars.at("schema_ddl");
    EXPECT_NE(ddl.find("CREATE TABLE flights"), std::string::npos);
    EXPECT_NE(ddl.find("flight_uid TEXT PRIMARY KEY"), std::string::npos);
    for (const auto& f : flight_fields()) {
        EXPECT_NE(ddl.find("    " + std::string(f.name) + " "), std::string::npos) << f.name;
        EXPECT_NE(vars.at("schema_columns").find(std::string(f.name)), std::string::npos);
    }
}

TEST(SchemaVars, GraphSchemaIsIntrospected) {
    const auto& engine = testsupport::default_engine();
    const auto vars = build_schema_vars(SchemaKind::graph, engine.graph_schema());
    const std::string& s = vars.at("graph_schema");
    for (auto label : graph::kNodeLabels) EXPECT_NE(s.find("\"" + std::string(label) + "\""), std::string::npos);
    for (auto type : graph::kEdgeTypes) EXPECT_NE(s.find("\"" + std::string(type) + "\""), std::string::npos);
}

TEST(Glossary, OneLinePerField) {
    const std::string g = field_glossary();
    EXPECT_EQ(static_cast<std::size_t>(std::count(g.begin(), g.end(), '\n')), flight_fields().size());
    EXPECT_NE(g.find("(flight_nr)"), std::string::npos);
}

TEST(QuestionLine, Format) { EXPECT_EQ(question_line("Hi?"), "User question: Hi?\n"); }
