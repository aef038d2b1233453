#include "flightrag/prompting.hpp"

#include <algorithm>
#include "json.hpp"

#include "flightrag/error.hpp"
#include "flightrag/flight_store.hpp"
#include "text_util.hpp"

namespace flightrag::assets {
struct PromptAsset {
    std::string_view file;
    std::string_view text;
};
std::span<const PromptAsset> prompt_assets();
}  // namespace flightrag::assets

namespace flightrag::prompting {

namespace {

constexpr std::pair<Style, std::string_view> kStyles[] = {
    {Style::classification, "classification"},
    {Style::extraction, "extraction"},
    {Style::clarification, "clarification"},
    {Style::answer_gen, "answer_gen"},
    {Style::sql_odp, "sql_odp"},
    {Style::sql_crp, "sql_crp"},
    {Style::graph_schema, "graph_schema"},
    {Style::paraphrase, "paraphrase"},
    {Style::sql_bsp, "sql_bsp"},
    {Style::sql_trp, "sql_trp"},
    {Style::sql_asp, "sql_asp"},
};

Style parse_style(std::string_view name) {
    for (const auto& [style, text] : kStyles)
        if (text == name) return style;
    fail(Errc::invalid_argument, "unknown prompt style '" + std::string(name) + "'");
}

std::string render_example(const Example& ex, const std::string& label) {
    std::string out = "Example question: " + ex.question + "\n" + label + ": " + ex.output + "\n";
    if (!ex.answer.empty()) out += "Answer: " + ex.answer + "\n";
    out += "\n";
    return out;
}

}  // namespace

std::string_view style_name(Style s) {
    for (const auto& [style, text] : kStyles)
        if (style == s) return text;
    return "unknown";
}

std::string question_line(std::string_view question) {
    std::string line(kQuestionPrefix);
    line += question;
    line += '\n';
    return line;
}

PromptTemplate parse_template(std::string_view text) {
    constexpr std::string_view fence = "---\n";
    if (text.substr(0, fence.size()) != fence)
        fail(Errc::parse_error, "prompt template must start with front-matter");
    const std::size_t end = text.find("\n---\n", fence.size() - 1);
    if (end == std::string_view::npos) fail(Errc::parse_error, "unterminated front-matter");

    PromptTemplate t;
    bool have_style = false;
    for (const auto& line : detail::split(text.substr(fence.size(), end - fence.size() + 1), '\n')) {
        if (detail::trim(line).empty()) continue;
        const auto colon = line.find(':');
        if (colon == std::string::npos) fail(Errc::parse_error, "bad front-matter line: " + line);
        const std::string key(detail::trim(std::string_view(line).substr(0, colon)));
        const std::string value(detail::trim(std::string_view(line).substr(colon + 1)));
        if (key == "id") {
            t.id = value;
        } else if (key == "style") {
            t.style = parse_style(value);
            have_style = true;
        } else if (key == "required_vars") {
            for (const auto& v : detail::split(value, ','))
                if (!detail::trim(v).empty()) t.required_vars.emplace(detail::trim(v));
        } else if (key == "example_label") {
            t.example_label = value;
        } else {
            fail(Errc::parse_error, "unknown front-matter key '" + key + "'");
        }
    }
    if (t.id.empty() || !have_style) fail(Errc::parse_error, "front-matter needs id and style");
    t.body = std::string(text.substr(end + 5));
    return t;
}

std::span<const PromptTemplate> catalogue() {
    static const std::vector<PromptTemplate> templates = [] {
        std::vector<PromptTemplate> out;
        for (const auto& asset : assets::prompt_assets()) out.push_back(parse_template(asset.text));
        std::sort(out.begin(), out.end(),
                  [](const PromptTemplate& a, const PromptTemplate& b) { return a.id < b.id; });
        return out;
    }();
    return templates;
}

const PromptTemplate& get_template(std::string_view id) {
    for (const auto& t : catalogue())
        if (t.id == id) return t;
    fail(Errc::invalid_argument, "unknown prompt template '" + std::string(id) + "'");
}

std::string render(const PromptTemplate& tmpl, const std::map<std::string, std::string>& vars,
                   const std::vector<Example>& fewshot, std::size_t max_chars) {
    for (const auto& name : tmpl.required_vars)
        if (!vars.count(name)) fail(Errc::missing_variable, name);

    // Split the body into literal text and placeholders once, then size the
    // few-shot block to fit.
    std::string fixed;
    std::size_t fewshot_at = std::string::npos;
    const std::string& body = tmpl.body;
    std::size_t pos = 0;
    while (pos < body.size()) {
        const std::size_t open = body.find("{{", pos);
        if (open == std::string::npos) {
            fixed.append(body, pos, std::string::npos);
            break;
        }
        const std::size_t close = body.find("}}", open + 2);
        if (close == std::string::npos) fail(Errc::parse_error, "unterminated placeholder in " + tmpl.id);
        fixed.append(body, pos, open - pos);
        const std::string name(detail::trim(std::string_view(body).substr(open + 2, close - open - 2)));
        if (name == "fewshot") {
            fewshot_at = fixed.size();
        } else {
            auto it = vars.find(name);
            if (it == vars.end()) fail(Errc::missing_variable, name);
            fixed += it->second;
        }
        pos = close + 2;
    }
    if (fewshot_at == std::string::npos) return fixed;

    std::vector<std::string> blocks;
    std::size_t total = fixed.size();
    for (const auto& ex : fewshot) {
        blocks.push_back(render_example(ex, tmpl.example_label));
        total += blocks.back().size();
    }
    while (max_chars > 0 && total > max_chars && !blocks.empty()) {
        total -= blocks.back().size();
        blocks.pop_back();
    }
    std::string shots;
    for (const auto& b : blocks) shots += b;
    fixed.insert(fewshot_at, shots);
    return fixed;
}

std::map<std::string, std::string> build_schema_vars(SchemaKind kind,
                                                     const SchemaDescription& schema) {
    std::map<std::string, std::string> vars;
    if (kind == SchemaKind::sql) {
        std::string columns, ddl;
        for (const auto& table : schema.entities) {
            std::vector<std::string> names;
            for (const auto& p : table.properties) names.push_back(p.name);
            columns += "# " + table.name + "(" + detail::join(names, ", ") + ")\n";

            ddl += "CREATE TABLE " + table.name + " (\n";
            std::vector<std::string> keys;
            for (const auto& p : table.properties) {
                ddl += "    " + p.name + " " + p.type;
                if (p.primary_key) ddl += " PRIMARY KEY";
                ddl += ",";
                if (!p.description.empty()) ddl += "  -- " + p.description;
                ddl += "\n";
                if (!p.references.empty())
                    keys.push_back("    FOREIGN KEY (" + p.name + ") REFERENCES " + p.references);
            }
            ddl += detail::join(keys, ",\n");
            if (!keys.empty()) ddl += "\n";
            ddl += ");\n";
        }
        vars["schema_columns"] = columns;
        vars["schema_ddl"] = ddl;
    } else {
        nlohmann::ordered_json labels = nlohmann::ordered_json::object();
        for (const auto& e : schema.entities) {
            nlohmann::ordered_json props = nlohmann::ordered_json::object();
            for (const auto& p : e.properties) props[p.name] = {{"type", p.type}, {"count", p.count}};
            labels[e.name] = {{"count", e.count}, {"properties", props}};
        }
        nlohmann::ordered_json rels = nlohmann::ordered_json::array();
        for (const auto& r : schema.relationships)
            rels.push_back({{"type", r.type}, {"from", r.from}, {"to", r.to}, {"count", r.count}});
        nlohmann::ordered_json doc;
        doc["labels"] = labels;
        doc["relationships"] = rels;
        vars["graph_schema"] = doc.dump(2);
    }
    return vars;
}

std::string field_glossary() {
    static const std::map<std::string_view, std::string_view> meaning = {
        {"flight_nr", "airline prefix followed by digits, e.g. KL1000"},
        {"flight_uid", "unique identifier of the flight row"},
        {"bus_gate", "remote boarding gate served by bus"},
        {"bus_service", "remote when passengers are bussed to the aircraft"},
        {"ramp", "aircraft stand, one letter and two digits"},
        {"pier", "terminal finger letter of the ramp"},
        {"expected_on_ramp", "time the aircraft is expected to arrive at the stand"},
        {"expected_off_ramp", "time the aircraft is expected to leave the stand"},
        {"connecting_flight_nr", "next flight of the same aircraft rotation"},
        {"previous_ramp", "stand used before the current one"},
        {"mtt_minutes", "minimum transfer time in minutes"},
        {"safe_town_airport", "J or P"},
        {"scheduled_block", "scheduled on-block or off-block time"},
    };
    std::string out;
    for (const auto& f : flight_fields()) {
        out += "- " + std::string(f.label) + " (" + std::string(f.name) + ")";
        if (auto it = meaning.find(f.name); it != meaning.end()) out += ": " + std::string(it->second);
        out += "\n";
    }
    return out;
}

}  // namespace flightrag::prompting
