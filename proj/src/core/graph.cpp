#include <algorithm>
#include <functional>
#include <set>

#include "flightrag/error.hpp"
#include "flightrag/graphrag.hpp"
#include "json.hpp"
#include "query_lexer.hpp"
#include "text_util.hpp"
#include "value_ops.hpp"

namespace flightrag::graph {

// ---------------------------------------------------------------------------
// graph container

const std::vector<std::size_t>& PropertyGraph::nodes_with_label(std::string_view label) const {
    static const std::vector<std::size_t> none;
    const auto it = by_label_.find(label);
    return it == by_label_.end() ? none : it->second;
}

std::optional<std::size_t> PropertyGraph::find_node(std::string_view id) const {
    const auto it = by_id_.find(id);
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
}

const std::set<std::string>& PropertyGraph::property_names(std::string_view label) const {
    static const std::set<std::string> none;
    const auto it = props_by_label_.find(label);
    return it == props_by_label_.end() ? none : it->second;
}

std::size_t PropertyGraph::add_node(Node node) {
    if (by_id_.count(node.id)) fail(Errc::internal, "duplicate node id " + node.id);
    const std::size_t idx = nodes_.size();
    by_id_.emplace(node.id, idx);
    by_label_[node.label].push_back(idx);
    auto& props = props_by_label_[node.label];
    for (const auto& [k, v] : node.properties) props.insert(k);
    nodes_.push_back(std::move(node));
    out_.emplace_back();
    in_.emplace_back();
    return idx;
}

void PropertyGraph::add_edge(std::string type, std::size_t from, std::size_t to) {
    const std::size_t idx = edges_.size();
    edges_.push_back({std::move(type), from, to});
    out_[from].push_back(idx);
    in_[to].push_back(idx);
}

// ---------------------------------------------------------------------------
// construction

namespace {

std::size_t ensure_node(PropertyGraph& g, const std::string& id, const char* label,
                        std::map<std::string, Value> props) {
    if (auto n = g.find_node(id)) return *n;
    return g.add_node(Node{id, label, std::move(props)});
}

std::string airline_code(std::string_view flight_nr) {
    std::size_t i = 0;
    while (i < flight_nr.size() && detail::is_alpha(flight_nr[i])) ++i;
    return detail::to_upper(flight_nr.substr(0, i));
}

bool earlier(const FlightRecord& a, const FlightRecord& b) {
    if (a.expected_on_ramp != b.expected_on_ramp) return a.expected_on_ramp < b.expected_on_ramp;
    return a.flight_uid < b.flight_uid;
}

}  // namespace

PropertyGraph build_graph(const FlightStore& store, const BuildOptions& options,
                          std::vector<std::string>* warnings) {
    PropertyGraph g;
    const auto recs = store.records();
    std::vector<std::size_t> flight_node(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        std::map<std::string, Value> props;
        for (std::size_t f = 0; f < flight_fields().size(); ++f) {
            Value v = field_value(recs[i], f);
            if (!v.is_null()) props.emplace(std::string(flight_fields()[f].name), std::move(v));
        }
        flight_node[i] = g.add_node(Node{"flight:" + recs[i].flight_uid, "Flight", std::move(props)});
    }
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const FlightRecord& r = recs[i];
        const std::size_t f = flight_node[i];
        if (!r.ramp.empty()) {
            const std::string code = detail::to_upper(r.ramp);
            g.add_edge("AT_RAMP", f, ensure_node(g, "ramp:" + code, "Ramp", {{"code", code}}));
        }
        if (!r.bus_gate.empty()) {
            const std::string code = detail::to_upper(r.bus_gate);
            g.add_edge("AT_BUS_GATE", f,
                       ensure_node(g, "bus_gate:" + code, "BusGate", {{"code", code}}));
        }
        if (!r.pier.empty()) {
            const std::string code = detail::to_upper(r.pier);
            g.add_edge("AT_PIER", f, ensure_node(g, "pier:" + code, "Pier", {{"code", code}}));
        }
        const std::string code = airline_code(r.flight_nr);
        g.add_edge("OPERATED_BY", f,
                   ensure_node(g, "airline:" + code, "Airline",
                               {{"code", code}, {"name", r.airline_name}}));
    }
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const FlightRecord& r = recs[i];
        if (r.connecting_flight_nr.empty()) continue;
        const FlightRecord* target = store.find_flight_nr(r.connecting_flight_nr);
        if (!target) {
            const std::string msg = r.flight_nr + " -> " + r.connecting_flight_nr;
            if (!options.skip_dangling) fail(Errc::dangling_connection, msg);
            if (warnings) warnings->push_back("DanglingConnection: " + msg);
            continue;
        }
        g.add_edge("CONNECTS_TO", flight_node[i], *g.find_node("flight:" + target->flight_uid));
    }

    std::map<std::string, std::vector<std::size_t>> by_ramp;
    for (std::size_t i = 0; i < recs.size(); ++i)
        if (!recs[i].ramp.empty()) by_ramp[detail::to_upper(recs[i].ramp)].push_back(i);
    for (auto& [ramp, idx] : by_ramp) {
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return earlier(recs[a], recs[b]); });
        std::size_t j = 0;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            j = std::max(j, k + 1);
            while (j < idx.size() &&
                   !(recs[idx[k]].expected_on_ramp < recs[idx[j]].expected_on_ramp))
                ++j;
            if (j < idx.size()) g.add_edge("NEXT_AT_RAMP", flight_node[idx[k]], flight_node[idx[j]]);
        }
    }
    return g;
}

namespace {

std::string type_name(const Value& v) {
    if (v.is_bool()) return "BOOLEAN";
    if (v.is_int()) return "INTEGER";
    if (v.is_timestamp()) return "DATE_TIME";
    return "STRING";
}

}  // namespace

SchemaDescription introspect_schema(const PropertyGraph& graph) {
    SchemaDescription schema;
    schema.kind = SchemaKind::graph;
    for (std::string_view label : kNodeLabels) {
        const auto& ids = graph.nodes_with_label(label);
        if (ids.empty()) continue;
        EntitySchema e;
        e.name = std::string(label);
        e.count = ids.size();
        std::map<std::string, PropertySchema> props;
        for (std::size_t n : ids) {
            for (const auto& [k, v] : graph.nodes()[n].properties) {
                auto& p = props[k];
                if (p.name.empty()) {
                    p.name = k;
                    p.type = type_name(v);
                }
                ++p.count;
            }
        }
        for (auto& [k, p] : props) e.properties.push_back(std::move(p));
        schema.entities.push_back(std::move(e));
    }
    std::map<std::tuple<std::size_t, std::string, std::string>, std::size_t> rels;
    for (const auto& edge : graph.edges()) {
        const auto pos = std::find(std::begin(kEdgeTypes), std::end(kEdgeTypes), edge.type) -
                         std::begin(kEdgeTypes);
        ++rels[{static_cast<std::size_t>(pos), graph.nodes()[edge.from].label,
                graph.nodes()[edge.to].label}];
    }
    for (const auto& [key, count] : rels) {
        const auto& [pos, from, to] = key;
        schema.relationships.push_back(
            {pos < std::size(kEdgeTypes) ? std::string(kEdgeTypes[pos]) : "UNKNOWN", from, to, count});
    }
    return schema;
}

// ---------------------------------------------------------------------------
// query AST

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind { literal, property, variable, compare, and_, or_, not_, is_null, is_not_null };
    Kind kind = Kind::literal;
    Value literal;
    std::string var;
    std::string prop;
    std::string op;  // =, <>, <, <=, >, >=, STARTS WITH, CONTAINS
    std::vector<ExprPtr> args;
};

struct NodePat {
    std::string var;  // empty for anonymous
    std::string label;
    std::vector<std::pair<std::string, Value>> props;
};

struct RelPat {
    enum class Dir { out, in, both };
    std::string var;
    std::string type;
    Dir dir = Dir::out;
};

struct PathPat {
    std::vector<NodePat> nodes;
    std::vector<RelPat> rels;
};

struct ReturnItem {
    ExprPtr expr;  // null for count(*)
    bool count = false;
    std::string alias;
    std::string column;
};

struct SortKey {
    ExprPtr expr;
    bool desc = false;
};

struct QueryAst {
    std::vector<PathPat> patterns;
    ExprPtr where;
    bool distinct = false;
    std::vector<ReturnItem> items;
    std::vector<SortKey> order;
    std::optional<std::size_t> limit;
};

namespace {

using detail::TokKind;
using detail::TokenCursor;
using detail::parse_fail;

std::string render_literal(const Value& v) {
    if (v.is_null()) return "null";
    if (v.is_bool()) return v.as_bool() ? "true" : "false";
    if (v.is_int()) return std::to_string(v.as_int());
    std::string out = "'";
    for (char c : v.to_string()) {
        if (c == '\'' || c == '\\') out += '\\';
        out += c;
    }
    return out + "'";
}

std::string render_expr(const Expr& e, bool parenthesize_or = false) {
    switch (e.kind) {
        case Expr::Kind::literal: return render_literal(e.literal);
        case Expr::Kind::property: return e.var + "." + e.prop;
        case Expr::Kind::variable: return e.var;
        case Expr::Kind::compare:
            return render_expr(*e.args[0], true) + " " + e.op + " " + render_expr(*e.args[1], true);
        case Expr::Kind::is_null: return render_expr(*e.args[0], true) + " IS NULL";
        case Expr::Kind::is_not_null: return render_expr(*e.args[0], true) + " IS NOT NULL";
        case Expr::Kind::not_: return "NOT " + render_expr(*e.args[0], true);
        case Expr::Kind::and_: {
            std::string out;
            for (std::size_t i = 0; i < e.args.size(); ++i) {
                if (i) out += " AND ";
                out += render_expr(*e.args[i], true);
            }
            return out;
        }
        case Expr::Kind::or_: {
            std::string out;
            for (std::size_t i = 0; i < e.args.size(); ++i) {
                if (i) out += " OR ";
                out += render_expr(*e.args[i], false);
            }
            return parenthesize_or ? "(" + out + ")" : out;
        }
    }
    return {};
}

std::string render_node(const NodePat& n) {
    std::string out = "(" + n.var;
    if (!n.label.empty()) out += ":" + n.label;
    if (!n.props.empty()) {
        out += " {";
        for (std::size_t i = 0; i < n.props.size(); ++i) {
            if (i) out += ", ";
            out += n.props[i].first + ": " + render_literal(n.props[i].second);
        }
        out += "}";
    }
    return out + ")";
}

std::string render_rel(const RelPat& r) {
    std::string body = "[" + r.var;
    if (!r.type.empty()) body += ":" + r.type;
    body += "]";
    switch (r.dir) {
        case RelPat::Dir::out: return "-" + body + "->";
        case RelPat::Dir::in: return "<-" + body + "-";
        case RelPat::Dir::both: return "-" + body + "-";
    }
    return body;
}

std::string render_item(const ReturnItem& item) {
    std::string out = item.count ? (item.expr ? "count(" + render_expr(*item.expr) + ")" : "count(*)")
                                 : render_expr(*item.expr);
    if (!item.alias.empty()) out += " AS " + item.alias;
    return out;
}

class Parser {
public:
    explicit Parser(std::string_view text) : cur_(detail::lex_query(text, false)) {}

    QueryAst parse() {
        QueryAst ast;
        cur_.expect_kw("MATCH");
        ast.patterns.push_back(path());
        while (cur_.accept_sym(",")) ast.patterns.push_back(path());
        while (cur_.accept_kw("MATCH")) {
            ast.patterns.push_back(path());
            while (cur_.accept_sym(",")) ast.patterns.push_back(path());
        }
        if (cur_.accept_kw("WHERE")) ast.where = or_expr();
        cur_.expect_kw("RETURN");
        ast.distinct = cur_.accept_kw("DISTINCT");
        ast.items.push_back(return_item());
        while (cur_.accept_sym(",")) ast.items.push_back(return_item());
        const bool any_count = std::any_of(ast.items.begin(), ast.items.end(),
                                           [](const ReturnItem& i) { return i.count; });
        const bool all_count = std::all_of(ast.items.begin(), ast.items.end(),
                                           [](const ReturnItem& i) { return i.count; });
        if (any_count && !all_count) parse_fail(0, "grouping by non-aggregate items is not supported");
        if (cur_.accept_kw("ORDER")) {
            cur_.expect_kw("BY");
            do {
                SortKey k;
                k.expr = operand();
                if (cur_.accept_kw("DESC") || cur_.accept_kw("DESCENDING")) k.desc = true;
                else if (!cur_.accept_kw("ASC")) cur_.accept_kw("ASCENDING");
                ast.order.push_back(std::move(k));
            } while (cur_.accept_sym(","));
        }
        if (cur_.accept_kw("LIMIT")) {
            const auto& t = cur_.next();
            if (t.kind != TokKind::number) parse_fail(t.pos, "LIMIT expects a number");
            ast.limit = std::stoull(t.text);
        }
        cur_.accept_sym(";");
        if (!cur_.at_end()) parse_fail(cur_.peek().pos, "unexpected '" + cur_.peek().text + "'");
        return ast;
    }

private:
    TokenCursor cur_;
    std::set<std::string> node_vars_;
    std::set<std::string> aliases_;

    std::string ident(const char* what) {
        const auto& t = cur_.peek();
        if (t.kind != TokKind::ident) parse_fail(t.pos, std::string("expected ") + what + cur_.describe());
        return cur_.next().text;
    }

    Value literal() {
        const auto& t = cur_.peek();
        if (t.kind == TokKind::string) return Value(cur_.next().text);
        if (t.kind == TokKind::number) return Value(static_cast<std::int64_t>(std::stoll(cur_.next().text)));
        if (cur_.is_sym("-") && cur_.peek(1).kind == TokKind::number) {
            cur_.next();
            return Value(static_cast<std::int64_t>(-std::stoll(cur_.next().text)));
        }
        if (cur_.accept_kw("true")) return Value(true);
        if (cur_.accept_kw("false")) return Value(false);
        if (cur_.accept_kw("null")) return Value();
        parse_fail(t.pos, "expected a literal" + cur_.describe());
    }

    NodePat node() {
        cur_.expect_sym("(");
        NodePat n;
        if (cur_.peek().kind == TokKind::ident) n.var = cur_.next().text;
        if (cur_.accept_sym(":")) n.label = ident("a label");
        if (cur_.accept_sym("{")) {
            do {
                std::string key = ident("a property name");
                cur_.expect_sym(":");
                n.props.emplace_back(std::move(key), literal());
            } while (cur_.accept_sym(","));
            cur_.expect_sym("}");
        }
        cur_.expect_sym(")");
        if (!n.var.empty()) node_vars_.insert(n.var);
        return n;
    }

    RelPat rel() {
        RelPat r;
        const bool incoming = cur_.accept_sym("<-");
        if (!incoming) cur_.expect_sym("-");
        cur_.expect_sym("[");
        if (cur_.peek().kind == TokKind::ident) r.var = cur_.next().text;
        if (cur_.accept_sym(":")) r.type = ident("a relationship type");
        if (cur_.is_sym("*")) parse_fail(cur_.peek().pos, "variable-length relationships are not supported");
        cur_.expect_sym("]");
        if (incoming) {
            cur_.expect_sym("-");
            r.dir = RelPat::Dir::in;
        } else if (cur_.accept_sym("->")) {
            r.dir = RelPat::Dir::out;
        } else {
            cur_.expect_sym("-");
            r.dir = RelPat::Dir::both;
        }
        return r;
    }

    PathPat path() {
        PathPat p;
        p.nodes.push_back(node());
        while (cur_.is_sym("-") || cur_.is_sym("<-")) {
            if (p.rels.size() == 3) parse_fail(cur_.peek().pos, "paths longer than 3 hops are not supported");
            p.rels.push_back(rel());
            p.nodes.push_back(node());
        }
        return p;
    }

    ExprPtr operand() {
        const auto& t = cur_.peek();
        if (t.kind == TokKind::ident && !cur_.is_kw("true") && !cur_.is_kw("false") &&
            !cur_.is_kw("null")) {
            const std::size_t pos = t.pos;
            auto e = std::make_shared<Expr>();
            e->var = cur_.next().text;
            if (cur_.accept_sym(".")) {
                e->kind = Expr::Kind::property;
                e->prop = ident("a property name");
            } else {
                e->kind = Expr::Kind::variable;
            }
            if (!node_vars_.count(e->var) &&
                !(e->kind == Expr::Kind::variable && aliases_.count(e->var)))
                parse_fail(pos, "unknown variable '" + e->var + "'");
            return e;
        }
        auto e = std::make_shared<Expr>();
        e->kind = Expr::Kind::literal;
        e->literal = literal();
        return e;
    }

    ExprPtr comparison() {
        if (cur_.accept_sym("(")) {
            auto e = or_expr();
            cur_.expect_sym(")");
            return e;
        }
        auto lhs = operand();
        auto e = std::make_shared<Expr>();
        if (cur_.accept_kw("IS")) {
            e->kind = cur_.accept_kw("NOT") ? Expr::Kind::is_not_null : Expr::Kind::is_null;
            cur_.expect_kw("NULL");
            e->args = {lhs};
            return e;
        }
        e->kind = Expr::Kind::compare;
        const auto& t = cur_.peek();
        if (t.kind == TokKind::symbol &&
            (t.text == "=" || t.text == "<>" || t.text == "!=" || t.text == "<" || t.text == "<=" ||
             t.text == ">" || t.text == ">=")) {
            e->op = cur_.next().text;
            if (e->op == "!=") e->op = "<>";
        } else if (cur_.accept_kw("STARTS")) {
            cur_.expect_kw("WITH");
            e->op = "STARTS WITH";
        } else if (cur_.accept_kw("ENDS")) {
            cur_.expect_kw("WITH");
            e->op = "ENDS WITH";
        } else if (cur_.accept_kw("CONTAINS")) {
            e->op = "CONTAINS";
        } else {
            parse_fail(t.pos, "expected a comparison operator" + cur_.describe());
        }
        e->args = {lhs, operand()};
        return e;
    }

    ExprPtr not_expr() {
        if (cur_.accept_kw("NOT")) {
            auto e = std::make_shared<Expr>();
            e->kind = Expr::Kind::not_;
            e->args = {not_expr()};
            return e;
        }
        return comparison();
    }

    ExprPtr and_expr() {
        auto first = not_expr();
        if (!cur_.is_kw("AND")) return first;
        auto e = std::make_shared<Expr>();
        e->kind = Expr::Kind::and_;
        e->args.push_back(first);
        while (cur_.accept_kw("AND")) e->args.push_back(not_expr());
        return e;
    }

    ExprPtr or_expr() {
        auto first = and_expr();
        if (!cur_.is_kw("OR")) return first;
        auto e = std::make_shared<Expr>();
        e->kind = Expr::Kind::or_;
        e->args.push_back(first);
        while (cur_.accept_kw("OR")) e->args.push_back(and_expr());
        return e;
    }

    ReturnItem return_item() {
        ReturnItem item;
        if (cur_.is_kw("count") && cur_.is_sym("(", 1)) {
            cur_.next();
            cur_.next();
            item.count = true;
            if (!cur_.accept_sym("*")) item.expr = operand();
            cur_.expect_sym(")");
        } else {
            item.expr = operand();
        }
        if (cur_.accept_kw("AS")) {
            item.alias = ident("an alias");
            aliases_.insert(item.alias);
        }
        item.column = item.alias.empty() ? render_item(item) : item.alias;
        return item;
    }
};

std::string render_ast(const QueryAst& ast) {
    std::string out = "MATCH ";
    for (std::size_t i = 0; i < ast.patterns.size(); ++i) {
        if (i) out += ", ";
        const auto& p = ast.patterns[i];
        out += render_node(p.nodes[0]);
        for (std::size_t k = 0; k < p.rels.size(); ++k) out += render_rel(p.rels[k]) + render_node(p.nodes[k + 1]);
    }
    if (ast.where) out += " WHERE " + render_expr(*ast.where);
    out += " RETURN ";
    if (ast.distinct) out += "DISTINCT ";
    for (std::size_t i = 0; i < ast.items.size(); ++i) {
        if (i) out += ", ";
        out += render_item(ast.items[i]);
    }
    if (!ast.order.empty()) {
        out += " ORDER BY ";
        for (std::size_t i = 0; i < ast.order.size(); ++i) {
            if (i) out += ", ";
            out += render_expr(*ast.order[i].expr, true);
            if (ast.order[i].desc) out += " DESC";
        }
    }
    if (ast.limit) out += " LIMIT " + std::to_string(*ast.limit);
    return out;
}

}  // namespace

GraphQuery GraphQuery::parse(std::string_view text) {
    GraphQuery q;
    q.text_ = std::string(detail::trim(text));
    q.ast_ = std::make_shared<const QueryAst>(Parser(q.text_).parse());
    return q;
}

std::string GraphQuery::canonical() const { return render_ast(*ast_); }

// ---------------------------------------------------------------------------
// execution

namespace {

bool code_like(std::string_view prop) {
    if (prop == "code" || prop == "name") return true;
    const auto idx = field_index(prop);
    if (!idx) return false;
    const auto kind = field_info(*idx).kind;
    return kind == FieldKind::code || kind == FieldKind::enumeration;
}

class Executor {
public:
    Executor(const PropertyGraph& g, const QueryAst& ast) : g_(g), ast_(ast) {
        for (const auto& p : ast.patterns) {
            node_slots_.emplace_back();
            for (const auto& n : p.nodes) node_slots_.back().push_back(slot_of(n.var));
        }
        validate();
    }

    QueryResult run() {
        bindings_.assign(slots_.size(), npos);
        match(0);

        QueryResult result;
        for (const auto& item : ast_.items) result.columns.push_back(item.column);

        if (!ast_.items.empty() && ast_.items.front().count) {
            std::vector<Value> row;
            for (const auto& item : ast_.items) {
                std::int64_t n = 0;
                std::set<std::string> seen;
                for (const auto& b : matches_) {
                    if (!item.expr) {
                        ++n;
                        continue;
                    }
                    const Value v = eval(*item.expr, b);
                    if (v.is_null()) continue;
                    if (ast_.distinct && !seen.insert(v.to_string()).second) continue;
                    ++n;
                }
                row.emplace_back(n);
            }
            result.rows.push_back(std::move(row));
            return result;
        }

        struct Row {
            std::vector<Value> values;
            std::vector<Value> keys;
        };
        std::vector<Row> rows;
        rows.reserve(matches_.size());
        for (const auto& b : matches_) {
            Row r;
            for (const auto& item : ast_.items) r.values.push_back(eval(*item.expr, b));
            for (const auto& k : ast_.order) r.keys.push_back(sort_value(*k.expr, b, r.values));
            rows.push_back(std::move(r));
        }
        if (!ast_.order.empty()) {
            std::stable_sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) {
                for (std::size_t i = 0; i < ast_.order.size(); ++i) {
                    const bool fold = ast_.order[i].expr->kind == Expr::Kind::property &&
                                      code_like(ast_.order[i].expr->prop);
                    int c = detail::sort_compare(a.keys[i], b.keys[i], fold);
                    if (ast_.order[i].desc) c = -c;
                    if (c != 0) return c < 0;
                }
                return false;
            });
        }
        std::set<std::vector<std::string>> seen;
        for (auto& r : rows) {
            if (ast_.limit && result.rows.size() >= *ast_.limit) break;
            if (ast_.distinct) {
                std::vector<std::string> key;
                for (const auto& v : r.values) key.push_back(v.to_string() + (v.is_null() ? "\x01" : ""));
                if (!seen.insert(key).second) continue;
            }
            result.rows.push_back(std::move(r.values));
        }
        return result;
    }

private:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    const PropertyGraph& g_;
    const QueryAst& ast_;
    std::map<std::string, std::size_t> slots_;
    std::map<std::string, std::string> var_label_;
    std::size_t anon_ = 0;
    std::vector<std::size_t> bindings_;
    std::vector<std::vector<std::size_t>> matches_;
    std::vector<std::size_t> used_edges_;
    std::vector<std::vector<std::size_t>> node_slots_;

    std::size_t slot_of(const std::string& var) {
        const std::string key = var.empty() ? "\x01" + std::to_string(anon_++) : var;
        auto [it, inserted] = slots_.emplace(key, slots_.size());
        return it->second;
    }

    void check_property(const std::string& var, const std::string& prop) {
        const auto it = var_label_.find(var);
        if (it != var_label_.end()) {
            if (!g_.property_names(it->second).count(prop))
                fail(Errc::unknown_property, it->second + "." + prop);
            return;
        }
        for (std::string_view label : kNodeLabels)
            if (g_.property_names(label).count(prop)) return;
        fail(Errc::unknown_property, var + "." + prop);
    }

    void check_expr(const Expr& e) {
        if (e.kind == Expr::Kind::property) check_property(e.var, e.prop);
        for (const auto& a : e.args) check_expr(*a);
    }

    void validate() {
        for (const auto& p : ast_.patterns) {
            for (const auto& n : p.nodes) {
                if (n.label.empty()) continue;
                if (std::find(std::begin(kNodeLabels), std::end(kNodeLabels), n.label) ==
                    std::end(kNodeLabels))
                    fail(Errc::unknown_label, n.label);
                if (!n.var.empty()) var_label_.emplace(n.var, n.label);
            }
            for (const auto& r : p.rels)
                if (!r.type.empty() && std::find(std::begin(kEdgeTypes), std::end(kEdgeTypes), r.type) ==
                                           std::end(kEdgeTypes))
                    fail(Errc::unknown_rel_type, r.type);
        }
        for (const auto& p : ast_.patterns)
            for (const auto& n : p.nodes)
                for (const auto& [k, v] : n.props) {
                    if (!n.label.empty()) {
                        if (!g_.property_names(n.label).count(k)) fail(Errc::unknown_property, n.label + "." + k);
                    } else {
                        check_property(n.var, k);
                    }
                }
        if (ast_.where) check_expr(*ast_.where);
        for (const auto& i : ast_.items)
            if (i.expr) check_expr(*i.expr);
        for (const auto& k : ast_.order) check_expr(*k.expr);
    }

    bool node_ok(const NodePat& pat, std::size_t n) const {
        const Node& node = g_.nodes()[n];
        if (!pat.label.empty() && node.label != pat.label) return false;
        for (const auto& [k, want] : pat.props) {
            const auto it = node.properties.find(k);
            if (it == node.properties.end()) return false;
            const auto c = detail::compare_values(it->second, want, code_like(k));
            if (!c || *c != 0) return false;
        }
        return true;
    }

    std::size_t pattern_slot(const NodePat&, std::size_t pattern, std::size_t index) const {
        return node_slots_[pattern][index];
    }

    bool bind(std::size_t slot, std::size_t n, bool& fresh) {
        if (bindings_[slot] != npos) {
            fresh = false;
            return bindings_[slot] == n;
        }
        bindings_[slot] = n;
        fresh = true;
        return true;
    }

    void match(std::size_t pi) {
        if (pi == ast_.patterns.size()) {
            if (!ast_.where || truth(*ast_.where, bindings_) == 1) matches_.push_back(bindings_);
            return;
        }
        const PathPat& p = ast_.patterns[pi];
        const std::size_t slot = pattern_slot(p.nodes[0], pi, 0);
        std::vector<std::size_t> all;
        const std::vector<std::size_t>* candidates;
        if (bindings_[slot] != npos) {
            all = {bindings_[slot]};
            candidates = &all;
        } else if (!p.nodes[0].label.empty()) {
            candidates = &g_.nodes_with_label(p.nodes[0].label);
        } else {
            all.resize(g_.nodes().size());
            for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
            candidates = &all;
        }
        for (std::size_t n : *candidates) {
            if (!node_ok(p.nodes[0], n)) continue;
            bool fresh = false;
            if (!bind(slot, n, fresh)) continue;
            extend(pi, 0, n);
            if (fresh) bindings_[slot] = npos;
        }
    }

    void extend(std::size_t pi, std::size_t step, std::size_t cur) {
        const PathPat& p = ast_.patterns[pi];
        if (step == p.rels.size()) {
            match(pi + 1);
            return;
        }
        const RelPat& r = p.rels[step];
        const NodePat& target = p.nodes[step + 1];
        const std::size_t slot = pattern_slot(target, pi, step + 1);
        const auto visit = [&](std::size_t e, std::size_t other) {
            if (!r.type.empty() && g_.edges()[e].type != r.type) return;
            if (std::find(used_edges_.begin(), used_edges_.end(), e) != used_edges_.end()) return;
            if (!node_ok(target, other)) return;
            bool fresh = false;
            if (!bind(slot, other, fresh)) return;
            used_edges_.push_back(e);
            extend(pi, step + 1, other);
            used_edges_.pop_back();
            if (fresh) bindings_[slot] = npos;
        };
        if (r.dir != RelPat::Dir::in)
            for (std::size_t e : g_.out_edges(cur)) visit(e, g_.edges()[e].to);
        if (r.dir != RelPat::Dir::out)
            for (std::size_t e : g_.in_edges(cur)) visit(e, g_.edges()[e].from);
    }

    Value eval(const Expr& e, const std::vector<std::size_t>& b) const {
        switch (e.kind) {
            case Expr::Kind::literal: return e.literal;
            case Expr::Kind::variable: {
                const auto it = slots_.find(e.var);
                if (it == slots_.end() || b[it->second] == npos) return {};
                return Value(g_.nodes()[b[it->second]].id);
            }
            case Expr::Kind::property: {
                const std::size_t n = b[slots_.at(e.var)];
                if (n == npos) return {};
                const auto& props = g_.nodes()[n].properties;
                const auto it = props.find(e.prop);
                return it == props.end() ? Value() : it->second;
            }
            default: {
                const int t = truth(e, b);
                return t < 0 ? Value() : Value(t == 1);
            }
        }
    }

    // 1 true, 0 false, -1 unknown.
    int truth(const Expr& e, const std::vector<std::size_t>& b) const {
        switch (e.kind) {
            case Expr::Kind::and_: {
                int r = 1;
                for (const auto& a : e.args) {
                    const int t = truth(*a, b);
                    if (t == 0) return 0;
                    if (t == -1) r = -1;
                }
                return r;
            }
            case Expr::Kind::or_: {
                int r = 0;
                for (const auto& a : e.args) {
                    const int t = truth(*a, b);
                    if (t == 1) return 1;
                    if (t == -1) r = -1;
                }
                return r;
            }
            case Expr::Kind::not_: {
                const int t = truth(*e.args[0], b);
                return t == -1 ? -1 : 1 - t;
            }
            case Expr::Kind::is_null: return eval(*e.args[0], b).is_null() ? 1 : 0;
            case Expr::Kind::is_not_null: return eval(*e.args[0], b).is_null() ? 0 : 1;
            case Expr::Kind::compare: {
                const Value l = eval(*e.args[0], b);
                const Value r = eval(*e.args[1], b);
                if (l.is_null() || r.is_null()) return -1;
                const bool fold = (e.args[0]->kind == Expr::Kind::property && code_like(e.args[0]->prop)) ||
                                  (e.args[1]->kind == Expr::Kind::property && code_like(e.args[1]->prop));
                if (e.op == "STARTS WITH" || e.op == "ENDS WITH" || e.op == "CONTAINS") {
                    std::string x = l.to_string(), y = r.to_string();
                    if (fold) {
                        x = detail::to_lower(x);
                        y = detail::to_lower(y);
                    }
                    if (e.op == "CONTAINS") return x.find(y) != std::string::npos;
                    if (e.op == "STARTS WITH") return x.rfind(y, 0) == 0;
                    return x.size() >= y.size() && x.compare(x.size() - y.size(), y.size(), y) == 0;
                }
                const auto c = detail::compare_values(l, r, fold);
                if (!c) return -1;
                if (e.op == "=") return *c == 0;
                if (e.op == "<>") return *c != 0;
                if (e.op == "<") return *c < 0;
                if (e.op == "<=") return *c <= 0;
                if (e.op == ">") return *c > 0;
                return *c >= 0;
            }
            default: {
                const Value v = eval(e, b);
                if (v.is_null()) return -1;
                return v.is_bool() ? (v.as_bool() ? 1 : 0) : 1;
            }
        }
    }

    Value sort_value(const Expr& e, const std::vector<std::size_t>& b,
                     const std::vector<Value>& returned) const {
        if (e.kind == Expr::Kind::variable && !slots_.count(e.var)) {
            for (std::size_t i = 0; i < ast_.items.size(); ++i)
                if (ast_.items[i].alias == e.var) return returned[i];
        }
        return eval(e, b);
    }
};

}  // namespace

QueryResult execute_graph(const PropertyGraph& graph, const GraphQuery& query) {
    return Executor(graph, query.ast()).run();
}

GraphQuery text_to_graph_query(std::string_view question, const llm::Llm& model,
                               const SchemaDescription& schema, const TextToGraphOptions& options) {
    auto vars = prompting::build_schema_vars(SchemaKind::graph, schema);
    vars["question"] = std::string(question);
    const std::string prompt = prompting::render(prompting::get_template("graph_schema"), vars,
                                                 options.fewshot, options.max_prompt_chars);
    std::string reply = model.complete("", prompt);
    try {
        return GraphQuery::parse(detail::strip_code_fences(reply));
    } catch (const Error& e) {
        if (e.code() != Errc::parse_error) throw;
        const std::string retry = prompt + "\nYour previous reply could not be parsed (" + e.what() +
                                  "). Reply with one Cypher query only.\n";
        reply = model.complete("", retry);
        try {
            return GraphQuery::parse(detail::strip_code_fences(reply));
        } catch (const Error& e2) {
            if (e2.code() != Errc::parse_error) throw;
            fail(Errc::unparseable_after_retry, e2.what());
        }
    }
}

std::optional<std::string> next_flight_oracle(const FlightStore& store, std::string_view flight_nr,
                                              NextMode mode) {
    const FlightRecord* subject = store.find_flight_nr(flight_nr);
    if (!subject) fail(Errc::unknown_flight, std::string(flight_nr));
    if (mode == NextMode::same_airline) {
        if (subject->connecting_flight_nr.empty()) return std::nullopt;
        return subject->connecting_flight_nr;
    }
    if (subject->ramp.empty()) return std::nullopt;
    const FlightRecord* best = nullptr;
    for (const auto& r : store.records()) {
        if (!detail::iequals(r.ramp, subject->ramp)) continue;
        if (!(subject->expected_on_ramp < r.expected_on_ramp)) continue;
        if (!best || earlier(r, *best)) best = &r;
    }
    if (!best) return std::nullopt;
    return best->flight_nr;
}

std::string export_jsonl(const PropertyGraph& graph) {
    std::string out;
    for (const auto& n : graph.nodes()) {
        nlohmann::ordered_json j;
        j["kind"] = "node";
        j["id"] = n.id;
        j["label"] = n.label;
        nlohmann::ordered_json props = nlohmann::ordered_json::object();
        for (const auto& [k, v] : n.properties) {
            if (v.is_bool()) props[k] = v.as_bool();
            else if (v.is_int()) props[k] = v.as_int();
            else props[k] = v.to_string();
        }
        j["properties"] = props;
        out += j.dump() + "\n";
    }
    for (const auto& e : graph.edges()) {
        nlohmann::ordered_json j;
        j["kind"] = "edge";
        j["type"] = e.type;
        j["from"] = graph.nodes()[e.from].id;
        j["to"] = graph.nodes()[e.to].id;
        out += j.dump() + "\n";
    }
    return out;
}

}  // namespace flightrag::graph
