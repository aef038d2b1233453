#include "flightrag/sqlrag.hpp"

#include <algorithm>
#include <array>
#include <memory>
#include <set>
#include <unordered_map>

#include "flightrag/error.hpp"
#include "query_lexer.hpp"
#include "text_util.hpp"
#include "value_ops.hpp"

namespace flightrag::sql {

namespace {

using detail::parse_fail;
using detail::TokKind;
using detail::TokenCursor;

const std::set<std::string, std::less<>>& keywords() {
    static const std::set<std::string, std::less<>> kw = {
        "all",    "alter",  "and",     "as",     "asc",      "attach", "between", "by",
        "case",   "count",  "create",  "delete", "desc",     "detach", "distinct", "drop",
        "else",   "end",    "exists",  "false",  "from",     "group",  "having",  "in",
        "inner",  "insert", "into",    "is",     "join",     "left",   "like",    "limit",
        "not",    "null",   "offset",  "on",     "or",       "order",  "outer",   "pragma",
        "select", "set",    "then",    "true",   "union",    "update", "values",  "when",
        "where",  "with",   "replace", "vacuum", "truncate",
    };
    return kw;
}

const std::set<std::string, std::less<>>& statement_keywords() {
    static const std::set<std::string, std::less<>> kw = {
        "INSERT", "UPDATE",  "DELETE",   "DROP",    "ALTER",    "CREATE",  "ATTACH", "DETACH",
        "PRAGMA", "VACUUM",  "REPLACE",  "TRUNCATE", "GRANT",   "REVOKE",  "EXPLAIN", "WITH",
        "BEGIN",  "COMMIT",  "ROLLBACK", "SAVEPOINT", "RELEASE", "REINDEX", "ANALYZE", "MERGE",
        "UPSERT", "CALL",    "EXEC",     "EXECUTE", "LOAD",     "COPY",    "SET",    "USE",
        "SHOW",   "DESCRIBE", "END",     "ABORT",   "LOCK",     "UNLOCK",  "RENAME", "COMMENT",
    };
    return kw;
}

bool code_column(std::size_t field) {
    const auto kind = field_info(field).kind;
    return kind == FieldKind::code || kind == FieldKind::enumeration;
}

// --- AST --------------------------------------------------------------------

struct ColRef {
    std::string qualifier;
    std::string name;
    std::size_t pos = 0;
    int table = -1;
    std::size_t field = 0;
};

struct SExpr;
using SExprPtr = std::shared_ptr<SExpr>;

struct SExpr {
    enum class Kind { literal, column, compare, and_, or_, not_, like, in, is_null };
    Kind kind = Kind::literal;
    Value literal;
    ColRef col;
    std::string op;
    bool negated = false;
    std::vector<SExprPtr> args;
    std::vector<Value> list;
};

struct SelectItem {
    enum class Kind { star, column, count_star, count_column };
    Kind kind = Kind::column;
    ColRef col;
    std::string star_qualifier;
    bool distinct = false;
    std::string alias;
};

struct TableRef {
    std::string name;
    std::string alias;
    std::size_t pos = 0;
};

struct OrderItem {
    SExprPtr expr;  // column or literal position
    bool desc = false;
};

struct Select {
    bool distinct = false;
    std::vector<SelectItem> items;
    std::vector<TableRef> tables;
    std::optional<std::pair<ColRef, ColRef>> join_on;
    SExprPtr where;
    std::vector<OrderItem> order;
    std::optional<std::size_t> limit;
    std::size_t offset = 0;
};

class Parser {
public:
    explicit Parser(std::string_view text) : cur_(detail::lex_query(text, true)) {}

    Select parse() {
        Select s;
        cur_.expect_kw("SELECT");
        if (cur_.accept_kw("DISTINCT")) s.distinct = true;
        else cur_.accept_kw("ALL");
        s.items.push_back(item());
        while (cur_.accept_sym(",")) s.items.push_back(item());
        cur_.expect_kw("FROM");
        s.tables.push_back(table());
        if (cur_.is_kw("JOIN") || cur_.is_kw("INNER")) {
            if (cur_.accept_kw("INNER")) cur_.expect_kw("JOIN");
            else cur_.expect_kw("JOIN");
            s.tables.push_back(table());
            cur_.expect_kw("ON");
            ColRef a = colref();
            cur_.expect_sym("=");
            ColRef b = colref();
            s.join_on = std::make_pair(a, b);
        } else if (cur_.is_sym(",")) {
            parse_fail(cur_.peek().pos, "comma joins are not supported; use JOIN ... ON");
        }
        if (cur_.accept_kw("WHERE")) s.where = or_expr();
        if (cur_.accept_kw("ORDER")) {
            cur_.expect_kw("BY");
            do {
                OrderItem o;
                o.expr = operand();
                if (cur_.accept_kw("DESC")) o.desc = true;
                else cur_.accept_kw("ASC");
                s.order.push_back(std::move(o));
            } while (cur_.accept_sym(","));
        }
        if (cur_.accept_kw("LIMIT")) {
            s.limit = number("LIMIT");
            if (cur_.accept_kw("OFFSET")) s.offset = number("OFFSET");
            else if (cur_.accept_sym(",")) {
                // LIMIT offset, count
                s.offset = *s.limit;
                s.limit = number("LIMIT");
            }
        }
        cur_.accept_sym(";");
        if (!cur_.at_end()) parse_fail(cur_.peek().pos, "unexpected '" + cur_.peek().text + "'");
        const bool any_agg = std::any_of(s.items.begin(), s.items.end(), [](const SelectItem& i) {
            return i.kind == SelectItem::Kind::count_star || i.kind == SelectItem::Kind::count_column;
        });
        const bool all_agg = std::all_of(s.items.begin(), s.items.end(), [](const SelectItem& i) {
            return i.kind == SelectItem::Kind::count_star || i.kind == SelectItem::Kind::count_column;
        });
        if (any_agg && !all_agg) parse_fail(0, "mixing COUNT with plain columns needs GROUP BY, which is not supported");
        return s;
    }

private:
    TokenCursor cur_;

    std::size_t number(const char* what) {
        const auto& t = cur_.next();
        if (t.kind != TokKind::number) parse_fail(t.pos, std::string(what) + " expects a number");
        return std::stoull(t.text);
    }

    bool reserved(std::size_t ahead = 0) const {
        const auto& t = cur_.peek(ahead);
        return t.kind == TokKind::ident && !t.quoted_ident &&
               keywords().count(detail::to_lower(t.text)) > 0;
    }

    std::string ident(const char* what) {
        const auto& t = cur_.peek();
        if (t.kind != TokKind::ident || reserved())
            parse_fail(t.pos, std::string("expected ") + what + cur_.describe());
        return cur_.next().text;
    }

    TableRef table() {
        TableRef t;
        t.pos = cur_.peek().pos;
        t.name = ident("a table name");
        if (cur_.accept_kw("AS")) t.alias = ident("an alias");
        else if (cur_.peek().kind == TokKind::ident && !reserved()) t.alias = cur_.next().text;
        return t;
    }

    ColRef colref() {
        ColRef c;
        c.pos = cur_.peek().pos;
        c.name = ident("a column name");
        if (cur_.accept_sym(".")) {
            c.qualifier = c.name;
            c.name = ident("a column name");
        }
        return c;
    }

    SelectItem item() {
        SelectItem it;
        if (cur_.accept_sym("*")) {
            it.kind = SelectItem::Kind::star;
            return it;
        }
        if (cur_.peek().kind == TokKind::ident && cur_.is_sym(".", 1) && cur_.is_sym("*", 2)) {
            it.kind = SelectItem::Kind::star;
            it.star_qualifier = cur_.next().text;
            cur_.next();
            cur_.next();
            return it;
        }
        if (cur_.is_kw("COUNT") && cur_.is_sym("(", 1)) {
            cur_.next();
            cur_.next();
            if (cur_.accept_sym("*")) {
                it.kind = SelectItem::Kind::count_star;
            } else {
                it.kind = SelectItem::Kind::count_column;
                it.distinct = cur_.accept_kw("DISTINCT");
                it.col = colref();
            }
            cur_.expect_sym(")");
        } else {
            it.col = colref();
        }
        if (cur_.accept_kw("AS")) it.alias = ident("an alias");
        else if (cur_.peek().kind == TokKind::ident && !reserved()) it.alias = cur_.next().text;
        return it;
    }

    Value literal() {
        const auto& t = cur_.peek();
        if (t.kind == TokKind::string) return Value(cur_.next().text);
        if (t.kind == TokKind::number) return Value(static_cast<std::int64_t>(std::stoll(cur_.next().text)));
        if (cur_.is_sym("-") && cur_.peek(1).kind == TokKind::number) {
            cur_.next();
            return Value(static_cast<std::int64_t>(-std::stoll(cur_.next().text)));
        }
        if (cur_.accept_kw("NULL")) return Value();
        if (cur_.accept_kw("TRUE")) return Value(true);
        if (cur_.accept_kw("FALSE")) return Value(false);
        parse_fail(t.pos, "expected a literal" + cur_.describe());
    }

    SExprPtr operand() {
        auto e = std::make_shared<SExpr>();
        const auto& t = cur_.peek();
        if (t.kind == TokKind::ident && !reserved()) {
            e->kind = SExpr::Kind::column;
            e->col = colref();
        } else {
            e->kind = SExpr::Kind::literal;
            e->literal = literal();
        }
        return e;
    }

    SExprPtr predicate() {
        if (cur_.accept_sym("(")) {
            auto e = or_expr();
            cur_.expect_sym(")");
            return e;
        }
        auto lhs = operand();
        auto e = std::make_shared<SExpr>();
        if (cur_.accept_kw("IS")) {
            e->kind = SExpr::Kind::is_null;
            e->negated = cur_.accept_kw("NOT");
            cur_.expect_kw("NULL");
            e->args = {lhs};
            return e;
        }
        const bool negated = cur_.accept_kw("NOT");
        if (cur_.accept_kw("LIKE")) {
            e->kind = SExpr::Kind::like;
            e->negated = negated;
            e->args = {lhs, operand()};
            return e;
        }
        if (cur_.accept_kw("IN")) {
            e->kind = SExpr::Kind::in;
            e->negated = negated;
            e->args = {lhs};
            cur_.expect_sym("(");
            e->list.push_back(literal());
            while (cur_.accept_sym(",")) e->list.push_back(literal());
            cur_.expect_sym(")");
            return e;
        }
        if (negated) parse_fail(cur_.peek().pos, "expected LIKE or IN after NOT" + cur_.describe());
        const auto& t = cur_.peek();
        if (t.kind != TokKind::symbol ||
            !(t.text == "=" || t.text == "<>" || t.text == "!=" || t.text == "<" ||
              t.text == "<=" || t.text == ">" || t.text == ">="))
            parse_fail(t.pos, "expected a comparison" + cur_.describe());
        e->kind = SExpr::Kind::compare;
        e->op = cur_.next().text;
        if (e->op == "!=") e->op = "<>";
        e->args = {lhs, operand()};
        return e;
    }

    SExprPtr not_expr() {
        if (cur_.accept_kw("NOT")) {
            auto e = std::make_shared<SExpr>();
            e->kind = SExpr::Kind::not_;
            e->args = {not_expr()};
            return e;
        }
        return predicate();
    }

    SExprPtr and_expr() {
        auto first = not_expr();
        if (!cur_.is_kw("AND")) return first;
        auto e = std::make_shared<SExpr>();
        e->kind = SExpr::Kind::and_;
        e->args.push_back(first);
        while (cur_.accept_kw("AND")) e->args.push_back(not_expr());
        return e;
    }

    SExprPtr or_expr() {
        auto first = and_expr();
        if (!cur_.is_kw("OR")) return first;
        auto e = std::make_shared<SExpr>();
        e->kind = SExpr::Kind::or_;
        e->args.push_back(first);
        while (cur_.accept_kw("OR")) e->args.push_back(and_expr());
        return e;
    }
};

// --- execution --------------------------------------------------------------

bool like_match(std::string_view text, std::string_view pattern) {
    // iterative wildcard match with backtracking to the last '%'
    std::size_t t = 0, p = 0, star = std::string_view::npos, mark = 0;
    const auto eq = [](char a, char b) {
        return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
    };
    while (t < text.size()) {
        if (p < pattern.size() && (pattern[p] == '_' || (pattern[p] != '%' && eq(pattern[p], text[t])))) {
            ++t;
            ++p;
        } else if (p < pattern.size() && pattern[p] == '%') {
            star = p++;
            mark = t;
        } else if (star != std::string_view::npos) {
            p = star + 1;
            t = ++mark;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '%') ++p;
    return p == pattern.size();
}

using Row = std::array<std::size_t, 2>;

class Executor {
public:
    Executor(const FlightStore& store, Select sel) : store_(store), s_(std::move(sel)) { resolve(); }

    QueryResult run() {
        const auto recs = store_.records();
        std::vector<Row> rows;
        if (s_.tables.size() == 1) {
            for (std::size_t i = 0; i < recs.size(); ++i) rows.push_back({i, 0});
        } else {
            const ColRef& l = s_.join_on->first;
            const ColRef& r = s_.join_on->second;
            const ColRef& left = l.table == 0 ? l : r;
            const ColRef& right = l.table == 0 ? r : l;
            const bool fold = code_column(left.field) || code_column(right.field);
            std::unordered_map<std::string, std::vector<std::size_t>> index;
            for (std::size_t j = 0; j < recs.size(); ++j) {
                const Value v = field_value(recs[j], right.field);
                if (v.is_null()) continue;
                index[join_key(v, fold)].push_back(j);
            }
            for (std::size_t i = 0; i < recs.size(); ++i) {
                const Value v = field_value(recs[i], left.field);
                if (v.is_null()) continue;
                const auto it = index.find(join_key(v, fold));
                if (it == index.end()) continue;
                for (std::size_t j : it->second) {
                    const Value w = field_value(recs[j], right.field);
                    const auto c = detail::compare_values(v, w, fold);
                    if (c && *c == 0) rows.push_back({i, j});
                }
            }
        }
        if (s_.where) {
            std::vector<Row> kept;
            for (const auto& row : rows)
                if (truth(*s_.where, row) == 1) kept.push_back(row);
            rows.swap(kept);
        }

        QueryResult result;
        result.columns = column_names();
        const bool aggregate = s_.items.front().kind == SelectItem::Kind::count_star ||
                               s_.items.front().kind == SelectItem::Kind::count_column;
        if (aggregate) {
            std::vector<Value> out;
            for (const auto& it : s_.items) {
                if (it.kind == SelectItem::Kind::count_star) {
                    out.emplace_back(static_cast<std::int64_t>(rows.size()));
                    continue;
                }
                std::set<std::string> seen;
                std::int64_t n = 0;
                for (const auto& row : rows) {
                    const Value v = column(it.col, row);
                    if (v.is_null()) continue;
                    if (it.distinct && !seen.insert(v.to_string()).second) continue;
                    ++n;
                }
                out.emplace_back(n);
            }
            if (s_.offset == 0 && (!s_.limit || *s_.limit > 0)) result.rows.push_back(std::move(out));
            return result;
        }

        struct Out {
            std::vector<Value> values;
            std::vector<Value> keys;
        };
        std::vector<Out> outs;
        outs.reserve(rows.size());
        for (const auto& row : rows) {
            Out o;
            o.values = project(row);
            for (const auto& ord : s_.order) o.keys.push_back(sort_key(ord, row, o.values));
            outs.push_back(std::move(o));
        }
        if (!s_.order.empty()) {
            std::vector<bool> fold;
            for (const auto& ord : s_.order)
                fold.push_back(ord.expr->kind == SExpr::Kind::column && ord.expr->col.table >= 0 &&
                               code_column(ord.expr->col.field));
            std::stable_sort(outs.begin(), outs.end(), [&](const Out& a, const Out& b) {
                for (std::size_t i = 0; i < s_.order.size(); ++i) {
                    int c = detail::sort_compare(a.keys[i], b.keys[i], fold[i]);
                    if (s_.order[i].desc) c = -c;
                    if (c != 0) return c < 0;
                }
                return false;
            });
        }
        std::set<std::vector<std::string>> seen;
        std::size_t skipped = 0;
        for (auto& o : outs) {
            if (s_.distinct) {
                std::vector<std::string> key;
                for (const auto& v : o.values) key.push_back(v.is_null() ? std::string("\x01null") : v.to_string());
                if (!seen.insert(key).second) continue;
            }
            if (skipped < s_.offset) {
                ++skipped;
                continue;
            }
            if (s_.limit && result.rows.size() >= *s_.limit) break;
            result.rows.push_back(std::move(o.values));
        }
        return result;
    }

private:
    const FlightStore& store_;
    Select s_;
    std::vector<std::string> aliases_;  // per table

    static std::string join_key(const Value& v, bool fold) {
        if (v.is_timestamp()) return "t" + std::to_string(v.as_timestamp().epoch_seconds());
        return fold ? detail::to_lower(v.to_string()) : v.to_string();
    }

    void resolve_col(ColRef& c) {
        std::optional<std::size_t> field = field_index(c.name);
        // column names are case-insensitive, as in SQLite
        for (std::size_t i = 0; !field && i < flight_fields().size(); ++i)
            if (detail::iequals(flight_fields()[i].name, c.name)) field = i;
        if (!field) fail(Errc::unknown_column, c.qualifier.empty() ? c.name : c.qualifier + "." + c.name);
        c.field = *field;
        if (!c.qualifier.empty()) {
            c.table = table_of(c.qualifier, c.pos);
        } else if (s_.tables.size() == 1) {
            c.table = 0;
        } else {
            parse_fail(c.pos, "ambiguous column name: " + c.name);
        }
    }

    int table_of(const std::string& qualifier, std::size_t pos) {
        int hit = -1;
        for (std::size_t t = 0; t < s_.tables.size(); ++t) {
            const bool match = aliases_[t].empty() ? detail::iequals(s_.tables[t].name, qualifier)
                                                   : aliases_[t] == qualifier;
            if (!match) continue;
            if (hit >= 0) parse_fail(pos, "ambiguous table reference: " + qualifier);
            hit = static_cast<int>(t);
        }
        if (hit < 0) fail(Errc::unknown_table, qualifier);
        return hit;
    }

    void resolve_expr(SExpr& e) {
        if (e.kind == SExpr::Kind::column) resolve_col(e.col);
        for (auto& a : e.args) resolve_expr(*a);
    }

    void resolve() {
        for (const auto& t : s_.tables) {
            if (!detail::iequals(t.name, "flights")) fail(Errc::unknown_table, t.name);
            aliases_.push_back(t.alias);
        }
        if (s_.tables.size() == 2 && aliases_[0] == aliases_[1])
            parse_fail(s_.tables[1].pos, "self-join needs distinct table aliases");
        for (auto& it : s_.items) {
            if (it.kind == SelectItem::Kind::column || it.kind == SelectItem::Kind::count_column)
                resolve_col(it.col);
            if (it.kind == SelectItem::Kind::star && !it.star_qualifier.empty())
                table_of(it.star_qualifier, 0);
        }
        if (s_.join_on) {
            resolve_col(s_.join_on->first);
            resolve_col(s_.join_on->second);
            if (s_.join_on->first.table == s_.join_on->second.table)
                parse_fail(s_.join_on->first.pos, "join condition must compare the two tables");
        }
        if (s_.where) resolve_expr(*s_.where);
        for (auto& o : s_.order) {
            if (o.expr->kind != SExpr::Kind::column) continue;
            // select-list alias takes precedence, like SQLite
            if (o.expr->col.qualifier.empty()) {
                bool alias = false;
                for (const auto& it : s_.items)
                    if (!it.alias.empty() && detail::iequals(it.alias, o.expr->col.name)) alias = true;
                if (alias) continue;
            }
            resolve_col(o.expr->col);
        }
    }

    std::vector<std::string> column_names() const {
        std::vector<std::string> names;
        for (const auto& it : s_.items) {
            switch (it.kind) {
                case SelectItem::Kind::star:
                    for (std::size_t t = 0; t < s_.tables.size(); ++t) {
                        if (!it.star_qualifier.empty() &&
                            !(aliases_[t].empty() ? detail::iequals(s_.tables[t].name, it.star_qualifier)
                                                  : aliases_[t] == it.star_qualifier))
                            continue;
                        for (const auto& f : flight_fields()) names.emplace_back(f.name);
                    }
                    break;
                case SelectItem::Kind::column:
                    names.push_back(it.alias.empty() ? std::string(field_info(it.col.field).name) : it.alias);
                    break;
                case SelectItem::Kind::count_star:
                    names.push_back(it.alias.empty() ? "count(*)" : it.alias);
                    break;
                case SelectItem::Kind::count_column:
                    names.push_back(it.alias.empty()
                                        ? "count(" + std::string(it.distinct ? "distinct " : "") +
                                              std::string(field_info(it.col.field).name) + ")"
                                        : it.alias);
                    break;
            }
        }
        return names;
    }

    Value column(const ColRef& c, const Row& row) const {
        return field_value(store_.records()[row[static_cast<std::size_t>(c.table)]], c.field);
    }

    std::vector<Value> project(const Row& row) const {
        std::vector<Value> out;
        for (const auto& it : s_.items) {
            if (it.kind == SelectItem::Kind::star) {
                for (std::size_t t = 0; t < s_.tables.size(); ++t) {
                    if (!it.star_qualifier.empty() &&
                        !(aliases_[t].empty() ? detail::iequals(s_.tables[t].name, it.star_qualifier)
                                              : aliases_[t] == it.star_qualifier))
                        continue;
                    for (std::size_t f = 0; f < flight_fields().size(); ++f)
                        out.push_back(field_value(store_.records()[row[t]], f));
                }
            } else {
                out.push_back(column(it.col, row));
            }
        }
        return out;
    }

    Value sort_key(const OrderItem& o, const Row& row, const std::vector<Value>& projected) const {
        const SExpr& e = *o.expr;
        if (e.kind == SExpr::Kind::literal) {
            if (e.literal.is_int()) {
                const auto pos = e.literal.as_int();
                if (pos >= 1 && static_cast<std::size_t>(pos) <= projected.size())
                    return projected[static_cast<std::size_t>(pos - 1)];
                fail(Errc::parse_error, "ORDER BY position out of range");
            }
            return e.literal;
        }
        if (e.col.table < 0) {
            std::size_t k = 0;
            for (const auto& it : s_.items) {
                if (!it.alias.empty() && detail::iequals(it.alias, e.col.name)) return projected[k];
                ++k;
            }
        }
        return column(e.col, row);
    }

    Value eval(const SExpr& e, const Row& row) const {
        if (e.kind == SExpr::Kind::column) return column(e.col, row);
        if (e.kind == SExpr::Kind::literal) return e.literal;
        const int t = truth(e, row);
        return t < 0 ? Value() : Value(t == 1);
    }

    static bool folds(const SExpr& e) {
        return e.kind == SExpr::Kind::column && code_column(e.col.field);
    }

    int truth(const SExpr& e, const Row& row) const {
        switch (e.kind) {
            case SExpr::Kind::and_: {
                int r = 1;
                for (const auto& a : e.args) {
                    const int t = truth(*a, row);
                    if (t == 0) return 0;
                    if (t < 0) r = -1;
                }
                return r;
            }
            case SExpr::Kind::or_: {
                int r = 0;
                for (const auto& a : e.args) {
                    const int t = truth(*a, row);
                    if (t == 1) return 1;
                    if (t < 0) r = -1;
                }
                return r;
            }
            case SExpr::Kind::not_: {
                const int t = truth(*e.args[0], row);
                return t < 0 ? -1 : 1 - t;
            }
            case SExpr::Kind::is_null: {
                const bool null = eval(*e.args[0], row).is_null();
                return (null != e.negated) ? 1 : 0;
            }
            case SExpr::Kind::like: {
                const Value v = eval(*e.args[0], row);
                const Value p = eval(*e.args[1], row);
                if (v.is_null() || p.is_null()) return -1;
                const bool m = like_match(v.to_string(), p.to_string());
                return (m != e.negated) ? 1 : 0;
            }
            case SExpr::Kind::in: {
                const Value v = eval(*e.args[0], row);
                if (v.is_null()) return -1;
                int r = 0;
                for (const auto& item : e.list) {
                    const auto c = detail::compare_values(v, item, folds(*e.args[0]));
                    if (!c) {
                        r = -1;
                        continue;
                    }
                    if (*c == 0) {
                        r = 1;
                        break;
                    }
                }
                if (r < 0) return -1;
                return e.negated ? 1 - r : r;
            }
            case SExpr::Kind::compare: {
                const Value l = eval(*e.args[0], row);
                const Value r = eval(*e.args[1], row);
                const auto c = detail::compare_values(l, r, folds(*e.args[0]) || folds(*e.args[1]));
                if (!c) return -1;
                if (e.op == "=") return *c == 0;
                if (e.op == "<>") return *c != 0;
                if (e.op == "<") return *c < 0;
                if (e.op == "<=") return *c <= 0;
                if (e.op == ">") return *c > 0;
                return *c >= 0;
            }
            case SExpr::Kind::column:
            case SExpr::Kind::literal: {
                const Value v = eval(e, row);
                if (v.is_null()) return -1;
                if (v.is_bool()) return v.as_bool() ? 1 : 0;
                if (v.is_int()) return v.as_int() != 0 ? 1 : 0;
                return 0;
            }
        }
        return -1;
    }
};

Select parse_select(std::string_view text) { return Parser(text).parse(); }

std::string rows_text(const QueryResult& result) {
    std::string out = detail::join(result.columns, " | ") + "\n";
    for (const auto& row : result.text_rows()) out += detail::join(row, " | ") + "\n";
    return out;
}

std::string column_label(const std::string& column) {
    std::string_view name = column;
    if (const auto dot = name.rfind('.'); dot != std::string_view::npos) name = name.substr(dot + 1);
    if (const auto idx = field_index(name)) return std::string(field_info(*idx).label);
    return column;
}

std::string sql_type(FieldKind kind) {
    switch (kind) {
        case FieldKind::integer: return "INTEGER";
        case FieldKind::boolean: return "BOOLEAN";
        case FieldKind::timestamp: return "TIMESTAMP";
        default: return "TEXT";
    }
}

}  // namespace

std::string normalize_sql(std::string_view text) {
    std::string out;
    bool pending_space = false;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (detail::is_space(c)) {
            pending_space = true;
            ++i;
            continue;
        }
        if (pending_space && !out.empty()) out += ' ';
        pending_space = false;
        if (c == '\'' || c == '"' || c == '`') {
            const std::size_t start = i++;
            while (i < text.size()) {
                if (text[i] == c) {
                    if (i + 1 < text.size() && text[i + 1] == c) {
                        i += 2;
                        continue;
                    }
                    ++i;
                    break;
                }
                ++i;
            }
            out.append(text.substr(start, i - start));
            continue;
        }
        if (detail::is_alpha(c) || c == '_') {
            const std::size_t start = i;
            while (i < text.size() && (detail::is_alnum(text[i]) || text[i] == '_')) ++i;
            const std::string word(text.substr(start, i - start));
            const std::string lower = detail::to_lower(word);
            out += keywords().count(lower) ? lower : word;
            continue;
        }
        out += c;
        ++i;
    }
    while (!out.empty() && (out.back() == ';' || detail::is_space(out.back()))) out.pop_back();
    return out;
}

SqlQuery sanitize_sql(const SqlQuery& query) {
    const auto toks = detail::lex_query(query.text, true);
    for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
        if (toks[i].kind == TokKind::symbol && toks[i].text == ";" && toks[i + 1].kind != TokKind::end) {
            // stray semicolons alone do not make a second statement
            bool more = false;
            for (std::size_t j = i + 1; j < toks.size(); ++j)
                if (toks[j].kind != TokKind::end && !(toks[j].kind == TokKind::symbol && toks[j].text == ";"))
                    more = true;
            if (more) fail(Errc::multiple_statements, "only one statement is allowed");
        }
    }
    const auto& first = toks.front();
    if (first.kind == TokKind::end) parse_fail(0, "empty query");
    const std::string head = detail::to_upper(first.text);
    if (first.kind != TokKind::ident || head != "SELECT") {
        if (first.kind == TokKind::ident && statement_keywords().count(head))
            fail(Errc::forbidden_statement, head);
        parse_fail(first.pos, "expected SELECT, found '" + first.text + "'");
    }
    for (const auto& t : toks)
        if (t.kind == TokKind::ident && !t.quoted_ident && detail::iequals(t.text, "INTO"))
            fail(Errc::forbidden_statement, "SELECT INTO");
    return query;
}

QueryResult execute_sql(const FlightStore& store, const SqlQuery& query) {
    sanitize_sql(query);
    return Executor(store, parse_select(query.text)).run();
}

SchemaDescription flight_table_schema(std::size_t row_count) {
    SchemaDescription schema;
    schema.kind = SchemaKind::sql;
    EntitySchema table;
    table.name = "flights";
    table.count = row_count;
    for (const auto& f : flight_fields()) {
        PropertySchema p;
        p.name = std::string(f.name);
        p.type = sql_type(f.kind);
        p.count = row_count;
        p.primary_key = f.name == "flight_uid";
        p.description = std::string(f.label);
        if (f.name == "connecting_flight_uid") p.references = "flights(flight_uid)";
        table.properties.push_back(std::move(p));
    }
    schema.entities.push_back(std::move(table));
    return schema;
}

std::string_view style_name(PromptStyle s) { return s == PromptStyle::odp ? "odp" : "crp"; }

SqlQuery text_to_sql(std::string_view question, const llm::Llm& model,
                     const TextToSqlOptions& options) {
    auto vars = prompting::build_schema_vars(SchemaKind::sql, flight_table_schema(options.row_count));
    vars["question"] = std::string(question);
    const auto& tmpl = prompting::get_template(options.style == PromptStyle::odp ? "sql_odp" : "sql_crp");
    const std::string prompt = prompting::render(tmpl, vars, options.fewshot, options.max_prompt_chars);

    const auto attempt = [](const std::string& reply) {
        std::string text = detail::strip_code_fences(reply);
        if (detail::starts_with_ci(text, "SQL:")) text = std::string(detail::trim(text.substr(4)));
        SqlQuery q = SqlQuery::from(text);
        sanitize_sql(q);
        parse_select(q.text);
        return q;
    };
    try {
        return attempt(model.complete("", prompt));
    } catch (const Error& e) {
        if (e.code() != Errc::parse_error) throw;
        const std::string retry = prompt + "\nYour previous reply could not be parsed (" + e.what() +
                                  "). Reply with one SQLite SELECT statement only.\n";
        try {
            return attempt(model.complete("", retry));
        } catch (const Error& e2) {
            if (e2.code() != Errc::parse_error) throw;
            fail(Errc::unparseable_after_retry, e2.what());
        }
    }
}

bool exact_match(const SqlQuery& predicted, const SqlQuery& gold) {
    return predicted.normalized == gold.normalized;
}

bool results_equivalent(const QueryResult& a, const QueryResult& b) {
    if (a.columns.size() != b.columns.size() || a.rows.size() != b.rows.size()) return false;
    const auto canon = [](const QueryResult& r) {
        std::vector<std::size_t> order(r.columns.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t x, std::size_t y) { return r.columns[x] < r.columns[y]; });
        std::vector<std::vector<std::string>> rows;
        for (const auto& row : r.rows) {
            std::vector<std::string> cells;
            for (std::size_t i : order) {
                const Value& v = row[i];
                // type tag keeps 1 and '1' apart
                cells.push_back(std::to_string(v.storage().index()) + ":" + v.to_string());
            }
            rows.push_back(std::move(cells));
        }
        std::sort(rows.begin(), rows.end());
        return rows;
    };
    return canon(a) == canon(b);
}

bool execution_match(const FlightStore& store, const SqlQuery& predicted, const SqlQuery& gold,
                     std::string* reason) {
    QueryResult p, g;
    try {
        p = execute_sql(store, predicted);
    } catch (const Error& e) {
        if (reason) *reason = std::string("predicted query failed: ") + e.what();
        return false;
    }
    try {
        g = execute_sql(store, gold);
    } catch (const Error& e) {
        if (reason) *reason = std::string("gold query failed: ") + e.what();
        return false;
    }
    const bool same = results_equivalent(p, g);
    if (!same && reason) *reason = "results differ";
    return same;
}

std::string verbalize_rows(const QueryResult& result) {
    if (result.rows.empty()) return std::string(kNoMatchAnswer);
    const auto rows = result.text_rows();
    if (result.columns.size() == 1) {
        std::vector<std::string> values;
        for (const auto& r : rows) values.push_back(r[0].empty() ? "(none)" : r[0]);
        const std::string label = column_label(result.columns[0]);
        if (values.size() == 1) return "The " + label + " is " + values[0] + ".";
        return "Found " + std::to_string(values.size()) + " results for " + label + ": " +
               detail::join(values, ", ") + ".";
    }
    std::vector<std::string> lines;
    for (const auto& r : rows) {
        std::vector<std::string> cells;
        for (std::size_t i = 0; i < r.size(); ++i)
            cells.push_back(column_label(result.columns[i]) + ": " + (r[i].empty() ? "(none)" : r[i]));
        lines.push_back(detail::join(cells, ", "));
    }
    return detail::join(lines, "; ") + ".";
}

RowsAnswer answer_from_rows(std::string_view question, std::string_view query_text,
                            const QueryResult& result, const llm::Llm* model) {
    if (result.rows.empty()) return {std::string(kNoMatchAnswer), false};
    if (model) {
        const std::string prompt = prompting::render(
            prompting::get_template("rows_answer"),
            {{"query", std::string(query_text)}, {"rows", rows_text(result)}, {"question", std::string(question)}});
        try {
            std::string reply(detail::trim(model->complete("", prompt)));
            if (!reply.empty()) return {std::move(reply), false};
        } catch (const Error& e) {
            if (!e.is_llm_failure()) throw;
        }
    }
    return {verbalize_rows(result), true};
}

}  // namespace flightrag::sql
