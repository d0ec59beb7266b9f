/*
 * Copyright (c) the reusedb authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cctype>
#include <map>
#include <string>
#include <vector>

#include "reusedb/query.hpp"

namespace reusedb {

/// Recursive-descent parser for the engine's minimal SPJ(A) surface:
///
///   SELECT item[, item...] FROM tbl [alias][, ...]
///     [WHERE cond [AND cond...]] [GROUP BY col[, col...]]
///
/// where item is a column or SUM/COUNT/MIN/MAX/AVG(col|*), and cond is either
/// an equi-join (col = col) or an interval predicate (=, <, <=, >, >=,
/// BETWEEN a AND b) against integer, float, string, or 'YYYY-MM-DD' literals.
class QueryParser {
  public:
    explicit QueryParser(const Database& db) : db_(db) {}

    QuerySpec parse(const std::string& text) {
        tokens_ = tokenize(text);
        pos_ = 0;
        QuerySpec q;
        q.text = text;

        expect_keyword("SELECT");
        std::vector<SelectItem> items;
        items.push_back(parse_select_item());
        while (accept(","))
            items.push_back(parse_select_item());

        expect_keyword("FROM");
        parse_table(q);
        while (accept(","))
            parse_table(q);

        if (accept_keyword("WHERE")) {
            parse_condition(q);
            while (accept_keyword("AND"))
                parse_condition(q);
        }
        if (accept_keyword("GROUP")) {
            expect_keyword("BY");
            q.group_by.push_back(resolve_column(parse_colref()));
            while (accept(","))
                q.group_by.push_back(resolve_column(parse_colref()));
        }
        if (pos_ != tokens_.size()) throw ParseError("trailing input after query: " + tokens_[pos_].text);

        finish_select(q, items);
        q.canonicalize();
        return q;
    }

  private:
    struct Token {
        enum Kind { Ident, Number, String, Symbol } kind;
        std::string text;
    };

    struct SelectItem {
        bool is_agg = false;
        AggFn fn = AggFn::Count;
        ColRef col;  // unresolved (alias form); empty column for COUNT(*)
        std::string label;
    };

    static std::string upper(std::string s) {
        for (char& c : s) c = char(std::toupper(static_cast<unsigned char>(c)));
        return s;
    }

    static std::vector<Token> tokenize(const std::string& text) {
        std::vector<Token> out;
        size_t i = 0;
        while (i < text.size()) {
            char c = text[i];
            if (std::isspace(static_cast<unsigned char>(c))) {
                i++;
                continue;
            }
            if (c == '\'') {
                size_t j = i + 1;
                std::string s;
                while (j < text.size() && text[j] != '\'') s += text[j++];
                if (j >= text.size()) throw ParseError("unterminated string literal");
                out.push_back({Token::String, s});
                i = j + 1;
            } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                       (c == '-' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
                size_t j = i + 1;
                while (j < text.size() &&
                       (std::isdigit(static_cast<unsigned char>(text[j])) || text[j] == '.'))
                    j++;
                out.push_back({Token::Number, text.substr(i, j - i)});
                i = j;
            } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                size_t j = i + 1;
                while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_' ||
                                           text[j] == '.'))
                    j++;
                out.push_back({Token::Ident, text.substr(i, j - i)});
                i = j;
            } else {
                std::string sym(1, c);
                if ((c == '<' || c == '>') && i + 1 < text.size() && text[i + 1] == '=') {
                    sym += '=';
                    i++;
                }
                out.push_back({Token::Symbol, sym});
                i++;
            }
        }
        return out;
    }

    const Token& peek() const {
        if (pos_ >= tokens_.size()) throw ParseError("unexpected end of query");
        return tokens_[pos_];
    }

    bool accept(const std::string& sym) {
        if (pos_ < tokens_.size() && tokens_[pos_].kind == Token::Symbol && tokens_[pos_].text == sym) {
            pos_++;
            return true;
        }
        return false;
    }

    bool accept_keyword(const std::string& kw) {
        if (pos_ < tokens_.size() && tokens_[pos_].kind == Token::Ident && upper(tokens_[pos_].text) == kw) {
            pos_++;
            return true;
        }
        return false;
    }

    void expect_keyword(const std::string& kw) {
        if (!accept_keyword(kw)) throw ParseError("expected " + kw + " near '" + (pos_ < tokens_.size() ? tokens_[pos_].text : "<end>") + "'");
    }

    void expect(const std::string& sym) {
        if (!accept(sym)) throw ParseError("expected '" + sym + "'");
    }

    static ColRef split_colref(const std::string& ident) {
        auto dot = ident.find('.');
        if (dot == std::string::npos) return ColRef{"", ident};
        return ColRef{ident.substr(0, dot), ident.substr(dot + 1)};
    }

    ColRef parse_colref() {
        if (peek().kind != Token::Ident) throw ParseError("expected column reference, got '" + peek().text + "'");
        ColRef c = split_colref(tokens_[pos_].text);
        pos_++;
        return c;
    }

    SelectItem parse_select_item() {
        SelectItem item;
        if (peek().kind == Token::Ident) {
            std::string kw = upper(peek().text);
            AggFn fn;
            bool is_agg = true;
            if (kw == "SUM") fn = AggFn::Sum;
            else if (kw == "COUNT") fn = AggFn::Count;
            else if (kw == "MIN") fn = AggFn::Min;
            else if (kw == "MAX") fn = AggFn::Max;
            else if (kw == "AVG") fn = AggFn::Avg;
            else if (kw == "MEDIAN") throw ParseError("MEDIAN is not executable by this engine");
            else is_agg = false;
            if (is_agg && pos_ + 1 < tokens_.size() && tokens_[pos_ + 1].kind == Token::Symbol &&
                tokens_[pos_ + 1].text == "(") {
                pos_ += 2;
                item.is_agg = true;
                item.fn = fn;
                if (accept("*")) {
                    if (fn != AggFn::Count) throw ParseError("only COUNT accepts *");
                    item.col = ColRef{};
                } else {
                    item.col = parse_colref();
                }
                expect(")");
                item.label = std::string(agg_fn_name(fn)) + "(" +
                             (item.col.column.empty() ? "*" : item.col.column) + ")";
                return item;
            }
        }
        item.col = parse_colref();
        item.label = item.col.column;
        return item;
    }

    void parse_table(QuerySpec& q) {
        if (peek().kind != Token::Ident) throw ParseError("expected table name");
        std::string name = tokens_[pos_++].text;
        if (!db_.has_table(name)) throw SchemaError("unknown table " + name);
        std::string alias = name;
        if (pos_ < tokens_.size() && tokens_[pos_].kind == Token::Ident && !is_clause_keyword(tokens_[pos_].text)) {
            alias = tokens_[pos_++].text;
        }
        aliases_[alias] = name;
        aliases_[name] = name;
        q.tables.push_back(name);
    }

    static bool is_clause_keyword(const std::string& s) {
        std::string u = upper(s);
        return u == "WHERE" || u == "GROUP" || u == "BY" || u == "AND";
    }

    ColRef resolve_column(const ColRef& raw) const {
        if (!raw.table.empty()) {
            auto it = aliases_.find(raw.table);
            if (it == aliases_.end()) throw SchemaError("unknown table or alias " + raw.table);
            const std::string& table = it->second;
            db_.table(table).schema().column(raw.column);  // throws when unknown
            return ColRef{table, raw.column};
        }
        // bare column: must resolve uniquely among FROM tables
        std::string found;
        for (auto& [alias, table] : aliases_) {
            if (alias != table) continue;
            if (db_.table(table).schema().column_index(raw.column) >= 0) {
                if (!found.empty() && found != table)
                    throw SchemaError("ambiguous column " + raw.column);
                found = table;
            }
        }
        if (found.empty()) throw SchemaError("unknown column " + raw.column);
        return ColRef{found, raw.column};
    }

    Value parse_literal(const ColRef& col) {
        const Token& t = peek();
        ColumnType type = db_.table(col.table).schema().column(col.column).type;
        if (t.kind == Token::Number) {
            pos_++;
            if (type == ColumnType::Float64) return std::stod(t.text);
            return int64_t(std::stoll(t.text));
        }
        if (t.kind == Token::String) {
            pos_++;
            if (type == ColumnType::Date32) {
                auto d = parse_date(t.text);
                if (!d) throw ParseError("bad date literal '" + t.text + "'");
                return *d;
            }
            if (type != ColumnType::FixedStr) throw ParseError("string literal for non-string column " + col.str());
            return t.text;
        }
        throw ParseError("expected literal, got '" + t.text + "'");
    }

    void parse_condition(QuerySpec& q) {
        ColRef lhs = resolve_column(parse_colref());
        if (accept_keyword("BETWEEN")) {
            Value lo = parse_literal(lhs);
            expect_keyword("AND");
            Value hi = parse_literal(lhs);
            q.where.constrain(lhs, Interval::closed(lo, hi));
            return;
        }
        std::string op;
        if (accept("=")) op = "=";
        else if (accept("<=")) op = "<=";
        else if (accept(">=")) op = ">=";
        else if (accept("<")) op = "<";
        else if (accept(">")) op = ">";
        else throw ParseError("expected comparison operator");

        if (op == "=" && peek().kind == Token::Ident) {
            ColRef rhs = resolve_column(parse_colref());
            q.join_edges.emplace_back(lhs, rhs);
            return;
        }
        Value v = parse_literal(lhs);
        if (op == "=") q.where.constrain(lhs, Interval::point(v));
        else if (op == "<") q.where.constrain(lhs, Interval::less(v));
        else if (op == "<=") q.where.constrain(lhs, Interval::at_most(v));
        else if (op == ">") q.where.constrain(lhs, Interval::greater(v));
        else q.where.constrain(lhs, Interval::at_least(v));
    }

    void finish_select(QuerySpec& q, const std::vector<SelectItem>& items) {
        for (const SelectItem& raw : items) {
            OutputItem out;
            out.label = raw.label;
            if (raw.is_agg) {
                AggSpec spec;
                spec.fn = raw.fn;
                if (!raw.col.column.empty()) spec.arg = resolve_column(raw.col);
                size_t idx = q.aggregates.size();
                for (size_t i = 0; i < q.aggregates.size(); ++i) {
                    if (q.aggregates[i] == spec) idx = i;
                }
                if (idx == q.aggregates.size()) q.aggregates.push_back(spec);
                out.kind = OutputItem::Aggregate;
                out.agg_index = idx;
            } else {
                out.kind = OutputItem::Column;
                out.col = resolve_column(raw.col);
                if (q.is_aggregate_query() || !q.group_by.empty()) {
                    // plain columns must be group keys in an aggregate query
                }
            }
            q.select_list.push_back(std::move(out));
        }
        bool has_agg = !q.aggregates.empty();
        if (has_agg || !q.group_by.empty()) {
            for (const OutputItem& o : q.select_list) {
                if (o.kind == OutputItem::Column &&
                    std::find(q.group_by.begin(), q.group_by.end(), o.col) == q.group_by.end())
                    throw ParseError("column " + o.col.str() + " must appear in GROUP BY");
            }
            if (!has_agg) throw ParseError("GROUP BY requires at least one aggregate in SELECT");
        }
    }

    const Database& db_;
    std::vector<Token> tokens_;
    size_t pos_ = 0;
    std::map<std::string, std::string> aliases_;
};

}  // namespace reusedb
