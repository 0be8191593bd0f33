#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "value.hpp"

namespace pdes {

struct Term {
    bool is_var = false;
    std::string var;
    Value val;

    static Term variable(std::string n) { return Term{true, std::move(n), Value()}; }
    static Term constant(Value v) { return Term{false, {}, v}; }
    bool is_null_const() const { return !is_var && val.is_null(); }
    friend bool operator==(const Term& a, const Term& b) {
        return a.is_var == b.is_var && (a.is_var ? a.var == b.var : a.val == b.val);
    }
};

enum class Op { eq, neq, lt, leq, gt, geq, f, is_null, is_not_null };

struct Builtin {
    Op op = Op::f;
    Term a, b;
    friend bool operator==(const Builtin&, const Builtin&) = default;
};

struct DbAtom {
    std::string pred;
    std::vector<Term> args;
    friend bool operator==(const DbAtom&, const DbAtom&) = default;
};

struct Conjunct {
    std::vector<std::string> exist;
    std::vector<DbAtom> atoms;
    std::vector<Builtin> builtins;
    bool builtin_only() const { return atoms.empty(); }
    friend bool operator==(const Conjunct&, const Conjunct&) = default;
};

enum class Kind { udec, rdec, local_ic };

struct Constraint {
    std::vector<std::string> univ;
    std::vector<DbAtom> body;
    std::vector<Conjunct> head;   // disjunction
    std::string from, to;         // owner pair; empty when used as a plain IC
    Kind kind = Kind::udec;

    bool existential() const {
        for (auto& c : head)
            if (!c.exist.empty()) return true;
        return false;
    }
    friend bool operator==(const Constraint&, const Constraint&) = default;
};

struct ConjunctiveQuery {
    std::vector<std::string> free, exist;
    std::vector<DbAtom> atoms;
    std::vector<Builtin> builtins;
    std::string peer;
    // false iff some conjunct compares a term with the null literal
    bool sql_safe = true;
};

inline Builtin negate(const Builtin& b) {
    Builtin n = b;
    switch (b.op) {
        case Op::eq: n.op = Op::neq; break;
        case Op::neq: n.op = Op::eq; break;
        case Op::lt: n.op = Op::geq; break;
        case Op::leq: n.op = Op::gt; break;
        case Op::gt: n.op = Op::leq; break;
        case Op::geq: n.op = Op::lt; break;
        case Op::is_null: n.op = Op::is_not_null; break;
        case Op::is_not_null: n.op = Op::is_null; break;
        case Op::f: break;   // caller handles: negated false is dropped
    }
    return n;
}

// ---------------------------------------------------------------- lexer

struct Token {
    enum Kind { ident, number, string, punct, end } kind = end;
    std::string text;
    int line = 1, col = 1;
};

class Lexer {
public:
    Lexer(std::string_view src, int line = 1) : s_(src), line_(line) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip();
            Token t;
            t.line = line_;
            t.col = col_;
            if (i_ >= s_.size()) {
                out.push_back(t);
                return out;
            }
            char c = s_[i_];
            if (std::isalpha((unsigned char)c) || c == '_') {
                size_t j = i_;
                while (j < s_.size() && (std::isalnum((unsigned char)s_[j]) || s_[j] == '_')) ++j;
                t.kind = Token::ident;
                t.text = std::string(s_.substr(i_, j - i_));
                adv(j - i_);
            } else if (std::isdigit((unsigned char)c) || (c == '-' && i_ + 1 < s_.size() && std::isdigit((unsigned char)s_[i_ + 1]))) {
                size_t j = i_ + 1;
                while (j < s_.size() && std::isdigit((unsigned char)s_[j])) ++j;
                t.kind = Token::number;
                t.text = std::string(s_.substr(i_, j - i_));
                adv(j - i_);
            } else if (c == '\'' || c == '"') {
                size_t j = i_ + 1;
                std::string v;
                while (j < s_.size() && s_[j] != c) {
                    if (s_[j] == '\\' && j + 1 < s_.size()) ++j;
                    v += s_[j++];
                }
                if (j >= s_.size()) throw parse_error("unterminated string", t.line, t.col);
                t.kind = Token::string;
                t.text = v;
                adv(j + 1 - i_);
            } else {
                static const char* two[] = {"->", "!=", "<=", ">=", ":-"};
                std::string op;
                for (auto p : two)
                    if (s_.substr(i_, 2) == p) op = p;
                if (op.empty()) {
                    if (std::string("(),:=<>/|.").find(c) == std::string::npos)
                        throw parse_error(std::string("unexpected character '") + c + "'", t.line, t.col);
                    op = std::string(1, c);
                }
                t.kind = Token::punct;
                t.text = op;
                adv(op.size());
            }
            out.push_back(t);
        }
    }

private:
    void adv(size_t n) {
        for (size_t k = 0; k < n; ++k, ++i_) {
            if (s_[i_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
        }
    }
    void skip() {
        while (i_ < s_.size()) {
            if (s_[i_] == '#') {
                while (i_ < s_.size() && s_[i_] != '\n') adv(1);
            } else if (std::isspace((unsigned char)s_[i_])) {
                adv(1);
            } else {
                break;
            }
        }
    }

    std::string_view s_;
    size_t i_ = 0;
    int line_ = 1, col_ = 1;
};

// ---------------------------------------------------------------- parser

enum class TermMode { constraint, query, instance };

class Parser {
public:
    Parser(std::vector<Token> toks) : t_(std::move(toks)) {}
    explicit Parser(std::string_view src, int line = 1) : t_(Lexer(src, line).run()) {}

    const Token& peek(size_t k = 0) const { return t_[std::min(p_ + k, t_.size() - 1)]; }
    bool at_end() const { return peek().kind == Token::end; }
    bool is(const char* punct) const { return peek().kind == Token::punct && peek().text == punct; }
    bool is_kw(const char* kw) const { return peek().kind == Token::ident && peek().text == kw; }
    Token next() { return t_[std::min(p_++, t_.size() - 1)]; }
    [[noreturn]] void fail(const std::string& m) const { throw parse_error(m, peek().line, peek().col); }
    void expect(const char* punct) {
        if (!is(punct)) fail(std::string("expected '") + punct + "'" + got());
        next();
    }
    std::string ident() {
        if (peek().kind != Token::ident) fail("expected identifier" + got());
        return next().text;
    }
    std::string got() const {
        return peek().kind == Token::end ? " at end of input" : " near '" + peek().text + "'";
    }
    void expect_end() {
        if (!at_end()) fail("trailing input" + got());
    }

    std::vector<std::string> var_list() {
        std::vector<std::string> vs{ident()};
        while (is(",") && peek(1).kind == Token::ident && !(peek(2).kind == Token::punct && peek(2).text == "(")) {
            next();
            vs.push_back(ident());
        }
        return vs;
    }

    Term term(TermMode m) {
        const Token& tk = peek();
        if (tk.kind == Token::number || tk.kind == Token::string) {
            next();
            Value v = Value::of(tk.text);
            if (v.is_null() && m == TermMode::constraint) fail("explicit null is not allowed in constraints");
            return Term::constant(v);
        }
        if (tk.kind == Token::ident) {
            std::string n = next().text;
            if (n == "null") {
                if (m == TermMode::constraint) {
                    --p_;
                    fail("explicit null is not allowed in constraints");
                }
                return Term::constant(Value::null());
            }
            if (m == TermMode::instance) return Term::constant(Value::of(n));
            return Term::variable(n);
        }
        fail("expected term" + got());
    }

    DbAtom db_atom(TermMode m) {
        DbAtom a;
        a.pred = ident();
        expect("(");
        if (!is(")")) {
            a.args.push_back(term(m));
            while (is(",")) {
                next();
                a.args.push_back(term(m));
            }
        }
        expect(")");
        return a;
    }

    Atom ground_atom() {
        DbAtom a = db_atom(TermMode::instance);
        Atom g{a.pred, {}};
        for (auto& t : a.args) g.args.push_back(t.val);
        return g;
    }

    // one item of a conjunction: database atom or builtin
    void item(TermMode m, std::vector<DbAtom>& atoms, std::vector<Builtin>& builtins) {
        if (is_kw("false")) {
            next();
            builtins.push_back(Builtin{Op::f, {}, {}});
            return;
        }
        if ((is_kw("isnull") || is_kw("isnotnull")) && peek(1).kind == Token::punct && peek(1).text == "(") {
            Op op = next().text == "isnull" ? Op::is_null : Op::is_not_null;
            expect("(");
            Term a = term(m);
            expect(")");
            builtins.push_back(Builtin{op, a, {}});
            return;
        }
        if (peek().kind == Token::ident && peek(1).kind == Token::punct && peek(1).text == "(") {
            atoms.push_back(db_atom(m));
            return;
        }
        Term a = term(m);
        if (peek().kind != Token::punct) fail("expected comparison" + got());
        std::string o = next().text;
        Op op;
        if (o == "=") op = Op::eq;
        else if (o == "!=") op = Op::neq;
        else if (o == "<") op = Op::lt;
        else if (o == "<=") op = Op::leq;
        else if (o == ">") op = Op::gt;
        else if (o == ">=") op = Op::geq;
        else {
            --p_;
            fail("expected comparison" + got());
        }
        Term b = term(m);
        builtins.push_back(Builtin{op, a, b});
    }

    void items(TermMode m, std::vector<DbAtom>& atoms, std::vector<Builtin>& builtins) {
        item(m, atoms, builtins);
        while (is(",")) {
            next();
            item(m, atoms, builtins);
        }
    }

    Constraint constraint();
    ConjunctiveQuery query();

private:
    std::vector<Token> t_;
    size_t p_ = 0;
};

// ---------------------------------------------------------------- variable utilities

inline void add_unique(std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

inline void vars_of(const Term& t, std::vector<std::string>& out) {
    if (t.is_var) add_unique(out, t.var);
}
inline void vars_of(const DbAtom& a, std::vector<std::string>& out) {
    for (auto& t : a.args) vars_of(t, out);
}
inline void vars_of(const Builtin& b, std::vector<std::string>& out) {
    if (b.op == Op::f) return;
    vars_of(b.a, out);
    if (b.op != Op::is_null && b.op != Op::is_not_null) vars_of(b.b, out);
}

inline bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

// occurrences that count towards relevance: database atoms and builtins other than
// null tests and comparisons against the null literal
inline void count_occ(const Builtin& b, std::map<std::string, int>& n) {
    switch (b.op) {
        case Op::f:
        case Op::is_null:
        case Op::is_not_null: return;
        default: break;
    }
    if (b.a.is_null_const() || b.b.is_null_const()) return;
    if (b.a.is_var) ++n[b.a.var];
    if (b.b.is_var) ++n[b.b.var];
}
inline void count_occ(const DbAtom& a, std::map<std::string, int>& n) {
    for (auto& t : a.args)
        if (t.is_var) ++n[t.var];
}

using RelVarSet = std::set<std::string>;

inline RelVarSet relevant_vars(const Constraint& c) {
    std::map<std::string, int> n;
    for (auto& a : c.body) count_occ(a, n);
    for (auto& cj : c.head) {
        for (auto& a : cj.atoms) count_occ(a, n);
        for (auto& b : cj.builtins) count_occ(b, n);
    }
    RelVarSet out;
    for (auto& [v, k] : n)
        if (k >= 2) out.insert(v);
    return out;
}

inline RelVarSet relevant_vars(const ConjunctiveQuery& q) {
    std::map<std::string, int> n;
    for (auto& a : q.atoms) count_occ(a, n);
    for (auto& b : q.builtins) count_occ(b, n);
    RelVarSet out;
    for (auto& [v, k] : n)
        if (k >= 2) out.insert(v);
    return out;
}

// ---------------------------------------------------------------- parsing constraints and queries

inline Constraint Parser::constraint() {
    Constraint c;
    std::vector<std::string> declared;
    if (is_kw("forall")) {
        next();
        declared = var_list();
        expect(":");
    }
    for (size_t i = 0; i < declared.size(); ++i)
        for (size_t j = 0; j < i; ++j)
            if (declared[i] == declared[j]) fail("duplicate universal variable " + declared[i]);
    std::vector<Builtin> body_builtins;
    items(TermMode::constraint, c.body, body_builtins);
    if (!body_builtins.empty()) fail("builtins are not allowed in the antecedent");
    if (c.body.empty()) fail("empty antecedent");
    expect("->");
    c.univ = declared;
    std::vector<std::string> bvars;
    for (auto& a : c.body) vars_of(a, bvars);
    for (auto& v : declared)
        if (!contains(bvars, v)) fail("universal variable " + v + " does not occur in the antecedent");
    for (auto& v : bvars) add_unique(c.univ, v);

    std::vector<std::string> all_exist;
    for (;;) {
        Conjunct cj;
        if (is_kw("exists")) {
            next();
            cj.exist = var_list();
            expect(":");
            for (auto& v : cj.exist) {
                if (contains(c.univ, v)) fail("existential variable " + v + " is also universal");
                if (contains(all_exist, v)) fail("existential variable " + v + " declared twice");
                all_exist.push_back(v);
            }
        }
        items(TermMode::constraint, cj.atoms, cj.builtins);
        std::vector<std::string> hv;
        for (auto& a : cj.atoms) vars_of(a, hv);
        for (auto& b : cj.builtins) vars_of(b, hv);
        for (auto& v : hv)
            if (!contains(c.univ, v) && !contains(cj.exist, v)) fail("unsafe head variable " + v);
        for (auto& v : cj.exist)
            if (!contains(hv, v)) fail("existential variable " + v + " is not used");
        c.head.push_back(std::move(cj));
        if (!is_kw("or")) break;
        next();
    }
    // the existential shape accepted: one existential block plus builtin-only disjuncts
    int exist_blocks = 0;
    for (auto& cj : c.head)
        if (!cj.exist.empty()) ++exist_blocks;
    if (exist_blocks > 1) fail("at most one existential conjunct is supported");
    if (exist_blocks == 1)
        for (auto& cj : c.head)
            if (cj.exist.empty() && !cj.builtin_only())
                fail("an existential constraint may only add builtin disjuncts");
    c.kind = c.existential() ? Kind::rdec : Kind::udec;
    return c;
}

inline ConjunctiveQuery Parser::query() {
    ConjunctiveQuery q;
    if (is_kw("exists")) {
        next();
        q.exist = var_list();
        expect(":");
    }
    items(TermMode::query, q.atoms, q.builtins);
    std::vector<std::string> seen;
    // free variables in order of first occurrence
    for (auto& a : q.atoms) vars_of(a, seen);
    for (auto& b : q.builtins) vars_of(b, seen);
    for (auto& v : q.exist)
        if (!contains(seen, v)) fail("existential variable " + v + " is not used");
    for (auto& v : seen)
        if (!contains(q.exist, v)) q.free.push_back(v);
    std::vector<std::string> in_atoms;
    for (auto& a : q.atoms) vars_of(a, in_atoms);
    for (auto& b : q.builtins) {
        std::vector<std::string> bv;
        vars_of(b, bv);
        for (auto& v : bv)
            if (contains(q.exist, v) && !contains(in_atoms, v)) fail("unsafe variable " + v + " in builtin");
        if ((b.op != Op::is_null && b.op != Op::is_not_null && b.op != Op::f) && (b.a.is_null_const() || b.b.is_null_const()))
            q.sql_safe = false;
    }
    return q;
}

inline Constraint parse_constraint(std::string_view text) {
    Parser p(text);
    Constraint c = p.constraint();
    p.expect_end();
    return c;
}

inline ConjunctiveQuery parse_query(std::string_view text) {
    Parser p(text);
    ConjunctiveQuery q = p.query();
    p.expect_end();
    return q;
}

// comma separated ground atoms, e.g. "R(a,null), S(3)"; empty text is the empty instance
inline Instance parse_instance(std::string_view text) {
    Parser p(text);
    Instance d;
    if (p.at_end()) return d;
    d.insert(p.ground_atom());
    while (!p.at_end()) {
        p.expect(",");
        d.insert(p.ground_atom());
    }
    return d;
}

// ---------------------------------------------------------------- printing

inline std::string show(const Term& t) {
    if (t.is_var) return t.var;
    if (t.val.is_null() || t.val.is_int()) return t.val.text();
    return "'" + t.val.text() + "'";
}

inline std::string show(const Builtin& b) {
    switch (b.op) {
        case Op::f: return "false";
        case Op::is_null: return "isnull(" + show(b.a) + ")";
        case Op::is_not_null: return "isnotnull(" + show(b.a) + ")";
        default: break;
    }
    static const char* ops[] = {"=", "!=", "<", "<=", ">", ">="};
    return show(b.a) + ops[(int)b.op] + show(b.b);
}

inline std::string show(const DbAtom& a) {
    std::string s = a.pred + "(";
    for (size_t i = 0; i < a.args.size(); ++i) s += (i ? "," : "") + show(a.args[i]);
    return s + ")";
}

inline std::string join(const std::vector<std::string>& v, const char* sep) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
    return s;
}

inline std::string show(const Conjunct& c) {
    std::vector<std::string> parts;
    for (auto& a : c.atoms) parts.push_back(show(a));
    for (auto& b : c.builtins) parts.push_back(show(b));
    std::string s = c.exist.empty() ? "" : "exists " + join(c.exist, ",") + " : ";
    return s + join(parts, ", ");
}

inline std::string show(const Constraint& c) {
    std::vector<std::string> body, head;
    for (auto& a : c.body) body.push_back(show(a));
    for (auto& cj : c.head) head.push_back(show(cj));
    std::string s = c.univ.empty() ? "" : "forall " + join(c.univ, ",") + " : ";
    return s + join(body, ", ") + " -> " + join(head, " or ");
}

inline std::string show(const ConjunctiveQuery& q) {
    std::vector<std::string> parts;
    for (auto& a : q.atoms) parts.push_back(show(a));
    for (auto& b : q.builtins) parts.push_back(show(b));
    std::string s = q.exist.empty() ? "" : "exists " + join(q.exist, ",") + " : ";
    return s + join(parts, ", ");
}

// ---------------------------------------------------------------- rewriting

inline bool has_guard(const std::vector<Builtin>& bs, Op op, const std::string& v) {
    for (auto& b : bs)
        if (b.op == op && b.a.is_var && b.a.var == v) return true;
    return false;
}

inline Constraint n_rewrite_constraint(const Constraint& c) {
    RelVarSet rel = relevant_vars(c);
    Constraint out = c;
    out.head.clear();
    for (auto& x : c.univ) {
        if (!rel.count(x)) continue;
        bool present = false;
        for (auto& cj : c.head)
            if (cj.builtin_only() && cj.builtins.size() == 1 && cj.builtins[0].op == Op::is_null &&
                cj.builtins[0].a.is_var && cj.builtins[0].a.var == x)
                present = true;
        if (!present) out.head.push_back(Conjunct{{}, {}, {Builtin{Op::is_null, Term::variable(x), {}}}});
    }
    for (auto cj : c.head) {
        for (auto& y : cj.exist)
            if (rel.count(y) && !has_guard(cj.builtins, Op::is_not_null, y))
                cj.builtins.push_back(Builtin{Op::is_not_null, Term::variable(y), {}});
        out.head.push_back(cj);
    }
    return out;
}

inline ConjunctiveQuery n_rewrite_query(const ConjunctiveQuery& q) {
    RelVarSet rel = relevant_vars(q);
    ConjunctiveQuery out = q;
    std::vector<std::string> order;
    for (auto& a : q.atoms) vars_of(a, order);
    for (auto& b : q.builtins) vars_of(b, order);
    for (auto& v : order) {
        if (!rel.count(v)) continue;
        Builtin g{Op::neq, Term::variable(v), Term::constant(Value::null())};
        if (std::find(out.builtins.begin(), out.builtins.end(), g) == out.builtins.end()) out.builtins.push_back(g);
    }
    return out;
}

// ---------------------------------------------------------------- static analysis

inline std::set<Value> constants_of(const Constraint& c) {
    std::set<Value> out;
    auto t = [&](const Term& x) {
        if (!x.is_var && x.val.set()) out.insert(x.val);
    };
    for (auto& a : c.body)
        for (auto& x : a.args) t(x);
    for (auto& cj : c.head) {
        for (auto& a : cj.atoms)
            for (auto& x : a.args) t(x);
        for (auto& b : cj.builtins) {
            if (b.op == Op::f) continue;
            t(b.a);
            if (b.op != Op::is_null && b.op != Op::is_not_null) t(b.b);
        }
    }
    return out;
}

inline std::set<Value> constants_of(const ConjunctiveQuery& q) {
    std::set<Value> out;
    auto t = [&](const Term& x) {
        if (!x.is_var && x.val.set()) out.insert(x.val);
    };
    for (auto& a : q.atoms)
        for (auto& x : a.args) t(x);
    for (auto& b : q.builtins) {
        if (b.op == Op::f) continue;
        t(b.a);
        if (b.op != Op::is_null && b.op != Op::is_not_null) t(b.b);
    }
    return out;
}

inline std::set<std::string> predicates_of(const Constraint& c) {
    std::set<std::string> out;
    for (auto& a : c.body) out.insert(a.pred);
    for (auto& cj : c.head)
        for (auto& a : cj.atoms) out.insert(a.pred);
    return out;
}

struct RefAcyclicity {
    bool ok = true;
    std::vector<std::string> cycle;   // predicates along a cycle through a marked edge, first == last
};

// dependency graph: body predicate -> head predicate, marked when the head atom sits under an existential
inline RefAcyclicity ref_acyclic(const std::vector<Constraint>& sigma) {
    std::map<std::string, std::map<std::string, bool>> g;
    for (auto& c : sigma)
        for (auto& b : c.body)
            for (auto& cj : c.head)
                for (auto& h : cj.atoms) {
                    bool& m = g[b.pred][h.pred];
                    m = m || !cj.exist.empty();
                    g[h.pred];
                }
    auto path = [&](const std::string& from, const std::string& to) {
        std::map<std::string, std::string> parent;
        std::vector<std::string> q{from};
        parent[from] = from;
        for (size_t i = 0; i < q.size(); ++i) {
            if (q[i] == to) break;
            for (auto& [n, _] : g[q[i]])
                if (!parent.count(n)) {
                    parent[n] = q[i];
                    q.push_back(n);
                }
        }
        std::vector<std::string> p;
        if (!parent.count(to)) return p;
        for (std::string x = to; x != from; x = parent[x]) p.push_back(x);
        p.push_back(from);
        std::reverse(p.begin(), p.end());
        return p;
    };
    for (auto& [u, es] : g)
        for (auto& [v, marked] : es) {
            if (!marked) continue;
            auto back = path(v, u);
            if (back.empty()) continue;
            RefAcyclicity r{false, {u}};
            r.cycle.insert(r.cycle.end(), back.begin(), back.end());
            return r;
        }
    return {};
}

// single-atom existential consequent without builtins, each existential used once:
// the shape the solution program handles
inline bool simple_rdec(const Constraint& c) {
    if (!c.existential() || c.head.size() != 1) return false;
    auto& cj = c.head[0];
    if (cj.atoms.size() != 1 || !cj.builtins.empty()) return false;
    std::map<std::string, int> n;
    count_occ(cj.atoms[0], n);
    for (auto& y : cj.exist)
        if (n[y] != 1) return false;
    return true;
}

}  // namespace pdes
