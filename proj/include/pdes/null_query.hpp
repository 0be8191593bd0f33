#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dec.hpp"
#include "value.hpp"

namespace pdes {

using Assignment = std::map<std::string, Value>;

enum class Sem { null_based, classical };

struct AnswerSet {
    std::vector<std::string> vars;
    std::set<Tuple> tuples;
    bool boolean = false;
    bool yes = false;
    friend bool operator==(const AnswerSet& a, const AnswerSet& b) {
        return a.boolean == b.boolean && (a.boolean ? a.yes == b.yes : a.tuples == b.tuples);
    }
};

inline bool eval_builtin(Op op, Value a, Value b, Sem s) {
    switch (op) {
        case Op::f: return false;
        case Op::is_null: return a.is_null();
        case Op::is_not_null: return !a.is_null();
        case Op::eq:
            if (s == Sem::null_based && (a.is_null() || b.is_null())) return false;
            return a == b;
        case Op::neq:
            if (s == Sem::null_based && (a.is_null() || b.is_null())) return false;
            return !(a == b);
        default: break;
    }
    if (a.is_null() || b.is_null()) return false;
    int c = Value::cmp_order(a, b);
    switch (op) {
        case Op::lt: return c < 0;
        case Op::leq: return c <= 0;
        case Op::gt: return c > 0;
        case Op::geq: return c >= 0;
        default: return false;
    }
}

// ---------------------------------------------------------------- compiled formulas

namespace detail {

struct CTerm {
    int v = -1;
    Value c;
};
struct CAtom {
    std::string pred;
    std::vector<CTerm> args;
};
struct CBuiltin {
    Op op;
    CTerm a, b;
};
struct CConj {
    std::vector<int> exist;
    std::vector<CAtom> atoms;
    std::vector<CBuiltin> builtins;
};

struct VarTable {
    std::vector<std::string> names;
    int id(const std::string& n) {
        for (size_t i = 0; i < names.size(); ++i)
            if (names[i] == n) return (int)i;
        names.push_back(n);
        return (int)names.size() - 1;
    }
    CTerm term(const Term& t) { return t.is_var ? CTerm{id(t.var), Value()} : CTerm{-1, t.val}; }
    CAtom atom(const DbAtom& a) {
        CAtom c{a.pred, {}};
        for (auto& t : a.args) c.args.push_back(term(t));
        return c;
    }
    CBuiltin builtin(const Builtin& b) {
        CBuiltin c{b.op, {}, {}};
        if (b.op != Op::f) c.a = term(b.a);
        if (b.op != Op::f && b.op != Op::is_null && b.op != Op::is_not_null) c.b = term(b.b);
        return c;
    }
};

using Binding = std::vector<Value>;

inline Value val(const CTerm& t, const Binding& b) { return t.v < 0 ? t.c : b[t.v]; }

inline bool builtin_holds(const CBuiltin& x, const Binding& b, Sem s) {
    if (x.op == Op::f) return false;
    Value a = val(x.a, b);
    Value c = (x.op == Op::is_null || x.op == Op::is_not_null) ? a : val(x.b, b);
    return eval_builtin(x.op, a, c, s);
}

// join of database atoms against an index; cb returns true to stop
template <class F>
bool match(const std::vector<CAtom>& atoms, size_t i, const Index& idx, Binding& b, F&& cb) {
    if (i == atoms.size()) return cb();
    const CAtom& a = atoms[i];
    for (const Atom* g : idx.scan(a.pred)) {
        if (g->args.size() != a.args.size()) continue;
        std::vector<int> bound;
        bool ok = true;
        for (size_t k = 0; k < a.args.size() && ok; ++k) {
            const CTerm& t = a.args[k];
            if (t.v < 0) {
                ok = t.c == g->args[k];
            } else if (!b[t.v].set()) {
                b[t.v] = g->args[k];
                bound.push_back(t.v);
            } else {
                ok = b[t.v] == g->args[k];
            }
        }
        bool stop = ok && match(atoms, i + 1, idx, b, cb);
        for (int v : bound) b[v] = Value();
        if (stop) return true;
    }
    return false;
}

// enumerate the still-unbound variables in vs over their ranges
template <class F>
bool enumerate(const std::vector<int>& vs, size_t i, const std::vector<const std::vector<Value>*>& ranges, Binding& b, F&& cb) {
    if (i == vs.size()) return cb();
    if (b[vs[i]].set()) return enumerate(vs, i + 1, ranges, b, cb);
    for (Value v : *ranges[i]) {
        b[vs[i]] = v;
        if (enumerate(vs, i + 1, ranges, b, cb)) {
            b[vs[i]] = Value();
            return true;
        }
    }
    b[vs[i]] = Value();
    return false;
}

struct CConstraint {
    VarTable vt;
    std::vector<int> univ;
    std::vector<CAtom> body;
    std::vector<CConj> head;
    std::vector<char> relevant;

    explicit CConstraint(const Constraint& c) {
        for (auto& v : c.univ) univ.push_back(vt.id(v));
        for (auto& a : c.body) body.push_back(vt.atom(a));
        for (auto& cj : c.head) {
            CConj k;
            for (auto& y : cj.exist) k.exist.push_back(vt.id(y));
            for (auto& a : cj.atoms) k.atoms.push_back(vt.atom(a));
            for (auto& x : cj.builtins) k.builtins.push_back(vt.builtin(x));
            head.push_back(std::move(k));
        }
        auto rel = relevant_vars(c);
        relevant.assign(vt.names.size(), 0);
        for (size_t i = 0; i < vt.names.size(); ++i) relevant[i] = rel.count(vt.names[i]) ? 1 : 0;
    }
};

}  // namespace detail

inline std::vector<Value> universe_of(const Instance& d, const std::set<Value>& extra = {}) {
    std::set<Value> u = active_domain(d);
    u.insert(extra.begin(), extra.end());
    u.insert(Value::null());
    return std::vector<Value>(u.begin(), u.end());
}

// classical truth of one disjunct under a binding of the universals
inline bool conj_holds(const detail::CConj& cj, const Index& idx, detail::Binding& b, const std::vector<Value>& u, Sem s,
                       const std::vector<char>* relevant = nullptr) {
    std::vector<Value> nonnull;
    for (Value v : u)
        if (!v.is_null()) nonnull.push_back(v);
    return detail::match(cj.atoms, 0, idx, b, [&] {
        std::vector<const std::vector<Value>*> ranges;
        for (int y : cj.exist) ranges.push_back(relevant && (*relevant)[y] ? &nonnull : &u);
        return detail::enumerate(cj.exist, 0, ranges, b, [&] {
            if (relevant)
                for (int y : cj.exist)
                    if ((*relevant)[y] && b[y].is_null()) return false;
            for (auto& x : cj.builtins)
                if (!detail::builtin_holds(x, b, s)) return false;
            return true;
        });
    });
}

// classical satisfaction with null as an ordinary constant
inline bool classical_holds(const Instance& d, const Constraint& c) {
    detail::CConstraint cc(c);
    Index idx(d);
    auto u = universe_of(d, constants_of(c));
    detail::Binding b(cc.vt.names.size());
    bool violated = detail::match(cc.body, 0, idx, b, [&] {
        for (auto& cj : cc.head)
            if (conj_holds(cj, idx, b, u, Sem::classical)) return false;
        return true;
    });
    return !violated;
}

// N-satisfaction through the rewriting: D |=_N psi iff D |= psi^N
inline bool n_holds(const Instance& d, const Constraint& c) { return classical_holds(d, n_rewrite_constraint(c)); }

inline bool n_holds_all(const Instance& d, const std::vector<Constraint>& sigma) {
    for (auto& c : sigma)
        if (!n_holds(d, c)) return false;
    return true;
}

inline bool classical_holds_all(const Instance& d, const std::vector<Constraint>& sigma) {
    for (auto& c : sigma)
        if (!classical_holds(d, c)) return false;
    return true;
}

// Second, independent evaluator straight from the null-semantics clauses: every assignment of the
// universals over the universe, relevant quantifiers restricted to non-null values.
inline bool n_holds_direct(const Instance& d, const Constraint& c) {
    detail::CConstraint cc(c);
    Index idx(d);
    auto u = universe_of(d, constants_of(c));
    std::vector<Value> nonnull;
    for (Value v : u)
        if (!v.is_null()) nonnull.push_back(v);
    detail::Binding b(cc.vt.names.size());
    std::vector<const std::vector<Value>*> ranges(cc.univ.size(), &u);
    bool violated = detail::enumerate(cc.univ, 0, ranges, b, [&] {
        for (int x : cc.univ)
            if (cc.relevant[x] && b[x].is_null()) return false;
        for (auto& a : cc.body) {
            Atom g{a.pred, {}};
            for (auto& t : a.args) g.args.push_back(detail::val(t, b));
            if (!idx.has(g)) return false;
        }
        for (auto& cj : cc.head) {
            std::vector<const std::vector<Value>*> er;
            for (int y : cj.exist) er.push_back(cc.relevant[y] ? &nonnull : &u);
            bool ok = detail::enumerate(cj.exist, 0, er, b, [&] {
                for (auto& a : cj.atoms) {
                    Atom g{a.pred, {}};
                    for (auto& t : a.args) g.args.push_back(detail::val(t, b));
                    if (!idx.has(g)) return false;
                }
                for (auto& x : cj.builtins)
                    if (!detail::builtin_holds(x, b, Sem::null_based)) return false;
                return true;
            });
            if (ok) return false;
        }
        return true;
    });
    return !violated;
}

// ---------------------------------------------------------------- queries

namespace detail {

struct CQuery {
    VarTable vt;
    std::vector<int> free, exist;
    std::vector<CAtom> atoms;
    std::vector<CBuiltin> builtins;
    std::vector<char> relevant;

    explicit CQuery(const ConjunctiveQuery& q) {
        for (auto& v : q.free) free.push_back(vt.id(v));
        for (auto& v : q.exist) exist.push_back(vt.id(v));
        for (auto& a : q.atoms) atoms.push_back(vt.atom(a));
        for (auto& x : q.builtins) builtins.push_back(vt.builtin(x));
        auto rel = relevant_vars(q);
        relevant.assign(vt.names.size(), 0);
        for (size_t i = 0; i < vt.names.size(); ++i) relevant[i] = rel.count(vt.names[i]) ? 1 : 0;
    }
};

}  // namespace detail

inline AnswerSet eval_query(const Instance& d, const ConjunctiveQuery& q, Sem s) {
    detail::CQuery cq(q);
    Index idx(d);
    auto u = universe_of(d, constants_of(q));
    std::vector<Value> nonnull;
    for (Value v : u)
        if (!v.is_null()) nonnull.push_back(v);
    AnswerSet out;
    out.vars = q.free;
    out.boolean = q.free.empty();
    detail::Binding b(cq.vt.names.size());
    std::vector<int> rest = cq.free;
    rest.insert(rest.end(), cq.exist.begin(), cq.exist.end());
    std::vector<const std::vector<Value>*> ranges;
    for (int v : rest) ranges.push_back(s == Sem::null_based && cq.relevant[v] ? &nonnull : &u);
    detail::match(cq.atoms, 0, idx, b, [&] {
        detail::enumerate(rest, 0, ranges, b, [&] {
            if (s == Sem::null_based)
                for (size_t v = 0; v < b.size(); ++v)
                    if (cq.relevant[v] && b[v].is_null()) return false;
            for (auto& x : cq.builtins)
                if (!detail::builtin_holds(x, b, s)) return false;
            Tuple t;
            for (int v : cq.free) t.push_back(b[v]);
            out.tuples.insert(t);
            return false;
        });
        return false;
    });
    if (out.boolean) {
        out.yes = !out.tuples.empty();
        out.tuples.clear();
    }
    return out;
}

inline AnswerSet n_answers(const Instance& d, const ConjunctiveQuery& q) { return eval_query(d, q, Sem::null_based); }
inline AnswerSet classical_answers(const Instance& d, const ConjunctiveQuery& q) { return eval_query(d, q, Sem::classical); }

// literal null-semantics check of Q[sigma]: existentials range over the universe (non-null when relevant).
// The prepared form compiles the query and indexes the instance once, for checking many assignments.
class NSatisfier {
public:
    NSatisfier(const Instance& d, const ConjunctiveQuery& q) : q_(q), cq_(q), idx_(d), u_(universe_of(d, constants_of(q))) {}

    bool operator()(const Assignment& sigma) const {
        std::vector<Value> u = u_;
        for (auto& [k, v] : sigma)
            if (!std::binary_search(u.begin(), u.end(), v)) u.insert(std::upper_bound(u.begin(), u.end(), v), v);
        std::vector<Value> nonnull;
        for (Value v : u)
            if (!v.is_null()) nonnull.push_back(v);
        detail::Binding b(cq_.vt.names.size());
        for (size_t i = 0; i < q_.free.size(); ++i) {
            auto it = sigma.find(q_.free[i]);
            if (it == sigma.end()) throw error("unassigned variable " + q_.free[i]);
            b[cq_.free[i]] = it->second;
        }
        std::vector<const std::vector<Value>*> ranges;
        for (int y : cq_.exist) ranges.push_back(cq_.relevant[y] ? &nonnull : &u);
        return detail::enumerate(cq_.exist, 0, ranges, b, [&] {
            for (size_t v = 0; v < b.size(); ++v)
                if (cq_.relevant[v] && b[v].is_null()) return false;
            for (auto& a : cq_.atoms) {
                Atom g{a.pred, {}};
                for (auto& t : a.args) g.args.push_back(detail::val(t, b));
                if (!idx_.has(g)) return false;
            }
            for (auto& x : cq_.builtins)
                if (!detail::builtin_holds(x, b, Sem::null_based)) return false;
            return true;
        });
    }

    const std::vector<Value>& universe() const { return u_; }

private:
    const ConjunctiveQuery& q_;
    detail::CQuery cq_;
    Index idx_;
    std::vector<Value> u_;
};

inline bool n_satisfies(const Instance& d, const ConjunctiveQuery& q, const Assignment& sigma) { return NSatisfier(d, q)(sigma); }

inline AnswerSet intersect(const AnswerSet& a, const AnswerSet& b) {
    AnswerSet out = a;
    if (a.boolean) {
        out.yes = a.yes && b.yes;
        return out;
    }
    out.tuples.clear();
    std::set_intersection(a.tuples.begin(), a.tuples.end(), b.tuples.begin(), b.tuples.end(),
                          std::inserter(out.tuples, out.tuples.end()));
    return out;
}

}  // namespace pdes
