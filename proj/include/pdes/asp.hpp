#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "chase.hpp"
#include "null_query.hpp"
#include "repair.hpp"
#include "semantics.hpp"
#include "system.hpp"

namespace pdes {

// ta/fa: made true/false; ts/fs: true/false after the update; tss: true in the final instance
enum class Ann { none, ta, fa, ts, fs, tss };

inline const char* to_string(Ann a) {
    switch (a) {
        case Ann::ta: return "ta";
        case Ann::fa: return "fa";
        case Ann::ts: return "ts";
        case Ann::fs: return "fs";
        case Ann::tss: return "tss";
        default: return "";
    }
}

struct Lit {
    std::string pred;
    std::vector<Term> args;   // annotation not included
    Ann ann = Ann::none;
    friend bool operator==(const Lit&, const Lit&) = default;
};

struct Rule {
    std::vector<Lit> head;   // disjunction; empty head = program constraint
    std::vector<Lit> pos, neg;
    std::vector<Builtin> builtins;
    bool cwa = false;        // R_(x,fs) <- dom(x), not R(x); never materialized
};

struct LogicProgram {
    std::string peer;
    std::vector<Atom> facts;
    std::vector<Rule> rules;
    std::vector<std::string> notes;   // emitted as comments
    std::set<std::string> frozen;
    std::set<std::string> own;        // S(P)
    bool ref_acyclic = true;
    int constraints_from_filter = 0;
};

// annotated ground atom: same predicate, annotation appended as a constant
inline Atom annotated(const std::string& pred, Tuple args, Ann a) {
    if (a != Ann::none) args.push_back(Value::of(to_string(a)));
    return Atom{pred, std::move(args)};
}

inline Ann annotation_of(const Atom& a, const Schema& schema) {
    auto it = schema.find(a.pred);
    if (it == schema.end() || (int)a.args.size() != it->second.arity + 1) return Ann::none;
    auto& t = a.args.back().text();
    for (Ann x : {Ann::ta, Ann::fa, Ann::ts, Ann::fs, Ann::tss})
        if (t == to_string(x)) return x;
    return Ann::none;
}

// ---------------------------------------------------------------- program generation

namespace detail {

inline std::vector<std::string> default_vars(int n) {
    static const char* names[] = {"x", "y", "z", "w", "v", "u"};
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back(n <= 6 ? names[i] : "x" + std::to_string(i + 1));
    return out;
}

inline std::vector<Term> var_terms(const std::vector<std::string>& vs) {
    std::vector<Term> out;
    for (auto& v : vs) out.push_back(Term::variable(v));
    return out;
}

inline Builtin not_null(const std::string& v) { return Builtin{Op::neq, Term::variable(v), Term::constant(Value::null())}; }

inline std::string fresh_name(const Schema& schema, std::set<std::string>& used, std::string base) {
    auto lower = [](std::string s) {
        for (auto& c : s) c = (char)std::tolower((unsigned char)c);
        return s;
    };
    std::set<std::string> taken;
    for (auto& [p, _] : schema) taken.insert(lower(p));
    while (taken.count(lower(base)) || used.count(base)) base += "_";
    used.insert(base);
    return base;
}

// positive/negative/builtin items of a clause body for one database atom, respecting frozen predicates
struct BodyBuilder {
    const std::set<std::string>& frozen;
    Rule& r;
    void holds(const DbAtom& a) {   // atom true after the update
        if (frozen.count(a.pred)) r.pos.push_back(Lit{a.pred, a.args, Ann::none});
        else r.pos.push_back(Lit{a.pred, a.args, Ann::ts});
    }
    void fails(const DbAtom& a) {   // atom false after the update
        if (frozen.count(a.pred)) r.neg.push_back(Lit{a.pred, a.args, Ann::none});
        else r.pos.push_back(Lit{a.pred, a.args, Ann::fs});
    }
    void not_deleted(const DbAtom& a) {
        if (!frozen.count(a.pred)) r.neg.push_back(Lit{a.pred, a.args, Ann::fa});
    }
};

template <class T>
void push_unique(std::vector<T>& v, const T& x) {
    if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
}

}  // namespace detail

// Disjunctive program whose stable models give the neighborhood solutions of p over dbar.
// inc lists neighbors whose core is inconsistent; their constraints are switched off through inc_Q facts.
inline LogicProgram solution_program(const System& s, const std::string& p, const Instance& dbar,
                                     const std::set<std::string>& inc = {}) {
    s.require_peer(p);
    LogicProgram prog;
    prog.peer = p;
    prog.notes.push_back("solution program for peer " + p);
    prog.own = s.preds_of(p);
    for (auto& q : s.proper_neighbors(p))
        if (s.trust_of(p, q) == TrustKind::less) {
            auto ps = s.preds_of(q);
            prog.frozen.insert(ps.begin(), ps.end());
        }
    std::set<std::string> used;
    std::map<std::string, std::string> inc_name;
    for (auto& q : inc) inc_name[q] = detail::fresh_name(s.schema, used, "inc_" + q);
    const std::string dom = detail::fresh_name(s.schema, used, "dom");

    // 1. facts
    std::set<Value> adom = active_domain(dbar);
    adom.insert(Value::null());
    for (auto& c : s.sigma_of(p)) {
        auto k = constants_of(c);
        adom.insert(k.begin(), k.end());
    }
    for (Value v : adom) prog.facts.push_back(Atom{dom, {v}});
    for (auto& a : dbar) prog.facts.push_back(a);
    for (auto& [q, n] : inc_name) prog.facts.push_back(Atom{n, {}});

    auto ra = ref_acyclic(s.sigma_of(p));
    prog.ref_acyclic = ra.ok;
    if (!ra.ok) prog.notes.push_back("warning: constraints are not ref-acyclic (" + join(ra.cycle, " -> ") + "); models may include non-solutions");

    auto& frozen = prog.frozen;
    int naux = 0;
    for (auto& q : s.peers) {
        for (auto& c : s.sigma_of(p, q)) {
            auto rel = relevant_vars(c);
            auto guard_inc = [&](Rule& r) {
                if (q != p && inc.count(q)) r.neg.push_back(Lit{inc_name.at(q), {}, Ann::none});
            };
            auto finish = [&](Rule& r) {
                if (r.head.empty()) {
                    ++prog.constraints_from_filter;
                    prog.notes.push_back("constraint: no updatable atom in " + show(c));
                }
                prog.rules.push_back(std::move(r));
            };
            if (!c.existential()) {
                // split the consequent into clauses; one rule per clause
                std::vector<std::vector<std::pair<const DbAtom*, const Builtin*>>> clauses{{}};
                for (auto& cj : c.head) {
                    std::vector<std::pair<const DbAtom*, const Builtin*>> items;
                    for (auto& a : cj.atoms) items.push_back({&a, nullptr});
                    for (auto& b : cj.builtins) items.push_back({nullptr, &b});
                    std::vector<std::vector<std::pair<const DbAtom*, const Builtin*>>> next;
                    for (auto& cl : clauses)
                        for (auto& it : items) {
                            auto x = cl;
                            x.push_back(it);
                            next.push_back(std::move(x));
                        }
                    clauses = std::move(next);
                }
                for (auto& cl : clauses) {
                    Rule r;
                    detail::BodyBuilder bb{frozen, r};
                    for (auto& a : c.body)
                        if (!frozen.count(a.pred)) detail::push_unique(r.head, Lit{a.pred, a.args, Ann::fa});
                    for (auto& [a, b] : cl)
                        if (a && !frozen.count(a->pred)) detail::push_unique(r.head, Lit{a->pred, a->args, Ann::ta});
                    for (auto& a : c.body) bb.holds(a);
                    for (auto& [a, b] : cl) {
                        if (a) bb.fails(*a);
                        else if (b->op != Op::f) detail::push_unique(r.builtins, negate(*b));
                    }
                    for (auto& x : c.univ)
                        if (rel.count(x)) detail::push_unique(r.builtins, detail::not_null(x));
                    guard_inc(r);
                    finish(r);
                }
                continue;
            }
            if (!simple_rdec(c) || c.body.size() != 1)
                throw refusal("constraint outside the supported referential shape: " + show(c));
            const DbAtom& ra_ = c.body[0];
            const DbAtom& qa = c.head[0].atoms[0];
            auto& ex = c.head[0].exist;
            std::vector<std::string> xp;   // x̄': universal variables of the consequent atom
            for (auto& t : qa.args)
                if (t.is_var && !contains(ex, t.var)) add_unique(xp, t.var);
            std::string aux = detail::fresh_name(s.schema, used, "aux" + std::to_string(++naux));
            Lit aux_lit{aux, detail::var_terms(xp), Ann::none};
            DbAtom qnull = qa;
            for (auto& t : qnull.args)
                if (t.is_var && contains(ex, t.var)) t = Term::constant(Value::null());

            Rule r;
            detail::BodyBuilder bb{frozen, r};
            if (!frozen.count(ra_.pred)) r.head.push_back(Lit{ra_.pred, ra_.args, Ann::fa});
            if (!frozen.count(qa.pred)) r.head.push_back(Lit{qa.pred, qnull.args, Ann::ta});
            bb.holds(ra_);
            r.neg.push_back(aux_lit);
            for (auto& x : c.univ)
                if (rel.count(x)) r.builtins.push_back(detail::not_null(x));
            guard_inc(r);
            finish(r);

            // aux holds when the consequent is already satisfied by a surviving atom
            Rule a1;
            a1.head.push_back(aux_lit);
            a1.pos.push_back(Lit{qa.pred, qnull.args, Ann::none});
            detail::BodyBuilder b1{frozen, a1};
            b1.not_deleted(qnull);
            for (auto& x : xp) a1.builtins.push_back(detail::not_null(x));
            prog.rules.push_back(std::move(a1));
            for (auto& y : ex) {
                Rule a2;
                a2.head.push_back(aux_lit);
                detail::BodyBuilder b2{frozen, a2};
                b2.holds(qa);
                b2.not_deleted(qa);
                for (auto& x : xp) a2.builtins.push_back(detail::not_null(x));
                a2.builtins.push_back(detail::not_null(y));
                prog.rules.push_back(std::move(a2));
            }
        }
    }

    // 6.-8. annotation rules, coherence constraints, interpretation rules
    for (auto& q : s.neighbors(p)) {
        for (auto& pred : s.peer_preds.at(q)) {
            if (frozen.count(pred)) continue;
            auto xs = detail::var_terms(detail::default_vars(s.schema.at(pred).arity));
            Rule r1;
            r1.head = {Lit{pred, xs, Ann::fs}};
            r1.pos = {Lit{pred, xs, Ann::fa}};
            Rule r2;
            r2.head = {Lit{pred, xs, Ann::fs}};
            for (auto& x : xs) r2.pos.push_back(Lit{dom, {x}, Ann::none});
            r2.neg = {Lit{pred, xs, Ann::none}};
            r2.cwa = true;
            Rule r3;
            r3.head = {Lit{pred, xs, Ann::ts}};
            r3.pos = {Lit{pred, xs, Ann::none}};
            Rule r4;
            r4.head = {Lit{pred, xs, Ann::ts}};
            r4.pos = {Lit{pred, xs, Ann::ta}};
            Rule r5;
            r5.pos = {Lit{pred, xs, Ann::ta}, Lit{pred, xs, Ann::fa}};
            for (auto* r : {&r1, &r2, &r3, &r4, &r5}) prog.rules.push_back(*r);
            if (q == p) {
                Rule r6;
                r6.head = {Lit{pred, xs, Ann::tss}};
                r6.pos = {Lit{pred, xs, Ann::ts}};
                r6.neg = {Lit{pred, xs, Ann::fa}};
                prog.rules.push_back(r6);
            }
        }
    }
    return prog;
}

// Ans(x̄) <- q^N over tss atoms; the predicate name is fresh
inline std::string add_query_rule(LogicProgram& prog, const System& s, const ConjunctiveQuery& q) {
    std::set<std::string> used;
    for (auto& r : prog.rules)
        for (auto& l : r.head) used.insert(l.pred);
    std::string ans = detail::fresh_name(s.schema, used, "ans");
    auto qn = n_rewrite_query(q);
    Rule r;
    r.head = {Lit{ans, detail::var_terms(q.free), Ann::none}};
    for (auto& a : qn.atoms) {
        if (!prog.own.count(a.pred)) throw schema_error("query predicate " + a.pred + " is not a predicate of " + prog.peer);
        r.pos.push_back(Lit{a.pred, a.args, Ann::tss});
    }
    r.builtins = qn.builtins;
    prog.rules.push_back(r);
    return ans;
}

// ---------------------------------------------------------------- grounding

struct GroundRule {
    std::vector<int> head, pos, neg;
    friend auto operator<=>(const GroundRule&, const GroundRule&) = default;
};

struct GroundProgram {
    std::vector<Atom> atoms;
    std::map<Atom, int> ids;
    std::vector<char> guess;   // ta/fa atoms: the choices of a model
    std::vector<GroundRule> rules;
    Instance facts;            // plain facts plus closed-world fs atoms; never part of rules

    int id(const Atom& a, bool g) {
        auto [it, fresh] = ids.emplace(a, (int)atoms.size());
        if (fresh) {
            atoms.push_back(a);
            guess.push_back(g);
        }
        return it->second;
    }
};

namespace detail {

using Bind = std::map<std::string, Value>;

inline Value bound(const Term& t, const Bind& b) {
    if (!t.is_var) return t.val;
    auto it = b.find(t.var);
    return it == b.end() ? Value() : it->second;
}

inline Atom ground_lit(const Lit& l, const Bind& b) {
    Tuple args;
    for (auto& t : l.args) {
        Value v = bound(t, b);
        if (!v.set()) throw error("unsafe rule: variable " + t.var + " of " + l.pred + " is not bound by a positive literal");
        args.push_back(v);
    }
    return annotated(l.pred, std::move(args), l.ann);
}

class Grounder {
public:
    explicit Grounder(const LogicProgram& prog) : prog_(prog) {
        for (auto& a : prog.facts) add_possible(a), facts_.insert(a);
        for (auto& r : prog.rules)
            if (r.cwa) cwa_.insert(r.head[0].pred);
    }

    GroundProgram run() {
        // possible atoms: treat every negative literal as satisfiable until nothing new appears
        for (bool grew = true; grew;) {
            grew = false;
            for (auto& r : prog_.rules) {
                if (r.cwa) continue;
                instances(r, [&](const Bind& b) {
                    for (auto& h : r.head) grew = add_possible(ground_lit(h, b)) || grew;
                });
            }
        }
        GroundProgram g;
        g.facts = facts_;
        std::set<GroundRule> seen;
        for (auto& r : prog_.rules) {
            if (r.cwa) continue;
            instances(r, [&](const Bind& b) {
                GroundRule gr;
                for (auto& h : r.head) {
                    Atom a = ground_lit(h, b);
                    if (facts_.count(a) || cwa_true(a)) return;   // head already true
                    gr.head.push_back(g.id(a, h.ann == Ann::ta || h.ann == Ann::fa));
                }
                for (auto& l : r.pos) {
                    Atom a = ground_lit(l, b);
                    if (facts_.count(a) || cwa_true(a)) continue;
                    if (!possible_.count(a)) return;
                    gr.pos.push_back(g.id(a, l.ann == Ann::ta || l.ann == Ann::fa));
                }
                for (auto& l : r.neg) {
                    Atom a = ground_lit(l, b);
                    if (facts_.count(a) || cwa_true(a)) return;
                    if (!possible_.count(a)) continue;
                    gr.neg.push_back(g.id(a, l.ann == Ann::ta || l.ann == Ann::fa));
                }
                if (seen.insert(gr).second) g.rules.push_back(gr);
            });
        }
        for (auto& a : cwa_used_) g.facts.insert(a);
        return g;
    }

private:
    bool add_possible(const Atom& a) {
        if (!possible_.insert(a).second) return false;
        by_pred_[{a.pred, a.args.size()}].push_back(a);
        return true;
    }

    // fs atom true by the closed-world rule: the plain atom is not a fact
    bool cwa_true(const Atom& a) {
        if (a.args.empty() || !cwa_.count(a.pred) || a.args.back().text() != "fs") return false;
        Atom plain{a.pred, Tuple(a.args.begin(), a.args.end() - 1)};
        if (facts_.count(plain)) return false;
        cwa_used_.insert(a);
        return true;
    }

    bool match_lit(const Lit& l, const Atom& a, Bind& b, std::vector<std::string>& newly) {
        size_t n = l.args.size();
        if (l.ann != Ann::none && a.args.back().text() != to_string(l.ann)) return false;
        for (size_t i = 0; i < n; ++i) {
            auto& t = l.args[i];
            if (!t.is_var) {
                if (!(t.val == a.args[i])) return false;
                continue;
            }
            auto it = b.find(t.var);
            if (it != b.end()) {
                if (!(it->second == a.args[i])) return false;
            } else {
                b[t.var] = a.args[i];
                newly.push_back(t.var);
            }
        }
        return true;
    }

    template <class F>
    void join(const std::vector<const Lit*>& ls, size_t i, Bind& b, const Rule& r, F& f) {
        if (i == ls.size()) {
            for (auto& x : r.builtins) {
                Value va = bound(x.a, b);
                Value vb = (x.op == Op::f || x.op == Op::is_null || x.op == Op::is_not_null) ? Value::null() : bound(x.b, b);
                if (!va.set() && x.op != Op::f) throw error("unsafe rule: unbound variable in builtin");
                if (!vb.set()) throw error("unsafe rule: unbound variable in builtin");
                if (!eval_builtin(x.op, va, vb, Sem::classical)) return;
            }
            f(b);
            return;
        }
        const Lit& l = *ls[i];
        if (l.ann == Ann::fs) {   // never enumerated: decided by lookup once bound
            Atom a = ground_lit(l, b);
            if (possible_.count(a) || cwa_true(a)) join(ls, i + 1, b, r, f);
            return;
        }
        size_t ar = l.args.size() + (l.ann != Ann::none ? 1 : 0);
        auto it = by_pred_.find({l.pred, ar});
        if (it == by_pred_.end()) return;
        auto cands = it->second;   // copy: the possible set may grow while we iterate
        for (auto& a : cands) {
            std::vector<std::string> newly;
            if (match_lit(l, a, b, newly)) join(ls, i + 1, b, r, f);
            for (auto& v : newly) b.erase(v);
        }
    }

    template <class F>
    void instances(const Rule& r, F&& f) {
        std::vector<const Lit*> ls;
        for (auto& l : r.pos)
            if (l.ann != Ann::fs) ls.push_back(&l);
        for (auto& l : r.pos)
            if (l.ann == Ann::fs) ls.push_back(&l);
        Bind b;
        join(ls, 0, b, r, f);
    }

    const LogicProgram& prog_;
    Instance facts_, possible_, cwa_used_;
    std::set<std::string> cwa_;
    std::map<std::pair<std::string, size_t>, std::vector<Atom>> by_pred_;
};

}  // namespace detail

inline GroundProgram ground(const LogicProgram& prog) { return detail::Grounder(prog).run(); }

// ---------------------------------------------------------------- stable models

struct SolveStats {
    unsigned long long nodes = 0, leaves = 0, rejected_minimality = 0;
};

namespace detail {

enum V : signed char { F = 0, T = 1, U = 2 };

inline V kand(V a, V b) { return a == F || b == F ? F : (a == T && b == T ? T : U); }
inline V kor(V a, V b) { return a == T || b == T ? T : (a == F && b == F ? F : U); }
inline V knot(V a) { return a == U ? U : (a == T ? F : T); }

// Guesses are the ta/fa atoms; every other atom is defined by non-disjunctive, non-recursive rules
// over them, so a full assignment of guesses fixes the candidate model. Three-valued propagation
// (rule satisfaction and support) prunes; each leaf gets the exact reduct-minimality check.
class StableSolver {
public:
    StableSolver(const GroundProgram& g, unsigned long long cap) : g_(g), cap_(cap) {
        size_t n = g.atoms.size();
        defs_.resize(n);
        heads_of_.resize(n);
        for (size_t i = 0; i < g.rules.size(); ++i) {
            auto& r = g.rules[i];
            bool guessy = r.head.empty();
            for (int h : r.head) guessy = guessy || g.guess[h];
            if (guessy) {
                for (int h : r.head)
                    if (!g.guess[h]) throw error("disjunctive head mixes defined and guessed atoms");
                checks_.push_back((int)i);
                for (int h : r.head) heads_of_[h].push_back((int)i);
            } else {
                if (r.head.size() != 1) throw error("defined atom under a disjunctive head");
                defs_[r.head[0]].push_back((int)i);
            }
        }
        // topological order of defined atoms
        std::vector<int> state(n, 0);
        std::function<void(int)> visit = [&](int a) {
            if (state[a] == 2) return;
            if (state[a] == 1) throw error("recursive definition among annotation atoms");
            state[a] = 1;
            for (int ri : defs_[a]) {
                for (int b : g.rules[ri].pos)
                    if (!g.guess[b]) visit(b);
                for (int b : g.rules[ri].neg)
                    if (!g.guess[b]) visit(b);
            }
            state[a] = 2;
            order_.push_back(a);
        };
        for (size_t a = 0; a < n; ++a)
            if (!g.guess[a]) visit((int)a);
        for (size_t a = 0; a < n; ++a)
            if (g.guess[a]) guesses_.push_back((int)a);
    }

    std::vector<std::vector<char>> run(SolveStats* st = nullptr) {
        std::vector<V> val(g_.atoms.size(), U);
        out_.clear();
        search(val);
        if (st) *st = stats_;
        std::sort(out_.begin(), out_.end());
        out_.erase(std::unique(out_.begin(), out_.end()), out_.end());
        return out_;
    }

private:
    V body(const GroundRule& r, const std::vector<V>& val) const {
        V b = T;
        for (int a : r.pos) b = kand(b, val[a]);
        for (int a : r.neg) b = kand(b, knot(val[a]));
        return b;
    }

    void derive(std::vector<V>& val) const {
        for (int a : order_) {
            V v = F;
            for (int ri : defs_[a]) v = kor(v, body(g_.rules[ri], val));
            val[a] = v;
        }
    }

    bool propagate(std::vector<V>& val) const {
        for (bool changed = true; changed;) {
            changed = false;
            derive(val);
            for (int ri : checks_) {
                auto& r = g_.rules[ri];
                V b = body(r, val);
                if (b == F) continue;
                int nu = 0, last = -1;
                bool sat = false;
                for (int h : r.head) {
                    if (val[h] == T) sat = true;
                    if (val[h] == U) ++nu, last = h;
                }
                if (sat || b != T) continue;
                if (nu == 0) return false;
                if (nu == 1) {
                    val[last] = T;
                    changed = true;
                }
            }
            // support: a chosen atom needs a rule with a true body where it is the only true head atom
            for (int a : guesses_) {
                if (val[a] == F) continue;
                bool can = false;
                for (int ri : heads_of_[a]) {
                    auto& r = g_.rules[ri];
                    if (body(r, val) == F) continue;
                    bool other = false;
                    for (int h : r.head)
                        if (h != a && val[h] == T) other = true;
                    if (!other) {
                        can = true;
                        break;
                    }
                }
                if (can) continue;
                if (val[a] == T) return false;
                val[a] = F;
                changed = true;
            }
        }
        return true;
    }

    void search(std::vector<V> val) {
        if (++stats_.nodes > cap_) throw resource_error("stable model search exceeded the node cap", cap_, stats_.nodes);
        if (!propagate(val)) return;
        for (int a : guesses_)
            if (val[a] == U) {
                auto t = val;
                t[a] = T;
                search(std::move(t));
                val[a] = F;
                search(std::move(val));
                return;
            }
        ++stats_.leaves;
        std::vector<char> m(val.size());
        for (size_t i = 0; i < val.size(); ++i) m[i] = val[i] == T;
        if (!is_model(m) || !minimal(m)) {
            ++stats_.rejected_minimality;
            return;
        }
        out_.push_back(std::move(m));
    }

    bool is_model(const std::vector<char>& m) const {
        for (auto& r : g_.rules) {
            bool b = true;
            for (int a : r.pos) b = b && m[a];
            for (int a : r.neg) b = b && !m[a];
            if (!b) continue;
            bool h = false;
            for (int a : r.head) h = h || m[a];
            if (!h) return false;
        }
        return true;
    }

    // no proper subset of m is a model of the reduct
    bool minimal(const std::vector<char>& m) const {
        std::vector<const GroundRule*> red;
        for (auto& r : g_.rules) {
            if (r.head.empty()) continue;   // satisfied by every subset of a model
            bool keep = true;
            for (int a : r.neg) keep = keep && !m[a];
            if (keep) red.push_back(&r);
        }
        size_t total = 0;
        for (char c : m) total += c;
        std::vector<char> s(m.size(), 0);
        std::function<bool(std::vector<char>&, size_t)> smaller = [&](std::vector<char>& cur, size_t count) {
            for (;;) {
                const GroundRule* open = nullptr;
                bool grew = false;
                for (auto* r : red) {
                    bool b = true;
                    for (int a : r->pos) b = b && cur[a];
                    if (!b) continue;
                    bool h = false;
                    for (int a : r->head) h = h || cur[a];
                    if (h) continue;
                    std::vector<int> opts;
                    for (int a : r->head)
                        if (m[a]) opts.push_back(a);
                    if (opts.empty()) return false;   // cannot happen for a model m
                    if (opts.size() == 1) {
                        cur[opts[0]] = 1;
                        ++count;
                        grew = true;
                    } else if (!open) {
                        open = r;
                    }
                }
                if (grew) continue;
                if (!open) return count < total;
                for (int a : open->head) {
                    if (!m[a]) continue;
                    auto nxt = cur;
                    nxt[a] = 1;
                    if (smaller(nxt, count + 1)) return true;
                }
                return false;
            }
        };
        return !smaller(s, 0);
    }

    const GroundProgram& g_;
    unsigned long long cap_;
    std::vector<std::vector<int>> defs_, heads_of_;
    std::vector<int> checks_, order_, guesses_;
    std::vector<std::vector<char>> out_;
    SolveStats stats_;
};

}  // namespace detail

// stable models as sets of true non-fact atoms, in canonical order
inline std::vector<Instance> stable_models(const GroundProgram& g, unsigned long long cap = default_cap(), SolveStats* st = nullptr) {
    std::vector<Instance> out;
    for (auto& m : detail::StableSolver(g, cap).run(st)) {
        Instance x;
        for (size_t i = 0; i < m.size(); ++i)
            if (m[i]) x.insert(g.atoms[i]);
        out.push_back(std::move(x));
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline Instance extract_instance(const Instance& model, const System& s, const std::string& p) {
    Instance out;
    auto mine = s.preds_of(p);
    for (auto& a : model)
        if (mine.count(a.pred) && annotation_of(a, s.schema) == Ann::tss)
            out.insert(Atom{a.pred, Tuple(a.args.begin(), a.args.end() - 1)});
    return out;
}

// the updated neighborhood instance: dbar minus deletions plus insertions
inline Instance neighborhood_of(const Instance& model, const Instance& dbar, const Schema& schema) {
    Instance out = dbar;
    for (auto& a : model) {
        Ann k = annotation_of(a, schema);
        if (k != Ann::ta && k != Ann::fa) continue;
        Atom plain{a.pred, Tuple(a.args.begin(), a.args.end() - 1)};
        if (k == Ann::ta) out.insert(plain);
        else out.erase(plain);
    }
    return out;
}

// ---------------------------------------------------------------- solving a peer

struct AspModel {
    Instance atoms;          // true derived and chosen atoms
    Instance neighborhood;   // updated neighborhood instance
    Instance instance;       // D_M
    bool kept = true;        // survives the post-filter
};

struct AspResult {
    LogicProgram program;
    Instance dbar;
    std::set<std::string> inc;
    size_t ground_rules = 0, ground_atoms = 0, guesses = 0;
    SolveStats stats;
    std::vector<AspModel> models;
    std::vector<Instance> solutions;   // distinct D_M over kept models, canonical order
    bool post_filtered = false;
};

struct AspOptions {
    unsigned long long cap = default_cap();
    bool post_filter = false;
};

// drop models whose neighborhood instance is strictly farther from dbar than another model's
inline void post_filter(std::vector<AspModel>& ms, const Instance& dbar, const std::vector<Constraint>& sigma) {
    Instance bound = r_chase(dbar, sigma);
    for (auto& a : ms) {
        a.kept = true;
        for (auto& b : ms)
            if (&a != &b && closer_lt(b.neighborhood, a.neighborhood, dbar, bound)) {
                a.kept = false;
                break;
            }
    }
}

class AspSolver {
public:
    explicit AspSolver(const System& s, EngineOptions eo = {}, AspOptions ao = {}) : s_(s), engine_(s, std::move(eo)), o_(ao) {}

    // D(P) plus the cores of P's neighbors, computed by the recursive engine
    Instance neighborhood_instance(const std::string& p, std::set<std::string>* inc) {
        s_.require_peer(p);
        s_.require_acyclic();
        return engine_.neighborhood_instance(p, inc);
    }

    LogicProgram program(const std::string& p) {
        std::set<std::string> inc;
        Instance dbar = neighborhood_instance(p, &inc);
        return solution_program(s_, p, dbar, inc);
    }

    AspResult solve(const std::string& p, const ConjunctiveQuery* q = nullptr, std::string* ans = nullptr) {
        AspResult r;
        r.dbar = neighborhood_instance(p, &r.inc);
        r.program = solution_program(s_, p, r.dbar, r.inc);
        if (q) {
            std::string a = add_query_rule(r.program, s_, *q);
            if (ans) *ans = a;
        }
        GroundProgram g = ground(r.program);
        r.ground_rules = g.rules.size();
        r.ground_atoms = g.atoms.size();
        for (char c : g.guess) r.guesses += c;
        for (auto& m : stable_models(g, o_.cap, &r.stats)) {
            AspModel am;
            am.atoms = m;
            am.neighborhood = neighborhood_of(m, r.dbar, s_.schema);
            am.instance = extract_instance(m, s_, p);
            r.models.push_back(std::move(am));
        }
        if (o_.post_filter) {
            std::vector<Constraint> sigma;
            for (auto& q2 : s_.peers)
                if (q2 == p || !r.inc.count(q2)) {
                    auto& cs = s_.sigma_of(p, q2);
                    sigma.insert(sigma.end(), cs.begin(), cs.end());
                }
            post_filter(r.models, r.dbar, sigma);
            r.post_filtered = true;
        }
        std::set<Instance> sols;
        for (auto& m : r.models)
            if (m.kept) sols.insert(m.instance);
        r.solutions = dedupe_sorted(std::vector<Instance>(sols.begin(), sols.end()), s_.instance_of(p));
        return r;
    }

    // cautious answers of the query rule over the (kept) stable models
    PcaResult pca(const std::string& p, const ConjunctiveQuery& q) {
        std::string ans;
        AspResult r = solve(p, &q, &ans);
        PcaResult out;
        out.peer = p;
        out.answers.vars = q.free;
        out.answers.boolean = q.free.empty();
        bool first = true;
        for (auto& m : r.models) {
            if (!m.kept) continue;
            std::set<Tuple> ts;
            for (auto it = m.atoms.lower_bound(Atom{ans, {}}); it != m.atoms.end() && it->pred == ans; ++it) ts.insert(it->args);
            if (first) out.answers.tuples = ts;
            else {
                std::set<Tuple> keep;
                std::set_intersection(out.answers.tuples.begin(), out.answers.tuples.end(), ts.begin(), ts.end(),
                                      std::inserter(keep, keep.end()));
                out.answers.tuples = keep;
            }
            first = false;
        }
        if (first) {
            out.inc = true;
            out.answers.tuples.clear();
        }
        if (out.answers.boolean) {
            out.answers.yes = !out.inc && !out.answers.tuples.empty();
            out.answers.tuples.clear();
        }
        return out;
    }

    Engine& engine() { return engine_; }

private:
    const System& s_;
    Engine engine_;
    AspOptions o_;
};

// ---------------------------------------------------------------- text form

namespace detail {

inline std::string lower(std::string s) {
    for (auto& c : s) c = (char)std::tolower((unsigned char)c);
    return s;
}

inline std::string asp_const(Value v) {
    const std::string& t = v.text();
    bool bare = v.is_null() || v.is_int() ||
                (!t.empty() && std::islower((unsigned char)t[0]) &&
                 std::all_of(t.begin(), t.end(), [](char c) { return std::isalnum((unsigned char)c) || c == '_'; }));
    if (bare) return t;
    std::string out = "\"";
    for (char c : t) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

inline std::string asp_term(const Term& t) {
    if (!t.is_var) return asp_const(t.val);
    std::string v = t.var;
    if (v.empty() || !std::isalpha((unsigned char)v[0])) return "V" + v;
    v[0] = (char)std::toupper((unsigned char)v[0]);
    return v;
}

inline std::string asp_atom(const std::string& pred, const std::vector<std::string>& args) {
    if (args.empty()) return lower(pred);
    return lower(pred) + "(" + join(args, ",") + ")";
}

inline std::string asp_lit(const Lit& l) {
    std::vector<std::string> a;
    for (auto& t : l.args) a.push_back(asp_term(t));
    if (l.ann != Ann::none) a.push_back(to_string(l.ann));
    return asp_atom(l.pred, a);
}

inline std::string asp_builtin(const Builtin& b) {
    switch (b.op) {
        case Op::f: return "1 = 0";
        case Op::is_null: return asp_term(b.a) + " = null";
        case Op::is_not_null: return asp_term(b.a) + " != null";
        default: break;
    }
    static const char* ops[] = {"=", "!=", "<", "<=", ">", ">="};
    return asp_term(b.a) + " " + ops[(int)b.op] + " " + asp_term(b.b);
}

}  // namespace detail

// Clingo/DLV-style text: lowercase predicates, capitalized variables, annotation as last argument
inline std::string emit_text(const LogicProgram& prog, const std::string& disj = "|") {
    std::string out;
    for (auto& n : prog.notes) out += "% " + n + "\n";
    for (auto& f : prog.facts) {
        std::vector<std::string> a;
        for (auto v : f.args) a.push_back(detail::asp_const(v));
        out += detail::asp_atom(f.pred, a) + ".\n";
    }
    for (auto& r : prog.rules) {
        std::vector<std::string> h, b;
        for (auto& l : r.head) h.push_back(detail::asp_lit(l));
        for (auto& l : r.pos) b.push_back(detail::asp_lit(l));
        for (auto& l : r.neg) b.push_back("not " + detail::asp_lit(l));
        for (auto& x : r.builtins) b.push_back(detail::asp_builtin(x));
        std::string line = join(h, (" " + disj + " ").c_str());
        if (!b.empty()) line += (h.empty() ? ":- " : " :- ") + join(b, ", ");
        out += line + ".\n";
    }
    return out;
}

// Reads the text form back. Annotations stay ordinary trailing arguments; comments become notes.
inline LogicProgram parse_program(std::string_view text) {
    LogicProgram prog;
    size_t i = 0;
    int line = 1, col = 1;
    struct Tok {
        enum K { ident, var, num, str, punct, end } k;
        std::string t;
        int line, col;
    };
    std::vector<Tok> toks;
    auto adv = [&](size_t n) {
        for (size_t j = 0; j < n && i < text.size(); ++j, ++i) {
            if (text[i] == '\n') ++line, col = 1;
            else ++col;
        }
    };
    while (i < text.size()) {
        char c = text[i];
        if (std::isspace((unsigned char)c)) {
            adv(1);
            continue;
        }
        if (c == '%') {
            size_t e = text.find('\n', i);
            if (e == std::string_view::npos) e = text.size();
            std::string n(text.substr(i + 1, e - i - 1));
            if (!n.empty() && n[0] == ' ') n.erase(0, 1);
            prog.notes.push_back(n);
            adv(e - i);
            continue;
        }
        Tok t{Tok::punct, "", line, col};
        if (std::isalpha((unsigned char)c) || c == '_') {
            size_t j = i;
            while (j < text.size() && (std::isalnum((unsigned char)text[j]) || text[j] == '_')) ++j;
            t.t = std::string(text.substr(i, j - i));
            t.k = std::isupper((unsigned char)c) || c == '_' ? Tok::var : Tok::ident;
            adv(j - i);
        } else if (std::isdigit((unsigned char)c) || (c == '-' && i + 1 < text.size() && std::isdigit((unsigned char)text[i + 1]))) {
            size_t j = i + 1;
            while (j < text.size() && std::isdigit((unsigned char)text[j])) ++j;
            t.t = std::string(text.substr(i, j - i));
            t.k = Tok::num;
            adv(j - i);
        } else if (c == '"') {
            size_t j = i + 1;
            while (j < text.size() && text[j] != '"') {
                if (text[j] == '\\' && j + 1 < text.size()) ++j;
                t.t += text[j++];
            }
            if (j >= text.size()) throw parse_error("unterminated string", line, col);
            t.k = Tok::str;
            adv(j + 1 - i);
        } else {
            static const char* multi[] = {":-", "!=", "<=", ">="};
            t.t = std::string(1, c);
            for (auto m : multi)
                if (text.substr(i, 2) == m) t.t = m;
            if (std::string("(),.|=<>").find(c) == std::string::npos && t.t.size() == 1)
                throw parse_error(std::string("unexpected character '") + c + "'", line, col);
            adv(t.t.size());
        }
        toks.push_back(t);
    }
    toks.push_back(Tok{Tok::end, "", line, col});

    size_t k = 0;
    auto peek = [&](size_t o = 0) -> const Tok& { return toks[std::min(k + o, toks.size() - 1)]; };
    auto fail = [&](const std::string& m) -> parse_error { return parse_error(m + " near '" + peek().t + "'", peek().line, peek().col); };
    auto is = [&](const char* p, size_t o = 0) { return peek(o).k == Tok::punct && peek(o).t == p; };
    auto term = [&]() -> Term {
        auto& t = peek();
        ++k;
        switch (t.k) {
            case Tok::var: return Term::variable(t.t);
            case Tok::ident:
            case Tok::num:
            case Tok::str: return Term::constant(Value::of(t.t));
            default: --k; throw fail("expected a term");
        }
    };
    auto lit = [&]() -> Lit {
        if (peek().k != Tok::ident) throw fail("expected a predicate");
        Lit l;
        l.pred = peek().t;
        ++k;
        if (is("(")) {
            ++k;
            for (;;) {
                l.args.push_back(term());
                if (is(",")) {
                    ++k;
                    continue;
                }
                if (!is(")")) throw fail("expected ')'");
                ++k;
                break;
            }
        }
        return l;
    };
    auto op_at = [&](size_t o) -> int {
        static const char* ops[] = {"=", "!=", "<", "<=", ">", ">="};
        if (peek(o).k != Tok::punct) return -1;
        for (int j = 0; j < 6; ++j)
            if (peek(o).t == ops[j]) return j;
        return -1;
    };
    while (peek().k != Tok::end) {
        Rule r;
        if (!is(":-")) {
            r.head.push_back(lit());
            while (is("|") || (peek().k == Tok::ident && peek().t == "v" && peek(1).k == Tok::ident)) {
                ++k;
                r.head.push_back(lit());
            }
        }
        if (is(":-")) {
            ++k;
            for (;;) {
                if (peek().k == Tok::ident && peek().t == "not" && peek(1).k == Tok::ident && op_at(1) < 0) {
                    ++k;
                    r.neg.push_back(lit());
                } else if (op_at(1) >= 0) {
                    Builtin b;
                    b.a = term();
                    b.op = (Op)op_at(0);
                    ++k;
                    b.b = term();
                    r.builtins.push_back(b);
                } else {
                    r.pos.push_back(lit());
                }
                if (is(",")) {
                    ++k;
                    continue;
                }
                break;
            }
        }
        if (!is(".")) throw fail("expected '.'");
        ++k;
        bool ground_fact = r.head.size() == 1 && r.pos.empty() && r.neg.empty() && r.builtins.empty() && prog.rules.empty() &&
                           std::all_of(r.head[0].args.begin(), r.head[0].args.end(), [](const Term& t) { return !t.is_var; });
        if (ground_fact) {
            Atom a{r.head[0].pred, {}};
            for (auto& t : r.head[0].args) a.args.push_back(t.val);
            prog.facts.push_back(a);
        } else {
            prog.rules.push_back(std::move(r));
        }
    }
    return prog;
}

}  // namespace pdes
