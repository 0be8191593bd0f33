#pragma once

#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "null_query.hpp"
#include "repair.hpp"
#include "semantics.hpp"
#include "system.hpp"

namespace pdes {

enum class DecTag { iudec, irdec, local_ic, other };

inline const char* to_string(DecTag t) {
    switch (t) {
        case DecTag::iudec: return "IUDEC";
        case DecTag::irdec: return "IRDEC";
        case DecTag::local_ic: return "local";
        default: return "non-import";
    }
}

enum class PeerClass { unrestricted_import, restricted_import, general };

inline const char* to_string(PeerClass c) {
    switch (c) {
        case PeerClass::unrestricted_import: return "unrestricted_import";
        case PeerClass::restricted_import: return "restricted_import";
        default: return "general";
    }
}

struct ImportClassification {
    std::map<std::string, PeerClass> peers;
    std::map<PeerPair, std::vector<DecTag>> tags;
    std::vector<std::string> notes;   // folds and reasons for rejection
    bool import_kind = true;
    bool unrestricted = true;
};

// Shape check of a single inter-peer constraint: body over the neighbor, one consequent atom
// over the owner, builtin disjuncts; existential positions filled with fresh variables only.
inline DecTag dec_tag(const System& s, const Constraint& c, std::string* note = nullptr) {
    if (c.from == c.to) return DecTag::local_ic;
    auto mine = s.preds_of(c.from), theirs = s.preds_of(c.to);
    for (auto& a : c.body)
        if (!theirs.count(a.pred)) {
            if (note) *note = "antecedent atom " + a.pred + " is not a predicate of " + c.to;
            return DecTag::other;
        }
    const Conjunct* main = nullptr;
    for (auto& cj : c.head) {
        if (cj.builtin_only()) continue;
        if (main) {
            if (note) *note = "more than one consequent atom";
            return DecTag::other;
        }
        main = &cj;
    }
    if (!main || main->atoms.size() != 1) {
        if (note) *note = "consequent is not a single database atom";
        return DecTag::other;
    }
    if (!mine.count(main->atoms[0].pred)) {
        if (note) *note = "consequent atom " + main->atoms[0].pred + " is not a predicate of " + c.from;
        return DecTag::other;
    }
    if (main->exist.empty()) {
        if (!main->builtins.empty()) {
            if (note) *note = "builtins conjoined with the consequent atom";
            return DecTag::other;
        }
        return DecTag::iudec;
    }
    std::map<std::string, int> n;
    count_occ(main->atoms[0], n);
    for (auto& y : main->exist)
        if (n[y] != 1) {
            if (note) *note = "existential variable " + y + " repeated";
            return DecTag::other;
        }
    for (auto& b : main->builtins) {
        std::vector<std::string> vs;
        vars_of(b, vs);
        for (auto& v : vs)
            if (contains(main->exist, v)) {
                if (note) *note = "builtin over existential variable " + v + " cannot hold for a null witness";
                return DecTag::other;
            }
    }
    if (note && !main->builtins.empty()) *note = "conditions conjoined with the consequent folded into the rule guard";
    return DecTag::irdec;
}

inline ImportClassification classify(const System& s) {
    ImportClassification r;
    for (auto& p : s.peers) {
        bool import = true, local = !s.sigma_of(p, p).empty();
        for (auto& q : s.peers) {
            auto& cs = s.sigma_of(p, q);
            if (cs.empty()) continue;
            auto& tags = r.tags[{p, q}];
            for (auto& c : cs) {
                std::string why;
                DecTag t = dec_tag(s, c, &why);
                tags.push_back(t);
                if (t == DecTag::other) import = false;
                if (!why.empty()) r.notes.push_back(p + " <- " + q + ": " + show(c) + ": " + why);
            }
            if (q != p && s.trust_of(p, q) != TrustKind::less) {
                import = false;
                r.notes.push_back(p + " does not trust " + q + " more than itself");
            }
        }
        PeerClass k = !import ? PeerClass::general : local ? PeerClass::restricted_import : PeerClass::unrestricted_import;
        r.peers[p] = k;
        if (k == PeerClass::general) r.import_kind = false;
        if (k != PeerClass::unrestricted_import) r.unrestricted = false;
    }
    return r;
}

// ---------------------------------------------------------------- datalog

struct DatalogRule {
    DbAtom head;
    std::vector<DbAtom> body;
    std::vector<Builtin> guards;   // builtin literals, evaluated with null as an ordinary constant
    std::vector<std::string> exist;   // variables replaced by null in the head
};

struct DatalogProgram {
    Instance facts;
    std::vector<DatalogRule> rules;
};

inline std::string show(const DatalogRule& r) {
    std::vector<std::string> parts;
    for (auto& a : r.body) parts.push_back(show(a));
    for (auto& b : r.guards) parts.push_back(show(b));
    DbAtom h = r.head;
    for (auto& t : h.args)
        if (t.is_var && contains(r.exist, t.var)) t = Term::constant(Value::null());
    return show(h) + " <- " + join(parts, ", ");
}

inline DatalogProgram import_program(const System& s, const std::string& p, const Instance& dbar) {
    DatalogProgram prog;
    prog.facts = dbar;
    for (auto& q : s.peers) {
        if (q == p) continue;
        for (auto& c : s.sigma_of(p, q)) {
            std::string why;
            DecTag t = dec_tag(s, c, &why);
            if (t == DecTag::other) throw refusal("not an import constraint: " + show(c) + " (" + why + ")");
            DatalogRule r;
            r.body = c.body;
            auto rel = relevant_vars(c);
            for (auto& cj : c.head) {
                if (cj.builtin_only()) {
                    for (auto& b : cj.builtins)
                        if (b.op != Op::f) r.guards.push_back(negate(b));
                } else {
                    r.head = cj.atoms[0];
                    r.exist = cj.exist;
                    r.guards.insert(r.guards.end(), cj.builtins.begin(), cj.builtins.end());
                }
            }
            // relevant variables must be non-null for the constraint to be violated
            for (auto& x : c.univ)
                if (rel.count(x)) r.guards.push_back(Builtin{Op::neq, Term::variable(x), Term::constant(Value::null())});
            prog.rules.push_back(std::move(r));
        }
    }
    return prog;
}

namespace detail {

// atoms with per-(predicate, position, value) lookup
class AtomStore {
public:
    bool insert(const Atom& a) {
        if (!set_.insert(a).second) return false;
        atoms_.push_back(a);
        size_t id = atoms_.size() - 1;
        by_pred_[a.pred].push_back(id);
        for (size_t i = 0; i < a.args.size(); ++i) by_pos_[key(a.pred, i, a.args[i])].push_back(id);
        return true;
    }
    bool has(const Atom& a) const { return set_.count(a) > 0; }
    const std::vector<size_t>& candidates(const std::string& pred, int pos, Value v) const {
        static const std::vector<size_t> none;
        if (pos < 0) {
            auto it = by_pred_.find(pred);
            return it == by_pred_.end() ? none : it->second;
        }
        auto it = by_pos_.find(key(pred, pos, v));
        return it == by_pos_.end() ? none : it->second;
    }
    const Atom& at(size_t i) const { return atoms_[i]; }
    size_t size() const { return atoms_.size(); }
    const Instance& all() const { return set_; }

private:
    static std::string key(const std::string& p, size_t i, Value v) {
        return p + '\x1f' + std::to_string(i) + '\x1f' + std::to_string(reinterpret_cast<uintptr_t>(v.raw()));
    }
    Instance set_;
    std::vector<Atom> atoms_;
    std::unordered_map<std::string, std::vector<size_t>> by_pred_;
    std::unordered_map<std::string, std::vector<size_t>> by_pos_;
};

using VarMap = std::map<std::string, Value>;

inline Value term_val(const Term& t, const VarMap& b) {
    if (!t.is_var) return t.val;
    auto it = b.find(t.var);
    return it == b.end() ? Value() : it->second;
}

// atom i ranges over ids in [lo_i, hi_i) of the store; semi-naive restricts one atom to the delta
template <class F>
void join_store(const std::vector<DbAtom>& body, size_t i, const AtomStore& st, const std::vector<std::pair<size_t, size_t>>& win,
                VarMap& b, F&& cb) {
    if (i == body.size()) {
        cb();
        return;
    }
    const DbAtom& a = body[i];
    int pos = -1;
    Value key;
    for (size_t k = 0; k < a.args.size() && pos < 0; ++k) {
        Value v = term_val(a.args[k], b);
        if (v.set()) {
            pos = (int)k;
            key = v;
        }
    }
    for (size_t id : st.candidates(a.pred, pos, key)) {
        if (id < win[i].first || id >= win[i].second) continue;
        const Atom& g = st.at(id);
        if (g.args.size() != a.args.size()) continue;
        std::vector<std::string> bound;
        bool ok = true;
        for (size_t k = 0; k < a.args.size() && ok; ++k) {
            const Term& t = a.args[k];
            Value v = term_val(t, b);
            if (v.set()) {
                ok = v == g.args[k];
            } else {
                b[t.var] = g.args[k];
                bound.push_back(t.var);
            }
        }
        if (ok) join_store(body, i + 1, st, win, b, cb);
        for (auto& v : bound) b.erase(v);
    }
}

inline bool guards_hold(const std::vector<Builtin>& gs, const VarMap& b) {
    for (auto& g : gs) {
        if (g.op == Op::f) return false;
        Value x = term_val(g.a, b);
        Value y = (g.op == Op::is_null || g.op == Op::is_not_null) ? x : term_val(g.b, b);
        if (!eval_builtin(g.op, x, y, Sem::classical)) return false;
    }
    return true;
}

inline Atom ground_head(const DatalogRule& r, const VarMap& b) {
    Atom h{r.head.pred, {}};
    for (auto& t : r.head.args)
        h.args.push_back(t.is_var && contains(r.exist, t.var) ? Value::null() : term_val(t, b));
    return h;
}

}  // namespace detail

struct FixpointStats {
    int rounds = 0;
    size_t derived = 0;
};

// Least model. Universal rules run semi-naively to a fixpoint; rules with existential heads then
// add a null-padded atom only for instantiations without a witness, keeping the most informative
// of the candidates (a candidate below another one is witnessed by it).
inline Instance least_model(const DatalogProgram& prog, FixpointStats* stats = nullptr, Instance* derived = nullptr) {
    detail::AtomStore st;
    for (auto& f : prog.facts) st.insert(f);
    std::vector<const DatalogRule*> uni, ex;
    for (auto& r : prog.rules) (r.exist.empty() ? uni : ex).push_back(&r);
    size_t lo = 0, hi = st.size();
    int rounds = 0;
    Instance heads;
    while (lo < hi) {
        ++rounds;
        std::vector<Atom> fresh;
        for (auto* r : uni) {
            for (size_t d = 0; d < r->body.size(); ++d) {
                // atoms before d see the old part, atom d the delta, atoms after d everything
                std::vector<std::pair<size_t, size_t>> win(r->body.size());
                for (size_t k = 0; k < r->body.size(); ++k)
                    win[k] = k < d ? std::make_pair(size_t(0), lo) : k == d ? std::make_pair(lo, hi) : std::make_pair(size_t(0), hi);
                detail::VarMap b;
                detail::join_store(r->body, 0, st, win, b, [&] {
                    if (!detail::guards_hold(r->guards, b)) return;
                    Atom h = detail::ground_head(*r, b);
                    heads.insert(h);
                    if (!st.has(h)) fresh.push_back(h);
                });
            }
        }
        lo = hi;
        for (auto& h : fresh) st.insert(h);
        hi = st.size();
    }
    Instance cands;
    std::vector<std::pair<Atom, std::vector<char>>> pending;
    for (auto* r : ex) {
        std::vector<std::pair<size_t, size_t>> win(r->body.size(), {0, st.size()});
        detail::VarMap b;
        detail::join_store(r->body, 0, st, win, b, [&] {
            if (!detail::guards_hold(r->guards, b)) return;
            Atom h = detail::ground_head(*r, b);
            std::vector<char> free(h.args.size(), 0);
            for (size_t k = 0; k < r->head.args.size(); ++k)
                free[k] = r->head.args[k].is_var && contains(r->exist, r->head.args[k].var);
            bool witnessed = false;
            for (size_t id : st.candidates(h.pred, -1, Value())) {
                const Atom& g = st.at(id);
                bool m = g.args.size() == h.args.size();
                for (size_t k = 0; k < h.args.size() && m; ++k) m = free[k] || g.args[k] == h.args[k];
                if (m) witnessed = true;
            }
            if (!witnessed) cands.insert(h);
        });
    }
    for (auto& c : cands) {
        bool below = false;
        for (auto& o : cands)
            if (!(o == c) && o.pred == c.pred && info_leq(c.args, o.args)) below = true;
        if (!below) {
            heads.insert(c);
            st.insert(c);
        }
    }
    if (stats) {
        stats->rounds = rounds;
        stats->derived = st.size() - prog.facts.size();
    }
    if (derived) *derived = heads;
    return st.all();
}

// ---------------------------------------------------------------- solvers

class ImportSolver {
public:
    explicit ImportSolver(const System& s, RepairOptions o = {}) : s_(s), o_(std::move(o)), cls_(classify(s)) {}

    const ImportClassification& classification() const { return cls_; }

    // unique solution in the unrestricted case, following the accessibility graph bottom-up
    Instance solve(const std::string& p) {
        s_.require_peer(p);
        s_.require_acyclic();
        for (auto& q : s_.accessible(p))
            if (cls_.peers.at(q) != PeerClass::unrestricted_import)
                throw refusal("peer " + q + " is " + to_string(cls_.peers.at(q)) + "; the unrestricted import solver does not apply");
        return solve_rec(p);
    }

    // import fixpoint, then repair wrt the local constraints with imported atoms kept
    SolutionResult solve_restricted(const std::string& p) {
        s_.require_peer(p);
        s_.require_acyclic();
        for (auto& q : s_.accessible(p))
            if (cls_.peers.at(q) == PeerClass::general)
                throw refusal("peer " + q + " is not of the import kind");
        return restricted_rec(p);
    }

    // P itself must be of the unrestricted import kind; a neighbor whose accessible part is not
    // contributes the core computed by the general engine
    SolutionResult solve_mixed(const std::string& p, Engine& e) {
        s_.require_peer(p);
        s_.require_acyclic();
        if (cls_.peers.at(p) != PeerClass::unrestricted_import)
            throw refusal("peer " + p + " is " + to_string(cls_.peers.at(p)) + "; the import solver does not apply");
        Instance dbar = s_.instance_of(p);
        System active = s_;
        for (auto& q : s_.proper_neighbors(p)) {
            bool pure = true;
            for (auto& x : s_.accessible(q)) pure = pure && cls_.peers.at(x) == PeerClass::unrestricted_import;
            if (pure) {
                auto sol = solve_rec(q);
                dbar.insert(sol.begin(), sol.end());
                continue;
            }
            auto& r = e.solutions(q);
            if (r.inconsistent) active.sigma.erase({p, q});
            else dbar.insert(r.core.begin(), r.core.end());
        }
        SolutionResult r;
        Instance out = s_.proper_neighbors(p).empty() ? dbar : least_model(import_program(active, p, dbar), &last_stats);
        r.solutions = {restrict(out, s_.preds_of(p))};
        r.core = r.solutions[0];
        return r;
    }

    FixpointStats last_stats;

private:
    Instance solve_rec(const std::string& p) {
        if (auto it = memo_.find(p); it != memo_.end()) return it->second;
        Instance dbar = s_.instance_of(p);
        auto nb = s_.proper_neighbors(p);
        Instance out;
        if (nb.empty()) {
            out = dbar;
        } else {
            for (auto& q : nb) {
                auto sol = solve_rec(q);
                dbar.insert(sol.begin(), sol.end());
            }
            out = restrict(least_model(import_program(s_, p, dbar), &last_stats), s_.preds_of(p));
        }
        memo_[p] = out;
        return out;
    }

    SolutionResult restricted_rec(const std::string& p) {
        if (auto it = rmemo_.find(p); it != rmemo_.end()) return it->second;
        SolutionResult r;
        Instance dbar = s_.instance_of(p);
        std::set<std::string> inc;
        for (auto& q : s_.proper_neighbors(p)) {
            auto sub = restricted_rec(q);
            if (sub.inconsistent) {
                inc.insert(q);
                continue;
            }
            dbar.insert(sub.core.begin(), sub.core.end());
        }
        System active = s_;
        for (auto& q : inc) active.sigma.erase({p, q});
        Instance derived;
        Instance model = least_model(import_program(active, p, dbar), &last_stats, &derived);
        auto local = s_.sigma_of(p, p);
        auto mine = s_.preds_of(p);
        if (local.empty()) {
            r.solutions = {restrict(model, mine)};
        } else {
            std::vector<Constraint> sigma;
            for (auto& q : s_.peers)
                if (!inc.count(q)) {
                    auto& cs = s_.sigma_of(p, q);
                    sigma.insert(sigma.end(), cs.begin(), cs.end());
                }
            RepairOptions ro = o_;
            for (auto& q : s_.proper_neighbors(p)) {
                auto ps = s_.preds_of(q);
                ro.frozen.insert(ps.begin(), ps.end());
            }
            ro.keep = restrict(derived, mine);
            std::vector<Instance> sols;
            for (auto& d : null_repairs(model, sigma, ro)) sols.push_back(restrict(d, mine));
            r.solutions = dedupe_sorted(sols, s_.instance_of(p));
        }
        r.inconsistent = r.solutions.empty();
        r.core = r.inconsistent ? Instance{inc_atom(p)} : intersect_all(r.solutions);
        rmemo_[p] = r;
        return r;
    }

    const System& s_;
    RepairOptions o_;
    ImportClassification cls_;
    std::map<std::string, Instance> memo_;
    std::map<std::string, SolutionResult> rmemo_;
};

}  // namespace pdes
