#pragma once

#include <vector>

#include "dec.hpp"
#include "null_query.hpp"

namespace pdes {

struct SigmaSplit {
    std::vector<Constraint> sigma1;         // universal constraints
    std::vector<Constraint> sigma2_minus;   // existentials usable with a null witness
    std::vector<Constraint> excluded;       // existentials in joins or builtins

    std::vector<Constraint> minus() const {
        auto out = sigma1;
        out.insert(out.end(), sigma2_minus.begin(), sigma2_minus.end());
        return out;
    }
};

inline bool problematic_existential(const Constraint& c) {
    for (auto& cj : c.head) {
        if (cj.exist.empty()) continue;
        std::map<std::string, int> n;
        for (auto& a : cj.atoms)
            for (auto& t : a.args)
                if (t.is_var) ++n[t.var];
        for (auto& b : cj.builtins) {
            std::vector<std::string> vs;
            vars_of(b, vs);
            for (auto& v : vs) n[v] += 2;   // any builtin use disqualifies
        }
        for (auto& y : cj.exist)
            if (n[y] >= 2) return true;
    }
    return false;
}

inline SigmaSplit split_sigma(const std::vector<Constraint>& sigma) {
    SigmaSplit s;
    for (auto& c : sigma) {
        if (!c.existential()) s.sigma1.push_back(c);
        else if (problematic_existential(c)) s.excluded.push_back(c);
        else s.sigma2_minus.push_back(c);
    }
    return s;
}

struct ChaseStats {
    int rounds = 0;
};

// Parallel rounds: every violated instantiation found against the instance of the previous
// round fires at once; the new atoms become visible in the next round.
inline Instance r_chase(const Instance& d, const SigmaSplit& split, ChaseStats* stats = nullptr) {
    Instance cur = d;
    std::vector<Constraint> rules;
    for (auto& c : split.minus()) rules.push_back(n_rewrite_constraint(c));
    std::set<Value> consts;
    for (auto& c : rules) {
        auto k = constants_of(c);
        consts.insert(k.begin(), k.end());
    }
    std::vector<detail::CConstraint> compiled;
    for (auto& c : rules) compiled.emplace_back(c);
    int rounds = 0;
    for (;;) {
        ++rounds;
        Index idx(cur);
        auto u = universe_of(cur, consts);
        Instance add;
        for (auto& cc : compiled) {
            detail::Binding b(cc.vt.names.size());
            detail::match(cc.body, 0, idx, b, [&] {
                for (auto& cj : cc.head)
                    if (conj_holds(cj, idx, b, u, Sem::classical)) return false;
                for (auto& cj : cc.head) {
                    if (cj.atoms.empty()) continue;
                    for (int y : cj.exist) b[y] = Value::null();
                    bool ok = true;
                    for (auto& x : cj.builtins)
                        if (!detail::builtin_holds(x, b, Sem::null_based)) ok = false;
                    if (ok)
                        for (auto& a : cj.atoms) {
                            Atom g{a.pred, {}};
                            for (auto& t : a.args) g.args.push_back(detail::val(t, b));
                            if (!cur.count(g)) add.insert(g);
                        }
                    for (int y : cj.exist) b[y] = Value();
                }
                return false;
            });
        }
        if (add.empty()) break;
        cur.insert(add.begin(), add.end());
    }
    if (stats) stats->rounds = rounds;
    return cur;
}

inline Instance r_chase(const Instance& d, const std::vector<Constraint>& sigma, ChaseStats* stats = nullptr) {
    return r_chase(d, split_sigma(sigma), stats);
}

}  // namespace pdes
