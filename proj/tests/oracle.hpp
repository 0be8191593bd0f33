#pragma once

// brute-force references for the repair module: every subset of a finite universe is tried,
// satisfaction goes through the direct evaluator and closeness is restated from scratch

#include <vector>

#include <pdes/pdes.hpp>

namespace oracle {

using namespace pdes;

inline bool less_info(const Tuple& a, const Tuple& b) {   // a strictly below b
    bool strict = false;
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i] == b[i]) continue;
        if (!a[i].is_null()) return false;
        strict = true;
    }
    return strict;
}

inline Instance delta(const Instance& a, const Instance& b) {
    Instance out;
    for (auto& x : a)
        if (!b.count(x)) out.insert(x);
    for (auto& x : b)
        if (!a.count(x)) out.insert(x);
    return out;
}

// d1 at least as close to base as d2
inline bool closer_leq(const Instance& d1, const Instance& d2, const Instance& base, const Instance& bound) {
    for (auto& a : d2)
        if (!bound.count(a)) return true;
    Instance x = oracle::delta(base, d1), y = oracle::delta(base, d2);
    for (auto& a : x) {
        bool ok = false;
        for (auto& b : y) {
            if (b.pred != a.pred || b.args.size() != a.args.size()) continue;
            if (b.args == a.args) ok = true;
            else if (less_info(a.args, b.args) && !x.count(b)) ok = true;
        }
        if (!ok) return false;
    }
    return true;
}

inline bool holds_all(const Instance& d, const std::vector<Constraint>& sigma) {
    for (auto& c : sigma)
        if (!n_holds_direct(d, c)) return false;
    return true;
}

inline std::vector<Instance> subsets(const Instance& u) {
    std::vector<Atom> v(u.begin(), u.end());
    std::vector<Instance> out;
    for (unsigned long long m = 0; m < (1ull << v.size()); ++m) {
        Instance d;
        for (size_t i = 0; i < v.size(); ++i)
            if (m >> i & 1) d.insert(v[i]);
        out.push_back(std::move(d));
    }
    return out;
}

// null-based repairs among the subsets of base plus its chase
inline std::vector<Instance> null_repairs(const Instance& base, const std::vector<Constraint>& sigma) {
    Instance bound = r_chase(base, sigma);
    std::vector<Instance> good;
    for (auto& d : oracle::subsets(set_union(base, bound)))
        if (holds_all(d, sigma)) good.push_back(d);
    std::vector<Instance> out;
    for (auto& d : good) {
        bool beaten = false;
        for (auto& e : good)
            if (oracle::closer_leq(e, d, base, bound) && !oracle::closer_leq(d, e, base, bound)) {
                beaten = true;
                break;
            }
        if (!beaten) out.push_back(d);
    }
    std::sort(out.begin(), out.end());
    return out;
}

// classical subset-minimal repairs over a given finite universe of atoms
inline std::vector<Instance> delta_repairs(const Instance& base, const Instance& universe, const std::vector<Constraint>& sigma) {
    std::vector<Instance> good;
    for (auto& d : oracle::subsets(set_union(base, universe)))
        if (classical_holds_all(d, sigma)) good.push_back(d);
    std::vector<Instance> out;
    for (auto& d : good) {
        Instance dd = oracle::delta(base, d);
        bool beaten = false;
        for (auto& e : good) {
            Instance de = oracle::delta(base, e);
            if (de.size() < dd.size() && std::includes(dd.begin(), dd.end(), de.begin(), de.end())) {
                beaten = true;
                break;
            }
        }
        if (!beaten) out.push_back(d);
    }
    std::sort(out.begin(), out.end());
    return out;
}

// all atoms of the given predicates over a value set
inline Instance all_atoms(const Schema& s, const std::vector<Value>& dom) {
    Instance out;
    for (auto& [p, info] : s) {
        Tuple t(info.arity);
        std::function<void(int)> rec = [&](int i) {
            if (i == info.arity) {
                out.insert(Atom{p, t});
                return;
            }
            for (Value v : dom) {
                t[i] = v;
                rec(i + 1);
            }
        };
        rec(0);
    }
    return out;
}

inline std::vector<Instance> sorted(std::vector<Instance> v) {
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace oracle
