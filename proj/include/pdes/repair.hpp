#pragma once

#include <cstdlib>
#include <thread>
#include <vector>

#include "chase.hpp"
#include "null_query.hpp"

namespace pdes {

enum class PreorderKind { null_based, delta };

inline const char* to_string(PreorderKind k) { return k == PreorderKind::null_based ? "null" : "delta"; }

constexpr unsigned long long default_cap_value = 1ull << 22;

inline unsigned long long default_cap() {
    if (const char* e = std::getenv("PDES_CAP")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(e, &end, 10);
        if (end && *end == 0 && v >= 1) return v;
    }
    return default_cap_value;
}

struct RepairOptions {
    unsigned long long cap = default_cap();
    int threads = 1;
    std::set<std::string> frozen;   // predicates whose extension may not change
    Instance keep;                  // individual atoms that may not be deleted
};

// ---------------------------------------------------------------- information order

inline bool info_leq(Value c, Value d) { return c.is_null() || c == d; }

inline bool info_leq(const Tuple& a, const Tuple& b) {
    if (a.size() != b.size()) throw error("info_leq: tuple length mismatch");
    for (size_t i = 0; i < a.size(); ++i)
        if (!info_leq(a[i], b[i])) return false;
    return true;
}

// condition 2 of the closeness order, stated over the two difference sets
inline bool delta_dominated(const Instance& d1, const Instance& d2) {
    for (auto& a : d1) {
        bool found = false;
        for (auto it = d2.lower_bound(Atom{a.pred, {}}); it != d2.end() && it->pred == a.pred && !found; ++it) {
            if (it->args.size() != a.args.size() || !info_leq(a.args, it->args)) continue;
            if (it->args == a.args || !d1.count(*it)) found = true;
        }
        if (!found) return false;
    }
    return true;
}

// d1 is at least as close to base as d2; bound = r-chase of base
inline bool closer_leq(const Instance& d1, const Instance& d2, const Instance& base, const Instance& bound) {
    if (!subset_of(d2, bound)) return true;
    return delta_dominated(symmetric_difference(base, d1), symmetric_difference(base, d2));
}

inline bool closer_lt(const Instance& d1, const Instance& d2, const Instance& base, const Instance& bound) {
    return closer_leq(d1, d2, base, bound) && !closer_leq(d2, d1, base, bound);
}

// ---------------------------------------------------------------- candidate search

namespace detail {

inline std::set<std::string> mentioned(const std::vector<Constraint>& sigma) {
    std::set<std::string> out;
    for (auto& c : sigma) {
        auto p = predicates_of(c);
        out.insert(p.begin(), p.end());
    }
    return out;
}

struct Candidates {
    Instance fixed;
    std::vector<Atom> del, ins;   // toggles: del[i] removed when bit set, ins[j] added when bit set
    unsigned long long count() const { return 1ull << (del.size() + ins.size()); }
    Instance build(unsigned long long m) const {
        Instance out = fixed;
        for (size_t i = 0; i < del.size(); ++i)
            if (!(m >> i & 1)) out.insert(del[i]);
        for (size_t j = 0; j < ins.size(); ++j)
            if (m >> (del.size() + j) & 1) out.insert(ins[j]);
        return out;
    }
};

inline Candidates make_candidates(const Instance& base, const Instance& insertable, const std::vector<Constraint>& sigma,
                                  const RepairOptions& o) {
    Candidates c;
    auto m = mentioned(sigma);
    for (auto& a : base) {
        if (!m.count(a.pred) || o.frozen.count(a.pred) || o.keep.count(a)) c.fixed.insert(a);
        else c.del.push_back(a);
    }
    for (auto& a : insertable)
        if (!base.count(a) && !o.frozen.count(a.pred) && m.count(a.pred)) c.ins.push_back(a);
    size_t bits = c.del.size() + c.ins.size();
    if (bits >= 63 || (1ull << bits) > o.cap)
        throw resource_error("repair search space too large", o.cap, bits >= 63 ? ~0ull : (1ull << bits));
    return c;
}

// satisfaction check of every candidate, optionally on several threads; results in mask order
template <class Check>
std::vector<unsigned long long> satisfying(const Candidates& c, int threads, Check check) {
    unsigned long long n = c.count();
    std::vector<char> ok(n, 0);
    auto work = [&](unsigned long long lo, unsigned long long hi) {
        for (unsigned long long m = lo; m < hi; ++m) ok[m] = check(c.build(m)) ? 1 : 0;
    };
    int t = std::max(1, threads);
    if (t == 1 || n < 64) {
        work(0, n);
    } else {
        std::vector<std::thread> pool;
        unsigned long long step = (n + t - 1) / t;
        for (int k = 0; k < t; ++k) {
            unsigned long long lo = k * step, hi = std::min(n, lo + step);
            if (lo < hi) pool.emplace_back(work, lo, hi);
        }
        for (auto& th : pool) th.join();
    }
    std::vector<unsigned long long> out;
    for (unsigned long long m = 0; m < n; ++m)
        if (ok[m]) out.push_back(m);
    return out;
}

inline void sort_repairs(std::vector<Instance>& rs, const Instance& base) {
    std::vector<std::pair<size_t, Instance>> k;
    for (auto& r : rs) k.emplace_back(symmetric_difference(base, r).size(), r);
    std::sort(k.begin(), k.end());
    rs.clear();
    for (auto& [_, r] : k) rs.push_back(r);
}

}  // namespace detail

// Null-based repairs. Candidates stay inside the chase bound: deletions from base, insertions
// from chase atoms. Predicates the constraints never mention, and frozen ones, are kept as they are.
inline std::vector<Instance> null_repairs(const Instance& base, const std::vector<Constraint>& sigma, const RepairOptions& o = {}) {
    Instance bound = r_chase(base, split_sigma(sigma));
    auto cand = detail::make_candidates(base, bound, sigma, o);
    auto good = detail::satisfying(cand, o.threads, [&](const Instance& d) { return n_holds_all(d, sigma); });
    std::vector<Instance> ds, deltas;
    for (auto m : good) {
        ds.push_back(cand.build(m));
        deltas.push_back(symmetric_difference(base, ds.back()));
    }
    std::vector<Instance> out;
    for (size_t i = 0; i < ds.size(); ++i) {
        bool dominated = false;
        for (size_t j = 0; j < ds.size() && !dominated; ++j) {
            if (i == j) continue;
            // every candidate is inside the bound, so only condition 2 can decide
            dominated = delta_dominated(deltas[j], deltas[i]) && !delta_dominated(deltas[i], deltas[j]);
        }
        if (!dominated) out.push_back(ds[i]);
    }
    detail::sort_repairs(out, base);
    return out;
}

// atoms a Delta-minimal repair may insert: heads of instantiations whose body is reachable,
// existential witnesses drawn from the universe (null only when the data already has it)
inline Instance insertion_closure(const Instance& base, const std::vector<Constraint>& sigma, const std::set<std::string>& frozen = {}) {
    std::set<Value> w = active_domain(base);
    bool null_in_data = w.count(Value::null()) > 0;
    for (auto& c : sigma) {
        auto k = constants_of(c);
        w.insert(k.begin(), k.end());
    }
    if (!null_in_data) w.erase(Value::null());
    std::vector<Value> u(w.begin(), w.end());
    std::vector<detail::CConstraint> cs;
    for (auto& c : sigma) cs.emplace_back(c);
    Instance closure;
    for (;;) {
        Instance cur = set_union(base, closure);
        Index idx(cur);
        Instance add;
        for (auto& cc : cs) {
            detail::Binding b(cc.vt.names.size());
            detail::match(cc.body, 0, idx, b, [&] {
                for (auto& cj : cc.head) {
                    std::vector<const std::vector<Value>*> ranges(cj.exist.size(), &u);
                    detail::enumerate(cj.exist, 0, ranges, b, [&] {
                        for (auto& a : cj.atoms) {
                            if (frozen.count(a.pred)) continue;
                            Atom g{a.pred, {}};
                            for (auto& t : a.args) g.args.push_back(detail::val(t, b));
                            if (!cur.count(g)) add.insert(g);
                        }
                        return false;
                    });
                }
                return false;
            });
        }
        if (add.empty()) break;
        closure.insert(add.begin(), add.end());
    }
    return closure;
}

inline std::vector<Instance> delta_repairs(const Instance& base, const std::vector<Constraint>& sigma, const RepairOptions& o = {},
                                           Sem sat = Sem::classical) {
    Instance ins = insertion_closure(base, sigma, o.frozen);
    auto cand = detail::make_candidates(base, ins, sigma, o);
    auto good = detail::satisfying(cand, o.threads, [&](const Instance& d) {
        return sat == Sem::classical ? classical_holds_all(d, sigma) : n_holds_all(d, sigma);
    });
    std::vector<Instance> ds, deltas;
    for (auto m : good) {
        ds.push_back(cand.build(m));
        deltas.push_back(symmetric_difference(base, ds.back()));
    }
    std::vector<Instance> out;
    for (size_t i = 0; i < ds.size(); ++i) {
        bool dominated = false;
        for (size_t j = 0; j < ds.size() && !dominated; ++j)
            dominated = i != j && deltas[j].size() < deltas[i].size() && subset_of(deltas[j], deltas[i]);
        if (!dominated) out.push_back(ds[i]);
    }
    detail::sort_repairs(out, base);
    return out;
}

inline std::vector<Instance> repairs(PreorderKind k, const Instance& base, const std::vector<Constraint>& sigma, const RepairOptions& o = {}) {
    return k == PreorderKind::null_based ? null_repairs(base, sigma, o) : delta_repairs(base, sigma, o);
}

}  // namespace pdes
