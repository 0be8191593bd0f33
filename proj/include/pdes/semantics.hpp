#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "null_query.hpp"
#include "repair.hpp"
#include "system.hpp"

namespace pdes {

inline Atom inc_atom(const std::string& peer) { return Atom{"inc_" + peer, {}}; }

struct SolutionResult {
    std::vector<Instance> solutions;
    Instance core;
    bool inconsistent = false;
};

struct PcaResult {
    bool inc = false;
    std::string peer;
    AnswerSet answers;
};

struct EngineOptions {
    RepairOptions repair;
    // hand neighbors only the part of a core that the receiving peer's constraints mention
    bool restrict_cores = false;
};

inline std::vector<Instance> dedupe_sorted(std::vector<Instance> v, const Instance& ref) {
    std::set<Instance> s(v.begin(), v.end());
    std::vector<Instance> out(s.begin(), s.end());
    detail::sort_repairs(out, ref);
    return out;
}

inline Instance intersect_all(const std::vector<Instance>& v) {
    if (v.empty()) return {};
    Instance out = v[0];
    for (size_t i = 1; i < v.size(); ++i) out = set_intersection(out, v[i]);
    return out;
}

class Engine {
public:
    explicit Engine(const System& s, EngineOptions o = {}) : s_(s), o_(std::move(o)) {}

    const System& system() const { return s_; }

    // constraints of P that stay active given the neighbors known to be inconsistent
    std::vector<Constraint> effective_sigma(const std::string& p, const std::set<std::string>& inc) const {
        std::vector<Constraint> out;
        for (auto& q : s_.peers) {
            if (q != p && inc.count(q)) continue;
            auto& cs = s_.sigma_of(p, q);
            out.insert(out.end(), cs.begin(), cs.end());
        }
        return out;
    }

    std::set<std::string> frozen_preds(const std::string& p, const std::set<std::string>& inc = {}) const {
        std::set<std::string> out;
        for (auto& q : s_.proper_neighbors(p))
            if (!inc.count(q) && s_.trust_of(p, q) == TrustKind::less) {
                auto ps = s_.preds_of(q);
                out.insert(ps.begin(), ps.end());
            }
        return out;
    }

    std::vector<Instance> neighborhood_solutions(const std::string& p, const Instance& dbar, const std::set<std::string>& inc = {}) const {
        s_.require_peer(p);
        RepairOptions ro = o_.repair;
        ro.frozen = frozen_preds(p, inc);
        return repairs(s_.preorder, dbar, effective_sigma(p, inc), ro);
    }

    Instance local_core(const std::string& p, const Instance& dbar, const std::set<std::string>& inc = {}) const {
        auto ns = neighborhood_solutions(p, dbar, inc);
        if (ns.empty()) return Instance{inc_atom(p)};
        return restrict(intersect_all(ns), s_.preds_of(p));
    }

    // D(P) together with the cores of P's proper neighbors; inconsistent neighbors reported in inc
    Instance neighborhood_instance(const std::string& p, std::set<std::string>* inc_out = nullptr) {
        Instance dbar = s_.instance_of(p);
        std::set<std::string> inc;
        auto mentioned = detail::mentioned(s_.sigma_of(p));
        for (auto& q : s_.proper_neighbors(p)) {
            auto& r = solutions(q);
            if (r.inconsistent) {
                inc.insert(q);
                continue;
            }
            for (auto& a : r.core)
                if (!o_.restrict_cores || mentioned.count(a.pred)) dbar.insert(a);
        }
        if (inc_out) *inc_out = inc;
        return dbar;
    }

    const SolutionResult& solutions(const std::string& p) {
        s_.require_peer(p);
        {
            std::lock_guard<std::mutex> lk(mu_);
            auto it = memo_.find(p);
            if (it != memo_.end()) return it->second;
        }
        if (depth_ == 0) s_.require_acyclic();
        ++depth_;
        SolutionResult r = compute(p);
        --depth_;
        std::lock_guard<std::mutex> lk(mu_);
        return memo_.emplace(p, std::move(r)).first->second;
    }

    Instance core(const std::string& p) { return solutions(p).core; }

    PcaResult pca(const std::string& p, const ConjunctiveQuery& q) {
        auto& r = solutions(p);
        PcaResult out;
        out.peer = p;
        if (r.inconsistent) {
            out.inc = true;
            return out;
        }
        bool first = true;
        for (auto& sol : r.solutions) {
            AnswerSet a = s_.preorder == PreorderKind::null_based ? n_answers(sol, q) : classical_answers(sol, q);
            out.answers = first ? a : intersect(out.answers, a);
            first = false;
        }
        return out;
    }

private:
    SolutionResult compute(const std::string& p) {
        SolutionResult r;
        const Instance& own = s_.instance_of(p);
        bool any = false, foreign = false;
        for (auto& q : s_.peers)
            if (!s_.sigma_of(p, q).empty()) {
                any = true;
                foreign = foreign || q != p;
            }
        if (!any) {
            r.solutions = {own};
        } else if (!foreign) {
            r.solutions = dedupe_sorted(neighborhood_solutions(p, own), own);
        } else {
            std::set<std::string> inc;
            Instance dbar = neighborhood_instance(p, &inc);
            auto ns = neighborhood_solutions(p, dbar, inc);
            auto mine = s_.preds_of(p);
            std::vector<Instance> sols;
            for (auto& n : ns) sols.push_back(restrict(n, mine));
            r.solutions = dedupe_sorted(sols, own);
        }
        r.inconsistent = r.solutions.empty();
        r.core = r.inconsistent ? Instance{inc_atom(p)} : intersect_all(r.solutions);
        return r;
    }

    const System& s_;
    EngineOptions o_;
    std::map<std::string, SolutionResult> memo_;
    std::mutex mu_;
    int depth_ = 0;
};

}  // namespace pdes
