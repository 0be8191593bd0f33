#pragma once

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dec.hpp"
#include "repair.hpp"
#include "value.hpp"

namespace pdes {

enum class TrustKind { less, same };

inline const char* to_string(TrustKind t) { return t == TrustKind::less ? "less" : "same"; }

using PeerPair = std::pair<std::string, std::string>;

struct QueryDecl {
    std::string peer;
    ConjunctiveQuery q;
};

// schema, constraints, trust and data of a whole system
struct System {
    std::vector<std::string> peers;
    Schema schema;
    std::map<std::string, std::vector<std::string>> peer_preds;
    std::map<PeerPair, std::vector<Constraint>> sigma;
    std::map<PeerPair, TrustKind> trust;
    std::map<std::string, Instance> data;
    std::vector<QueryDecl> queries;
    PreorderKind preorder = PreorderKind::null_based;

    bool has_peer(const std::string& p) const { return peer_preds.count(p) > 0; }
    void require_peer(const std::string& p) const {
        if (!has_peer(p)) throw schema_error("unknown peer " + p);
    }

    std::set<std::string> preds_of(const std::string& p) const {
        auto it = peer_preds.find(p);
        if (it == peer_preds.end()) return {};
        return std::set<std::string>(it->second.begin(), it->second.end());
    }

    std::set<std::string> preds_of(const std::set<std::string>& ps) const {
        std::set<std::string> out;
        for (auto& p : ps) {
            auto s = preds_of(p);
            out.insert(s.begin(), s.end());
        }
        return out;
    }

    const std::vector<Constraint>& sigma_of(const std::string& p, const std::string& q) const {
        static const std::vector<Constraint> none;
        auto it = sigma.find({p, q});
        return it == sigma.end() ? none : it->second;
    }

    TrustKind trust_of(const std::string& p, const std::string& q) const {
        auto it = trust.find({p, q});
        return it == trust.end() ? TrustKind::same : it->second;
    }

    const Instance& instance_of(const std::string& p) const {
        static const Instance none;
        auto it = data.find(p);
        return it == data.end() ? none : it->second;
    }

    // N(P) without P itself
    std::vector<std::string> proper_neighbors(const std::string& p) const {
        std::vector<std::string> out;
        for (auto& q : peers)
            if (q != p && !sigma_of(p, q).empty()) out.push_back(q);
        return out;
    }

    std::set<std::string> neighbors(const std::string& p) const {
        require_peer(p);
        auto n = proper_neighbors(p);
        std::set<std::string> out(n.begin(), n.end());
        out.insert(p);
        return out;
    }

    std::set<std::string> accessible(const std::string& p) const {
        require_peer(p);
        std::set<std::string> seen{p};
        std::vector<std::string> stack{p};
        while (!stack.empty()) {
            auto x = stack.back();
            stack.pop_back();
            for (auto& q : proper_neighbors(x))
                if (seen.insert(q).second) stack.push_back(q);
        }
        return seen;
    }

    // a directed cycle of the accessibility graph, empty when acyclic
    std::vector<std::string> find_cycle() const {
        std::map<std::string, int> color;
        std::vector<std::string> path, cyc;
        std::function<bool(const std::string&)> dfs = [&](const std::string& u) {
            color[u] = 1;
            path.push_back(u);
            for (auto& v : proper_neighbors(u)) {
                if (color[v] == 1) {
                    auto it = std::find(path.begin(), path.end(), v);
                    cyc.assign(it, path.end());
                    cyc.push_back(v);
                    return true;
                }
                if (color[v] == 0 && dfs(v)) return true;
            }
            color[u] = 2;
            path.pop_back();
            return false;
        };
        for (auto& p : peers)
            if (color[p] == 0 && dfs(p)) return cyc;
        return {};
    }

    void require_acyclic() const {
        auto c = find_cycle();
        if (!c.empty()) throw refusal("accessibility graph has a cycle: " + join(c, " -> "));
    }

    // all constraints owned by P, in peer declaration order
    std::vector<Constraint> sigma_of(const std::string& p) const {
        std::vector<Constraint> out;
        for (auto& q : peers) {
            auto& s = sigma_of(p, q);
            out.insert(out.end(), s.begin(), s.end());
        }
        return out;
    }

    std::set<Value> constants() const {
        std::set<Value> out;
        for (auto& [k, v] : sigma)
            for (auto& c : v) {
                auto s = constants_of(c);
                out.insert(s.begin(), s.end());
            }
        return out;
    }
};

// ---------------------------------------------------------------- definition files

namespace detail {

inline bool statement_kw(const Token& t) {
    static const std::set<std::string> kws{"peer", "trust", "dec", "instance", "query", "preorder"};
    return t.kind == Token::ident && kws.count(t.text);
}

inline void check_dec_atoms(const System& s, const Constraint& c, const std::string& p, const std::string& q) {
    auto allowed = s.preds_of(p);
    auto qs = s.preds_of(q);
    allowed.insert(qs.begin(), qs.end());
    auto chk = [&](const DbAtom& a) {
        if (!allowed.count(a.pred)) throw schema_error("constraint of " + p + "," + q + " mentions foreign predicate " + a.pred);
        if ((int)a.args.size() != s.schema.at(a.pred).arity) throw schema_error("arity mismatch for " + a.pred);
    };
    for (auto& a : c.body) chk(a);
    for (auto& cj : c.head)
        for (auto& a : cj.atoms) chk(a);
}

}  // namespace detail

inline System parse_system(std::string_view text) {
    auto toks = Lexer(text).run();
    // split into statements: a statement keyword that starts a line opens a new statement
    std::vector<std::vector<Token>> stmts;
    int last_line = 0;
    for (auto& t : toks) {
        if (t.kind == Token::end) break;
        bool first_on_line = t.line != last_line;
        last_line = t.line;
        if (first_on_line && detail::statement_kw(t)) stmts.emplace_back();
        if (stmts.empty()) throw parse_error("expected a statement keyword", t.line, t.col);
        stmts.back().push_back(t);
    }
    System s;
    std::vector<std::pair<PeerPair, std::vector<Token>>> decs;
    for (auto& st : stmts) {
        Token end;
        end.line = st.back().line;
        end.col = st.back().col + (int)st.back().text.size();
        st.push_back(end);
        Parser p(st);
        std::string kw = p.ident();
        if (kw == "peer") {
            std::string name = p.ident();
            if (name == "null") p.fail("peer may not be named null");
            if (s.has_peer(name)) p.fail("peer " + name + " declared twice");
            s.peers.push_back(name);
            auto& preds = s.peer_preds[name];
            s.data[name];
            if (p.is(":")) {
                p.next();
                while (!p.at_end()) {
                    std::string r = p.ident();
                    if (r == "null") p.fail("predicate may not be named null");
                    p.expect("/");
                    if (p.peek().kind != Token::number) p.fail("expected arity");
                    int ar = std::stoi(p.next().text);
                    if (ar < 0) p.fail("negative arity");
                    if (s.schema.count(r)) p.fail("predicate " + r + " declared twice");
                    s.schema[r] = PredInfo{ar, name};
                    preds.push_back(r);
                    if (!p.at_end()) p.expect(",");
                }
            }
        } else if (kw == "trust") {
            std::string a = p.ident();
            std::string k = p.ident();
            std::string b = p.ident();
            if (k != "less" && k != "same") p.fail("trust must be less or same");
            if (!s.has_peer(a) || !s.has_peer(b)) p.fail("unknown peer in trust");
            if (s.trust.count({a, b})) p.fail("duplicate trust triple");
            if (a == b && k == "less") p.fail("a peer cannot trust itself less");
            s.trust[{a, b}] = k == "less" ? TrustKind::less : TrustKind::same;
            p.expect_end();
        } else if (kw == "dec") {
            std::string a = p.ident();
            std::string b = p.ident();
            if (!s.has_peer(a) || !s.has_peer(b)) p.fail("unknown peer in dec");
            p.expect(":");
            Constraint c = p.constraint();
            p.expect_end();
            c.from = a;
            c.to = b;
            if (a == b) c.kind = Kind::local_ic;
            detail::check_dec_atoms(s, c, a, b);
            s.sigma[{a, b}].push_back(c);
        } else if (kw == "instance") {
            std::string a = p.ident();
            if (!s.has_peer(a)) p.fail("unknown peer in instance");
            p.expect(":");
            auto own = s.preds_of(a);
            while (!p.at_end()) {
                Atom g = p.ground_atom();
                if (!own.count(g.pred)) throw schema_error("predicate " + g.pred + " does not belong to peer " + a);
                check_atom(g, s.schema);
                s.data[a].insert(g);
                if (!p.at_end()) p.expect(",");
            }
        } else if (kw == "query") {
            std::string a = p.ident();
            if (!s.has_peer(a)) p.fail("unknown peer in query");
            p.expect(":");
            auto q = p.query();
            p.expect_end();
            q.peer = a;
            s.queries.push_back({a, q});
        } else if (kw == "preorder") {
            std::string k = p.ident();
            if (k == "null") s.preorder = PreorderKind::null_based;
            else if (k == "delta") s.preorder = PreorderKind::delta;
            else p.fail("preorder must be null or delta");
            p.expect_end();
        }
    }
    for (auto& [pq, cs] : s.sigma) {
        if (cs.empty()) continue;
        if (pq.first == pq.second) {
            s.trust.emplace(pq, TrustKind::same);
        } else if (!s.trust.count(pq)) {
            throw schema_error("missing trust relationship for " + pq.first + " and " + pq.second);
        }
    }
    return s;
}

inline System load_system(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_system(ss.str());
}

inline std::string write_system(const System& s) {
    std::ostringstream o;
    for (auto& p : s.peers) {
        o << "peer " << p << " :";
        auto& ps = s.peer_preds.at(p);
        for (size_t i = 0; i < ps.size(); ++i) o << (i ? ", " : " ") << ps[i] << "/" << s.schema.at(ps[i]).arity;
        o << "\n";
    }
    for (auto& [pq, t] : s.trust)
        if (pq.first != pq.second || !s.sigma_of(pq.first, pq.second).empty())
            o << "trust " << pq.first << " " << to_string(t) << " " << pq.second << "\n";
    for (auto& [pq, cs] : s.sigma)
        for (auto& c : cs) o << "dec " << pq.first << " " << pq.second << " : " << show(c) << "\n";
    for (auto& p : s.peers) {
        o << "instance " << p << " :";
        bool first = true;
        for (auto& a : s.instance_of(p)) {
            o << (first ? " " : ", ") << show(a);
            first = false;
        }
        o << "\n";
    }
    for (auto& q : s.queries) o << "query " << q.peer << " : " << show(q.q) << "\n";
    if (s.preorder == PreorderKind::delta) o << "preorder delta\n";
    return o.str();
}

}  // namespace pdes
