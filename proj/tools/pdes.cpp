// pdes: command line front end over a system definition file
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pdes/pdes.hpp"

using namespace pdes;
using nlohmann::ordered_json;

namespace {

struct Cfg {
    std::string file, peer, query, format = "text", preorder, out, disj = "|";
    unsigned long long cap = default_cap();
    int threads = 1;
    bool post_filter = false, mixed = false;
};

ordered_json atoms_json(const Instance& d) {
    ordered_json a = ordered_json::array();
    for (auto& x : d) a.push_back(show(x));
    return a;
}

ordered_json answers_json(const AnswerSet& a) {
    if (a.boolean) return a.yes;
    ordered_json out = ordered_json::array();
    for (auto& t : a.tuples) {
        ordered_json row = ordered_json::array();
        for (auto v : t) row.push_back(show(v));
        out.push_back(row);
    }
    return out;
}

std::string answers_text(const AnswerSet& a) {
    if (a.boolean) return a.yes ? "yes" : "no";
    std::string s = "{";
    bool first = true;
    for (auto& t : a.tuples) {
        s += (first ? "" : ", ") + show(t);
        first = false;
    }
    return s + "}";
}

System load(const Cfg& c) {
    System s = load_system(c.file);
    if (c.preorder == "null") s.preorder = PreorderKind::null_based;
    else if (c.preorder == "delta") s.preorder = PreorderKind::delta;
    else if (!c.preorder.empty()) throw parse_error("preorder must be null or delta");
    return s;
}

RepairOptions repair_opts(const Cfg& c) {
    RepairOptions o;
    o.cap = c.cap;
    o.threads = c.threads;
    return o;
}

std::string need_peer(const Cfg& c, const System& s) {
    if (c.peer.empty()) throw schema_error("--peer is required");
    s.require_peer(c.peer);
    return c.peer;
}

ConjunctiveQuery query_for(const Cfg& c, const System& s, const std::string& p) {
    if (!c.query.empty()) {
        auto q = parse_query(c.query);
        for (auto& a : q.atoms) check_atom(Atom{a.pred, Tuple(a.args.size())}, s.schema);
        return q;
    }
    for (auto& d : s.queries)
        if (d.peer == p) return d.q;
    throw schema_error("no query given and none declared for " + p);
}

void emit(const Cfg& c, const ordered_json& j, const std::string& text) {
    if (c.format == "json") std::cout << j.dump(2) << "\n";
    else std::cout << text;
}

void list_instances(std::string& t, const char* label, const std::vector<Instance>& v) {
    for (size_t i = 0; i < v.size(); ++i) t += std::string(label) + " " + std::to_string(i + 1) + ": " + show(v[i]) + "\n";
}

int cmd_check(const Cfg& c) {
    System s = load(c);
    ordered_json j;
    std::string t;
    j["peers"] = s.peers;
    t += "peers: " + join(s.peers, ", ") + "\n";
    auto cyc = s.find_cycle();
    j["acyclic"] = cyc.empty();
    if (!cyc.empty()) j["cycle"] = cyc;
    t += cyc.empty() ? "accessibility graph: acyclic\n" : "accessibility graph: cycle " + join(cyc, " -> ") + "\n";
    ordered_json ra = ordered_json::object();
    for (auto& p : s.peers) {
        auto r = ref_acyclic(s.sigma_of(p));
        ra[p] = r.ok;
        t += "ref-acyclic " + p + ": " + (r.ok ? std::string("yes") : "no (" + join(r.cycle, " -> ") + ")") + "\n";
    }
    j["ref_acyclic"] = ra;
    auto cls = classify(s);
    ordered_json cj = ordered_json::object();
    for (auto& p : s.peers) {
        cj[p] = to_string(cls.peers.at(p));
        t += "class " + p + ": " + to_string(cls.peers.at(p)) + "\n";
    }
    j["classification"] = cj;
    ordered_json tags = ordered_json::array();
    for (auto& [pq, cs] : s.sigma)
        for (size_t i = 0; i < cs.size(); ++i) {
            const char* tag = to_string(cls.tags.at(pq)[i]);
            tags.push_back({{"from", pq.first}, {"to", pq.second}, {"constraint", show(cs[i])}, {"tag", tag}});
            t += "  " + pq.first + "," + pq.second + ": " + show(cs[i]) + "  [" + tag + "]\n";
        }
    j["constraints"] = tags;
    j["notes"] = cls.notes;
    for (auto& n : cls.notes) t += "note: " + n + "\n";
    emit(c, j, t);
    if (!cyc.empty()) {
        std::cerr << "refused: accessibility graph has a cycle: " << join(cyc, " -> ") << "\n";
        return 1;
    }
    return 0;
}

// D(P) together with the raw instances of its neighbors
Instance raw_neighborhood(const System& s, const std::string& p) {
    Instance d;
    for (auto& q : s.neighbors(p)) {
        auto& x = s.instance_of(q);
        d.insert(x.begin(), x.end());
    }
    return d;
}

int cmd_chase(const Cfg& c) {
    System s = load(c);
    auto p = need_peer(c, s);
    Instance d = raw_neighborhood(s, p);
    ChaseStats st;
    Instance out = r_chase(d, s.sigma_of(p), &st);
    ordered_json j{{"peers", {p}}, {"chase", atoms_json(out)}, {"rounds", st.rounds}};
    emit(c, j, "chase " + p + ": " + show(out) + "\n");
    return 0;
}

int cmd_repairs(const Cfg& c) {
    System s = load(c);
    auto p = need_peer(c, s);
    Instance d = raw_neighborhood(s, p);
    auto rs = repairs(s.preorder, d, s.sigma_of(p), repair_opts(c));
    ordered_json j{{"peers", {p}}, {"preorder", to_string(s.preorder)}, {"solutions", ordered_json::array()}};
    for (auto& r : rs) j["solutions"].push_back(atoms_json(r));
    std::string t = "repairs of " + p + " (" + to_string(s.preorder) + "): " + std::to_string(rs.size()) + "\n";
    list_instances(t, "repair", rs);
    emit(c, j, t);
    return 0;
}

int cmd_ns(const Cfg& c) {
    System s = load(c);
    auto p = need_peer(c, s);
    s.require_acyclic();
    EngineOptions eo;
    eo.repair = repair_opts(c);
    Engine e(s, eo);
    std::set<std::string> inc;
    Instance dbar = e.neighborhood_instance(p, &inc);
    auto ns = e.neighborhood_solutions(p, dbar, inc);
    ordered_json j{{"peers", {p}}, {"neighborhood", atoms_json(dbar)}, {"solutions", ordered_json::array()}};
    for (auto& r : ns) j["solutions"].push_back(atoms_json(r));
    j["inconsistent_neighbors"] = inc;
    std::string t = "neighborhood instance of " + p + ": " + show(dbar) + "\n";
    if (!inc.empty()) t += "inconsistent neighbors: " + join(std::vector<std::string>(inc.begin(), inc.end()), ", ") + "\n";
    t += "neighborhood solutions: " + std::to_string(ns.size()) + "\n";
    list_instances(t, "ns", ns);
    emit(c, j, t);
    return 0;
}

int cmd_solutions(const Cfg& c, bool core_only) {
    System s = load(c);
    auto p = need_peer(c, s);
    EngineOptions eo;
    eo.repair = repair_opts(c);
    Engine e(s, eo);
    auto& r = e.solutions(p);
    ordered_json j{{"peers", {p}}};
    std::string t;
    if (!core_only) {
        j["solutions"] = ordered_json::array();
        for (auto& x : r.solutions) j["solutions"].push_back(atoms_json(x));
        t += "solutions of " + p + ": " + std::to_string(r.solutions.size()) + "\n";
        list_instances(t, "solution", r.solutions);
    }
    j["core"] = atoms_json(r.core);
    j["inconsistent"] = r.inconsistent;
    t += "core: " + show(r.core) + "\n";
    emit(c, j, t);
    return 0;
}

int cmd_pca(const Cfg& c) {
    System s = load(c);
    auto p = need_peer(c, s);
    auto q = query_for(c, s, p);
    EngineOptions eo;
    eo.repair = repair_opts(c);
    Engine e(s, eo);
    auto r = e.pca(p, q);
    ordered_json j{{"peers", {p}}, {"query", show(q)}, {"inc", r.inc}, {"pca", r.inc ? ordered_json::array() : answers_json(r.answers)}};
    std::string t = "pca " + p + " " + show(q) + ": " + (r.inc ? std::string("inc") : answers_text(r.answers)) + "\n";
    emit(c, j, t);
    return 0;
}

int cmd_import(const Cfg& c) {
    System s = load(c);
    auto p = need_peer(c, s);
    ImportSolver is(s, repair_opts(c));
    auto& cls = is.classification();
    bool unrestricted = true, import_kind = true;
    for (auto& q : s.accessible(p)) {
        unrestricted = unrestricted && cls.peers.at(q) == PeerClass::unrestricted_import;
        import_kind = import_kind && cls.peers.at(q) != PeerClass::general;
    }
    SolutionResult r;
    std::string mode;
    if (unrestricted) {
        Instance sol = is.solve(p);
        r.solutions = {sol};
        r.core = sol;
        mode = "unrestricted";
    } else if (import_kind) {
        r = is.solve_restricted(p);
        mode = "restricted";
    } else if (c.mixed) {
        EngineOptions eo;
        eo.repair = repair_opts(c);
        Engine e(s, eo);
        r = is.solve_mixed(p, e);
        mode = "mixed";
    } else {
        throw refusal("the system accessible from " + p + " is not of the import kind (use --mixed to take general neighbors' cores)");
    }
    ordered_json j{{"peers", {p}}, {"mode", mode}, {"solutions", ordered_json::array()}};
    for (auto& x : r.solutions) j["solutions"].push_back(atoms_json(x));
    j["core"] = atoms_json(r.core);
    j["rounds"] = is.last_stats.rounds;
    std::string t = "import solution of " + p + " (" + mode + "): " + std::to_string(r.solutions.size()) + "\n";
    list_instances(t, "solution", r.solutions);
    t += "core: " + show(r.core) + "\n";
    emit(c, j, t);
    return 0;
}

int cmd_asp_emit(const Cfg& c) {
    System s = load(c);
    auto p = need_peer(c, s);
    EngineOptions eo;
    eo.repair = repair_opts(c);
    AspSolver a(s, eo);
    LogicProgram prog = a.program(p);
    if (!c.query.empty()) add_query_rule(prog, s, query_for(c, s, p));
    std::string text = emit_text(prog, c.disj);
    if (!c.out.empty()) {
        std::ofstream o(c.out, std::ios::binary);
        if (!o) throw error("cannot write " + c.out);
        o << text;
    }
    ordered_json j{{"peers", {p}}, {"program", text}, {"rules", prog.rules.size()}, {"facts", prog.facts.size()}};
    if (c.format == "json") std::cout << j.dump(2) << "\n";
    else if (c.out.empty()) std::cout << text;
    else std::cout << "wrote " << prog.rules.size() << " rules and " << prog.facts.size() << " facts to " << c.out << "\n";
    return 0;
}

int cmd_asp_solve(const Cfg& c) {
    System s = load(c);
    auto p = need_peer(c, s);
    EngineOptions eo;
    eo.repair = repair_opts(c);
    AspOptions ao;
    ao.cap = c.cap;
    ao.post_filter = c.post_filter;
    AspSolver a(s, eo, ao);
    AspResult r = a.solve(p);
    ordered_json j{{"peers", {p}}, {"ground_rules", r.ground_rules}, {"ground_atoms", r.ground_atoms}, {"models", ordered_json::array()}};
    std::string t = "program for " + p + ": " + std::to_string(r.ground_rules) + " ground rules, " + std::to_string(r.ground_atoms) + " atoms\n";
    for (auto& n : r.program.notes)
        if (n.rfind("solution program", 0) != 0) t += "note: " + n + "\n";
    t += "stable models: " + std::to_string(r.models.size()) + "\n";
    for (size_t i = 0; i < r.models.size(); ++i) {
        auto& m = r.models[i];
        Instance changes;
        for (auto& x : m.atoms) {
            Ann k = annotation_of(x, s.schema);
            if (k == Ann::ta || k == Ann::fa) changes.insert(x);
        }
        j["models"].push_back({{"instance", atoms_json(m.instance)}, {"changes", atoms_json(changes)}, {"kept", m.kept}});
        t += "model " + std::to_string(i + 1) + ": " + show(m.instance) + "  changes " + show(changes);
        if (r.post_filtered && !m.kept) t += "  [removed by post-filter]";
        t += "\n";
    }
    j["solutions"] = ordered_json::array();
    for (auto& x : r.solutions) j["solutions"].push_back(atoms_json(x));
    j["notes"] = r.program.notes;
    t += "solutions: " + std::to_string(r.solutions.size()) + "\n";
    list_instances(t, "solution", r.solutions);
    emit(c, j, t);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pdes: peer data exchange with trust and nulls"};
    Cfg c;
    app.require_subcommand(1);
    auto common = [&](CLI::App* s, bool peer) {
        s->add_option("file", c.file, "system definition file")->required();
        if (peer) s->add_option("--peer", c.peer, "peer id");
        s->add_option("--format", c.format, "text or json")->check(CLI::IsMember({"text", "json"}));
        s->add_option("--cap", c.cap, "candidate / search node cap");
        s->add_option("--threads", c.threads, "worker threads for candidate checks")->check(CLI::Range(1, 256));
        s->add_option("--preorder", c.preorder, "override the preorder: null or delta");
    };
    auto check = app.add_subcommand("check", "parse, acyclicity, ref-acyclicity, import classification");
    common(check, false);
    auto chase = app.add_subcommand("chase", "restricted chase of the raw neighborhood instance");
    common(chase, true);
    auto rep = app.add_subcommand("repairs", "repairs of the raw neighborhood instance");
    common(rep, true);
    auto ns = app.add_subcommand("ns", "neighborhood solutions");
    common(ns, true);
    auto sol = app.add_subcommand("solutions", "solutions of a peer");
    common(sol, true);
    auto core = app.add_subcommand("core", "intersection of a peer's solutions");
    common(core, true);
    auto pca = app.add_subcommand("pca", "peer consistent answers");
    common(pca, true);
    pca->add_option("--query", c.query, "conjunctive query; defaults to the one declared for the peer");
    auto imp = app.add_subcommand("import-solve", "polynomial solver for import systems");
    common(imp, true);
    imp->add_flag("--mixed", c.mixed, "take cores of general neighbors from the general engine");
    auto asp = app.add_subcommand("asp", "solution programs");
    asp->require_subcommand(1);
    auto aemit = asp->add_subcommand("emit", "print the solution program");
    common(aemit, true);
    aemit->add_option("--out", c.out, "write the program to a file");
    aemit->add_option("--disj", c.disj, "disjunction symbol")->check(CLI::IsMember({"|", "v"}));
    aemit->add_option("--query", c.query, "add a query rule");
    auto asolve = asp->add_subcommand("solve", "stable models of the solution program");
    common(asolve, true);
    asolve->add_flag("--post-filter", c.post_filter, "drop models that are not minimal among the models");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    try {
        if (*check) return cmd_check(c);
        if (*chase) return cmd_chase(c);
        if (*rep) return cmd_repairs(c);
        if (*ns) return cmd_ns(c);
        if (*sol) return cmd_solutions(c, false);
        if (*core) return cmd_solutions(c, true);
        if (*pca) return cmd_pca(c);
        if (*imp) return cmd_import(c);
        if (*aemit) return cmd_asp_emit(c);
        if (*asolve) return cmd_asp_solve(c);
    } catch (const parse_error& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const schema_error& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return 2;
    } catch (const refusal& e) {
        std::cerr << "refused: " << e.what() << "\n";
        return 1;
    } catch (const resource_error& e) {
        std::cerr << "resource cap: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
