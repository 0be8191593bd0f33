#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common.hpp"
#include "gen.hpp"

using namespace t;

TEST_CASE("constraint tags and peer classes") {
    auto s = load("ex5_10.pdes");
    auto c = classify(s);
    CHECK(c.peers.at("P1") == PeerClass::unrestricted_import);
    CHECK(c.peers.at("P2") == PeerClass::unrestricted_import);
    CHECK(c.peers.at("P3") == PeerClass::general);
    CHECK(c.peers.at("P4") == PeerClass::unrestricted_import);
    CHECK(c.tags.at({"P1", "P2"}) == std::vector<DecTag>{DecTag::iudec});
    CHECK(c.tags.at({"P4", "P2"}) == std::vector<DecTag>{DecTag::iudec});
    CHECK(c.tags.at({"P4", "P3"}) == std::vector<DecTag>{DecTag::irdec});
    CHECK(c.tags.at({"P3", "P2"}) == std::vector<DecTag>{DecTag::other});
    CHECK_FALSE(c.import_kind);
    ImportSolver is(s);
    CHECK_THROWS_AS(is.solve("P4"), refusal);
    CHECK_THROWS_AS(is.solve_restricted("P4"), refusal);
    // mixed comparison is textual: c > 4 and d > 5, so both tuples are imported
    CHECK(is.solve("P1") == I("R1(a,2), R1(c,4), R1(d,5)"));
}

TEST_CASE("shapes that do not import") {
    auto s = parse_system(
        "peer P : A/2, B/1\npeer Q : C/2\ntrust P less Q\n"
        "dec P Q : C(x,y) -> A(x,y), B(x)\n"
        "dec P Q : C(x,y) -> exists z : A(z,z)\n"
        "dec P Q : C(x,y) -> exists z : A(x,z), z != 'a'\n"
        "dec P Q : A(x,y) -> C(x,y)\n"
        "dec P Q : C(x,y) -> exists z : A(x,z), x != 'a'\n");
    auto& cs = s.sigma_of("P", "Q");
    CHECK(dec_tag(s, cs[0]) == DecTag::other);
    CHECK(dec_tag(s, cs[1]) == DecTag::other);
    CHECK(dec_tag(s, cs[2]) == DecTag::other);
    CHECK(dec_tag(s, cs[3]) == DecTag::other);
    std::string note;
    CHECK(dec_tag(s, cs[4], &note) == DecTag::irdec);
    CHECK_FALSE(note.empty());
}

TEST_CASE("equal trust is not an import") {
    auto s = load("ex3_2.pdes");
    CHECK(classify(s).peers.at("P1") == PeerClass::general);
}

TEST_CASE("import program text") {
    auto s = load("ex6_1.pdes");
    auto prog = import_program(s, "P1", set_union(s.instance_of("P1"), s.instance_of("P2")));
    REQUIRE(prog.rules.size() == 1);
    CHECK(show(prog.rules[0]) == "R1(x,y) <- R2(x,y), x!=null, y!=null");
    auto s2 = load("ex2_2.pdes");
    auto p4 = import_program(s2, "P4", {});
    REQUIRE(p4.rules.size() == 2);
    CHECK(show(p4.rules[1]) == "R4(x,y,null) <- R3(x,y), x!=null, y!=null");
}

TEST_CASE("builtin escape becomes a negated guard") {
    auto s = load("ex5_10.pdes");
    auto prog = import_program(s, "P1", {});
    REQUIRE(prog.rules.size() == 1);
    CHECK(show(prog.rules[0]) == "R1(x,y) <- R2(x,y), x>y, x!=null, y!=null");
}

TEST_CASE("unrestricted import: one solution") {
    auto s = load("ex6_1.pdes");
    ImportSolver is(s);
    CHECK(is.solve("P1") == I("R1(a,2), R1(d,5)"));
    Engine e(s);
    CHECK(e.solutions("P1").solutions == std::vector<Instance>{I("R1(a,2), R1(d,5)")});
}

TEST_CASE("general neighbor: its core feeds the import") {
    auto s = load("ex6_5.pdes");
    ImportSolver is(s);
    CHECK(is.classification().peers.at("P1") == PeerClass::unrestricted_import);
    CHECK(is.classification().peers.at("P2") == PeerClass::general);
    CHECK_THROWS_AS(is.solve("P1"), refusal);
    Engine e(s);
    auto r = is.solve_mixed("P1", e);
    CHECK(r.solutions == std::vector<Instance>{I("R1(a,2), R1(d,5)")});
    CHECK(e.solutions("P1").solutions == r.solutions);
}

TEST_CASE("restricted import: conflicting sources leave no solution") {
    auto s = load("ex5_12.pdes");
    ImportSolver is(s);
    CHECK(is.classification().peers.at("P1") == PeerClass::restricted_import);
    auto r = is.solve_restricted("P1");
    CHECK(r.inconsistent);
    CHECK(r.solutions.empty());
    CHECK(Engine(s).solutions("P1").inconsistent);
}

TEST_CASE("restricted import: imported value stays, local value chosen") {
    auto s = load("ex5_13.pdes");
    ImportSolver is(s);
    auto r = is.solve_restricted("P");
    auto want = sorted({I("P(a,b), P(a,d)"), I("P(a,c), P(a,d)")});
    CHECK(sorted(r.solutions) == want);
    CHECK(r.core == I("P(a,d)"));
    CHECK(sorted(Engine(s).solutions("P").solutions) == want);
}

TEST_CASE("least model grows with the facts") {
    auto s = load("ex2_2.pdes");
    auto small = I("R2(c,4), S2(4,1)");
    auto big = set_union(small, I("R3(a,b), R2(d,null), S2(null,2)"));
    auto m1 = least_model(import_program(s, "P4", small));
    auto m2 = least_model(import_program(s, "P4", big));
    CHECK(subset_of(m1, m2));
    CHECK(subset_of(I("R4(c,4,1)"), m1));
    CHECK(subset_of(I("R4(a,b,null)"), m2));
    CHECK_FALSE(m2.count(Atom{"R4", {V("d"), Value::null(), V("2")}}));
}

TEST_CASE("fixpoint statistics") {
    auto s = load("ex6_1.pdes");
    FixpointStats st;
    least_model(import_program(s, "P1", I("R2(d,5), R2(e,6)")), &st);
    CHECK(st.rounds >= 1);
}

TEST_CASE("cyclic system refused") {
    auto s = load("cyclic_graph.pdes");
    ImportSolver is(s);
    CHECK_THROWS_AS(is.solve("P1"), refusal);
}

TEST_CASE("unrestricted import agrees with the general engine") {
    gen::rng r(77);
    gen::SystemShape sh;
    sh.import_only = true;
    int checked = 0;
    for (int i = 0; i < 80; ++i) {
        std::string text;
        auto s = gen::random_system(r, sh, &text);
        ImportSolver is(s);
        if (!is.classification().unrestricted) continue;
        CAPTURE(text);
        Engine e(s);
        for (auto& p : s.peers) {
            auto& sol = e.solutions(p);
            REQUIRE(sol.solutions.size() == 1);
            CHECK(is.solve(p) == sol.solutions[0]);
        }
        ++checked;
    }
    CHECK(checked >= 60);
}
