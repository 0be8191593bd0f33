#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common.hpp"

using namespace t;

TEST_CASE("parse a disjunctive universal constraint") {
    auto c = C("R(x,y), S(y,z) -> Q(x,y,z) or T(x,z)");
    CHECK(c.univ == std::vector<std::string>{"x", "y", "z"});
    REQUIRE(c.body.size() == 2);
    REQUIRE(c.head.size() == 2);
    CHECK(c.head[0].atoms[0].pred == "Q");
    CHECK(c.head[1].atoms[0].pred == "T");
    CHECK(c.kind == Kind::udec);
    CHECK_FALSE(c.existential());
}

TEST_CASE("parse an existential constraint with builtins") {
    auto c = C("forall x,y : R(x,y) -> exists z : Q(x,y,z), x != y");
    CHECK(c.kind == Kind::rdec);
    CHECK(c.existential());
    REQUIRE(c.head.size() == 1);
    CHECK(c.head[0].exist == std::vector<std::string>{"z"});
    REQUIRE(c.head[0].builtins.size() == 1);
    CHECK(c.head[0].builtins[0].op == Op::neq);
}

TEST_CASE("denials, null tests and constants") {
    auto d = C("T(x,y), S(x,y) -> false");
    REQUIRE(d.head.size() == 1);
    CHECK(d.head[0].builtins[0].op == Op::f);
    auto n = C("R(x,y,z) -> isnotnull(x)");
    CHECK(n.head[0].builtins[0].op == Op::is_not_null);
    auto k = C("R(x) -> S(x,'new york') or x = 3");
    CHECK(k.head[0].atoms[0].args[1].val == V("new york"));
    CHECK(constants_of(k) == std::set<Value>{V("new york"), V("3")});
}

TEST_CASE("constraint syntax errors") {
    CHECK_THROWS_AS(C("R(x) -> S(null)"), parse_error);
    CHECK_THROWS_AS(C("R(x), x > 1 -> S(x)"), parse_error);
    CHECK_THROWS_AS(C("R(x) -> S(y)"), parse_error);
    CHECK_THROWS_AS(C("forall x,y : R(x) -> S(x)"), parse_error);
    CHECK_THROWS_AS(C("R(x) -> exists y : S(x)"), parse_error);
    CHECK_THROWS_AS(C("R(x) -> exists x : S(x)"), parse_error);
    CHECK_THROWS_AS(C("-> S(x)"), parse_error);
    CHECK_THROWS_AS(C("R(x) -> exists y : S(y) or exists z : T(z)"), parse_error);
    CHECK_THROWS_AS(C("R(x) -> exists y : S(y) or T(x)"), parse_error);
    CHECK_THROWS_AS(C("R(x) -> S(x) trailing"), parse_error);
    CHECK_THROWS_AS(C("R(x) -> S(x) ; T(x)"), parse_error);
}

TEST_CASE("parse errors carry a position") {
    try {
        C("R(x) ->\n  S(y)");
        FAIL("expected a parse error");
    } catch (const parse_error& e) {
        CHECK(e.line == 2);
    }
}

TEST_CASE("queries: free variables in order of first occurrence") {
    auto q = Q("exists y,z : R(x,y,z), S(y), y > 2");
    CHECK(q.free == std::vector<std::string>{"x"});
    CHECK(q.exist == std::vector<std::string>{"y", "z"});
    CHECK(q.sql_safe);
    auto q2 = Q("R(x,y), S(y,w)");
    CHECK(q2.free == std::vector<std::string>{"x", "y", "w"});
    CHECK_FALSE(Q("R(x), x != null").sql_safe);
    CHECK(Q("exists y : R(y)").free.empty());
    CHECK_THROWS_AS(Q("exists y : R(x)"), parse_error);
    CHECK_THROWS_AS(Q("exists y : R(x), y > 1"), parse_error);
}

TEST_CASE("relevant variables") {
    // universal position repeated or in a builtin; existential used once is not relevant
    CHECK(relevant_vars(C("P(x,y,z) -> exists v : R(x,y,v)")) == RelVarSet{"x", "y"});
    CHECK(relevant_vars(C("R(x) -> exists y : T(x,y), S(y)")) == RelVarSet{"x", "y"});
    CHECK(relevant_vars(C("R(x,y,z1), R(x,y,z2) -> z1 = z2")) == RelVarSet{"x", "y", "z1", "z2"});
    // null tests do not count as occurrences
    CHECK(relevant_vars(C("R(x,y,z) -> isnotnull(x)")).empty());
    CHECK(relevant_vars(C("T(x,y) -> R(x,y)")) == RelVarSet{"x", "y"});
    CHECK(relevant_vars(C("R(x,y) -> exists z : Q(x,y,z), x != y")) == RelVarSet{"x", "y"});
    CHECK(relevant_vars(Q("exists y,z : R(x,y,z), S(y), y > 2")) == RelVarSet{"y"});
    CHECK(relevant_vars(Q("exists y : R(x,y), S(y,z)")) == RelVarSet{"y"});
}

TEST_CASE("constraint rewriting: key constraint gains null escapes") {
    auto psi = C("R(x,y,z1), R(x,y,z2) -> z1 = z2");
    auto want = C("R(x,y,z1), R(x,y,z2) -> isnull(x) or isnull(y) or isnull(z1) or isnull(z2) or z1 = z2");
    CHECK(n_rewrite_constraint(psi) == want);
    CHECK(show(n_rewrite_constraint(psi)) ==
          "forall x,y,z1,z2 : R(x,y,z1), R(x,y,z2) -> isnull(x) or isnull(y) or isnull(z1) or isnull(z2) or z1=z2");
}

TEST_CASE("constraint rewriting leaves a not-null check alone") {
    auto psi = C("R(x,y,z) -> isnotnull(x)");
    CHECK(n_rewrite_constraint(psi) == psi);
}

TEST_CASE("constraint rewriting of existentials") {
    CHECK(n_rewrite_constraint(C("P(x,y,z) -> exists v : R(x,y,v)")) ==
          C("P(x,y,z) -> isnull(x) or isnull(y) or exists v : R(x,y,v)"));
    CHECK(n_rewrite_constraint(C("R(x) -> exists y : T(x,y), S(y)")) ==
          C("R(x) -> isnull(x) or exists y : T(x,y), S(y), isnotnull(y)"));
    // idempotent
    auto once = n_rewrite_constraint(C("R(x) -> exists y : T(x,y), S(y)"));
    CHECK(n_rewrite_constraint(once) == once);
}

TEST_CASE("query rewriting guards relevant variables") {
    auto q = n_rewrite_query(Q("exists y,z : R(x,y,z), S(y), y > 2"));
    auto want = Q("exists y,z : R(x,y,z), S(y), y > 2, y != null");
    CHECK(q.free == want.free);
    CHECK(q.exist == want.exist);
    CHECK(q.atoms == want.atoms);
    CHECK(q.builtins == want.builtins);
    CHECK(show(q) == "exists y,z : R(x,y,z), S(y), y>2, y!=null");
    CHECK(show(n_rewrite_query(Q("exists y : P(x,y), y > 5"))) == "exists y : P(x,y), y>5, y!=null");
}

TEST_CASE("printing re-parses to the same constraint") {
    for (auto s : {"R(x,y), S(y,z) -> Q(x,y,z) or T(x,z)", "R(x,y) -> exists z : Q(x,y,z), x != y",
                   "T(x,y), S(x,y) -> false", "R(x) -> isnull(x) or exists y : T(x,y), S(y), isnotnull(y)",
                   "R(x) -> S(x,'a b') or x >= 3"}) {
        auto c = C(s);
        CHECK(C(show(c)) == c);
    }
}

TEST_CASE("builtin negation table") {
    auto x = Term::variable("x"), k = Term::constant(V("1"));
    CHECK(negate(Builtin{Op::eq, x, k}).op == Op::neq);
    CHECK(negate(Builtin{Op::neq, x, k}).op == Op::eq);
    CHECK(negate(Builtin{Op::lt, x, k}).op == Op::geq);
    CHECK(negate(Builtin{Op::leq, x, k}).op == Op::gt);
    CHECK(negate(Builtin{Op::gt, x, k}).op == Op::leq);
    CHECK(negate(Builtin{Op::geq, x, k}).op == Op::lt);
    CHECK(negate(Builtin{Op::is_null, x, {}}).op == Op::is_not_null);
    CHECK(negate(Builtin{Op::is_not_null, x, {}}).op == Op::is_null);
}

TEST_CASE("ref-acyclicity") {
    auto cyc = ref_acyclic(Cs({"R1(x,z) -> exists y : R2(x,y)", "R2(x,z) -> exists y : R1(x,y)"}));
    CHECK_FALSE(cyc.ok);
    REQUIRE(cyc.cycle.size() >= 3);
    CHECK(cyc.cycle.front() == cyc.cycle.back());
    CHECK(std::count(cyc.cycle.begin(), cyc.cycle.end(), "R1") >= 1);
    CHECK(std::count(cyc.cycle.begin(), cyc.cycle.end(), "R2") >= 1);
    // a cycle of universal constraints only is fine
    CHECK(ref_acyclic(Cs({"R(x) -> S(x)", "S(x) -> R(x)"})).ok);
    // the existential edge closes the cycle through a universal one
    CHECK_FALSE(ref_acyclic(Cs({"R(x) -> exists y : S(x,y)", "S(x,y) -> R(y)"})).ok);
    CHECK(ref_acyclic(Cs({"R(x) -> exists y : S(x,y)", "S(x,y) -> T(y)"})).ok);
    CHECK(ref_acyclic({}).ok);
}

TEST_CASE("simple existential shape") {
    CHECK(simple_rdec(C("R(x) -> exists y : S(x,y)")));
    CHECK(simple_rdec(C("R(x,z) -> exists y,w : S(x,y,w)")));
    CHECK_FALSE(simple_rdec(C("R(x) -> exists y : T(x,y), S(y)")));
    CHECK_FALSE(simple_rdec(C("R(x,y) -> exists z : Q(x,y,z), x != y")));
    CHECK_FALSE(simple_rdec(C("R(x) -> exists y : S(y,y)")));
    CHECK_FALSE(simple_rdec(C("R(x) -> S(x)")));
}

TEST_CASE("predicates and constants of a constraint") {
    auto c = C("R(x,y) -> exists z : Q(x,y,z), x != 'a'");
    CHECK(predicates_of(c) == std::set<std::string>{"Q", "R"});
    CHECK(constants_of(c) == std::set<Value>{V("a")});
    CHECK(constants_of(Q("R(x,y), x > 3")) == std::set<Value>{V("3")});
}
