#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common.hpp"
#include "gen.hpp"
#include "oracle.hpp"

using namespace t;

TEST_CASE("closeness: leaving the chase bound loses") {
    auto d = I("R(a)");
    auto bound = d;
    Instance empty;
    auto arbitrary = I("R(a), T(a,a), S(a)");
    CHECK(closer_leq(empty, arbitrary, d, bound));
    CHECK_FALSE(closer_leq(arbitrary, empty, d, bound));
    CHECK(closer_lt(empty, arbitrary, d, bound));
    CHECK(oracle::closer_leq(empty, arbitrary, d, bound));
    CHECK_FALSE(oracle::closer_leq(arbitrary, empty, d, bound));
}

TEST_CASE("closeness: a null insertion is below its informative version") {
    auto d = I("R(a)");
    auto bound = I("R(a), T(a,null)");
    auto with_null = I("R(a), T(a,null)");
    auto with_value = I("R(a), T(a,b)");
    CHECK(closer_lt(with_null, with_value, d, bound));
    // inside the bound the informative atom still dominates the null one
    auto bound2 = I("R(a), T(a,null), T(a,b)");
    CHECK(closer_leq(with_null, with_value, d, bound2));
    CHECK_FALSE(closer_leq(with_value, with_null, d, bound2));
    CHECK(oracle::closer_leq(with_null, with_value, d, bound2));
    CHECK_FALSE(oracle::closer_leq(with_value, with_null, d, bound2));
}

TEST_CASE("delta domination is reflexive and respects subsets") {
    auto a = I("R(a), S(null,b)");
    CHECK(delta_dominated(a, a));
    CHECK(delta_dominated(I("R(a)"), a));
    CHECK_FALSE(delta_dominated(a, I("R(a)")));
    CHECK(delta_dominated(I("S(null,b)"), I("S(a,b)")));
    // the informative witness must not itself be in the first set
    CHECK_FALSE(delta_dominated(I("S(null,b), S(a,b), R(c)"), I("S(a,b)")));
}

TEST_CASE("problematic existential: deletion is the only repair") {
    auto sigma = Cs({"R(x) -> exists y : T(x,y), S(y)"});
    auto base = I("R(a)");
    auto rs = null_repairs(base, sigma);
    CHECK(rs == std::vector<Instance>{Instance{}});
    CHECK(oracle::null_repairs(base, sigma) == rs);
}

TEST_CASE("key plus denial: two deletion repairs") {
    // hand check: deleting T(a,c) fixes both constraints; deleting T(a,b) and S(a,c) also does,
    // and neither difference set dominates the other
    auto sigma = Cs({"T(x,y), T(x,z) -> y = z", "T(x,y), S(x,y) -> false"});
    auto base = I("T(a,b), T(a,c), S(a,c)");
    auto rs = sorted(null_repairs(base, sigma));
    auto want = sorted({I("T(a,b), S(a,c)"), I("T(a,c)")});
    CHECK(rs == want);
    CHECK(oracle::null_repairs(base, sigma) == want);
    CHECK(sorted(delta_repairs(base, sigma)) == want);
}

TEST_CASE("null-fillable existential: insertion and deletion are incomparable") {
    auto sigma = Cs({"R(x) -> exists y : T(x,y)"});
    auto base = I("R(a)");
    auto rs = sorted(null_repairs(base, sigma));
    auto want = sorted({Instance{}, I("R(a), T(a,null)")});
    CHECK(rs == want);
    CHECK(oracle::null_repairs(base, sigma) == want);
}

TEST_CASE("consistent instance is its own repair") {
    auto sigma = Cs({"T(x,y) -> R(x,y)"});
    auto base = I("T(a,b), R(a,b), T(c,null)");
    CHECK(null_repairs(base, sigma) == std::vector<Instance>{base});
}

TEST_CASE("frozen predicates and kept atoms") {
    auto sigma = Cs({"S(x) -> R(x)"});
    auto base = I("S(a)");
    CHECK(sorted(null_repairs(base, sigma)) == sorted({Instance{}, I("S(a), R(a)")}));
    RepairOptions o;
    o.frozen = {"R"};
    CHECK(null_repairs(base, sigma, o) == std::vector<Instance>{Instance{}});
    RepairOptions k;
    k.keep = I("S(a)");
    CHECK(null_repairs(base, sigma, k) == std::vector<Instance>{I("S(a), R(a)")});
    o.keep = I("S(a)");
    CHECK(null_repairs(base, sigma, o).empty());
}

TEST_CASE("unmentioned predicates stay as they are") {
    auto sigma = Cs({"T(x,y), T(x,z) -> y = z"});
    auto base = I("T(a,b), T(a,c), U(q)");
    auto rs = sorted(null_repairs(base, sigma));
    CHECK(rs == sorted({I("T(a,b), U(q)"), I("T(a,c), U(q)")}));
}

TEST_CASE("search cap") {
    auto sigma = Cs({"R(x) -> S(x)"});
    auto base = I("R(a), R(b), R(c), R(d), R(e)");
    RepairOptions o;
    o.cap = 16;
    CHECK_THROWS_AS(null_repairs(base, sigma, o), resource_error);
    o.cap = 1024;
    CHECK(null_repairs(base, sigma, o).size() == 32);
}

TEST_CASE("thread count does not change the result") {
    auto sigma = Cs({"R(x,y), R(x,z) -> y = z", "R(x,y) -> exists z : S(y,z)"});
    auto base = I("R(a,b), R(a,c), R(b,c), R(c,a), S(a,a)");
    RepairOptions one, four;
    four.threads = 4;
    CHECK(null_repairs(base, sigma, one) == null_repairs(base, sigma, four));
}

TEST_CASE("delta repairs draw insertions from the data") {
    auto sigma = Cs({"R(x) -> exists y : T(x,y)"});
    auto rs = sorted(delta_repairs(I("R(a), T(b,b)"), sigma));
    auto want = sorted({I("T(b,b)"), I("R(a), T(b,b), T(a,a)"), I("R(a), T(b,b), T(a,b)")});
    CHECK(rs == want);
}

TEST_CASE("null repairs match the subset oracle on random instances") {
    gen::rng r(2024);
    Schema s{{"T", {2, ""}}, {"R", {2, ""}}, {"S", {1, ""}}};
    auto dom = gen::values({"a", "b", "c"}, true);
    std::vector<const char*> pool{
        "T(x,y) -> R(x,y)",
        "R(x,y) -> exists z : T(x,z)",
        "T(x,y), T(x,z) -> y = z",
        "T(x,y), S(x) -> false",
        "R(x,y) -> exists z : T(y,z), S(z)",
        "R(x,y) -> S(x) or x = y",
        "S(x) -> exists y : R(x,y)",
    };
    int compared = 0;
    for (int i = 0; i < 100; ++i) {
        std::vector<Constraint> sigma;
        int k = 1 + r.pick(3);
        for (int j = 0; j < k; ++j) sigma.push_back(C(pool[r.pick((int)pool.size())]));
        auto base = gen::random_instance(r, s, dom, 6);
        auto bound = r_chase(base, sigma);
        if (set_union(base, bound).size() > 16) continue;
        CAPTURE(show(base));
        CHECK(sorted(null_repairs(base, sigma)) == oracle::null_repairs(base, sigma));
        ++compared;
    }
    CHECK(compared >= 90);
}

TEST_CASE("delta repairs match the subset oracle for universal constraints") {
    gen::rng r(99);
    Schema s{{"T", {2, ""}}, {"S", {1, ""}}};
    auto dom = gen::values({"a", "b"}, true);
    std::vector<const char*> pool{"T(x,y), T(x,z) -> y = z", "T(x,y) -> S(x)", "T(x,y), S(y) -> false", "S(x) -> T(x,x) or x = 'b'"};
    for (int i = 0; i < 60; ++i) {
        std::vector<Constraint> sigma;
        int k = 1 + r.pick(2);
        for (int j = 0; j < k; ++j) sigma.push_back(C(pool[r.pick((int)pool.size())]));
        auto base = gen::random_instance(r, s, dom, 5);
        std::set<Value> u = active_domain(base);
        for (auto& c : sigma) {
            auto kk = constants_of(c);
            u.insert(kk.begin(), kk.end());
        }
        auto universe = oracle::all_atoms(s, std::vector<Value>(u.begin(), u.end()));
        CAPTURE(show(base));
        CHECK(sorted(delta_repairs(base, sigma)) == oracle::delta_repairs(base, universe, sigma));
    }
}
