#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common.hpp"
#include "gen.hpp"

using namespace t;

namespace {
std::vector<Constraint> sigma_mixed() {
    return Cs({
        "T(x,y) -> R(x,y)",
        "R(x,y), S(y,z) -> Q(x,y,z) or T(x,z)",
        "Q(x,y,z) -> S(x,y), R(y,z)",
        "T(x,y), T(x,z) -> y = z",
        "T(x,y), S(x,y) -> false",
        "R(x,y) -> exists z : Q(x,y,z), x != y",
        "Q(x,y,z) -> exists w : R(x,z), S(x,w)",
    });
}
bool has(const Instance& d, const char* a) { return subset_of(I(a), d); }
}  // namespace

TEST_CASE("split: universal, null-fillable and excluded constraints") {
    auto s = split_sigma(sigma_mixed());
    CHECK(s.sigma1.size() == 5);
    CHECK(s.sigma2_minus.size() == 2);
    CHECK(s.excluded.empty());
    auto t2 = split_sigma(Cs({"R(x) -> exists y : T(x,y), S(y)", "R(x) -> exists y : T(x,y), y != 'a'",
                              "R(x) -> exists y : T(x,y,y)", "R(x) -> exists y : T(x,y)"}));
    CHECK(t2.excluded.size() == 3);
    CHECK(t2.sigma2_minus.size() == 1);
    CHECK(problematic_existential(C("R(x) -> exists y : T(x,y), S(y)")));
    CHECK_FALSE(problematic_existential(C("R(x,y) -> exists z : Q(x,y,z), x != y")));
}

TEST_CASE("null in a relevant position does not trigger an inclusion") {
    auto out = r_chase(I("T(a,null)"), sigma_mixed());
    CHECK(out == I("T(a,null)"));
}

TEST_CASE("inclusion fires on a complete tuple") {
    auto out = r_chase(I("T(a,b)"), sigma_mixed());
    CHECK(has(out, "R(a,b)"));
    // and the existential then fills its witness with null
    CHECK(has(out, "Q(a,b,null)"));
    // which does not feed the next constraint: its z is relevant
    CHECK_FALSE(has(out, "R(b,null)"));
    CHECK(out == I("T(a,b), R(a,b), Q(a,b,null)"));
}

TEST_CASE("a false builtin blocks the existential") {
    auto out = r_chase(I("R(a,a)"), sigma_mixed());
    CHECK(out == I("R(a,a)"));
}

TEST_CASE("an unsatisfied disjunction adds every disjunct") {
    auto out = r_chase(I("R(a,b), S(b,c)"), sigma_mixed());
    CHECK(has(out, "Q(a,b,c)"));
    CHECK(has(out, "T(a,c)"));
    CHECK(has(out, "Q(a,b,null)"));
    CHECK_FALSE(has(out, "R(b,null)"));
}

TEST_CASE("a satisfied instantiation adds nothing") {
    auto d = I("R(a,b), S(b,c), Q(a,b,c), S(a,b), R(b,c), Q(b,c,d), S(b,d), R(c,d), R(a,c), S(a,e)");
    auto sigma = Cs({"R(x,y), S(y,z) -> Q(x,y,z) or T(x,z)"});
    auto out = r_chase(d, sigma);
    CHECK_FALSE(has(out, "T(a,c)"));
}

TEST_CASE("builtin-only consequents are never enforced") {
    auto sigma = sigma_mixed();
    auto a = r_chase(I("T(a,b), T(a,c)"), sigma);
    CHECK_FALSE(n_holds(a, C("T(x,y), T(x,z) -> y = z")));
    auto b = r_chase(I("T(a,b), S(a,b)"), sigma);
    CHECK_FALSE(n_holds(b, C("T(x,y), S(x,y) -> false")));
}

TEST_CASE("excluded existentials do not grow the chase") {
    auto sigma = Cs({"R(x) -> exists y : T(x,y), S(y)"});
    CHECK(r_chase(I("R(a)"), sigma) == I("R(a)"));
}

TEST_CASE("rounds are counted") {
    ChaseStats st;
    r_chase(I("T(a,b)"), sigma_mixed(), &st);
    // R, then Q, then a quiet round
    CHECK(st.rounds == 3);
}

TEST_CASE("chase laws on random instances") {
    gen::rng r(5);
    Schema s{{"T", {2, ""}}, {"R", {2, ""}}, {"S", {2, ""}}, {"Q", {3, ""}}};
    auto dom = gen::values({"a", "b", "c"}, true);
    auto sigma = sigma_mixed();
    auto split = split_sigma(sigma);
    std::set<Value> consts;
    for (auto& c : sigma) {
        auto k = constants_of(c);
        consts.insert(k.begin(), k.end());
    }
    for (int i = 0; i < 200; ++i) {
        auto d = gen::random_instance(r, s, dom, 6);
        auto out = r_chase(d, split);
        CAPTURE(show(d));
        CHECK(subset_of(d, out));
        CHECK(r_chase(out, split) == out);
        auto allowed = active_domain(d);
        allowed.insert(consts.begin(), consts.end());
        allowed.insert(Value::null());
        auto got = active_domain(out);
        CHECK(std::includes(allowed.begin(), allowed.end(), got.begin(), got.end()));
    }
}
