#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>
#include <random>

#include "dtcbf/boolean.hpp"
#include "dtcbf/miqp.hpp"

using namespace dtcbf;

namespace {

AffinePredicate pred(double c0, double c1, double constant, Sense s) {
    AffinePredicate p;
    p.coeffs = RowVectorXd(2);
    p.coeffs << c0, c1;
    p.constant = constant;
    p.sense = s;
    return p;
}

VectorXd vec2(double a, double b) {
    VectorXd v(2);
    v << a, b;
    return v;
}

bool noNot(const Formula& f) {
    if (f.kind == Formula::Kind::Not) return false;
    for (const auto& c : f.children) {
        if (!noNot(c)) return false;
    }
    return true;
}

Formula randomFormula(std::mt19937_64& rng, int leafBudget, int* leavesUsed) {
    std::uniform_real_distribution<double> coef(-1.5, 1.5);
    std::uniform_int_distribution<int> senseDist(0, 3);
    auto randLeaf = [&] {
        ++*leavesUsed;
        return Formula::leaf(pred(coef(rng), coef(rng), coef(rng),
                                  static_cast<Sense>(senseDist(rng))));
    };
    if (leafBudget <= 1) return randLeaf();
    std::uniform_int_distribution<int> opDist(0, 6);
    const int op = opDist(rng);
    if (op == 0) return randLeaf();
    if (op == 1) return Formula::negation(randomFormula(rng, leafBudget, leavesUsed));
    const int left = std::uniform_int_distribution<int>(1, leafBudget - 1)(rng);
    Formula a = randomFormula(rng, left, leavesUsed);
    Formula b = randomFormula(rng, leafBudget - left, leavesUsed);
    switch (op) {
        case 2: return Formula::conjunction({std::move(a), std::move(b)});
        case 3: return Formula::disjunction({std::move(a), std::move(b)});
        case 4: return Formula::implies(std::move(a), std::move(b));
        case 5: return Formula::exclusiveOr(std::move(a), std::move(b));
        default: return Formula::equivalent(std::move(a), std::move(b));
    }
}

}  // namespace

TEST_CASE("predicate holds under every sense, strict ones eps-resolved") {
    const VectorXd x = vec2(1.0, 0.0);
    CHECK(pred(1, 0, -1, Sense::Ge).holds(x));   // 0 >= 0
    // With zero tolerance the strict senses exclude the boundary.
    CHECK_FALSE(pred(1, 0, -1, Sense::Gt).holds(x, kEpsStrict, 0.0));
    CHECK(pred(1, 0, -1, Sense::Le).holds(x));
    CHECK_FALSE(pred(1, 0, -1, Sense::Lt).holds(x, kEpsStrict, 0.0));
    CHECK(pred(1, 0, -1, Sense::Eq).holds(x));
    CHECK(pred(1, 0, 0.5, Sense::Gt).holds(x));
    CHECK(pred(1, 0, -2, Sense::Lt).holds(x));
}

TEST_CASE("negation flips the sense and swaps strictness") {
    CHECK(pred(1, 0, 0, Sense::Ge).negated().sense == Sense::Lt);
    CHECK(pred(1, 0, 0, Sense::Gt).negated().sense == Sense::Le);
    CHECK(pred(1, 0, 0, Sense::Le).negated().sense == Sense::Gt);
    CHECK(pred(1, 0, 0, Sense::Lt).negated().sense == Sense::Ge);
    CHECK_THROWS_AS(pred(1, 0, 0, Sense::Eq).negated(), Error);

    // Double negation restores the original truth value everywhere.
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(-2, 2);
    const auto p = pred(0.7, -1.2, 0.3, Sense::Gt);
    const auto pnn = p.negated().negated();
    for (int i = 0; i < 200; ++i) {
        const VectorXd x = vec2(dist(rng), dist(rng));
        CHECK(p.holds(x) == pnn.holds(x));
    }
}

TEST_CASE("normalization keeps the truth value and lands on Ge/Gt/Eq") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> dist(-2, 2);
    for (const Sense s : {Sense::Ge, Sense::Gt, Sense::Le, Sense::Lt, Sense::Eq}) {
        const auto p = pred(dist(rng), dist(rng), dist(rng), s);
        const auto n = p.normalized();
        CHECK((n.sense == Sense::Ge || n.sense == Sense::Gt || n.sense == Sense::Eq));
        for (int i = 0; i < 100; ++i) {
            const VectorXd x = vec2(dist(rng), dist(rng));
            CHECK(p.holds(x) == n.holds(x));
        }
    }
}

TEST_CASE("sense names round-trip") {
    for (const Sense s : {Sense::Ge, Sense::Gt, Sense::Le, Sense::Lt, Sense::Eq}) {
        CHECK(senseFromName(senseName(s)) == s);
    }
    CHECK_THROWS_AS(senseFromName("bogus"), Error);
}

TEST_CASE("negation normal form eliminates Not and preserves truth") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> dist(-2, 2);
    for (int trial = 0; trial < 100; ++trial) {
        int leaves = 0;
        const Formula f = randomFormula(rng, 5, &leaves);
        const Formula n = toNnf(f);
        CHECK(noNot(n));
        for (int i = 0; i < 30; ++i) {
            const VectorXd x = vec2(dist(rng), dist(rng));
            CHECK(f.evaluate(x) == n.evaluate(x));
        }
    }
}

TEST_CASE("disjunction compiles to slack-binary pairs plus a cardinality row") {
    const Formula f = Formula::disjunction(
        {Formula::leaf(pred(1, 0, -1, Sense::Ge)), Formula::leaf(pred(0, 1, -1, Sense::Ge))});
    const ConstraintSystem sys = compileFormula(f, 2);
    CHECK(sys.numDecision == 2);
    CHECK(sys.numSlacks() == 2);
    CHECK(sys.numBinaries == 2);
    CHECK(sys.sos1Groups.size() == 2);
    CHECK(sys.cardinalities.size() == 1);
    CHECK(sys.cardinalities[0].minActive == 1);
    CHECK(sys.constraints.size() == 2);
    // Each row carries -1 on its own slack.
    CHECK(sys.coeff(0, 2) == doctest::Approx(-1.0));
    CHECK(sys.coeff(0, 3) == doctest::Approx(0.0));
    CHECK(sys.coeff(1, 3) == doctest::Approx(-1.0));
}

TEST_CASE("conjunction compiles to plain rows") {
    const Formula f = Formula::conjunction(
        {Formula::leaf(pred(1, 0, 0, Sense::Ge)), Formula::leaf(pred(0, 1, 0, Sense::Le))});
    const ConstraintSystem sys = compileFormula(f, 2);
    CHECK(sys.numSlacks() == 0);
    CHECK(sys.numBinaries == 0);
    CHECK(sys.constraints.size() == 2);
}

TEST_CASE("equality rows inside a disjunct are rejected") {
    const Formula f = Formula::disjunction(
        {Formula::leaf(pred(1, 0, 0, Sense::Eq)), Formula::leaf(pred(0, 1, 0, Sense::Ge))});
    CHECK_THROWS_AS(compileFormula(f, 2), Error);
}

TEST_CASE("empty connectives are arity errors") {
    ConstraintSystem sys = ConstraintSystem::overDecisionVars(2);
    CHECK_THROWS_AS(addConjunction(sys, {}), ArityError);
    CHECK_THROWS_AS(addDisjunction(sys, {}), ArityError);
    CHECK_THROWS_AS(Formula::conjunction({}), ArityError);
    CHECK_THROWS_AS(Formula::disjunction({}), ArityError);
}

TEST_CASE("compiled formulas agree with direct evaluation on random points") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> dist(-2.5, 2.5);
    const VectorXd lo = VectorXd::Constant(2, -3.0);
    const VectorXd hi = VectorXd::Constant(2, 3.0);
    for (int trial = 0; trial < 120; ++trial) {
        int leaves = 0;
        const Formula f = randomFormula(rng, 4, &leaves);
        const ConstraintSystem sys = compileFormula(f, 2, lo, hi);
        for (int i = 0; i < 15; ++i) {
            const VectorXd x = vec2(dist(rng), dist(rng));
            CHECK(f.evaluate(x) == pointFeasible(sys, x));
        }
    }
}

TEST_CASE("if-then-else fires the body exactly where the guard holds") {
    // guard: x0 <= 0, body: x1 >= 0.
    const Formula f = Formula::ifThenElse(pred(1, 0, 0, Sense::Le), pred(0, 1, 0, Sense::Ge));
    const ConstraintSystem sys =
        compileFormula(f, 2, VectorXd::Constant(2, -5.0), VectorXd::Constant(2, 5.0));
    CHECK(pointFeasible(sys, vec2(-1, 1)));
    CHECK_FALSE(pointFeasible(sys, vec2(-1, -1)));
    CHECK(pointFeasible(sys, vec2(1, -1)));  // guard false, body irrelevant
}

TEST_CASE("constraint system JSON round-trip keeps structure and infinities") {
    const Formula f = Formula::disjunction(
        {Formula::leaf(pred(1, 0.5, -1, Sense::Gt)), Formula::leaf(pred(0, 1, -1, Sense::Ge))});
    ConstraintSystem sys = compileFormula(f, 2);
    sys.validate();
    const ConstraintSystem back = ConstraintSystem::fromJson(sys.toJson());
    CHECK(back.numDecision == sys.numDecision);
    CHECK(back.numContinuous == sys.numContinuous);
    CHECK(back.numBinaries == sys.numBinaries);
    CHECK(back.sos1Groups.size() == sys.sos1Groups.size());
    CHECK(back.cardinalities.size() == sys.cardinalities.size());
    REQUIRE(back.constraints.size() == sys.constraints.size());
    for (std::size_t i = 0; i < sys.constraints.size(); ++i) {
        CHECK(back.constraints[i].sense == sys.constraints[i].sense);
        CHECK(back.constraints[i].constant == sys.constraints[i].constant);
        CHECK((back.constraints[i].coeffs - sys.constraints[i].coeffs).norm() == 0.0);
    }
    CHECK(back.lower(0) == -kInf);
    CHECK(back.upper(0) == kInf);
    back.validate();
}

TEST_CASE("two-piece barriers compile to the merged one-group encoding") {
    PartiallyAffineSystem sys;
    sys.n1 = 1;
    sys.n2 = 1;
    sys.m = 1;
    sys.f1 = [](const VectorXd& x) { return x.head(1); };
    sys.f2 = [](const VectorXd& x) { return x.tail(1); };
    sys.g = [](const VectorXd&) { return MatrixXd::Identity(1, 1); };
    sys.inputLower = VectorXd::Constant(1, -2.0);
    sys.inputUpper = VectorXd::Constant(1, 2.0);

    PiecewiseBarrier pw;
    // |x2| <= 1 as two pieces: x2 >= 0 -> 1 - x2, x2 <= 0 -> 1 + x2.
    pw.pieces.push_back({[](const VectorXd&) { return RowVectorXd::Constant(1, -1.0); },
                         [](const VectorXd&) { return 1.0; },
                         [](const VectorXd&) { return RowVectorXd::Constant(1, -1.0); },
                         [](const VectorXd&) { return 0.0; }});
    pw.pieces.push_back({[](const VectorXd&) { return RowVectorXd::Constant(1, 1.0); },
                         [](const VectorXd&) { return 1.0; },
                         [](const VectorXd&) { return RowVectorXd::Constant(1, 1.0); },
                         [](const VectorXd&) { return 0.0; }});
    const BarrierSpec spec = BarrierSpec::piecewise(1, 1, std::move(pw));

    const VectorXd x = vec2(0.0, 0.5);
    const ConstraintSystem cs = compilePiecewise(sys, spec, x);
    CHECK(cs.numDecision == 1);
    CHECK(cs.numSlacks() == 2);
    CHECK(cs.sos1Groups.size() == 1);
    CHECK(cs.constraints.size() == 4);
    int strictRows = 0;
    for (const auto& row : cs.constraints) strictRows += row.sense == Sense::Gt;
    CHECK(strictRows == 1);  // the second piece's open region row

    // Oracle: u feasible iff |x2 + u| <= 1, i.e. u in [-1.5, 0.5].
    for (double u = -2.0; u <= 2.0; u += 0.01) {
        const bool expect = std::abs(0.5 + u) <= 1.0 + 1e-12;
        CHECK(pointFeasible(cs, VectorXd::Constant(1, u)) == expect);
    }
}

TEST_CASE("single-piece barriers compile without integer structure") {
    PartiallyAffineSystem sys;
    sys.n1 = 1;
    sys.n2 = 1;
    sys.m = 1;
    sys.f1 = [](const VectorXd& x) { return x.head(1); };
    sys.f2 = [](const VectorXd& x) { return x.tail(1); };
    sys.g = [](const VectorXd&) { return MatrixXd::Identity(1, 1); };
    sys.inputLower = VectorXd::Constant(1, -2.0);
    sys.inputUpper = VectorXd::Constant(1, 2.0);
    PiecewiseBarrier pw;
    pw.pieces.push_back({[](const VectorXd&) { return RowVectorXd::Constant(1, -1.0); },
                         [](const VectorXd&) { return 1.0; },
                         [](const VectorXd&) { return RowVectorXd::Constant(1, 0.0); },
                         [](const VectorXd&) { return -1.0; }});  // guard always on
    const BarrierSpec spec = BarrierSpec::piecewise(1, 1, std::move(pw));
    const ConstraintSystem cs = compilePiecewise(sys, spec, vec2(0, 0.5));
    CHECK(cs.numSlacks() == 0);
    CHECK(cs.numBinaries == 0);
    CHECK(cs.sos1Groups.empty());
}
