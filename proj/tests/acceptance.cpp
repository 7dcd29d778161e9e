// Acceptance gate: one pass/fail line per criterion, nonzero exit when any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#include "dtcbf/boolean.hpp"
#include "dtcbf/invariance.hpp"
#include "dtcbf/sim.hpp"

using namespace dtcbf;

namespace {

int failures = 0;

void report(const char* name, bool ok, const std::string& detail = "") {
    std::printf("[%s] %s%s%s\n", ok ? "PASS" : "FAIL", name, detail.empty() ? "" : " -- ",
                detail.c_str());
    if (!ok) ++failures;
}

VectorXd vec2(double a, double b) {
    VectorXd v(2);
    v << a, b;
    return v;
}

// --- 1. Lane keeping stays inside the lane and the acceleration limit ------

void criterionLaneKeeping() {
    LkScenario sc;  // 20 s, curve onset at 10 s, 500 m radius
    const SimTrace trace = runLk(sc);
    const bool ok = trace.metrics.maxAbsY <= sc.params.yMax + 1e-6 &&
                    trace.metrics.maxAbsAccel <= sc.params.aMax + 1e-6 &&
                    trace.metrics.infeasibleSteps == 0 && trace.metrics.minH >= 0.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "max|y|=%.4f m (<=%.1f), max|a|=%.4f m/s^2 (<=%.3f), infeasible=%d",
                  trace.metrics.maxAbsY, sc.params.yMax, trace.metrics.maxAbsAccel,
                  sc.params.aMax, trace.metrics.infeasibleSteps);
    report("lane keeping respects displacement and acceleration bounds", ok, buf);
}

// --- 2. Lane choice commits to one branch after the split ------------------

void criterionLaneChoice() {
    OaScenario sc;  // 10 s, lanes split at 1 s, x0 = (-0.8, 0, 0, 0)
    const SimTrace trace = runOa(sc);
    const int lane = trace.steps.empty() ? -1 : trace.steps.back().lane;
    const double chosenMinH = lane == 0 ? trace.metrics.minHLane0 : trace.metrics.minHLane1;
    const double otherMinH = lane == 0 ? trace.metrics.minHLane1 : trace.metrics.minHLane0;
    const bool ok = trace.metrics.branchSwitches == 0 && trace.metrics.infeasibleSteps == 0 &&
                    chosenMinH >= -1e-6 && otherMinH < 0.0 &&
                    trace.metrics.maxAbsY <= sc.params.yMax + 1e-6;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "lane=%d, switches=%d, chosen min h=%.4f, discarded min h=%.4f, max|y|=%.4f",
                  lane, trace.metrics.branchSwitches, chosenMinH, otherMinH,
                  trace.metrics.maxAbsY);
    report("lane choice commits to a single branch after the split", ok, buf);
}

// --- 3. Branch and bound vs exhaustive enumeration -------------------------

// Up to 4 decision variables and up to 4 SOS-1 groups (two 2-way
// disjunctions), random PD objective, mixed senses.
MiqpProblem randomMiqp(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    std::uniform_int_distribution<int> dimDist(2, 4);
    std::uniform_int_distribution<int> rowCount(0, 3);
    std::uniform_int_distribution<int> orCount(0, 2);
    std::uniform_int_distribution<int> senseDist(0, 3);
    const int n = dimDist(rng);
    MiqpProblem prob;
    MatrixXd A(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) A(i, j) = coef(rng);
    }
    prob.objective.H = A * A.transpose() + 0.4 * MatrixXd::Identity(n, n);
    prob.objective.F = VectorXd(n);
    for (int i = 0; i < n; ++i) prob.objective.F(i) = coef(rng);
    prob.system = ConstraintSystem::overDecisionVars(n, VectorXd::Constant(n, -4.0),
                                                     VectorXd::Constant(n, 4.0));
    auto randPred = [&](double lift) {
        AffinePredicate p;
        p.coeffs = RowVectorXd(n);
        for (int i = 0; i < n; ++i) p.coeffs(i) = coef(rng);
        p.constant = coef(rng) + lift;
        p.sense = static_cast<Sense>(senseDist(rng));
        return p;
    };
    for (int i = 0, k = rowCount(rng); i < k; ++i) prob.system.addConstraint(randPred(3.0));
    for (int i = 0, k = orCount(rng); i < k; ++i) {
        addDisjunction(prob.system, {randPred(0.0), randPred(0.0)});
    }
    return prob;
}

void criterionSolverAgreement() {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240817);
    int mismatches = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const MiqpProblem prob = randomMiqp(rng);
        const MiqpSolution bb = solveMiqp(prob);
        const MiqpSolution ref = bruteForce(prob);
        bool same = bb.status == ref.status;
        if (same && bb.status == MiqpStatus::Optimal) {
            same = std::abs(bb.objective - ref.objective) <= 1e-8 && bb.binaries == ref.binaries;
        }
        if (!same) ++mismatches;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%d/100 agreed with enumeration (tol 1e-8) in %.2f s",
                  100 - mismatches, secs);
    report("mixed-integer solver matches the enumeration oracle",
           mismatches == 0 && secs < 10.0, buf);
}

// --- 4. Compiled formulas are truth-table equivalent to direct evaluation --

struct OpCounts {
    int negation = 0, conjunction = 0, disjunction = 0, implies = 0, xorOp = 0, equiv = 0;
    bool allAtLeast(int k) const {
        return negation >= k && conjunction >= k && disjunction >= k && implies >= k &&
               xorOp >= k && equiv >= k;
    }
};

Formula randomFormula(std::mt19937_64& rng, int leafBudget, OpCounts* counts) {
    std::uniform_real_distribution<double> coef(-1.5, 1.5);
    std::uniform_int_distribution<int> senseDist(0, 3);
    auto randLeaf = [&] {
        AffinePredicate p;
        p.coeffs = RowVectorXd(2);
        p.coeffs << coef(rng), coef(rng);
        p.constant = coef(rng);
        p.sense = static_cast<Sense>(senseDist(rng));
        return Formula::leaf(p);
    };
    if (leafBudget <= 1) return randLeaf();
    std::uniform_int_distribution<int> opDist(0, 6);
    const int op = opDist(rng);
    if (op == 0) return randLeaf();
    if (op == 1) {
        ++counts->negation;
        return Formula::negation(randomFormula(rng, leafBudget, counts));
    }
    const int left = std::uniform_int_distribution<int>(1, leafBudget - 1)(rng);
    Formula a = randomFormula(rng, left, counts);
    Formula b = randomFormula(rng, leafBudget - left, counts);
    switch (op) {
        case 2: ++counts->conjunction; return Formula::conjunction({std::move(a), std::move(b)});
        case 3: ++counts->disjunction; return Formula::disjunction({std::move(a), std::move(b)});
        case 4: ++counts->implies; return Formula::implies(std::move(a), std::move(b));
        case 5: ++counts->xorOp; return Formula::exclusiveOr(std::move(a), std::move(b));
        default: ++counts->equiv; return Formula::equivalent(std::move(a), std::move(b));
    }
}

bool anyLeafNearBoundary(const Formula& f, const VectorXd& x, double margin) {
    if (f.kind == Formula::Kind::Leaf) return std::abs(f.pred.lhs(x)) < margin;
    for (const auto& c : f.children) {
        if (anyLeafNearBoundary(c, x, margin)) return true;
    }
    return false;
}

void criterionTruthTables() {
    std::mt19937_64 rng(4242);
    const VectorXd lo = VectorXd::Constant(2, -3.0);
    const VectorXd hi = VectorXd::Constant(2, 3.0);
    OpCounts counts;
    int mismatches = 0, formulas = 0, points = 0;
    while ((!counts.allAtLeast(20) || formulas < 200) && formulas < 3000) {
        OpCounts delta;
        const Formula f = randomFormula(rng, 6, &delta);
        const ConstraintSystem sys = compileFormula(f, 2, lo, hi);
        // Deeply nested exclusive-or chains expand into many branch groups;
        // feasibility checking enumerates them, so cap the blowup.
        if (sys.sos1Groups.size() > 12) continue;
        ++formulas;
        counts.negation += delta.negation;
        counts.conjunction += delta.conjunction;
        counts.disjunction += delta.disjunction;
        counts.implies += delta.implies;
        counts.xorOp += delta.xorOp;
        counts.equiv += delta.equiv;
        // 5x5 grid over the decision box, skipping boundary-tied leaves.
        for (int gi = 0; gi < 5; ++gi) {
            for (int gj = 0; gj < 5; ++gj) {
                const VectorXd x = vec2(-2.4 + 1.2 * gi, -2.4 + 1.2 * gj);
                if (anyLeafNearBoundary(f, x, 1e-6)) continue;
                if (f.evaluate(x) != pointFeasible(sys, x)) ++mismatches;
                ++points;
            }
        }
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "%d formulas, %d points, %d mismatches; op uses: not=%d and=%d or=%d "
                  "implies=%d xor=%d equiv=%d",
                  formulas, points, mismatches, counts.negation, counts.conjunction,
                  counts.disjunction, counts.implies, counts.xorOp, counts.equiv);
    report("compiled formulas are truth-table equivalent to evaluation",
           mismatches == 0 && counts.allAtLeast(20), buf);
}

// --- 5. Prior-work input sets are (strict) subsets of the safe input set ---

void criterionSubsets() {
    std::mt19937_64 rng(1001);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int violations = 0, witnessPrime = 0, witnessDouble = 0, coincidence = 0, tested = 0;
    const int n = 10000;
    while (tested < n) {
        // Random scalar-block affine system with a random affine barrier.
        const double a11 = coef(rng), a21 = coef(rng), a22 = coef(rng), drift = coef(rng);
        const double gain = 0.5 + unit(rng);
        PartiallyAffineSystem sys;
        sys.n1 = 1;
        sys.n2 = 1;
        sys.m = 1;
        sys.f1 = [a11](const VectorXd& x) { return VectorXd::Constant(1, a11 * x(0)); };
        sys.f2 = [a21, a22, drift](const VectorXd& x) {
            return VectorXd::Constant(1, a21 * x(0) + a22 * x(1) + drift);
        };
        sys.g = [gain](const VectorXd&) { return MatrixXd::Constant(1, 1, gain); };
        sys.inputLower = VectorXd::Constant(1, -1.0);
        sys.inputUpper = VectorXd::Constant(1, 1.0);
        const double mu = coef(rng) < 0 ? -1.0 : 1.0;
        const double nuSlope = coef(rng), nuOff = 1.0 + unit(rng);
        const BarrierSpec spec = BarrierSpec::affine(
            1, 1,
            AffineBarrier{[mu](const VectorXd&) { return RowVectorXd::Constant(1, mu); },
                          [nuSlope, nuOff](const VectorXd& x1) {
                              return nuSlope * x1(0) + nuOff;
                          }});
        const VectorXd x = vec2(coef(rng), coef(rng));
        if (barrierValue(spec, x) < 0.0) continue;  // memberships need x in S
        const VectorXd u = VectorXd::Constant(1, coef(rng));
        ComparisonParams cmp;
        cmp.gamma = unit(rng);
        const double slope = 0.05 + 0.9 * unit(rng);
        cmp.alphaFn = [slope](double s) { return slope * s; };
        cmp.validate();
        ComparisonParams lax;
        lax.gamma = 1.0;
        lax.alphaFn = [](double s) { return s; };  // identity

        const bool ks = inSafeInputSet(sys, spec, x, u);
        const PriorMembership prior = inPriorInputSets(sys, spec, x, u, cmp);
        if ((prior.inKPrime || prior.inKDoublePrime) && !ks) ++violations;
        if (ks && !prior.inKPrime) ++witnessPrime;
        if (ks && !prior.inKDoublePrime) ++witnessDouble;
        const PriorMembership same = inPriorInputSets(sys, spec, x, u, lax);
        if (same.inKPrime == ks && same.inKDoublePrime == ks) ++coincidence;
        ++tested;
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "n=%d, subset violations=%d, strict witnesses K'=%d K''=%d, "
                  "gamma=1/alpha=id coincidence=%d/%d",
                  n, violations, witnessPrime, witnessDouble, coincidence, n);
    report("prior-work input sets are strict subsets of the safe input set",
           violations == 0 && witnessPrime > 0 && witnessDouble > 0 && coincidence == n, buf);
}

// --- 6. Lane-centering encoding equals the barrier oracle on a dense grid --

void criterionLaneGridOracle() {
    const VehicleParams p;
    std::mt19937_64 rng(555);
    std::uniform_real_distribution<double> yDist(-0.7, 0.7);
    std::uniform_real_distribution<double> vDist(-0.8, 0.8);
    std::uniform_real_distribution<double> smallDist(-0.02, 0.02);
    int mismatches = 0, compared = 0;
    for (int s = 0; s < 50; ++s) {
        const LateralState x{yDist(rng), vDist(rng), smallDist(rng), smallDist(rng)};
        const double rd = smallDist(rng) / 2;
        ConstraintSystem sys = ConstraintSystem::overDecisionVars(1);
        lcCbfFragment(p, x, rd, sys);
        const double yNext = x.y + p.ts * (x.nu + p.V0 * x.psi);
        const double psiNext = x.psi + p.ts * (x.r - rd);
        const double alphaHat = -(p.Cf + p.Cr) / (p.M * p.V0);
        const double betaHat = (p.b * p.Cr - p.a * p.Cf) / (p.M * p.V0) - p.V0;
        const double z = p.V0 * psiNext + (1.0 + p.ts * alphaHat) * x.nu + p.ts * betaHat * x.r;
        const double w = p.ts * p.Cf / p.M;
        for (int k = 0; k < 2001; ++k) {
            const double u = -0.05 + 0.0001 * k * 0.5;  // [-0.05, 0.05], 2001 points
            const double h = hLk(p, yNext, z + w * u);
            if (std::abs(h) < 1e-9) continue;  // boundary ties fall to tolerance
            if (pointFeasible(sys, VectorXd::Constant(1, u)) != (h >= 0.0)) ++mismatches;
            ++compared;
        }
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%d grid points compared, %d mismatches", compared,
                  mismatches);
    report("lane-centering encoding matches the barrier oracle on a 50x2001 grid",
           mismatches == 0 && compared > 90000, buf);
}

// --- 7. Pole placement reaches the requested spectrum ----------------------

void criterionPolePlacement() {
    const VehicleParams p;
    const VehicleMatrices m = buildMatrices(p);
    const Eigen::Vector4d poles{0.95, 0.8, 0.85, 0.9};
    const Eigen::RowVector4d K = polePlace(m.Ad, m.Bd, poles);
    Eigen::VectorXcd eig =
        Eigen::EigenSolver<Eigen::Matrix4d>(m.Ad - m.Bd * K).eigenvalues();
    std::vector<double> re;
    double maxImag = 0.0;
    for (int i = 0; i < 4; ++i) {
        re.push_back(eig(i).real());
        maxImag = std::max(maxImag, std::abs(eig(i).imag()));
    }
    std::sort(re.begin(), re.end());
    Eigen::Vector4d want = poles;
    std::sort(want.data(), want.data() + 4);
    double residual = maxImag;
    for (int i = 0; i < 4; ++i) {
        residual = std::max(residual, std::abs(re[static_cast<std::size_t>(i)] - want(i)));
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "spectrum residual %.2e (<= 1e-6)", residual);
    report("pole placement reaches the requested closed-loop spectrum", residual <= 1e-6, buf);
}

// --- 8. The sampled barrier converges monotonically to the continuous one --

void criterionSamplingConvergence() {
    const double tsValues[] = {1e-2, 1e-3, 1e-4};
    bool monotone = true, bounded = true;
    for (double y = -0.85; y <= 0.85; y += 0.05) {
        for (double v = -1.0; v <= 1.0; v += 0.1) {
            double prev = -1.0;
            for (double ts : tsValues) {
                VehicleParams p;
                p.ts = ts;
                const double gap = std::abs(hLk(p, y, v) - hLkContinuousLimit(p, y, v));
                if (prev >= 0.0 && gap > prev + 1e-12) monotone = false;
                prev = gap;
                if (std::abs(v) < 1e-12 && gap > p.aMax * ts + 1e-6) bounded = false;
            }
        }
    }
    report("sampled barrier converges monotonically to the continuous-time one",
           monotone && bounded,
           monotone ? (bounded ? "gap shrinks with ts and is O(aMax ts) at rest"
                               : "gap bound at v=0 violated")
                    : "gap not monotone in ts");
}

// --- 9. Controlled invariance: certified falsifier plus the lane system ----

InputSearch miqpSearch() {
    return [](const PartiallyAffineSystem& sys, const BarrierSpec& spec,
              const VectorXd& x) -> InputSearchResult {
        MiqpProblem prob;
        prob.system = compilePiecewise(sys, spec, x);
        prob.objective.H = MatrixXd::Identity(sys.m, sys.m);
        prob.objective.F = VectorXd::Zero(sys.m);
        const MiqpSolution sol = solveMiqp(prob);
        if (sol.status == MiqpStatus::Optimal) return {sol.u, false};
        return {std::nullopt, true};  // exact search: infeasibility is a certificate
    };
}

void criterionInvariance() {
    // A certified falsifier: h = x2, f2(x) = x2 - 10, |u| <= 1. At x2 = 0 the
    // best achievable next value is -9, so the safe input set is empty.
    PartiallyAffineSystem bad;
    bad.n1 = 1;
    bad.n2 = 1;
    bad.m = 1;
    bad.f1 = [](const VectorXd& x) { return x.head(1); };
    bad.f2 = [](const VectorXd& x) { return VectorXd::Constant(1, x(1) - 10.0); };
    bad.g = [](const VectorXd&) { return MatrixXd::Identity(1, 1); };
    bad.inputLower = VectorXd::Constant(1, -1.0);
    bad.inputUpper = VectorXd::Constant(1, 1.0);
    const BarrierSpec halfLine = BarrierSpec::affine(
        1, 1,
        AffineBarrier{[](const VectorXd&) { return RowVectorXd::Constant(1, 1.0); },
                      [](const VectorXd&) { return 0.0; }});
    StateSampler badSampler = [](std::mt19937_64&) { return vec2(0.0, 0.0); };
    const InvarianceReport badRep =
        checkInvariance(bad, halfLine, badSampler, defaultSearch(), 5, 10, 3);
    const bool falsified = badRep.anyFalsification && badRep.numInvariant == 0;

    // The reduced lane system under the piecewise barrier, inputs found by the
    // exact mixed-integer search.
    const VehicleParams p;
    PartiallyAffineSystem lane = mapReduced(p, 0.0, 0.0);
    const AccelBox box = accelConstraint(p, 0.0);
    lane.inputLower = VectorXd::Constant(1, box.uLower);
    lane.inputUpper = VectorXd::Constant(1, box.uUpper);
    const BarrierSpec spec = hLkPiecewiseSpec(p, 0.0);
    StateSampler sampler = [p](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> yDist(-p.yMax, p.yMax);
        for (;;) {
            VectorXd x(2);
            x(0) = yDist(rng);
            const double vCap = std::sqrt(2.0 * p.aMax * (p.yMax - std::abs(x(0)))) + 0.1;
            std::uniform_real_distribution<double> vDist(-vCap, vCap);
            x(1) = vDist(rng);
            if (hLk(p, x(0), x(1)) >= 0.0) return x;
        }
    };
    const InvarianceReport rep =
        checkInvariance(lane, spec, sampler, miqpSearch(), 100, 50, 99);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "falsifier certified=%s, lane rollouts invariant=%d/100",
                  falsified ? "yes" : "no", rep.numInvariant);
    report("controlled invariance: falsifier certified and lane system invariant",
           falsified && rep.numInvariant == 100 && !rep.anyFalsification, buf);
}

}  // namespace

int main() {
    std::setvbuf(stdout, nullptr, _IOLBF, 0);
    criterionLaneKeeping();
    criterionLaneChoice();
    criterionSolverAgreement();
    criterionTruthTables();
    criterionSubsets();
    criterionLaneGridOracle();
    criterionPolePlacement();
    criterionSamplingConvergence();
    criterionInvariance();
    if (failures > 0) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all acceptance criteria passed\n");
    return 0;
}
