#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "dtcbf/boolean.hpp"
#include "dtcbf/invariance.hpp"
#include "dtcbf/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dtcbf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

std::string timestampedDir(const std::string& tag) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", std::localtime(&now));
    return "out/" + tag + "-" + buf;
}

VehicleParams loadParams(const std::string& path) {
    if (path.empty()) return VehicleParams{};
    std::ifstream in(path);
    if (!in) throw ResourceError("cannot open params file: " + path);
    json j;
    in >> j;
    return VehicleParams::fromJson(j);
}

LateralState stateFromFlag(const std::vector<double>& v, const LateralState& fallback) {
    if (v.empty()) return fallback;
    if (v.size() != 4) throw DimensionError("--x0 expects 4 values: y,nu,psi,r");
    return {v[0], v[1], v[2], v[3]};
}

void persistTrace(const SimTrace& trace, const std::string& outDir,
                  const std::string& format) {
    fs::create_directories(outDir);
    if (format == "csv" || format == "both") trace.writeCsv(outDir + "/trace.csv");
    if (format == "json" || format == "both") trace.writeJson(outDir + "/trace.json");
    std::ofstream metrics(outDir + "/metrics.json");
    metrics << trace.metrics.toJson().dump(2) << "\n";
    std::cout << trace.metrics.toJson().dump(2) << "\n";
    std::cout << "wrote " << outDir << "\n";
}

// Random mixed-integer QPs over two decision variables: a PD objective plus a
// random mix of plain rows and compiled disjunctions.
MiqpProblem randomMiqp(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    std::uniform_int_distribution<int> rowCount(1, 3);
    std::uniform_int_distribution<int> orCount(0, 2);

    MiqpProblem prob;
    MatrixXd A(2, 2);
    A << coef(rng), coef(rng), coef(rng), coef(rng);
    prob.objective.H = A * A.transpose() + 0.5 * MatrixXd::Identity(2, 2);
    prob.objective.F = VectorXd(2);
    prob.objective.F << coef(rng), coef(rng);

    VectorXd lo = VectorXd::Constant(2, -4.0);
    VectorXd hi = VectorXd::Constant(2, 4.0);
    prob.system = ConstraintSystem::overDecisionVars(2, lo, hi);

    auto randPred = [&](double slackConstant) {
        AffinePredicate p;
        p.coeffs = RowVectorXd(2);
        p.coeffs << coef(rng), coef(rng);
        p.constant = coef(rng) + slackConstant;
        p.sense = Sense::Ge;
        return p;
    };
    const int rows = rowCount(rng);
    for (int i = 0; i < rows; ++i) prob.system.addConstraint(randPred(3.0));
    const int ors = orCount(rng);
    for (int i = 0; i < ors; ++i) {
        addDisjunction(prob.system, {randPred(0.0), randPred(0.0)});
    }
    return prob;
}

int cmdRunLk(const std::string& paramsPath, const std::vector<double>& x0Flag,
             double duration, double radius, std::string outDir, const std::string& format) {
    LkScenario sc;
    sc.params = loadParams(paramsPath);
    sc.x0 = stateFromFlag(x0Flag, sc.x0);
    if (duration > 0) sc.duration = duration;
    if (radius > 0) sc.radius = radius;
    if (outDir.empty()) outDir = timestampedDir("run-lk");
    const SimTrace trace = runLk(sc);
    persistTrace(trace, outDir, format);
    const bool ok = trace.metrics.maxAbsY <= sc.params.yMax + 1e-6 &&
                    trace.metrics.maxAbsAccel <= sc.params.aMax + 1e-6;
    if (!ok) std::cout << "bounds violated\n";
    return ok ? kExitOk : kExitCheckFailed;
}

int cmdRunOa(const std::string& paramsPath, const std::vector<double>& x0Flag,
             double duration, double radius, double splitTime, std::string outDir,
             const std::string& format) {
    OaScenario sc;
    sc.params = loadParams(paramsPath);
    sc.x0 = stateFromFlag(x0Flag, sc.x0);
    if (duration > 0) sc.duration = duration;
    if (radius > 0) sc.radius = radius;
    if (splitTime >= 0) sc.splitTime = splitTime;
    if (outDir.empty()) outDir = timestampedDir("run-oa");
    const SimTrace trace = runOa(sc);
    persistTrace(trace, outDir, format);
    const bool ok = trace.metrics.branchSwitches == 0 && trace.metrics.infeasibleSteps == 0;
    if (!ok) std::cout << "lane commitment failed\n";
    return ok ? kExitOk : kExitCheckFailed;
}

void writeReport(std::string outDir, const std::string& tag, const json& report) {
    if (outDir.empty()) outDir = timestampedDir(tag);
    fs::create_directories(outDir);
    std::ofstream out(outDir + "/report.json");
    out << report.dump(2) << "\n";
    std::cout << "wrote " << outDir << "/report.json\n";
}

int cmdCheckInvariance(const std::string& paramsPath, int samples, int steps,
                       std::uint64_t seed, const std::string& outDir) {
    const VehicleParams p = loadParams(paramsPath);
    const PartiallyAffineSystem sys = [&] {
        PartiallyAffineSystem s = mapReduced(p, 0.0, 0.0);
        const AccelBox box = accelConstraint(p, computeF0(p, 0.0, 0.0, 0.0));
        s.inputLower = VectorXd::Constant(1, box.uLower);
        s.inputUpper = VectorXd::Constant(1, box.uUpper);
        return s;
    }();
    const BarrierSpec spec = hLkPiecewiseSpec(p, 0.0);
    StateSampler sampler = [p](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> yDist(-p.yMax, p.yMax);
        VectorXd x(2);
        for (;;) {
            x(0) = yDist(rng);
            const double vCap = std::sqrt(2.0 * p.aMax * (p.yMax - std::abs(x(0))));
            std::uniform_real_distribution<double> vDist(-vCap, vCap);
            x(1) = vDist(rng);
            if (hLk(p, x(0), x(1)) >= 0.0) return x;
        }
    };
    const InvarianceReport report =
        checkInvariance(sys, spec, sampler, defaultSearch(), samples, steps, seed);
    std::cout << "invariant " << report.numInvariant << "/" << samples << " over " << steps
              << " steps\n";
    if (report.anyFalsification) std::cout << "controlled invariance falsified\n";
    json violations = json::array();
    for (const auto& s : report.samples) {
        if (s.invariant) continue;
        violations.push_back({{"x0", {s.x0(0), s.x0(1)}},
                              {"step", s.violationStep},
                              {"falsified", s.falsified}});
    }
    writeReport(outDir, "check-invariance",
                json{{"samples", samples},
                     {"steps", steps},
                     {"seed", seed},
                     {"invariant", report.numInvariant},
                     {"falsified", report.anyFalsification},
                     {"violations", std::move(violations)}});
    return (report.numInvariant == samples && !report.anyFalsification) ? kExitOk
                                                                        : kExitCheckFailed;
}

int cmdCompareSafesets(const std::string& paramsPath, int samples,
                       const std::vector<double>& gammas, std::uint64_t seed,
                       const std::string& outDir) {
    const VehicleParams p = loadParams(paramsPath);
    PartiallyAffineSystem sys = mapReduced(p, 0.0, 0.0);
    const AccelBox box = accelConstraint(p, 0.0);
    sys.inputLower = VectorXd::Constant(1, box.uLower);
    sys.inputUpper = VectorXd::Constant(1, box.uUpper);
    // Affine barrier h = eta+(y) - nu (valid on the nu >= 0 half of the lane
    // barrier), enough to exercise the subset relations.
    const BarrierSpec spec = BarrierSpec::affine(
        1, 1,
        AffineBarrier{[](const VectorXd&) { return RowVectorXd::Constant(1, -1.0); },
                      [p](const VectorXd& x1) {
                          return std::sqrt(2.0 * p.aMax * (p.yMax - x1(0)) +
                                           0.25 * p.aMax * p.aMax * p.ts * p.ts) -
                                 0.5 * p.aMax * p.ts;
                      }});
    json rows = json::array();
    long totalViolations = 0;
    for (const double gamma : gammas) {
        ComparisonParams cmp;
        cmp.gamma = gamma;
        cmp.alphaFn = [gamma](double s) { return std::min(gamma, 0.999) * s; };
        cmp.validate();

        std::mt19937_64 rng(seed);
        // Log-uniform distance to the lane edge: the region where the prior-work
        // sets are strictly smaller hugs y = yMax, where the barrier flattens out.
        std::uniform_real_distribution<double> logDist(std::log(1e-6),
                                                       std::log(2.0 * p.yMax));
        std::uniform_real_distribution<double> uDist(box.uLower, box.uUpper);
        long inKs = 0, inKp = 0, inKpp = 0, violations = 0;
        for (int i = 0; i < samples; ++i) {
            VectorXd x(2);
            x(0) = p.yMax - std::exp(logDist(rng));
            const double hMax = std::sqrt(2.0 * p.aMax * (p.yMax - x(0)) +
                                          0.25 * p.aMax * p.aMax * p.ts * p.ts) -
                                0.5 * p.aMax * p.ts;
            // Bias toward the boundary of S, where the prior-work sets are
            // strictly smaller.
            std::uniform_real_distribution<double> hDist(0.0, 0.2);
            x(1) = hMax - hDist(rng);
            VectorXd u(1);
            u(0) = uDist(rng);
            const bool ks = inSafeInputSet(sys, spec, x, u);
            const PriorMembership prior = inPriorInputSets(sys, spec, x, u, cmp);
            inKs += ks;
            inKp += prior.inKPrime;
            inKpp += prior.inKDoublePrime;
            if ((prior.inKPrime || prior.inKDoublePrime) && !ks) ++violations;
        }
        totalViolations += violations;
        std::cout << "gamma=" << gamma << "  |K_S| " << inKs << "  |K'| " << inKp
                  << "  |K''| " << inKpp << "  subset violations " << violations
                  << "  (n=" << samples << ")\n";
        rows.push_back({{"gamma", gamma},
                        {"in_safe_set", inKs},
                        {"in_decay_set", inKp},
                        {"in_class_k_set", inKpp},
                        {"subset_violations", violations},
                        {"samples", samples}});
    }
    writeReport(outDir, "compare-safesets",
                json{{"seed", seed}, {"results", std::move(rows)}});
    return totalViolations == 0 ? kExitOk : kExitCheckFailed;
}

int cmdSolverSelftest(int trials, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    int mismatches = 0;
    for (int i = 0; i < trials; ++i) {
        const MiqpProblem prob = randomMiqp(rng);
        const MiqpSolution bb = solveMiqp(prob);
        const MiqpSolution ref = bruteForce(prob);
        bool same = bb.status == ref.status;
        if (same && bb.status == MiqpStatus::Optimal) {
            same = std::abs(bb.objective - ref.objective) <= 1e-8 &&
                   (bb.u - ref.u).lpNorm<Eigen::Infinity>() <= 1e-6;
        }
        if (!same) {
            ++mismatches;
            std::cout << "mismatch on trial " << i << "\n";
        }
    }
    std::cout << "selftest " << (trials - mismatches) << "/" << trials << " matched\n";
    return mismatches == 0 ? kExitOk : kExitCheckFailed;
}

int cmdCompileDebug(const std::string& paramsPath, const std::vector<double>& x0Flag,
                    const std::string& scenario, double radius) {
    const VehicleParams p = loadParams(paramsPath);
    const LkGainAndCost gains = LkGainAndCost::defaults(p);
    const LateralState x = stateFromFlag(x0Flag, LateralState{});
    const double rd = radius > 0 ? p.V0 / radius : 0.0;
    MiqpProblem prob;
    if (scenario == "lk") {
        prob = buildLkMiqp(p, gains, x, rd);
    } else if (scenario == "oa") {
        prob = buildOaMiqp(p, gains, x, rd, -rd);
    } else {
        throw DomainError("compile-debug: scenario must be lk or oa");
    }
    std::cout << prob.toJson().dump(2) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete-time control-barrier toolbox: lane scenarios, invariance "
                 "checks and mixed-integer solver diagnostics"};
    app.require_subcommand(1);

    std::string paramsPath;
    std::string outDir;
    std::string format = "both";
    std::vector<double> x0Flag;
    double duration = -1.0;
    double radius = -1.0;
    double splitTime = -1.0;
    int samples = 100;
    int steps = 50;
    int trials = 100;
    double gamma = 0.5;
    std::uint64_t seed = 1;
    std::string scenario = "lk";

    auto addCommon = [&](CLI::App* cmd) {
        cmd->add_option("--params", paramsPath, "vehicle parameter JSON file");
        cmd->add_option("--seed", seed, "RNG seed");
    };

    auto* lk = app.add_subcommand("run-lk", "curved-road lane keeping run");
    addCommon(lk);
    lk->add_option("--out", outDir, "output directory (default: timestamped under out/)");
    lk->add_option("--format", format, "csv, json or both")
        ->check(CLI::IsMember({"csv", "json", "both"}));
    lk->add_option("--x0", x0Flag, "initial state y,nu,psi,r")->delimiter(',')->expected(4);
    lk->add_option("--duration", duration, "run length, s");
    lk->add_option("--radius", radius, "curve radius, m");

    auto* oa = app.add_subcommand("run-oa", "lane choice run with a road split");
    addCommon(oa);
    oa->add_option("--out", outDir, "output directory (default: timestamped under out/)");
    oa->add_option("--format", format, "csv, json or both")
        ->check(CLI::IsMember({"csv", "json", "both"}));
    oa->add_option("--x0", x0Flag, "initial state y,nu,psi,r")->delimiter(',')->expected(4);
    oa->add_option("--duration", duration, "run length, s");
    oa->add_option("--radius", radius, "lane curve radius, m");
    oa->add_option("--split", splitTime, "time the lanes separate, s");

    auto* inv = app.add_subcommand("check-invariance",
                                   "roll random safe states forward under the barrier");
    addCommon(inv);
    inv->add_option("--out", outDir, "report directory (default: timestamped under out/)");
    inv->add_option("--samples", samples, "number of initial states");
    inv->add_option("--steps", steps, "steps per rollout");

    auto* cmp = app.add_subcommand("compare-safesets",
                                   "sampled subset check of the prior-work input sets");
    addCommon(cmp);
    cmp->add_option("--samples", samples, "number of sampled (state, input) pairs");
    cmp->add_option("--out", outDir, "report directory (default: timestamped under out/)");
    auto* gammaOpt = cmp->add_option("--gamma", gamma, "decay rate in [0, 1] (default: sweep)")
                         ->check(CLI::Range(0.0, 1.0));

    auto* self = app.add_subcommand("solver-selftest",
                                    "branch-and-bound vs exhaustive enumeration");
    addCommon(self);
    self->add_option("--trials", trials, "number of random problems");

    auto* dbg = app.add_subcommand("compile-debug",
                                   "dump the compiled mixed-integer program as JSON");
    addCommon(dbg);
    dbg->add_option("--scenario", scenario, "lk or oa")
        ->check(CLI::IsMember({"lk", "oa"}));
    dbg->add_option("--x0", x0Flag, "state y,nu,psi,r")->delimiter(',')->expected(4);
    dbg->add_option("--radius", radius, "curve radius, m");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (lk->parsed()) return cmdRunLk(paramsPath, x0Flag, duration, radius, outDir, format);
        if (oa->parsed())
            return cmdRunOa(paramsPath, x0Flag, duration, radius, splitTime, outDir, format);
        if (inv->parsed()) return cmdCheckInvariance(paramsPath, samples, steps, seed, outDir);
        if (cmp->parsed()) {
            const std::vector<double> gammas =
                gammaOpt->count() > 0 ? std::vector<double>{gamma}
                                      : std::vector<double>{0.25, 0.5, 0.75, 1.0};
            return cmdCompareSafesets(paramsPath, samples, gammas, seed, outDir);
        }
        if (self->parsed()) return cmdSolverSelftest(trials, seed);
        if (dbg->parsed()) return cmdCompileDebug(paramsPath, x0Flag, scenario, radius);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCheckFailed;
    }
    return kExitUsage;
}
