#include "dtcbf/vehicle.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include <cmath>

namespace dtcbf {

using nlohmann::json;

void VehicleParams::validate() const {
    const double vals[] = {V0, Cf, Cr, M, a, b, Iz, gAccel, aMax, yMax, ts};
    for (double v : vals) {
        if (!(v > 0.0)) throw DomainError("VehicleParams: all parameters must be positive");
    }
    if (aMax > gAccel) throw DomainError("VehicleParams: aMax must not exceed g");
}

json VehicleParams::toJson() const {
    return json{{"V0", V0},   {"Cf", Cf},       {"Cr", Cr},     {"M", M},
                {"a", a},     {"b", b},         {"Iz", Iz},     {"g", gAccel},
                {"a_max", aMax}, {"y_max", yMax}, {"t_s", ts}};
}

VehicleParams VehicleParams::fromJson(const json& j) {
    VehicleParams p;
    p.V0 = j.value("V0", p.V0);
    p.Cf = j.value("Cf", p.Cf);
    p.Cr = j.value("Cr", p.Cr);
    p.M = j.value("M", p.M);
    p.a = j.value("a", p.a);
    p.b = j.value("b", p.b);
    p.Iz = j.value("Iz", p.Iz);
    p.gAccel = j.value("g", p.gAccel);
    p.aMax = j.value("a_max", p.aMax);
    p.yMax = j.value("y_max", p.yMax);
    p.ts = j.value("t_s", p.ts);
    p.validate();
    return p;
}

VehicleMatrices buildMatrices(const VehicleParams& p) {
    VehicleMatrices m;
    const double mv = p.M * p.V0;
    const double iv = p.Iz * p.V0;
    m.A << 0, 1, p.V0, 0,
           0, -(p.Cf + p.Cr) / mv, 0, (p.b * p.Cr - p.a * p.Cf) / mv - p.V0,
           0, 0, 0, 1,
           0, (p.b * p.Cr - p.a * p.Cf) / iv, 0, -(p.a * p.a * p.Cf + p.b * p.b * p.Cr) / iv;
    m.B << 0, p.Cf / p.M, 0, p.a * p.Cf / p.Iz;
    m.E << 0, 0, -1, 0;
    m.Ad = Eigen::Matrix4d::Identity() + m.A * p.ts;
    m.Bd = m.B * p.ts;
    m.Ed = m.E * p.ts;
    return m;
}

LateralState stepVehicle(const VehicleParams& p, const LateralState& x, double u, double rd) {
    const VehicleMatrices m = buildMatrices(p);
    return LateralState::fromVec(m.Ad * x.vec() + m.Bd * u + m.Ed * rd);
}

PartiallyAffineSystem mapReduced(const VehicleParams& p, double psi, double r) {
    PartiallyAffineSystem sys;
    sys.n1 = 1;
    sys.n2 = 1;
    sys.m = 1;
    const double ts = p.ts;
    const double V0 = p.V0;
    const double nuDecay = 1.0 - ts * (p.Cf + p.Cr) / (p.M * V0);
    const double rCoupling = ts * ((p.b * p.Cr - p.a * p.Cf) / (p.M * V0) - V0);
    sys.f1 = [ts, V0, psi](const VectorXd& x) {
        VectorXd out(1);
        out(0) = x(0) + ts * x(1) + ts * V0 * psi;
        return out;
    };
    sys.f2 = [nuDecay, rCoupling, r](const VectorXd& x) {
        VectorXd out(1);
        out(0) = nuDecay * x(1) + rCoupling * r;
        return out;
    };
    const double gain = ts * p.Cf / p.M;
    sys.g = [gain](const VectorXd&) {
        MatrixXd g(1, 1);
        g(0, 0) = gain;
        return g;
    };
    sys.inputLower = unboundedLower(1);
    sys.inputUpper = unboundedUpper(1);
    return sys;
}

ReducedModel mapReduced(const VehicleParams& p, const LateralState& x) {
    ReducedModel model;
    model.sys = mapReduced(p, x.psi, x.r);
    model.x = VectorXd(2);
    model.x << x.y, x.nu;
    return model;
}

double computeF0(const VehicleParams& p, double nu, double r, double rd) {
    return p.Cf * (nu + p.a * r) / p.V0 + p.Cr * (nu - p.b * r) / p.V0 + p.M * p.V0 * rd;
}

AccelBox accelConstraint(const VehicleParams& p, double F0) {
    AccelBox box;
    box.uUpper = (p.M * p.aMax + F0) / p.Cf;
    box.uLower = -(p.M * p.aMax - F0) / p.Cf;
    box.empty = box.uUpper < box.uLower;
    return box;
}

namespace {

double sgn(double v) { return v >= 0.0 ? 1.0 : -1.0; }  // sgn(0) = +1

double stoppingRadical(const VehicleParams& p, double y, double v) {
    const double arg = 2.0 * p.aMax * (p.yMax - sgn(v) * y) + 0.25 * p.aMax * p.aMax * p.ts * p.ts;
    if (arg < 0.0) {
        throw UnsafeStateError("hLk: state outside the barrier domain", y, v);
    }
    return std::sqrt(arg);
}

// eta(y) = sqrt(2 aMax (yMax -+ y) + aMax^2 ts^2 / 4) - aMax ts / 2 for a
// fixed travel direction (+1 or -1).
double etaDirected(const VehicleParams& p, double y, double direction) {
    const double arg =
        2.0 * p.aMax * (p.yMax - direction * y) + 0.25 * p.aMax * p.aMax * p.ts * p.ts;
    if (arg < 0.0) {
        throw UnsafeStateError("eta: displacement outside the barrier domain", y, direction);
    }
    return std::sqrt(arg) - 0.5 * p.aMax * p.ts;
}

}  // namespace

double hLk(const VehicleParams& p, double y, double v) {
    return stoppingRadical(p, y, v) - std::abs(v) - 0.5 * p.aMax * p.ts;
}

double hLkContinuousLimit(const VehicleParams& p, double y, double v) {
    const double arg = 2.0 * p.aMax * (p.yMax - sgn(v) * y);
    if (arg < 0.0) {
        throw UnsafeStateError("hLkContinuousLimit: state outside the barrier domain", y, v);
    }
    return std::sqrt(arg) - std::abs(v);
}

BarrierSpec hLkPiecewiseSpec(const VehicleParams& p, double psi) {
    PiecewiseBarrier pw;
    const double V0psi = p.V0 * psi;
    // Piece 0: v >= 0, h = eta+(y) - v.
    PiecewiseBarrier::Piece plus;
    plus.mu = [](const VectorXd&) { return RowVectorXd::Constant(1, -1.0); };
    plus.nu = [p, V0psi](const VectorXd& x1) { return etaDirected(p, x1(0), 1.0) - V0psi; };
    plus.kappa = [](const VectorXd&) { return RowVectorXd::Constant(1, -1.0); };
    plus.lambda = [V0psi](const VectorXd&) { return -V0psi; };
    pw.pieces.push_back(plus);
    // Piece 1: v <= 0, h = eta-(y) + v.
    PiecewiseBarrier::Piece minus;
    minus.mu = [](const VectorXd&) { return RowVectorXd::Constant(1, 1.0); };
    minus.nu = [p, V0psi](const VectorXd& x1) { return etaDirected(p, x1(0), -1.0) + V0psi; };
    minus.kappa = [](const VectorXd&) { return RowVectorXd::Constant(1, 1.0); };
    minus.lambda = [V0psi](const VectorXd&) { return V0psi; };
    pw.pieces.push_back(minus);
    return BarrierSpec::piecewise(1, 1, std::move(pw));
}

void lcCbfFragment(const VehicleParams& p, const LateralState& x, double rd,
                   ConstraintSystem& sys) {
    if (sys.numDecision < 1) {
        throw DimensionError("lcCbfFragment: need at least one decision variable");
    }
    const double yNext = x.y + p.ts * (x.nu + p.V0 * x.psi);
    const double psiNext = x.psi + p.ts * (x.r - rd);
    const double alphaHat = -(p.Cf + p.Cr) / (p.M * p.V0);
    const double betaHat = (p.b * p.Cr - p.a * p.Cf) / (p.M * p.V0) - p.V0;
    const double z = p.V0 * psiNext + (1.0 + p.ts * alphaHat) * x.nu + p.ts * betaHat * x.r;
    const double w = p.ts * p.Cf / p.M;
    const double etaPlus = etaDirected(p, yNext, 1.0);
    const double etaMinus = etaDirected(p, yNext, -1.0);

    const int s1 = sys.addSlack(0.0, kInf, "lccbf.s1");
    const int s2 = sys.addSlack(0.0, kInf, "lccbf.s2");
    auto row = [&](double uCoeff, double constant, int slack, Sense sense,
                   const std::string& label) {
        AffinePredicate pred;
        pred.coeffs = RowVectorXd::Zero(sys.numContinuous);
        pred.coeffs(0) = uCoeff;
        pred.coeffs(slack) = 1.0;
        pred.constant = constant;
        pred.sense = sense;
        pred.label = label;
        sys.addConstraint(std::move(pred));
    };
    row(-w, etaPlus - z, s1, Sense::Ge, "lccbf.plus.body");
    row(w, z, s1, Sense::Ge, "lccbf.plus.region");
    row(w, etaMinus + z, s2, Sense::Ge, "lccbf.minus.body");
    row(-w, -z, s2, Sense::Gt, "lccbf.minus.region");
    sys.addSos1({{{false, s1}, {false, s2}}, "lccbf"});
}

Eigen::RowVector4d polePlace(const Eigen::Matrix4d& Ad, const Eigen::Vector4d& Bd,
                             const Eigen::Vector4d& poles) {
    Eigen::Matrix4d ctrb;
    ctrb.col(0) = Bd;
    for (int i = 1; i < 4; ++i) ctrb.col(i) = Ad * ctrb.col(i - 1);
    const Eigen::JacobiSVD<Eigen::Matrix4d> svd(ctrb, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double cond = svd.singularValues()(0) / svd.singularValues()(3);
    if (!(cond < 1e12)) {
        throw Error("polePlace: system uncontrollable or ill-conditioned");
    }
    Eigen::Matrix4d phi = Eigen::Matrix4d::Identity();
    for (int i = 0; i < 4; ++i) {
        phi = phi * (Ad - poles(i) * Eigen::Matrix4d::Identity());
    }
    const Eigen::RowVector4d lastRow = Eigen::Vector4d::Unit(3).transpose() * ctrb.inverse();
    return lastRow * phi;
}

LkGainAndCost LkGainAndCost::defaults(const VehicleParams& p) {
    p.validate();
    LkGainAndCost g;
    const VehicleMatrices m = buildMatrices(p);
    g.K = polePlace(m.Ad, m.Bd, g.poles);
    g.H = Eigen::Matrix2d::Zero();
    g.H(0, 0) = 1.0;
    g.H(1, 1) = 100.0;  // deviation from the legacy controller costs more
    g.F = Eigen::Vector2d::Zero();
    return g;
}

namespace {

void addAccelRows(const VehicleParams& p, const LateralState& x, double rd,
                  ConstraintSystem& sys, const std::string& prefix) {
    const double F0 = computeF0(p, x.nu, x.r, rd);
    const AccelBox box = accelConstraint(p, F0);
    AffinePredicate upper;
    upper.coeffs = RowVectorXd::Zero(sys.numContinuous);
    upper.coeffs(0) = -1.0;
    upper.constant = box.uUpper;
    upper.sense = Sense::Ge;
    upper.label = prefix + "ac.upper";
    sys.addConstraint(std::move(upper));
    AffinePredicate lower;
    lower.coeffs = RowVectorXd::Zero(sys.numContinuous);
    lower.coeffs(0) = 1.0;
    lower.constant = -box.uLower;
    lower.sense = Sense::Ge;
    lower.label = prefix + "ac.lower";
    sys.addConstraint(std::move(lower));
}

// Both eta radicands stay nonnegative iff the predicted displacement is
// within the stopping envelope.
bool lcDomainOk(const VehicleParams& p, const LateralState& x) {
    const double yNext = x.y + p.ts * (x.nu + p.V0 * x.psi);
    return std::abs(yNext) <= p.yMax + 0.125 * p.aMax * p.ts * p.ts;
}

void addFeedbackEquality(const LkGainAndCost& gains, const LateralState& x, double rd,
                         ConstraintSystem& sys) {
    Eigen::Vector4d xff;
    xff << 0, 0, 0, rd;
    AffinePredicate eq;
    eq.coeffs = RowVectorXd::Zero(sys.numContinuous);
    eq.coeffs(0) = 1.0;   // u
    eq.coeffs(1) = -1.0;  // delta
    eq.constant = gains.K.dot(x.vec() - xff);
    eq.sense = Sense::Eq;
    eq.label = "feedback";
    sys.addConstraint(std::move(eq));
}

}  // namespace

MiqpProblem buildLkMiqp(const VehicleParams& p, const LkGainAndCost& gains,
                        const LateralState& x, double rd) {
    MiqpProblem prob;
    prob.system = ConstraintSystem::overDecisionVars(2);
    addAccelRows(p, x, rd, prob.system, "");
    lcCbfFragment(p, x, rd, prob.system);
    addFeedbackEquality(gains, x, rd, prob.system);
    prob.objective.H = gains.H;
    prob.objective.F = gains.F;
    prob.system.validate();
    return prob;
}

MiqpProblem buildOaMiqp(const VehicleParams& p, const LkGainAndCost& gains,
                        const LateralState& xLane1, const LateralState& xLane2,
                        double rd1, double rd2, int feedbackLane) {
    if (feedbackLane != 0 && feedbackLane != 1) {
        throw DomainError("buildOaMiqp: feedbackLane must be 0 or 1");
    }
    MiqpProblem prob;
    ConstraintSystem& sys = prob.system;
    sys = ConstraintSystem::overDecisionVars(2);

    const LateralState laneStates[2] = {xLane1, xLane2};
    const double laneRds[2] = {rd1, rd2};
    std::vector<int> laneBinaries;
    for (int lane = 0; lane < 2; ++lane) {
        const std::string prefix = "lane" + std::to_string(lane) + ".";
        const std::size_t firstRow = sys.constraints.size();
        if (lcDomainOk(p, laneStates[lane])) {
            addAccelRows(p, laneStates[lane], laneRds[lane], sys, prefix);
            lcCbfFragment(p, laneStates[lane], laneRds[lane], sys);
        } else {
            // Frame left the barrier domain: the disjunct is unsatisfiable.
            AffinePredicate never;
            never.coeffs = RowVectorXd::Zero(sys.numContinuous);
            never.constant = -1.0;
            never.sense = Sense::Ge;
            never.label = prefix + "out_of_domain";
            sys.addConstraint(std::move(never));
        }
        // Lane slack relaxes every row of the disjunct when the other lane
        // is chosen.
        const int laneSlack = sys.addSlack(-kInf, kInf, prefix + "s");
        for (std::size_t rIdx = firstRow; rIdx < sys.constraints.size(); ++rIdx) {
            auto& rowPred = sys.constraints[rIdx];
            const auto oldSize = rowPred.coeffs.size();
            rowPred.coeffs.conservativeResize(sys.numContinuous);
            rowPred.coeffs.tail(sys.numContinuous - oldSize).setZero();
            rowPred.coeffs(laneSlack) = -1.0;
        }
        const int laneBinary = sys.addBinary();
        sys.addSos1({{{false, laneSlack}, {true, laneBinary}}, prefix + "choice"});
        laneBinaries.push_back(laneBinary);
    }
    sys.addCardinality({laneBinaries, 1, "lane.choice"});
    addFeedbackEquality(gains, laneStates[feedbackLane], laneRds[feedbackLane], sys);

    prob.objective.H = gains.H;
    prob.objective.F = gains.F;
    sys.validate();
    return prob;
}

MiqpProblem buildOaMiqp(const VehicleParams& p, const LkGainAndCost& gains,
                        const LateralState& x, double rd1, double rd2, int feedbackLane) {
    return buildOaMiqp(p, gains, x, x, rd1, rd2, feedbackLane);
}

}  // namespace dtcbf
