#include "dtcbf/sim.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace dtcbf {

using nlohmann::json;

namespace {

json stateToJson(const LateralState& x) {
    return json{{"y", x.y}, {"nu", x.nu}, {"psi", x.psi}, {"r", x.r}};
}

LateralState stateFromJson(const json& j, const LateralState& fallback) {
    LateralState x = fallback;
    if (j.is_array()) {
        if (j.size() != 4) throw DimensionError("state: expected 4 entries");
        x = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    } else if (j.is_object()) {
        x.y = j.value("y", x.y);
        x.nu = j.value("nu", x.nu);
        x.psi = j.value("psi", x.psi);
        x.r = j.value("r", x.r);
    }
    return x;
}

double clippedLegacyInput(const VehicleParams& p, const LkGainAndCost& gains,
                          const LateralState& x, double rd) {
    Eigen::Vector4d xff;
    xff << 0, 0, 0, rd;
    const double uLegacy = -gains.K.dot(x.vec() - xff);
    const AccelBox box = accelConstraint(p, computeF0(p, x.nu, x.r, rd));
    return std::clamp(uLegacy, box.uLower, box.uUpper);
}

}  // namespace

double hLkClamped(const VehicleParams& p, double y, double v) {
    const double sgn = v >= 0.0 ? 1.0 : -1.0;
    const double arg =
        2.0 * p.aMax * (p.yMax - sgn * y) + 0.25 * p.aMax * p.aMax * p.ts * p.ts;
    return std::sqrt(std::max(arg, 0.0)) - std::abs(v) - 0.5 * p.aMax * p.ts;
}

json LkScenario::toJson() const {
    return json{{"params", params.toJson()},
                {"x0", stateToJson(x0)},
                {"duration", duration},
                {"curve_onset", curveOnset},
                {"radius", radius}};
}

LkScenario LkScenario::fromJson(const json& j) {
    LkScenario sc;
    if (j.contains("params")) sc.params = VehicleParams::fromJson(j.at("params"));
    if (j.contains("x0")) sc.x0 = stateFromJson(j.at("x0"), sc.x0);
    sc.duration = j.value("duration", sc.duration);
    sc.curveOnset = j.value("curve_onset", sc.curveOnset);
    sc.radius = j.value("radius", sc.radius);
    return sc;
}

json OaScenario::toJson() const {
    return json{{"params", params.toJson()},  {"x0", stateToJson(x0)},
                {"duration", duration},       {"split_time", splitTime},
                {"radius", radius},           {"initial_lane", initialLane}};
}

OaScenario OaScenario::fromJson(const json& j) {
    OaScenario sc;
    if (j.contains("params")) sc.params = VehicleParams::fromJson(j.at("params"));
    if (j.contains("x0")) sc.x0 = stateFromJson(j.at("x0"), sc.x0);
    sc.duration = j.value("duration", sc.duration);
    sc.splitTime = j.value("split_time", sc.splitTime);
    sc.radius = j.value("radius", sc.radius);
    sc.initialLane = j.value("initial_lane", sc.initialLane);
    return sc;
}

json SimMetrics::toJson() const {
    return json{{"max_abs_y", maxAbsY},
                {"max_abs_accel", maxAbsAccel},
                {"min_h", minH},
                {"min_h_lane0", minHLane0},
                {"min_h_lane1", minHLane1},
                {"infeasible_steps", infeasibleSteps},
                {"mean_nodes", meanNodes},
                {"branch_switches", branchSwitches}};
}

void SimTrace::writeCsv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ResourceError("writeCsv: cannot open " + path);
    out.precision(12);
    if (kind == "lk") {
        out << "t,y,nu,psi,r,u,delta,accel,h,infeasible,nodes\n";
        for (const auto& s : steps) {
            out << s.t << ',' << s.x.y << ',' << s.x.nu << ',' << s.x.psi << ',' << s.x.r
                << ',' << s.u << ',' << s.delta << ',' << s.accel << ',' << s.h << ','
                << (s.infeasible ? 1 : 0) << ',' << s.nodes << '\n';
        }
    } else {
        out << "t,y0,nu0,psi0,r0,y1,nu1,psi1,r1,u,delta,accel,h0,h1,lane,infeasible,nodes\n";
        for (const auto& s : steps) {
            out << s.t << ',' << s.x.y << ',' << s.x.nu << ',' << s.x.psi << ',' << s.x.r
                << ',' << s.xLane1.y << ',' << s.xLane1.nu << ',' << s.xLane1.psi << ','
                << s.xLane1.r << ',' << s.u << ',' << s.delta << ',' << s.accel << ','
                << s.h << ',' << s.hLane1 << ',' << s.lane << ','
                << (s.infeasible ? 1 : 0) << ',' << s.nodes << '\n';
        }
    }
}

json SimTrace::toJson() const {
    json rows = json::array();
    for (const auto& s : steps) {
        json row{{"t", s.t},         {"x", stateToJson(s.x)}, {"u", s.u},
                 {"delta", s.delta}, {"accel", s.accel},      {"h", s.h},
                 {"infeasible", s.infeasible}, {"nodes", s.nodes}};
        if (kind == "oa") {
            row["x_lane1"] = stateToJson(s.xLane1);
            row["h_lane1"] = s.hLane1;
            row["lane"] = s.lane;
        }
        rows.push_back(std::move(row));
    }
    return json{{"kind", kind}, {"metrics", metrics.toJson()}, {"steps", std::move(rows)}};
}

void SimTrace::writeJson(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ResourceError("writeJson: cannot open " + path);
    out << toJson().dump(2) << '\n';
}

SimTrace runLk(const LkScenario& sc, const LkGainAndCost& gains, const MiqpOptions& opts) {
    const VehicleParams& p = sc.params;
    p.validate();
    const int numSteps = static_cast<int>(std::llround(sc.duration / p.ts));

    SimTrace trace;
    trace.kind = "lk";
    trace.steps.reserve(static_cast<std::size_t>(numSteps));
    SimMetrics m;
    m.minH = std::numeric_limits<double>::infinity();
    long totalNodes = 0;

    LateralState x = sc.x0;
    for (int k = 0; k < numSteps; ++k) {
        const double t = k * p.ts;
        const double rd = t >= sc.curveOnset ? p.V0 / sc.radius : 0.0;

        StepRecord rec;
        rec.t = t;
        rec.x = x;
        rec.h = hLkClamped(p, x.y, x.lateralVelocity(p.V0));

        const MiqpProblem prob = buildLkMiqp(p, gains, x, rd);
        const MiqpSolution sol = solveMiqp(prob, opts);
        rec.nodes = sol.nodesExplored;
        if (sol.status == MiqpStatus::Optimal) {
            rec.u = sol.u(0);
            rec.delta = sol.u(1);
        } else {
            rec.infeasible = true;
            rec.u = clippedLegacyInput(p, gains, x, rd);
            rec.delta = 0.0;
            ++m.infeasibleSteps;
        }
        const double F0 = computeF0(p, x.nu, x.r, rd);
        rec.accel = (p.Cf * rec.u - F0) / p.M;

        m.maxAbsY = std::max(m.maxAbsY, std::abs(x.y));
        m.maxAbsAccel = std::max(m.maxAbsAccel, std::abs(rec.accel));
        m.minH = std::min(m.minH, rec.h);
        totalNodes += rec.nodes;

        x = stepVehicle(p, x, rec.u, rd);
        trace.steps.push_back(std::move(rec));
    }
    m.maxAbsY = std::max(m.maxAbsY, std::abs(x.y));
    m.minH = std::min(m.minH, hLkClamped(p, x.y, x.lateralVelocity(p.V0)));
    m.minHLane0 = m.minH;
    m.minHLane1 = m.minH;
    m.meanNodes = numSteps > 0 ? static_cast<double>(totalNodes) / numSteps : 0.0;
    trace.metrics = m;
    return trace;
}

SimTrace runLk(const LkScenario& sc) { return runLk(sc, LkGainAndCost::defaults(sc.params)); }

SimTrace runOa(const OaScenario& sc, const LkGainAndCost& gains, const MiqpOptions& opts) {
    const VehicleParams& p = sc.params;
    p.validate();
    if (sc.initialLane != 0 && sc.initialLane != 1) {
        throw DomainError("runOa: initialLane must be 0 or 1");
    }
    const int numSteps = static_cast<int>(std::llround(sc.duration / p.ts));

    SimTrace trace;
    trace.kind = "oa";
    trace.steps.reserve(static_cast<std::size_t>(numSteps));
    SimMetrics m;
    m.minH = std::numeric_limits<double>::infinity();
    m.minHLane0 = m.minH;
    m.minHLane1 = m.minH;
    long totalNodes = 0;

    LateralState frames[2] = {sc.x0, sc.x0};
    int lane = sc.initialLane;
    int prevLaneAfterSplit = -1;
    for (int k = 0; k < numSteps; ++k) {
        const double t = k * p.ts;
        const bool split = t >= sc.splitTime;
        const double rds[2] = {split ? p.V0 / sc.radius : 0.0,
                               split ? -p.V0 / sc.radius : 0.0};

        StepRecord rec;
        rec.t = t;
        rec.x = frames[0];
        rec.xLane1 = frames[1];
        rec.h = hLkClamped(p, frames[0].y, frames[0].lateralVelocity(p.V0));
        rec.hLane1 = hLkClamped(p, frames[1].y, frames[1].lateralVelocity(p.V0));

        const MiqpProblem prob =
            buildOaMiqp(p, gains, frames[0], frames[1], rds[0], rds[1], lane);
        const MiqpSolution sol = solveMiqp(prob, opts);
        rec.nodes = sol.nodesExplored;
        if (sol.status == MiqpStatus::Optimal) {
            rec.u = sol.u(0);
            rec.delta = sol.u(1);
            lane = (sol.binaries.size() >= 2 && sol.binaries[0] == 1 && sol.binaries[1] == 0)
                       ? 0
                       : 1;
        } else {
            rec.infeasible = true;
            rec.u = clippedLegacyInput(p, gains, frames[lane], rds[lane]);
            rec.delta = 0.0;
            ++m.infeasibleSteps;
        }
        rec.lane = lane;
        if (split) {
            if (prevLaneAfterSplit >= 0 && lane != prevLaneAfterSplit) ++m.branchSwitches;
            prevLaneAfterSplit = lane;
        }
        const double F0 = computeF0(p, frames[lane].nu, frames[lane].r, rds[lane]);
        rec.accel = (p.Cf * rec.u - F0) / p.M;

        m.maxAbsY = std::max(m.maxAbsY, std::abs(frames[lane].y));
        m.maxAbsAccel = std::max(m.maxAbsAccel, std::abs(rec.accel));
        m.minH = std::min(m.minH, lane == 0 ? rec.h : rec.hLane1);
        m.minHLane0 = std::min(m.minHLane0, rec.h);
        m.minHLane1 = std::min(m.minHLane1, rec.hLane1);
        totalNodes += rec.nodes;

        for (int l = 0; l < 2; ++l) frames[l] = stepVehicle(p, frames[l], rec.u, rds[l]);
        trace.steps.push_back(std::move(rec));
    }
    m.maxAbsY = std::max(m.maxAbsY, std::abs(frames[lane].y));
    m.minH = std::min(m.minH,
                      hLkClamped(p, frames[lane].y, frames[lane].lateralVelocity(p.V0)));
    m.meanNodes = numSteps > 0 ? static_cast<double>(totalNodes) / numSteps : 0.0;
    trace.metrics = m;
    return trace;
}

SimTrace runOa(const OaScenario& sc) { return runOa(sc, LkGainAndCost::defaults(sc.params)); }

}  // namespace dtcbf
