#ifndef DTCBF_SIM_HPP
#define DTCBF_SIM_HPP

#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "dtcbf/vehicle.hpp"

namespace dtcbf {

// Straight road that becomes a constant-radius curve at `curveOnset`.
struct LkScenario {
    VehicleParams params;
    LateralState x0{0.5, 0.0, 0.0, 0.0};
    double duration = 20.0;    // s
    double curveOnset = 10.0;  // s
    double radius = 500.0;     // m; desired yaw rate after onset is V0 / radius

    nlohmann::json toJson() const;
    static LkScenario fromJson(const nlohmann::json& j);
};

// Two lane centerlines that coincide until `splitTime`, then curve apart with
// opposite yaw rates; the controller must commit to one of them.
struct OaScenario {
    VehicleParams params;
    LateralState x0{-0.8, 0.0, 0.0, 0.0};
    double duration = 10.0;   // s
    double splitTime = 1.0;   // s
    double radius = 500.0;    // lane 0 gets +V0/radius, lane 1 gets -V0/radius
    int initialLane = 0;      // feedback lane before the first solve

    nlohmann::json toJson() const;
    static OaScenario fromJson(const nlohmann::json& j);
};

struct StepRecord {
    double t = 0.0;
    LateralState x;        // LK state, or lane-0 frame for the lane choice run
    LateralState xLane1;   // lane-1 frame (lane choice run only)
    double u = 0.0;
    double delta = 0.0;
    double accel = 0.0;    // realized lateral acceleration
    double h = 0.0;        // barrier value (lane-0 frame)
    double hLane1 = 0.0;   // barrier value in the lane-1 frame
    int lane = -1;         // committed lane (-1 for LK)
    bool infeasible = false;
    long nodes = 0;
};

struct SimMetrics {
    double maxAbsY = 0.0;
    double maxAbsAccel = 0.0;
    double minH = 0.0;       // chosen frame for lane choice, the only frame for LK
    double minHLane0 = 0.0;
    double minHLane1 = 0.0;
    int infeasibleSteps = 0;
    double meanNodes = 0.0;
    int branchSwitches = 0;  // lane changes after the split

    nlohmann::json toJson() const;
};

struct SimTrace {
    std::string kind;  // "lk" or "oa"
    std::vector<StepRecord> steps;
    SimMetrics metrics;

    void writeCsv(const std::string& path) const;
    nlohmann::json toJson() const;
    void writeJson(const std::string& path) const;
};

// Barrier value with the radicand clamped at zero, so states outside the
// stopping envelope get a finite negative value instead of an exception.
double hLkClamped(const VehicleParams& p, double y, double v);

SimTrace runLk(const LkScenario& sc, const LkGainAndCost& gains,
               const MiqpOptions& opts = {});
SimTrace runLk(const LkScenario& sc);

SimTrace runOa(const OaScenario& sc, const LkGainAndCost& gains,
               const MiqpOptions& opts = {});
SimTrace runOa(const OaScenario& sc);

}  // namespace dtcbf

#endif  // DTCBF_SIM_HPP
