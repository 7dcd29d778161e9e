#ifndef DTCBF_VEHICLE_HPP
#define DTCBF_VEHICLE_HPP

#include <nlohmann/json_fwd.hpp>

#include "dtcbf/barrier.hpp"
#include "dtcbf/miqp.hpp"

namespace dtcbf {

// Lateral bicycle-model parameters; defaults are the simulation values used
// throughout (0.3 g lateral acceleration bound, 0.9 m lane half-width).
struct VehicleParams {
    double V0 = 8.33;        // longitudinal speed, m/s
    double Cf = 133000.0;    // front tire stiffness, N/rad
    double Cr = 98800.0;     // rear tire stiffness, N/rad
    double M = 1650.0;       // mass, kg
    double a = 1.11;         // CG to front axle, m
    double b = 1.59;         // CG to rear axle, m
    double Iz = 2315.3;      // yaw inertia, m^2 kg
    double gAccel = 9.81;    // m/s^2
    double aMax = 0.3 * 9.81;
    double yMax = 0.9;       // m
    double ts = 0.01;        // s

    void validate() const;
    nlohmann::json toJson() const;
    static VehicleParams fromJson(const nlohmann::json& j);
};

struct LateralState {
    double y = 0.0;    // lateral displacement, m
    double nu = 0.0;   // lateral velocity, m/s
    double psi = 0.0;  // yaw angle, rad
    double r = 0.0;    // yaw rate, rad/s

    Eigen::Vector4d vec() const { return {y, nu, psi, r}; }
    static LateralState fromVec(const Eigen::Vector4d& v) { return {v(0), v(1), v(2), v(3)}; }

    // Instantaneous lateral velocity v = nu + V0 psi.
    double lateralVelocity(double V0) const { return nu + V0 * psi; }
};

struct VehicleMatrices {
    Eigen::Matrix4d A;
    Eigen::Vector4d B;
    Eigen::Vector4d E;
    Eigen::Matrix4d Ad;  // I + A ts
    Eigen::Vector4d Bd;  // B ts
    Eigen::Vector4d Ed;  // E ts
};

VehicleMatrices buildMatrices(const VehicleParams& p);

// Forward Euler step x' <- Ad x' + Bd u + Ed rd.
LateralState stepVehicle(const VehicleParams& p, const LateralState& x, double u, double rd);

// Reduced (y, nu) system with psi and r frozen as measured parameters. The
// input map uses ts Cf / M so stepping it reproduces the (y, nu) rows of
// stepVehicle exactly.
PartiallyAffineSystem mapReduced(const VehicleParams& p, double psi, double r);

struct ReducedModel {
    PartiallyAffineSystem sys;
    VectorXd x;  // (y, nu)
};

// Reduced system together with the projected state of `x`.
ReducedModel mapReduced(const VehicleParams& p, const LateralState& x);

double computeF0(const VehicleParams& p, double nu, double r, double rd);

struct AccelBox {
    double uLower = 0.0;
    double uUpper = 0.0;
    bool empty = false;  // upper < lower (cannot happen for aMax > 0)
};

// |a_k| <= aMax as a box on the steering input.
AccelBox accelConstraint(const VehicleParams& p, double F0);

// Lane-keeping barrier over (y, v); sgn(0) = +1, boundary is safe.
double hLk(const VehicleParams& p, double y, double v);

// The ts -> 0 limit of hLk.
double hLkContinuousLimit(const VehicleParams& p, double y, double v);

// Two-piece piecewise barrier spec for the reduced (y, nu) system with psi
// frozen: piece 0 covers v >= 0, piece 1 covers v <= 0.
BarrierSpec hLkPiecewiseSpec(const VehicleParams& p, double psi);

// Appends the four lane-centering rows and their SOS-1 slack pair to `sys`
// (decision variable 0 is the steering input u).
void lcCbfFragment(const VehicleParams& p, const LateralState& x, double rd,
                   ConstraintSystem& sys);

// Ackermann pole placement for the single-input pair (Ad, Bd).
Eigen::RowVector4d polePlace(const Eigen::Matrix4d& Ad, const Eigen::Vector4d& Bd,
                             const Eigen::Vector4d& poles);

struct LkGainAndCost {
    Eigen::RowVector4d K;
    Eigen::Vector4d poles{0.95, 0.8, 0.85, 0.9};
    Eigen::Matrix2d H;  // cost over (u, delta)
    Eigen::Vector2d F;

    static LkGainAndCost defaults(const VehicleParams& p);
};

// Decision vector (u, delta); legacy feedback enters as the soft equality
// u = -K (x - x_ff) + delta with x_ff = (0, 0, 0, rd).
MiqpProblem buildLkMiqp(const VehicleParams& p, const LkGainAndCost& gains,
                        const LateralState& x, double rd);

// Lane disjunction ((AC_1 and LC-CBF_1) or (AC_2 and LC-CBF_2)) over
// per-lane frames; the feedback equality uses `feedbackLane` (0 or 1).
MiqpProblem buildOaMiqp(const VehicleParams& p, const LkGainAndCost& gains,
                        const LateralState& xLane1, const LateralState& xLane2,
                        double rd1, double rd2, int feedbackLane = 0);

// Single-frame convenience overload (valid before the lanes split).
MiqpProblem buildOaMiqp(const VehicleParams& p, const LkGainAndCost& gains,
                        const LateralState& x, double rd1, double rd2,
                        int feedbackLane = 0);

}  // namespace dtcbf

#endif  // DTCBF_VEHICLE_HPP
