#ifndef DTCBF_MIQP_HPP
#define DTCBF_MIQP_HPP

#include <nlohmann/json_fwd.hpp>
#include <optional>

#include "dtcbf/constraint_system.hpp"
#include "dtcbf/qp.hpp"

namespace dtcbf {

struct QuadraticObjective {
    MatrixXd H;  // over the decision variables, symmetric PD
    VectorXd F;

    void validate() const;
};

struct MiqpProblem {
    QuadraticObjective objective;
    ConstraintSystem system;
    double epsStrict = kEpsStrict;

    void validate() const;
    nlohmann::json toJson() const;
    static MiqpProblem fromJson(const nlohmann::json& j);
};

enum class MiqpStatus { Optimal, Infeasible };

struct MiqpSolution {
    MiqpStatus status = MiqpStatus::Infeasible;
    VectorXd u;                  // decision variables
    std::vector<int> binaries;   // canonical branch assignment
    double objective = 0.0;
    std::vector<int> activeSet;  // constraint-system rows tight at the optimum
    long nodesExplored = 0;
    // Which SOS-1 member was left free in the winning leaf, per group.
    std::vector<int> freeMember;

    nlohmann::json toJson() const;
};

struct MiqpOptions {
    long nodeLimit = 1000000;
    double feasTol = kFeasTol;
};

// Exact branch-and-bound over SOS-1 member choices with best-first search on
// the parent relaxation bound. Deterministic: fixed branch order and
// lexicographically smallest binary assignment on objective ties.
MiqpSolution solveMiqp(const MiqpProblem& prob, const MiqpOptions& opts = {});

// Oracle: enumerates every SOS-1 branch assignment (product of group sizes
// capped at 2^20) and keeps the best leaf under the same tie-break.
MiqpSolution bruteForce(const MiqpProblem& prob, const MiqpOptions& opts = {});

// Feasibility of the constraint system at fixed decision-variable values:
// true iff some completion of slacks and binaries satisfies everything.
bool pointFeasible(const ConstraintSystem& sys, const VectorXd& decision,
                   double epsStrict = kEpsStrict, double tol = kFeasTol);

}  // namespace dtcbf

#endif  // DTCBF_MIQP_HPP
