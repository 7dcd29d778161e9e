#ifndef DTCBF_QP_HPP
#define DTCBF_QP_HPP

#include <vector>

#include "dtcbf/common.hpp"

namespace dtcbf {

// min 1/2 x'Hx + F'x  s.t.  Aeq x + beq = 0,  Ain x + bin >= 0.
struct QpProblem {
    MatrixXd H;
    VectorXd F;
    MatrixXd Aeq;  // may have 0 rows
    VectorXd beq;
    MatrixXd Ain;
    VectorXd bin;
};

enum class QpStatus { Optimal, Infeasible };

struct QpResult {
    QpStatus status = QpStatus::Infeasible;
    VectorXd x;
    double objective = 0.0;
    VectorXd eqMultipliers;   // free sign
    VectorXd inMultipliers;   // >= 0, zero off the active set
    std::vector<int> activeSet;  // inequality rows tight at the optimum
    int iterations = 0;
};

struct QpOptions {
    double tol = 1e-10;
    int maxIterations = 500;
};

// Dual active-set solve (Goldfarb-Idnani scheme, refactorized per step).
// Throws DefinitenessError if H is not PD and SolverFailure on iteration
// blowup; constraint inconsistency is a QpStatus::Infeasible result.
QpResult solveQp(const QpProblem& prob, const QpOptions& opts = {});

// Independent certificate: stationarity, primal feasibility, dual
// feasibility and complementary slackness, all within tol.
bool checkKkt(const QpProblem& prob, const QpResult& res, double tol = 1e-8);

}  // namespace dtcbf

#endif  // DTCBF_QP_HPP
