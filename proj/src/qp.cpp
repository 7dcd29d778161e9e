#include "dtcbf/qp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>

namespace dtcbf {

namespace {

// Solves for the primal step z and active-set dual step r given the normal
// of the incoming constraint. Handles rank-deficient active sets by taking
// the minimum-norm dual direction.
void stepDirections(const Eigen::LLT<MatrixXd>& hChol, const MatrixXd& N,
                    const VectorXd& np, VectorXd& z, VectorXd& r) {
    const VectorXd gnp = hChol.solve(np);
    if (N.rows() == 0) {
        z = gnp;
        r.resize(0);
        return;
    }
    const MatrixXd NG = N * hChol.solve(MatrixXd(N.transpose()));  // N H^-1 N'
    const VectorXd rhs = N * gnp;
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(NG);
    r = cod.solve(rhs);
    z = gnp - hChol.solve(N.transpose() * r);
}

}  // namespace

QpResult solveQp(const QpProblem& prob, const QpOptions& opts) {
    const int n = static_cast<int>(prob.H.rows());
    if (prob.H.cols() != n || prob.F.size() != n) {
        throw DimensionError("solveQp: objective dimension mismatch");
    }
    if ((prob.H - prob.H.transpose()).cwiseAbs().maxCoeff() >
        1e-12 * std::max(1.0, prob.H.cwiseAbs().maxCoeff())) {
        throw DefinitenessError("solveQp: H is not symmetric");
    }
    Eigen::LLT<MatrixXd> hChol(prob.H);
    if (hChol.info() != Eigen::Success) {
        throw DefinitenessError("solveQp: H is not positive definite");
    }
    const int meq = static_cast<int>(prob.Aeq.rows());
    const int mIn = static_cast<int>(prob.Ain.rows());

    QpResult res;
    res.x = -hChol.solve(prob.F);

    // Equality-constrained start.
    if (meq > 0) {
        MatrixXd kkt(n + meq, n + meq);
        kkt.setZero();
        kkt.topLeftCorner(n, n) = prob.H;
        kkt.topRightCorner(n, meq) = prob.Aeq.transpose();
        kkt.bottomLeftCorner(meq, n) = prob.Aeq;
        VectorXd rhs(n + meq);
        rhs.head(n) = -prob.F;
        rhs.tail(meq) = -prob.beq;
        Eigen::FullPivLU<MatrixXd> lu(kkt);
        const VectorXd sol = lu.solve(rhs);
        if ((kkt * sol - rhs).cwiseAbs().maxCoeff() > 1e-7 * std::max(1.0, rhs.cwiseAbs().maxCoeff())) {
            res.status = QpStatus::Infeasible;  // inconsistent equalities
            return res;
        }
        res.x = sol.head(n);
    }

    std::vector<int> active;   // inequality indices
    std::vector<double> mult;  // their multipliers

    const double tol = opts.tol;
    int iter = 0;
    while (true) {
        if (++iter > opts.maxIterations) {
            throw SolverFailure("solveQp: iteration limit exceeded");
        }
        // Most violated inequality.
        int p = -1;
        double worst = -tol;
        for (int i = 0; i < mIn; ++i) {
            if (std::find(active.begin(), active.end(), i) != active.end()) continue;
            const double s = prob.Ain.row(i).dot(res.x) + prob.bin(i);
            if (s < worst) {
                worst = s;
                p = i;
            }
        }
        if (p < 0) break;  // primal feasible: optimal

        const VectorXd np = prob.Ain.row(p).transpose();
        double up = 0.0;
        while (true) {
            if (++iter > opts.maxIterations) {
                throw SolverFailure("solveQp: iteration limit exceeded");
            }
            MatrixXd N(meq + static_cast<int>(active.size()), n);
            if (meq > 0) N.topRows(meq) = prob.Aeq;
            for (std::size_t j = 0; j < active.size(); ++j) {
                N.row(meq + static_cast<Eigen::Index>(j)) = prob.Ain.row(active[j]);
            }
            VectorXd z, r;
            stepDirections(hChol, N, np, z, r);

            const double ztnp = np.dot(z);
            const bool canMove = z.cwiseAbs().maxCoeff() > tol && ztnp > tol;

            // Partial step length from active multipliers.
            double t1 = kInf;
            int drop = -1;
            for (std::size_t j = 0; j < active.size(); ++j) {
                const double rj = r(meq + static_cast<Eigen::Index>(j));
                if (rj > tol) {
                    const double cand = mult[j] / rj;
                    if (cand < t1 - 1e-15) {
                        t1 = cand;
                        drop = static_cast<int>(j);
                    }
                }
            }
            const double sp = prob.Ain.row(p).dot(res.x) + prob.bin(p);
            const double t2 = canMove ? -sp / ztnp : kInf;
            const double t = std::min(t1, t2);
            if (t == kInf) {
                res.status = QpStatus::Infeasible;
                res.iterations = iter;
                return res;
            }

            if (t2 < kInf) res.x += t * z;
            for (std::size_t j = 0; j < active.size(); ++j) {
                mult[j] -= t * r(meq + static_cast<Eigen::Index>(j));
            }
            up += t;

            if (t2 <= t1) {
                active.push_back(p);
                mult.push_back(up);
                break;  // constraint p now satisfied and active
            }
            active.erase(active.begin() + drop);
            mult.erase(mult.begin() + drop);
        }
    }

    res.status = QpStatus::Optimal;
    res.iterations = iter;
    res.objective = 0.5 * res.x.dot(prob.H * res.x) + prob.F.dot(res.x);
    res.activeSet = active;
    std::sort(res.activeSet.begin(), res.activeSet.end());

    // Recompute multipliers from stationarity for the certificate.
    res.inMultipliers = VectorXd::Zero(mIn);
    res.eqMultipliers = VectorXd::Zero(meq);
    const int q = meq + static_cast<int>(active.size());
    if (q > 0) {
        MatrixXd At(n, q);
        if (meq > 0) At.leftCols(meq) = prob.Aeq.transpose();
        for (std::size_t j = 0; j < active.size(); ++j) {
            At.col(meq + static_cast<Eigen::Index>(j)) = prob.Ain.row(active[j]).transpose();
        }
        const VectorXd grad = prob.H * res.x + prob.F;
        const VectorXd lam = At.completeOrthogonalDecomposition().solve(grad);
        res.eqMultipliers = lam.head(meq);
        for (std::size_t j = 0; j < active.size(); ++j) {
            res.inMultipliers(active[j]) =
                std::max(0.0, lam(meq + static_cast<Eigen::Index>(j)));
        }
    }
    return res;
}

bool checkKkt(const QpProblem& prob, const QpResult& res, double tol) {
    if (res.status != QpStatus::Optimal) return false;
    const VectorXd grad = prob.H * res.x + prob.F;
    VectorXd station = grad;
    if (prob.Aeq.rows() > 0) station -= prob.Aeq.transpose() * res.eqMultipliers;
    if (prob.Ain.rows() > 0) station -= prob.Ain.transpose() * res.inMultipliers;
    if (station.size() > 0 && station.cwiseAbs().maxCoeff() > tol) return false;
    if (prob.Aeq.rows() > 0 &&
        (prob.Aeq * res.x + prob.beq).cwiseAbs().maxCoeff() > tol) {
        return false;
    }
    for (int i = 0; i < prob.Ain.rows(); ++i) {
        const double s = prob.Ain.row(i).dot(res.x) + prob.bin(i);
        if (s < -tol) return false;
        if (res.inMultipliers(i) < -tol) return false;
        if (std::abs(res.inMultipliers(i) * s) > tol * std::max(1.0, std::abs(s))) return false;
    }
    return true;
}

}  // namespace dtcbf
