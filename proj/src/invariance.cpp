#include "dtcbf/invariance.hpp"

#include "dtcbf/qp.hpp"

#include <cmath>

namespace dtcbf {

InputSearch affineQpSearch() {
    return [](const PartiallyAffineSystem& sys, const BarrierSpec& spec,
              const VectorXd& x) -> InputSearchResult {
        if (!spec.isAffine()) {
            throw WrongVariantError("affineQpSearch: spec is not the Affine variant");
        }
        const Halfspace hs = affineInputHalfspace(sys, spec, x);
        QpProblem qp;
        qp.H = MatrixXd::Identity(sys.m, sys.m);
        qp.F = VectorXd::Zero(sys.m);
        std::vector<RowVectorXd> rows;
        std::vector<double> consts;
        rows.push_back(hs.a);
        consts.push_back(hs.c);
        for (int i = 0; i < sys.m; ++i) {
            if (sys.inputLower(i) != -kInf) {
                RowVectorXd r = RowVectorXd::Zero(sys.m);
                r(i) = 1.0;
                rows.push_back(r);
                consts.push_back(-sys.inputLower(i));
            }
            if (sys.inputUpper(i) != kInf) {
                RowVectorXd r = RowVectorXd::Zero(sys.m);
                r(i) = -1.0;
                rows.push_back(r);
                consts.push_back(sys.inputUpper(i));
            }
        }
        qp.Ain.resize(static_cast<Eigen::Index>(rows.size()), sys.m);
        qp.bin.resize(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            qp.Ain.row(static_cast<Eigen::Index>(i)) = rows[i];
            qp.bin(static_cast<Eigen::Index>(i)) = consts[i];
        }
        qp.Aeq.resize(0, sys.m);
        qp.beq.resize(0);
        const QpResult res = solveQp(qp);
        if (res.status == QpStatus::Optimal) {
            return {res.x, false};
        }
        return {std::nullopt, true};
    };
}

InputSearch gridSearch(int pointsPerDim) {
    return [pointsPerDim](const PartiallyAffineSystem& sys, const BarrierSpec& spec,
                          const VectorXd& x) -> InputSearchResult {
        for (int i = 0; i < sys.m; ++i) {
            if (sys.inputLower(i) == -kInf || sys.inputUpper(i) == kInf) {
                throw DomainError("gridSearch: input box must be finite");
            }
        }
        // Row-major sweep over the grid; first safe input wins.
        std::vector<int> idx(static_cast<std::size_t>(sys.m), 0);
        VectorXd u(sys.m);
        while (true) {
            for (int i = 0; i < sys.m; ++i) {
                const double frac = pointsPerDim == 1
                                        ? 0.5
                                        : static_cast<double>(idx[static_cast<std::size_t>(i)]) /
                                              (pointsPerDim - 1);
                u(i) = sys.inputLower(i) + frac * (sys.inputUpper(i) - sys.inputLower(i));
            }
            if (barrierValue(spec, sys.step(x, u)) >= 0.0) {
                return {u, false};
            }
            int d = sys.m - 1;
            for (; d >= 0; --d) {
                if (++idx[static_cast<std::size_t>(d)] < pointsPerDim) break;
                idx[static_cast<std::size_t>(d)] = 0;
            }
            if (d < 0) break;
        }
        return {std::nullopt, false};
    };
}

InputSearch defaultSearch(int gridPointsPerDim) {
    return [gridPointsPerDim](const PartiallyAffineSystem& sys, const BarrierSpec& spec,
                              const VectorXd& x) -> InputSearchResult {
        if (spec.isAffine()) return affineQpSearch()(sys, spec, x);
        return gridSearch(gridPointsPerDim)(sys, spec, x);
    };
}

InvarianceReport checkInvariance(const PartiallyAffineSystem& sys, const BarrierSpec& spec,
                                 const StateSampler& sampler, const InputSearch& search,
                                 int numSamples, int steps, std::uint64_t seed) {
    InvarianceReport report;
    std::mt19937_64 rng(seed);
    for (int s = 0; s < numSamples; ++s) {
        InvarianceReport::SampleResult result;
        result.x0 = sampler(rng);
        VectorXd x = result.x0;
        result.invariant = true;
        for (int k = 0; k < steps; ++k) {
            if (barrierValue(spec, x) < 0.0) {
                result.invariant = false;
                result.violationStep = k;
                result.violationState = x;
                break;
            }
            const InputSearchResult found = search(sys, spec, x);
            if (!found.u) {
                result.invariant = false;
                result.violationStep = k;
                result.violationState = x;
                result.falsified = found.certifiedEmpty;
                break;
            }
            x = sys.step(x, *found.u);
        }
        if (result.invariant && barrierValue(spec, x) < 0.0) {
            result.invariant = false;
            result.violationStep = steps;
            result.violationState = x;
        }
        if (result.invariant) ++report.numInvariant;
        if (result.falsified) report.anyFalsification = true;
        report.samples.push_back(std::move(result));
    }
    return report;
}

}  // namespace dtcbf
