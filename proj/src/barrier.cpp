#include "dtcbf/barrier.hpp"

#include <cmath>

namespace dtcbf {

BarrierSpec BarrierSpec::blackBox(int n1, int n2, std::function<double(const VectorXd&)> h) {
    BarrierSpec s;
    s.n1 = n1;
    s.n2 = n2;
    s.form = BlackBoxBarrier{std::move(h)};
    return s;
}

BarrierSpec BarrierSpec::affine(int n1, int n2, AffineBarrier f) {
    BarrierSpec s;
    s.n1 = n1;
    s.n2 = n2;
    s.form = std::move(f);
    return s;
}

BarrierSpec BarrierSpec::piecewise(int n1, int n2, PiecewiseBarrier f) {
    if (f.pieces.empty()) {
        throw ArityError("BarrierSpec::piecewise: need at least one piece");
    }
    BarrierSpec s;
    s.n1 = n1;
    s.n2 = n2;
    s.form = std::move(f);
    return s;
}

void ComparisonParams::validate() const {
    if (gamma < 0.0 || gamma > 1.0) {
        throw DomainError("ComparisonParams: gamma must be in [0, 1]");
    }
    if (!alphaFn) {
        throw DomainError("ComparisonParams: alphaFn must be set");
    }
    if (std::abs(alphaFn(0.0)) > 1e-12) {
        throw DomainError("ComparisonParams: alphaFn(0) != 0");
    }
}

bool ComparisonParams::classKOnGrid(double sMax, int gridPoints) const {
    validate();
    double prev = 0.0;
    for (int i = 1; i < gridPoints; ++i) {
        const double s = sMax * static_cast<double>(i) / (gridPoints - 1);
        const double a = alphaFn(s);
        if (a <= prev) return false;   // not strictly increasing
        if (a >= s) return false;      // must stay below identity
        prev = a;
    }
    return true;
}

namespace {

double evalPiecewise(const PiecewiseBarrier& pw, const VectorXd& x1, const VectorXd& x2) {
    for (std::size_t j = 0; j < pw.pieces.size(); ++j) {
        const auto& p = pw.pieces[j];
        const double guard = p.kappa(x1).dot(x2.transpose()) + p.lambda(x1);
        if (guard <= 0.0) {
            return p.mu(x1).dot(x2.transpose()) + p.nu(x1);
        }
    }
    throw NoActivePieceError("barrierValue: no piece guard satisfied");
}

}  // namespace

double barrierValue(const BarrierSpec& spec, const VectorXd& x) {
    if (x.size() != spec.n1 + spec.n2) {
        throw DimensionError("barrierValue: dim(x) != n1 + n2");
    }
    const VectorXd x1 = x.head(spec.n1);
    const VectorXd x2 = x.tail(spec.n2);
    if (const auto* bb = std::get_if<BlackBoxBarrier>(&spec.form)) {
        return bb->h(x);
    }
    if (const auto* af = std::get_if<AffineBarrier>(&spec.form)) {
        return af->mu(x1).dot(x2.transpose()) + af->nu(x1);
    }
    return evalPiecewise(std::get<PiecewiseBarrier>(spec.form), x1, x2);
}

Halfspace affineInputHalfspace(const PartiallyAffineSystem& sys, const BarrierSpec& spec,
                               const VectorXd& x) {
    if (!spec.isAffine()) {
        throw WrongVariantError("affineInputHalfspace: spec is not the Affine variant");
    }
    const auto& af = std::get<AffineBarrier>(spec.form);
    const VectorXd f1x = sys.n1 > 0 ? sys.f1(x) : VectorXd(0);
    const RowVectorXd muNext = af.mu(f1x);
    Halfspace hs;
    hs.a = muNext * sys.g(x);
    hs.c = muNext.dot(sys.f2(x).transpose()) + af.nu(f1x);
    return hs;
}

bool inSafeInputSet(const PartiallyAffineSystem& sys, const BarrierSpec& spec,
                    const VectorXd& x, const VectorXd& u) {
    if (!sys.inputInBox(u)) return false;
    return barrierValue(spec, sys.step(x, u)) >= 0.0;
}

PriorMembership inPriorInputSets(const PartiallyAffineSystem& sys, const BarrierSpec& spec,
                                 const VectorXd& x, const VectorXd& u,
                                 const ComparisonParams& params) {
    params.validate();
    const double hx = barrierValue(spec, x);
    if (hx < 0.0) {
        throw DomainError("inPriorInputSets: x outside the safe set");
    }
    PriorMembership out;
    if (!sys.inputInBox(u)) return out;
    const double hNext = barrierValue(spec, sys.step(x, u));
    out.inKPrime = hNext + (params.gamma - 1.0) * hx >= 0.0;
    out.inKDoublePrime = hNext + params.alphaFn(hx) - hx >= 0.0;
    return out;
}

}  // namespace dtcbf
