#ifndef DTCBF_BARRIER_HPP
#define DTCBF_BARRIER_HPP

#include <functional>
#include <variant>
#include <vector>

#include "dtcbf/system.hpp"

namespace dtcbf {

// h(x) as an opaque scalar map.
struct BlackBoxBarrier {
    std::function<double(const VectorXd&)> h;
};

// h(x) = mu(x1) x2 + nu(x1), affine in the actuated substate.
struct AffineBarrier {
    std::function<RowVectorXd(const VectorXd&)> mu;  // R^{n1} -> R^{1 x n2}
    std::function<double(const VectorXd&)> nu;       // R^{n1} -> R
};

// Piecewise affine-in-x2 barrier: piece j applies where
// kappa_j(x1) x2 + lambda_j(x1) <= 0.
struct PiecewiseBarrier {
    struct Piece {
        std::function<RowVectorXd(const VectorXd&)> mu;
        std::function<double(const VectorXd&)> nu;
        std::function<RowVectorXd(const VectorXd&)> kappa;
        std::function<double(const VectorXd&)> lambda;
    };
    std::vector<Piece> pieces;
};

struct BarrierSpec {
    int n1 = 0;
    int n2 = 0;
    std::variant<BlackBoxBarrier, AffineBarrier, PiecewiseBarrier> form;

    bool isBlackBox() const { return std::holds_alternative<BlackBoxBarrier>(form); }
    bool isAffine() const { return std::holds_alternative<AffineBarrier>(form); }
    bool isPiecewise() const { return std::holds_alternative<PiecewiseBarrier>(form); }

    static BarrierSpec blackBox(int n1, int n2, std::function<double(const VectorXd&)> h);
    static BarrierSpec affine(int n1, int n2, AffineBarrier f);
    static BarrierSpec piecewise(int n1, int n2, PiecewiseBarrier f);
};

// Restrictions on the prior-work safe input sets K' and K''.
struct ComparisonParams {
    double gamma = 1.0;                           // in [0, 1]
    std::function<double(double)> alphaFn;        // class-K, alpha(s) < s for s > 0

    void validate() const;
    // Sampled-grid check that alphaFn is strictly increasing, vanishes at zero
    // and stays below the identity on (0, sMax].
    bool classKOnGrid(double sMax, int gridPoints = 101) const;
};

// h(x); for the piecewise form the active piece is the lowest index whose
// guard holds.
double barrierValue(const BarrierSpec& spec, const VectorXd& x);

struct Halfspace {
    RowVectorXd a;  // 1 x m
    double c = 0.0;
};

// Coefficients of the affine safe input condition a u + c >= 0; exact in the
// sense that barrierValue(spec, step(sys, x, u)) == a u + c for every u.
Halfspace affineInputHalfspace(const PartiallyAffineSystem& sys, const BarrierSpec& spec,
                               const VectorXd& x);

// Membership in K_S(x): u in U and h(next) >= 0 (boundary counts as safe).
bool inSafeInputSet(const PartiallyAffineSystem& sys, const BarrierSpec& spec,
                    const VectorXd& x, const VectorXd& u);

struct PriorMembership {
    bool inKPrime = false;
    bool inKDoublePrime = false;
};

// Memberships in the more restrictive prior-work sets K' (gamma) and
// K'' (alphaFn). Requires x in S.
PriorMembership inPriorInputSets(const PartiallyAffineSystem& sys, const BarrierSpec& spec,
                                 const VectorXd& x, const VectorXd& u,
                                 const ComparisonParams& params);

}  // namespace dtcbf

#endif  // DTCBF_BARRIER_HPP
