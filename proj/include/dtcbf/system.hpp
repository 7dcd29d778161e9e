#ifndef DTCBF_SYSTEM_HPP
#define DTCBF_SYSTEM_HPP

#include <functional>

#include "dtcbf/common.hpp"

namespace dtcbf {

// Discrete-time system x+ = [f1(x); f2(x) + g(x) u] where the x1 block is
// autonomous and the x2 block is affine in the input. Inputs live in a box.
struct PartiallyAffineSystem {
    int n1 = 0;
    int n2 = 0;
    int m = 0;
    std::function<VectorXd(const VectorXd&)> f1;   // R^n -> R^{n1}
    std::function<VectorXd(const VectorXd&)> f2;   // R^n -> R^{n2}
    std::function<MatrixXd(const VectorXd&)> g;    // R^n -> R^{n2 x m}
    VectorXd inputLower;                           // size m, -inf allowed
    VectorXd inputUpper;                           // size m, +inf allowed

    int n() const { return n1 + n2; }

    void validate() const;
    bool inputInBox(const VectorXd& u) const;
    VectorXd step(const VectorXd& x, const VectorXd& u) const;
};

// Convenience constructor for unbounded inputs.
VectorXd unboundedLower(int m);
VectorXd unboundedUpper(int m);

}  // namespace dtcbf

#endif  // DTCBF_SYSTEM_HPP
