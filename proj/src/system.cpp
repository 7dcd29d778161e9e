#include "dtcbf/system.hpp"

namespace dtcbf {

void PartiallyAffineSystem::validate() const {
    if (n1 < 0 || n2 < 1 || m < 1) {
        throw DimensionError("PartiallyAffineSystem: need n1 >= 0, n2 >= 1, m >= 1");
    }
    if (!f2 || !g) {
        throw DimensionError("PartiallyAffineSystem: f2 and g must be set");
    }
    if (n1 > 0 && !f1) {
        throw DimensionError("PartiallyAffineSystem: f1 must be set when n1 > 0");
    }
    if (inputLower.size() != m || inputUpper.size() != m) {
        throw DimensionError("PartiallyAffineSystem: input box must have size m");
    }
    for (int i = 0; i < m; ++i) {
        if (inputLower(i) > inputUpper(i)) {
            throw InputBoundsError("PartiallyAffineSystem: inputLower > inputUpper at coordinate " +
                                   std::to_string(i));
        }
    }
}

bool PartiallyAffineSystem::inputInBox(const VectorXd& u) const {
    if (u.size() != m) {
        throw DimensionError("inputInBox: dim(u) != m");
    }
    for (int i = 0; i < m; ++i) {
        if (u(i) < inputLower(i) || u(i) > inputUpper(i)) return false;
    }
    return true;
}

VectorXd PartiallyAffineSystem::step(const VectorXd& x, const VectorXd& u) const {
    if (x.size() != n()) {
        throw DimensionError("step: dim(x) != n1 + n2");
    }
    if (u.size() != m) {
        throw DimensionError("step: dim(u) != m");
    }
    if (!inputInBox(u)) {
        throw InputBoundsError("step: u outside input box");
    }
    VectorXd next(n());
    if (n1 > 0) next.head(n1) = f1(x);
    next.tail(n2) = f2(x) + g(x) * u;
    return next;
}

VectorXd unboundedLower(int m) { return VectorXd::Constant(m, -kInf); }
VectorXd unboundedUpper(int m) { return VectorXd::Constant(m, kInf); }

}  // namespace dtcbf
