#ifndef DTCBF_COMMON_HPP
#define DTCBF_COMMON_HPP

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>
#include <string>

namespace dtcbf {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Default numerical tolerances, overridable per call where it matters.
inline constexpr double kFeasTol = 1e-8;
inline constexpr double kEpsStrict = 1e-9;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
    using Error::Error;
};

struct InputBoundsError : Error {
    using Error::Error;
};

struct DomainError : Error {
    using Error::Error;
};

struct WrongVariantError : Error {
    using Error::Error;
};

struct NoActivePieceError : Error {
    using Error::Error;
};

// State already outside the barrier's sqrt domain; carries the offending pair.
struct UnsafeStateError : Error {
    UnsafeStateError(const std::string& msg, double y_, double v_)
        : Error(msg), y(y_), v(v_) {}
    double y;
    double v;
};

struct DefinitenessError : Error {
    using Error::Error;
};

struct SolverFailure : Error {
    using Error::Error;
};

struct ResourceError : Error {
    using Error::Error;
};

struct ArityError : Error {
    using Error::Error;
};

}  // namespace dtcbf

#endif  // DTCBF_COMMON_HPP
