#ifndef DTCBF_CONSTRAINT_SYSTEM_HPP
#define DTCBF_CONSTRAINT_SYSTEM_HPP

#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "dtcbf/common.hpp"

namespace dtcbf {

enum class Sense { Ge, Gt, Le, Lt, Eq };

std::string senseName(Sense s);
Sense senseFromName(const std::string& name);

// Affine condition over the continuous variables of a ConstraintSystem:
//   coeffs * x + constant  <sense>  0
// Strict senses are kept symbolic; solvers resolve them with an eps margin.
struct AffinePredicate {
    RowVectorXd coeffs;
    double constant = 0.0;
    Sense sense = Sense::Ge;
    std::string label;

    double lhs(const VectorXd& x) const;
    bool holds(const VectorXd& x, double epsStrict = kEpsStrict, double tol = kFeasTol) const;

    // Sense flip of the whole condition: >=0 <-> <0, >0 <-> <=0.
    AffinePredicate negated() const;
    // Equivalent predicate with sense Ge/Gt/Eq (multiplies Le/Lt by -1).
    AffinePredicate normalized() const;
};

struct Sos1Member {
    bool isBinary = false;
    int id = 0;  // continuous variable index or binary index

    bool operator==(const Sos1Member&) const = default;
};

// At most one member may be nonzero.
struct Sos1Group {
    std::vector<Sos1Member> members;
    std::string label;
};

// sum of the listed binaries >= minActive.
struct CardinalityConstraint {
    std::vector<int> binaries;
    int minActive = 1;
    std::string label;
};

// Mixed-integer constraint IR: decision variables first, compiler-introduced
// slacks after them, binaries indexed separately.
struct ConstraintSystem {
    int numDecision = 0;
    int numContinuous = 0;
    VectorXd lower;  // size numContinuous
    VectorXd upper;
    std::vector<AffinePredicate> constraints;
    int numBinaries = 0;
    std::vector<Sos1Group> sos1Groups;
    std::vector<CardinalityConstraint> cardinalities;
    std::vector<std::string> slackProvenance;  // one entry per slack

    static ConstraintSystem overDecisionVars(int numDecision,
                                             const VectorXd& lower,
                                             const VectorXd& upper);
    static ConstraintSystem overDecisionVars(int numDecision);  // unbounded box

    int numSlacks() const { return numContinuous - numDecision; }
    bool isSlack(int var) const { return var >= numDecision; }

    int addSlack(double lo, double hi, const std::string& provenance);
    int addBinary();
    // Pads coeffs with zeros up to numContinuous.
    int addConstraint(AffinePredicate p);
    void addSos1(Sos1Group g);
    void addCardinality(CardinalityConstraint c);

    // Coefficient of variable `var` in constraint `c` (0 if the row was added
    // before the variable existed).
    double coeff(int c, int var) const;

    void validate() const;

    nlohmann::json toJson() const;
    static ConstraintSystem fromJson(const nlohmann::json& j);
};

}  // namespace dtcbf

#endif  // DTCBF_CONSTRAINT_SYSTEM_HPP
