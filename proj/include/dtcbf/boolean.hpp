#ifndef DTCBF_BOOLEAN_HPP
#define DTCBF_BOOLEAN_HPP

#include <vector>

#include "dtcbf/barrier.hpp"
#include "dtcbf/constraint_system.hpp"

namespace dtcbf {

// Boolean formula over affine predicates. Secondary operators expand to the
// basic ones; negation is pushed to the leaves before compilation.
struct Formula {
    enum class Kind { Leaf, Not, And, Or };
    Kind kind = Kind::Leaf;
    AffinePredicate pred;          // Leaf only
    std::vector<Formula> children;

    static Formula leaf(AffinePredicate p);
    static Formula negation(Formula f);
    static Formula conjunction(std::vector<Formula> fs);
    static Formula disjunction(std::vector<Formula> fs);
    static Formula implies(Formula p, Formula q);       // !p | q
    static Formula exclusiveOr(Formula p, Formula q);   // (p | q) & !(p & q)
    static Formula equivalent(Formula p, Formula q);    // !(p ^ q)
    // guard has sense <=; compiles as !(guard <= 0) | body.
    static Formula ifThenElse(AffinePredicate guard, AffinePredicate body);

    // Truth value at a point under eps-resolved strict inequalities.
    bool evaluate(const VectorXd& x, double epsStrict = kEpsStrict, double tol = 0.0) const;
};

// Negation-normal form: Not nodes eliminated via De Morgan and leaf sense
// flips.
Formula toNnf(const Formula& f);

// Predicate-level sense flip (the IR operation behind Formula negation).
AffinePredicate negate(const AffinePredicate& p);

// Compiles `f` as a top-level conjunction into `sys`. Disjunctions introduce
// one free slack, one binary and one SOS-1 pair per disjunct plus a
// cardinality constraint; the slack relaxes every row of its disjunct.
void compileInto(const Formula& f, ConstraintSystem& sys);

ConstraintSystem compileFormula(const Formula& f, int numDecision);
ConstraintSystem compileFormula(const Formula& f, int numDecision, const VectorXd& lower,
                                const VectorXd& upper);

// Spec-level fragment builders over existing systems.
void addConjunction(ConstraintSystem& sys, const std::vector<AffinePredicate>& preds);
void addDisjunction(ConstraintSystem& sys, const std::vector<AffinePredicate>& preds);

// Mixed-integer encoding of the piecewise safe input set K^P_S(x) over the
// input u (the system's m decision variables, bounded by the input box).
// Two-piece specs use the merged one-slack-per-piece encoding with the
// boundary assigned to the first piece; larger specs fall back to generic
// if-then-else fragments plus a guard-coverage disjunction.
ConstraintSystem compilePiecewise(const PartiallyAffineSystem& sys, const BarrierSpec& spec,
                                  const VectorXd& x);

}  // namespace dtcbf

#endif  // DTCBF_BOOLEAN_HPP
