#include "dtcbf/boolean.hpp"

namespace dtcbf {

Formula Formula::leaf(AffinePredicate p) {
    Formula f;
    f.kind = Kind::Leaf;
    f.pred = std::move(p);
    return f;
}

Formula Formula::negation(Formula f) {
    Formula out;
    out.kind = Kind::Not;
    out.children.push_back(std::move(f));
    return out;
}

Formula Formula::conjunction(std::vector<Formula> fs) {
    if (fs.empty()) throw ArityError("conjunction: empty operand list");
    Formula out;
    out.kind = Kind::And;
    out.children = std::move(fs);
    return out;
}

Formula Formula::disjunction(std::vector<Formula> fs) {
    if (fs.empty()) throw ArityError("disjunction: empty operand list");
    Formula out;
    out.kind = Kind::Or;
    out.children = std::move(fs);
    return out;
}

Formula Formula::implies(Formula p, Formula q) {
    std::vector<Formula> fs;
    fs.push_back(negation(std::move(p)));
    fs.push_back(std::move(q));
    return disjunction(std::move(fs));
}

Formula Formula::exclusiveOr(Formula p, Formula q) {
    std::vector<Formula> either;
    either.push_back(p);
    either.push_back(q);
    std::vector<Formula> both;
    both.push_back(std::move(p));
    both.push_back(std::move(q));
    std::vector<Formula> fs;
    fs.push_back(disjunction(std::move(either)));
    fs.push_back(negation(conjunction(std::move(both))));
    return conjunction(std::move(fs));
}

Formula Formula::equivalent(Formula p, Formula q) {
    return negation(exclusiveOr(std::move(p), std::move(q)));
}

Formula Formula::ifThenElse(AffinePredicate guard, AffinePredicate body) {
    std::vector<Formula> fs;
    fs.push_back(negation(leaf(std::move(guard))));
    fs.push_back(leaf(std::move(body)));
    return disjunction(std::move(fs));
}

bool Formula::evaluate(const VectorXd& x, double epsStrict, double tol) const {
    switch (kind) {
        case Kind::Leaf:
            return pred.holds(x, epsStrict, tol);
        case Kind::Not:
            return !children.front().evaluate(x, epsStrict, tol);
        case Kind::And:
            for (const auto& c : children) {
                if (!c.evaluate(x, epsStrict, tol)) return false;
            }
            return true;
        case Kind::Or:
            for (const auto& c : children) {
                if (c.evaluate(x, epsStrict, tol)) return true;
            }
            return false;
    }
    return false;
}

AffinePredicate negate(const AffinePredicate& p) { return p.negated(); }

namespace {

Formula nnf(const Formula& f, bool negated) {
    switch (f.kind) {
        case Formula::Kind::Leaf:
            return Formula::leaf(negated ? f.pred.negated() : f.pred);
        case Formula::Kind::Not:
            return nnf(f.children.front(), !negated);
        case Formula::Kind::And:
        case Formula::Kind::Or: {
            const bool isAnd = (f.kind == Formula::Kind::And) != negated;  // De Morgan
            std::vector<Formula> kids;
            kids.reserve(f.children.size());
            for (const auto& c : f.children) kids.push_back(nnf(c, negated));
            return isAnd ? Formula::conjunction(std::move(kids))
                         : Formula::disjunction(std::move(kids));
        }
    }
    throw Error("nnf: unreachable");
}

void compileNnf(const Formula& f, ConstraintSystem& sys, int depth) {
    switch (f.kind) {
        case Formula::Kind::Leaf:
            sys.addConstraint(f.pred.normalized());
            return;
        case Formula::Kind::Not:
            throw Error("compileNnf: Not survived normalization");
        case Formula::Kind::And:
            for (const auto& c : f.children) compileNnf(c, sys, depth);
            return;
        case Formula::Kind::Or: {
            const int orId = static_cast<int>(sys.sos1Groups.size());
            std::vector<int> binaries;
            for (std::size_t i = 0; i < f.children.size(); ++i) {
                const auto firstRow = sys.constraints.size();
                compileNnf(f.children[i], sys, depth + 1);
                const std::string tag =
                    "or" + std::to_string(orId) + ".d" + std::to_string(i);
                const int slack = sys.addSlack(-kInf, kInf, tag);
                for (auto r = firstRow; r < sys.constraints.size(); ++r) {
                    auto& row = sys.constraints[r];
                    if (row.sense == Sense::Eq) {
                        throw Error("compileNnf: equality row inside a disjunct");
                    }
                    const auto oldSize = row.coeffs.size();
                    row.coeffs.conservativeResize(sys.numContinuous);
                    row.coeffs.tail(sys.numContinuous - oldSize).setZero();
                    row.coeffs(slack) = -1.0;  // h_i - s_i >= 0
                }
                const int b = sys.addBinary();
                sys.addSos1({{{false, slack}, {true, b}}, tag});
                binaries.push_back(b);
            }
            sys.addCardinality({binaries, 1, "or" + std::to_string(orId)});
            return;
        }
    }
}

}  // namespace

Formula toNnf(const Formula& f) { return nnf(f, false); }

void compileInto(const Formula& f, ConstraintSystem& sys) {
    compileNnf(toNnf(f), sys, 0);
}

ConstraintSystem compileFormula(const Formula& f, int numDecision) {
    ConstraintSystem sys = ConstraintSystem::overDecisionVars(numDecision);
    compileInto(f, sys);
    sys.validate();
    return sys;
}

ConstraintSystem compileFormula(const Formula& f, int numDecision, const VectorXd& lower,
                                const VectorXd& upper) {
    ConstraintSystem sys = ConstraintSystem::overDecisionVars(numDecision, lower, upper);
    compileInto(f, sys);
    sys.validate();
    return sys;
}

void addConjunction(ConstraintSystem& sys, const std::vector<AffinePredicate>& preds) {
    if (preds.empty()) throw ArityError("addConjunction: empty predicate list");
    for (const auto& p : preds) sys.addConstraint(p.normalized());
}

void addDisjunction(ConstraintSystem& sys, const std::vector<AffinePredicate>& preds) {
    if (preds.empty()) throw ArityError("addDisjunction: empty predicate list");
    std::vector<Formula> fs;
    fs.reserve(preds.size());
    for (const auto& p : preds) fs.push_back(Formula::leaf(p));
    compileInto(Formula::disjunction(std::move(fs)), sys);
}

ConstraintSystem compilePiecewise(const PartiallyAffineSystem& sys, const BarrierSpec& spec,
                                  const VectorXd& x) {
    if (!spec.isPiecewise()) {
        throw WrongVariantError("compilePiecewise: spec is not the Piecewise variant");
    }
    const auto& pw = std::get<PiecewiseBarrier>(spec.form);
    const VectorXd f1x = sys.n1 > 0 ? sys.f1(x) : VectorXd(0);
    const VectorXd f2x = sys.f2(x);
    const MatrixXd gx = sys.g(x);

    // Guard/body of each piece evaluated at the next state, affine in u.
    struct Row {
        RowVectorXd guardCoeffs;
        double guardConst;
        RowVectorXd bodyCoeffs;
        double bodyConst;
    };
    std::vector<Row> rows;
    for (const auto& piece : pw.pieces) {
        Row r;
        const RowVectorXd kap = piece.kappa(f1x);
        const RowVectorXd mu = piece.mu(f1x);
        r.guardCoeffs = kap * gx;
        r.guardConst = kap.dot(f2x.transpose()) + piece.lambda(f1x);
        r.bodyCoeffs = mu * gx;
        r.bodyConst = mu.dot(f2x.transpose()) + piece.nu(f1x);
        rows.push_back(std::move(r));
    }

    ConstraintSystem out =
        ConstraintSystem::overDecisionVars(sys.m, sys.inputLower, sys.inputUpper);

    if (rows.size() == 1) {
        out.addConstraint({rows[0].guardCoeffs, rows[0].guardConst, Sense::Le, "piece0.guard"});
        out.addConstraint({rows[0].bodyCoeffs, rows[0].bodyConst, Sense::Ge, "piece0.body"});
        out.validate();
        return out;
    }

    if (rows.size() == 2) {
        // Merged encoding: one nonnegative slack per piece, added to both the
        // body and the piece's region assertion. Assumes the two regions
        // partition the domain; the shared boundary goes to piece 0.
        const int s0 = out.addSlack(0.0, kInf, "piece0.s");
        const int s1 = out.addSlack(0.0, kInf, "piece1.s");
        AffinePredicate body0{rows[0].bodyCoeffs, rows[0].bodyConst, Sense::Ge, "piece0.body"};
        body0.coeffs.conservativeResize(out.numContinuous);
        body0.coeffs(s0) = 1.0;
        body0.coeffs(s1) = 0.0;
        out.addConstraint(body0);
        AffinePredicate reg0{-rows[0].guardCoeffs, -rows[0].guardConst, Sense::Ge, "piece0.region"};
        reg0.coeffs.conservativeResize(out.numContinuous);
        reg0.coeffs(s0) = 1.0;
        reg0.coeffs(s1) = 0.0;
        out.addConstraint(reg0);
        AffinePredicate body1{rows[1].bodyCoeffs, rows[1].bodyConst, Sense::Ge, "piece1.body"};
        body1.coeffs.conservativeResize(out.numContinuous);
        body1.coeffs(s0) = 0.0;
        body1.coeffs(s1) = 1.0;
        out.addConstraint(body1);
        AffinePredicate reg1{-rows[1].guardCoeffs, -rows[1].guardConst, Sense::Gt, "piece1.region"};
        reg1.coeffs.conservativeResize(out.numContinuous);
        reg1.coeffs(s0) = 0.0;
        reg1.coeffs(s1) = 1.0;
        out.addConstraint(reg1);
        out.addSos1({{{false, s0}, {false, s1}}, "pieces"});
        out.validate();
        return out;
    }

    // Generic path: conjunction of guarded bodies plus guard coverage.
    std::vector<Formula> parts;
    std::vector<Formula> coverage;
    for (std::size_t j = 0; j < rows.size(); ++j) {
        AffinePredicate guard{rows[j].guardCoeffs, rows[j].guardConst, Sense::Le,
                              "piece" + std::to_string(j) + ".guard"};
        AffinePredicate body{rows[j].bodyCoeffs, rows[j].bodyConst, Sense::Ge,
                             "piece" + std::to_string(j) + ".body"};
        parts.push_back(Formula::ifThenElse(guard, body));
        coverage.push_back(Formula::leaf(guard));
    }
    parts.push_back(Formula::disjunction(std::move(coverage)));
    compileInto(Formula::conjunction(std::move(parts)), out);
    out.validate();
    return out;
}

}  // namespace dtcbf
