#include "dtcbf/constraint_system.hpp"

#include <nlohmann/json.hpp>

namespace dtcbf {

using nlohmann::json;

std::string senseName(Sense s) {
    switch (s) {
        case Sense::Ge: return ">=";
        case Sense::Gt: return ">";
        case Sense::Le: return "<=";
        case Sense::Lt: return "<";
        case Sense::Eq: return "==";
    }
    return "?";
}

Sense senseFromName(const std::string& name) {
    if (name == ">=") return Sense::Ge;
    if (name == ">") return Sense::Gt;
    if (name == "<=") return Sense::Le;
    if (name == "<") return Sense::Lt;
    if (name == "==") return Sense::Eq;
    throw Error("unknown sense: " + name);
}

double AffinePredicate::lhs(const VectorXd& x) const {
    double v = constant;
    const int k = static_cast<int>(std::min<Eigen::Index>(coeffs.size(), x.size()));
    for (int i = 0; i < k; ++i) v += coeffs(i) * x(i);
    return v;
}

bool AffinePredicate::holds(const VectorXd& x, double epsStrict, double tol) const {
    const double v = lhs(x);
    switch (sense) {
        case Sense::Ge: return v >= -tol;
        case Sense::Gt: return v >= epsStrict - tol;
        case Sense::Le: return v <= tol;
        case Sense::Lt: return v <= -epsStrict + tol;
        case Sense::Eq: return std::abs(v) <= tol;
    }
    return false;
}

AffinePredicate AffinePredicate::negated() const {
    AffinePredicate out = *this;
    switch (sense) {
        case Sense::Ge: out.sense = Sense::Lt; break;
        case Sense::Gt: out.sense = Sense::Le; break;
        case Sense::Le: out.sense = Sense::Gt; break;
        case Sense::Lt: out.sense = Sense::Ge; break;
        case Sense::Eq: throw Error("negated: equality predicates have no sense flip");
    }
    return out;
}

AffinePredicate AffinePredicate::normalized() const {
    AffinePredicate out = *this;
    if (sense == Sense::Le || sense == Sense::Lt) {
        out.coeffs = -coeffs;
        out.constant = -constant;
        out.sense = sense == Sense::Le ? Sense::Ge : Sense::Gt;
    }
    return out;
}

ConstraintSystem ConstraintSystem::overDecisionVars(int numDecision, const VectorXd& lower,
                                                    const VectorXd& upper) {
    if (lower.size() != numDecision || upper.size() != numDecision) {
        throw DimensionError("ConstraintSystem: bounds must match numDecision");
    }
    ConstraintSystem s;
    s.numDecision = numDecision;
    s.numContinuous = numDecision;
    s.lower = lower;
    s.upper = upper;
    return s;
}

ConstraintSystem ConstraintSystem::overDecisionVars(int numDecision) {
    return overDecisionVars(numDecision, VectorXd::Constant(numDecision, -kInf),
                            VectorXd::Constant(numDecision, kInf));
}

int ConstraintSystem::addSlack(double lo, double hi, const std::string& provenance) {
    const int id = numContinuous++;
    lower.conservativeResize(numContinuous);
    upper.conservativeResize(numContinuous);
    lower(id) = lo;
    upper(id) = hi;
    slackProvenance.push_back(provenance);
    return id;
}

int ConstraintSystem::addBinary() { return numBinaries++; }

int ConstraintSystem::addConstraint(AffinePredicate p) {
    const Eigen::Index old = p.coeffs.size();
    if (old > numContinuous) {
        throw DimensionError("addConstraint: coeffs longer than variable count");
    }
    p.coeffs.conservativeResize(numContinuous);
    p.coeffs.tail(numContinuous - old).setZero();
    constraints.push_back(std::move(p));
    return static_cast<int>(constraints.size()) - 1;
}

void ConstraintSystem::addSos1(Sos1Group g) {
    for (const auto& mem : g.members) {
        if (mem.isBinary ? (mem.id < 0 || mem.id >= numBinaries)
                         : (mem.id < 0 || mem.id >= numContinuous)) {
            throw DimensionError("addSos1: member references unknown variable");
        }
    }
    sos1Groups.push_back(std::move(g));
}

void ConstraintSystem::addCardinality(CardinalityConstraint c) {
    for (int b : c.binaries) {
        if (b < 0 || b >= numBinaries) {
            throw DimensionError("addCardinality: unknown binary id");
        }
    }
    cardinalities.push_back(std::move(c));
}

double ConstraintSystem::coeff(int c, int var) const {
    const auto& row = constraints[static_cast<std::size_t>(c)].coeffs;
    return var < row.size() ? row(var) : 0.0;
}

void ConstraintSystem::validate() const {
    if (lower.size() != numContinuous || upper.size() != numContinuous) {
        throw DimensionError("ConstraintSystem: bounds size mismatch");
    }
    if (static_cast<int>(slackProvenance.size()) != numSlacks()) {
        throw DimensionError("ConstraintSystem: slack provenance mismatch");
    }
    for (const auto& p : constraints) {
        if (p.coeffs.size() > numContinuous) {
            throw DimensionError("ConstraintSystem: constraint over unknown variable");
        }
    }
    for (const auto& g : sos1Groups) {
        for (const auto& mem : g.members) {
            if (mem.isBinary ? mem.id >= numBinaries : mem.id >= numContinuous) {
                throw DimensionError("ConstraintSystem: SOS-1 member out of range");
            }
        }
    }
    for (const auto& c : cardinalities) {
        for (int b : c.binaries) {
            if (b < 0 || b >= numBinaries) {
                throw DimensionError("ConstraintSystem: cardinality over unknown binary");
            }
        }
    }
}

namespace {

json boundToJson(double v) {
    if (v == kInf) return json("inf");
    if (v == -kInf) return json("-inf");
    return json(v);
}

double boundFromJson(const json& j) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
        throw Error("bad bound: " + s);
    }
    return j.get<double>();
}

}  // namespace

json ConstraintSystem::toJson() const {
    json j;
    j["num_decision"] = numDecision;
    j["num_continuous"] = numContinuous;
    j["lower"] = json::array();
    j["upper"] = json::array();
    for (int i = 0; i < numContinuous; ++i) {
        j["lower"].push_back(boundToJson(lower(i)));
        j["upper"].push_back(boundToJson(upper(i)));
    }
    j["constraints"] = json::array();
    for (const auto& p : constraints) {
        json row;
        row["coeffs"] = std::vector<double>(p.coeffs.data(), p.coeffs.data() + p.coeffs.size());
        row["constant"] = p.constant;
        row["sense"] = senseName(p.sense);
        row["label"] = p.label;
        j["constraints"].push_back(row);
    }
    j["num_binaries"] = numBinaries;
    j["sos1_groups"] = json::array();
    for (const auto& g : sos1Groups) {
        json grp;
        grp["label"] = g.label;
        grp["members"] = json::array();
        for (const auto& mem : g.members) {
            grp["members"].push_back({{"kind", mem.isBinary ? "binary" : "continuous"},
                                      {"id", mem.id}});
        }
        j["sos1_groups"].push_back(grp);
    }
    j["cardinalities"] = json::array();
    for (const auto& c : cardinalities) {
        j["cardinalities"].push_back(
            {{"binaries", c.binaries}, {"min_active", c.minActive}, {"label", c.label}});
    }
    j["slack_provenance"] = slackProvenance;
    return j;
}

ConstraintSystem ConstraintSystem::fromJson(const json& j) {
    ConstraintSystem s;
    s.numDecision = j.at("num_decision").get<int>();
    s.numContinuous = j.at("num_continuous").get<int>();
    s.lower.resize(s.numContinuous);
    s.upper.resize(s.numContinuous);
    for (int i = 0; i < s.numContinuous; ++i) {
        s.lower(i) = boundFromJson(j.at("lower").at(static_cast<std::size_t>(i)));
        s.upper(i) = boundFromJson(j.at("upper").at(static_cast<std::size_t>(i)));
    }
    for (const auto& row : j.at("constraints")) {
        AffinePredicate p;
        const auto c = row.at("coeffs").get<std::vector<double>>();
        p.coeffs = Eigen::Map<const RowVectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
        p.constant = row.at("constant").get<double>();
        p.sense = senseFromName(row.at("sense").get<std::string>());
        p.label = row.value("label", "");
        s.constraints.push_back(std::move(p));
    }
    s.numBinaries = j.at("num_binaries").get<int>();
    for (const auto& grp : j.at("sos1_groups")) {
        Sos1Group g;
        g.label = grp.value("label", "");
        for (const auto& mem : grp.at("members")) {
            g.members.push_back({mem.at("kind").get<std::string>() == "binary",
                                 mem.at("id").get<int>()});
        }
        s.sos1Groups.push_back(std::move(g));
    }
    for (const auto& c : j.at("cardinalities")) {
        CardinalityConstraint cc;
        cc.binaries = c.at("binaries").get<std::vector<int>>();
        cc.minActive = c.at("min_active").get<int>();
        cc.label = c.value("label", "");
        s.cardinalities.push_back(std::move(cc));
    }
    s.slackProvenance = j.at("slack_provenance").get<std::vector<std::string>>();
    s.validate();
    return s;
}

}  // namespace dtcbf
