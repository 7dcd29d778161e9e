#include "dtcbf/miqp.hpp"

#include <Eigen/Cholesky>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <queue>

namespace dtcbf {

using nlohmann::json;

void QuadraticObjective::validate() const {
    const int n = static_cast<int>(H.rows());
    if (H.cols() != n || F.size() != n) {
        throw DimensionError("QuadraticObjective: dimension mismatch");
    }
    if ((H - H.transpose()).cwiseAbs().maxCoeff() >
        1e-12 * std::max(1.0, H.cwiseAbs().maxCoeff())) {
        throw DefinitenessError("QuadraticObjective: H not symmetric");
    }
    Eigen::LLT<MatrixXd> llt(H);
    if (llt.info() != Eigen::Success) {
        throw DefinitenessError("QuadraticObjective: H not positive definite");
    }
}

void MiqpProblem::validate() const {
    objective.validate();
    system.validate();
    if (objective.H.rows() != system.numDecision) {
        throw DimensionError("MiqpProblem: objective dimension != numDecision");
    }
}

namespace {

constexpr double kObjTieTol = 1e-9;

struct LeafQp {
    QpProblem qp;
    std::vector<int> ineqRowIds;  // constraint-system row per Ain row, -1 for bounds
    std::vector<int> eqRowIds;
};

// Pins implied by a branch choice vector (choice[g] = index of the member
// allowed nonzero, -1 = group unbranched / fully relaxed).
struct Pins {
    std::vector<bool> contPinned;  // per continuous variable
    std::vector<bool> binPinned;   // per binary
};

Pins computePins(const ConstraintSystem& sys, const std::vector<int>& choice) {
    Pins p;
    p.contPinned.assign(static_cast<std::size_t>(sys.numContinuous), false);
    p.binPinned.assign(static_cast<std::size_t>(sys.numBinaries), false);
    for (std::size_t g = 0; g < sys.sos1Groups.size(); ++g) {
        if (choice[g] < 0) continue;
        const auto& members = sys.sos1Groups[g].members;
        for (std::size_t j = 0; j < members.size(); ++j) {
            if (static_cast<int>(j) == choice[g]) continue;
            if (members[j].isBinary) {
                p.binPinned[static_cast<std::size_t>(members[j].id)] = true;
            } else {
                p.contPinned[static_cast<std::size_t>(members[j].id)] = true;
            }
        }
    }
    return p;
}

bool cardinalitySatisfiable(const ConstraintSystem& sys, const Pins& pins) {
    for (const auto& card : sys.cardinalities) {
        int freeCount = 0;
        for (int b : card.binaries) {
            if (!pins.binPinned[static_cast<std::size_t>(b)]) ++freeCount;
        }
        if (freeCount < card.minActive) return false;
    }
    return true;
}

// Lexicographically smallest binary assignment compatible with the pins and
// all cardinality constraints: zeros everywhere, with required ones placed at
// the largest free indices.
std::vector<int> canonicalBinaries(const ConstraintSystem& sys, const Pins& pins) {
    std::vector<int> b(static_cast<std::size_t>(sys.numBinaries), 0);
    for (const auto& card : sys.cardinalities) {
        int have = 0;
        for (int id : card.binaries) have += b[static_cast<std::size_t>(id)];
        std::vector<int> sorted = card.binaries;
        std::sort(sorted.begin(), sorted.end(), std::greater<int>());
        for (int id : sorted) {
            if (have >= card.minActive) break;
            if (pins.binPinned[static_cast<std::size_t>(id)]) continue;
            if (b[static_cast<std::size_t>(id)] == 0) {
                b[static_cast<std::size_t>(id)] = 1;
                ++have;
            }
        }
    }
    return b;
}

// Drops rows that a free slack can always absorb, iterating to a fixpoint.
// Returns indices of the surviving rows; throws if a free slack survives in
// a row (pattern outside the compiled encodings).
std::vector<int> eliminateFreeSlacks(const ConstraintSystem& sys, const Pins& pins,
                                     std::vector<AffinePredicate>& rows) {
    std::vector<int> alive(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) alive[i] = static_cast<int>(i);

    auto rowHasVar = [&](int r, int var) {
        return sys.coeff(r, var) != 0.0;
    };
    bool changed = true;
    std::vector<bool> dropped(rows.size(), false);
    while (changed) {
        changed = false;
        for (int s = sys.numDecision; s < sys.numContinuous; ++s) {
            if (pins.contPinned[static_cast<std::size_t>(s)]) continue;
            bool appears = false;
            bool plusOk = sys.upper(s) == kInf;
            bool minusOk = sys.lower(s) == -kInf;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (dropped[i]) continue;
                const auto& row = rows[i];
                const double c = s < row.coeffs.size() ? row.coeffs(s) : 0.0;
                if (c == 0.0) continue;
                appears = true;
                if (row.sense == Sense::Eq) {
                    plusOk = minusOk = false;
                    break;
                }
                // rows are normalized to Ge/Gt
                if (c < 0.0) plusOk = false;
                if (c > 0.0) minusOk = false;
            }
            if (appears && (plusOk || minusOk)) {
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    if (!dropped[i] && s < rows[i].coeffs.size() && rows[i].coeffs(s) != 0.0) {
                        dropped[i] = true;
                    }
                }
                changed = true;
            }
        }
    }
    // No free slack may survive.
    std::vector<int> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (dropped[i]) continue;
        for (int s = sys.numDecision; s < sys.numContinuous; ++s) {
            if (pins.contPinned[static_cast<std::size_t>(s)]) continue;
            if (s < rows[i].coeffs.size() && rows[i].coeffs(s) != 0.0) {
                throw SolverFailure("miqp: non-eliminable slack pattern in row '" +
                                    rows[i].label + "'");
            }
        }
        out.push_back(static_cast<int>(i));
    }
    (void)rowHasVar;
    return out;
}

// Builds the decision-variable QP for a (possibly partial) branch choice.
// nullopt = structurally infeasible before any QP is involved.
std::optional<LeafQp> buildNodeQp(const MiqpProblem& prob, const std::vector<int>& choice,
                                  double tol) {
    const auto& sys = prob.system;
    const Pins pins = computePins(sys, choice);
    if (!cardinalitySatisfiable(sys, pins)) return std::nullopt;
    for (int s = sys.numDecision; s < sys.numContinuous; ++s) {
        if (pins.contPinned[static_cast<std::size_t>(s)] &&
            (sys.lower(s) > tol || sys.upper(s) < -tol)) {
            return std::nullopt;  // pinned slack cannot be zero
        }
    }

    std::vector<AffinePredicate> rows;
    rows.reserve(sys.constraints.size());
    for (const auto& c : sys.constraints) rows.push_back(c.normalized());
    const std::vector<int> kept = eliminateFreeSlacks(sys, pins, rows);

    LeafQp leaf;
    const int nd = sys.numDecision;
    std::vector<RowVectorXd> ain;
    std::vector<double> bin;
    std::vector<RowVectorXd> aeq;
    std::vector<double> beq;
    for (int idx : kept) {
        const auto& row = rows[static_cast<std::size_t>(idx)];
        RowVectorXd a = RowVectorXd::Zero(nd);
        const int k = static_cast<int>(std::min<Eigen::Index>(row.coeffs.size(), nd));
        a.head(k) = row.coeffs.head(k);
        double b = row.constant;
        if (row.sense == Sense::Gt) b -= prob.epsStrict;
        if (a.cwiseAbs().maxCoeff() == 0.0) {
            const bool ok = row.sense == Sense::Eq ? std::abs(b) <= tol : b >= -tol;
            if (!ok) return std::nullopt;  // constant row violated
            continue;
        }
        if (row.sense == Sense::Eq) {
            aeq.push_back(a);
            beq.push_back(b);
            leaf.eqRowIds.push_back(idx);
        } else {
            ain.push_back(a);
            bin.push_back(b);
            leaf.ineqRowIds.push_back(idx);
        }
    }
    // Decision-variable box.
    for (int i = 0; i < nd; ++i) {
        if (sys.lower(i) != -kInf) {
            RowVectorXd a = RowVectorXd::Zero(nd);
            a(i) = 1.0;
            ain.push_back(a);
            bin.push_back(-sys.lower(i));
            leaf.ineqRowIds.push_back(-1);
        }
        if (sys.upper(i) != kInf) {
            RowVectorXd a = RowVectorXd::Zero(nd);
            a(i) = -1.0;
            ain.push_back(a);
            bin.push_back(sys.upper(i));
            leaf.ineqRowIds.push_back(-1);
        }
    }

    leaf.qp.H = prob.objective.H;
    leaf.qp.F = prob.objective.F;
    leaf.qp.Ain.resize(static_cast<Eigen::Index>(ain.size()), nd);
    leaf.qp.bin.resize(static_cast<Eigen::Index>(ain.size()));
    for (std::size_t i = 0; i < ain.size(); ++i) {
        leaf.qp.Ain.row(static_cast<Eigen::Index>(i)) = ain[i];
        leaf.qp.bin(static_cast<Eigen::Index>(i)) = bin[i];
    }
    leaf.qp.Aeq.resize(static_cast<Eigen::Index>(aeq.size()), nd);
    leaf.qp.beq.resize(static_cast<Eigen::Index>(aeq.size()));
    for (std::size_t i = 0; i < aeq.size(); ++i) {
        leaf.qp.Aeq.row(static_cast<Eigen::Index>(i)) = aeq[i];
        leaf.qp.beq(static_cast<Eigen::Index>(i)) = beq[i];
    }
    return leaf;
}

struct LeafCandidate {
    double objective;
    VectorXd u;
    std::vector<int> binaries;
    std::vector<int> choice;
    std::vector<int> activeRows;
};

// true if a should replace b.
bool beats(const LeafCandidate& a, const LeafCandidate& b) {
    if (a.objective < b.objective - kObjTieTol) return true;
    if (a.objective > b.objective + kObjTieTol) return false;
    return a.binaries < b.binaries;
}

std::optional<LeafCandidate> evaluateLeaf(const MiqpProblem& prob,
                                          const std::vector<int>& choice, double tol) {
    const auto leaf = buildNodeQp(prob, choice, tol);
    if (!leaf) return std::nullopt;
    const QpResult qp = solveQp(leaf->qp);
    if (qp.status != QpStatus::Optimal) return std::nullopt;
    LeafCandidate cand;
    cand.objective = qp.objective;
    cand.u = qp.x;
    cand.binaries = canonicalBinaries(prob.system, computePins(prob.system, choice));
    cand.choice = choice;
    for (int k : qp.activeSet) {
        const int id = leaf->ineqRowIds[static_cast<std::size_t>(k)];
        if (id >= 0) cand.activeRows.push_back(id);
    }
    for (int id : leaf->eqRowIds) cand.activeRows.push_back(id);
    std::sort(cand.activeRows.begin(), cand.activeRows.end());
    return cand;
}

MiqpSolution finishSolution(const std::optional<LeafCandidate>& best, long nodes) {
    MiqpSolution sol;
    sol.nodesExplored = nodes;
    if (!best) {
        sol.status = MiqpStatus::Infeasible;
        return sol;
    }
    sol.status = MiqpStatus::Optimal;
    sol.u = best->u;
    sol.objective = best->objective;
    sol.binaries = best->binaries;
    sol.activeSet = best->activeRows;
    sol.freeMember = best->choice;
    return sol;
}

// Branch order within a group: trailing member first. For {slack, binary}
// pairs this enforces the constraint before relaxing it; for slack pairs it
// activates the lower-indexed piece first.
std::vector<int> branchOrder(std::size_t groupSize) {
    std::vector<int> order;
    for (int j = static_cast<int>(groupSize) - 1; j >= 0; --j) order.push_back(j);
    return order;
}

}  // namespace

MiqpSolution solveMiqp(const MiqpProblem& prob, const MiqpOptions& opts) {
    prob.validate();
    const auto& groups = prob.system.sos1Groups;
    const int G = static_cast<int>(groups.size());

    struct Node {
        double bound;
        long seq;
        std::vector<int> choice;
        int depth;
        std::optional<LeafCandidate> leaf;  // set when depth == G
    };
    auto cmp = [](const Node& a, const Node& b) {
        if (a.bound != b.bound) return a.bound > b.bound;
        return a.seq > b.seq;
    };
    std::priority_queue<Node, std::vector<Node>, decltype(cmp)> open(cmp);

    long nodes = 0;
    long seq = 0;
    std::optional<LeafCandidate> incumbent;

    auto evalAndPush = [&](std::vector<int> choice, int depth, double parentBound) {
        ++nodes;
        if (nodes > opts.nodeLimit) {
            throw ResourceError("solveMiqp: node limit exceeded");
        }
        const auto leafQp = buildNodeQp(prob, choice, opts.feasTol);
        if (!leafQp) return;
        const QpResult qp = solveQp(leafQp->qp);
        if (qp.status != QpStatus::Optimal) return;
        // Relaxations only tighten down the tree.
        if (qp.objective < parentBound - 1e-7) {
            throw SolverFailure("solveMiqp: non-monotone relaxation bound");
        }
        if (incumbent && qp.objective > incumbent->objective + kObjTieTol) return;
        Node node;
        node.bound = qp.objective;
        node.seq = seq++;
        node.depth = depth;
        if (depth == G) {
            LeafCandidate cand;
            cand.objective = qp.objective;
            cand.u = qp.x;
            cand.binaries = canonicalBinaries(prob.system, computePins(prob.system, choice));
            cand.choice = choice;
            for (int k : qp.activeSet) {
                const int id = leafQp->ineqRowIds[static_cast<std::size_t>(k)];
                if (id >= 0) cand.activeRows.push_back(id);
            }
            for (int id : leafQp->eqRowIds) cand.activeRows.push_back(id);
            std::sort(cand.activeRows.begin(), cand.activeRows.end());
            node.leaf = std::move(cand);
        }
        node.choice = std::move(choice);
        open.push(std::move(node));
    };

    evalAndPush(std::vector<int>(static_cast<std::size_t>(G), -1), 0, -kInf);

    while (!open.empty()) {
        Node node = open.top();
        open.pop();
        if (incumbent && node.bound > incumbent->objective + kObjTieTol) continue;
        if (node.depth == G) {
            if (!incumbent || beats(*node.leaf, *incumbent)) incumbent = node.leaf;
            continue;
        }
        const int g = node.depth;
        for (int freeMember : branchOrder(groups[static_cast<std::size_t>(g)].members.size())) {
            std::vector<int> child = node.choice;
            child[static_cast<std::size_t>(g)] = freeMember;
            evalAndPush(std::move(child), node.depth + 1, node.bound);
        }
    }
    return finishSolution(incumbent, nodes);
}

MiqpSolution bruteForce(const MiqpProblem& prob, const MiqpOptions& opts) {
    prob.validate();
    const auto& groups = prob.system.sos1Groups;
    const int G = static_cast<int>(groups.size());
    double total = 1.0;
    for (const auto& g : groups) total *= static_cast<double>(g.members.size());
    if (total > static_cast<double>(1 << 20)) {
        throw ResourceError("bruteForce: too many branch points");
    }

    std::optional<LeafCandidate> best;
    long nodes = 0;
    std::vector<int> choice(static_cast<std::size_t>(G), 0);
    while (true) {
        std::vector<int> mapped(static_cast<std::size_t>(G));
        for (int g = 0; g < G; ++g) {
            const auto order = branchOrder(groups[static_cast<std::size_t>(g)].members.size());
            mapped[static_cast<std::size_t>(g)] = order[static_cast<std::size_t>(choice[static_cast<std::size_t>(g)])];
        }
        ++nodes;
        const auto cand = evaluateLeaf(prob, mapped, opts.feasTol);
        if (cand && (!best || beats(*cand, *best))) best = cand;
        // mixed-radix increment
        int g = G - 1;
        for (; g >= 0; --g) {
            const int radix = static_cast<int>(groups[static_cast<std::size_t>(g)].members.size());
            if (++choice[static_cast<std::size_t>(g)] < radix) break;
            choice[static_cast<std::size_t>(g)] = 0;
        }
        if (g < 0) break;
        if (G == 0) break;
    }
    return finishSolution(best, nodes);
}

bool pointFeasible(const ConstraintSystem& sysIn, const VectorXd& decision, double epsStrict,
                   double tol) {
    ConstraintSystem sys = sysIn;
    if (decision.size() != sys.numDecision) {
        throw DimensionError("pointFeasible: decision vector size mismatch");
    }
    for (int i = 0; i < sys.numDecision; ++i) {
        if (decision(i) < sys.lower(i) - tol || decision(i) > sys.upper(i) + tol) return false;
    }
    const auto& groups = sys.sos1Groups;
    const int G = static_cast<int>(groups.size());
    std::vector<int> choice(static_cast<std::size_t>(G), 0);
    while (true) {
        const Pins pins = computePins(sys, choice);
        bool ok = cardinalitySatisfiable(sys, pins);
        for (int s = sys.numDecision; ok && s < sys.numContinuous; ++s) {
            if (pins.contPinned[static_cast<std::size_t>(s)] &&
                (sys.lower(s) > tol || sys.upper(s) < -tol)) {
                ok = false;
            }
        }
        if (ok) {
            // Rows over the free slacks at the fixed decision point.
            std::vector<RowVectorXd> ain, aeq;
            std::vector<double> bin, beq;
            std::vector<int> freeSlacks;
            for (int s = sys.numDecision; s < sys.numContinuous; ++s) {
                if (!pins.contPinned[static_cast<std::size_t>(s)]) freeSlacks.push_back(s);
            }
            const int ns = static_cast<int>(freeSlacks.size());
            auto slackIndex = [&](int var) {
                const auto it = std::find(freeSlacks.begin(), freeSlacks.end(), var);
                return it == freeSlacks.end() ? -1 : static_cast<int>(it - freeSlacks.begin());
            };
            bool rowsOk = true;
            for (const auto& cIn : sys.constraints) {
                const AffinePredicate row = cIn.normalized();
                RowVectorXd a = RowVectorXd::Zero(ns);
                double b = row.constant;
                for (int i = 0; i < sys.numDecision && i < row.coeffs.size(); ++i) {
                    b += row.coeffs(i) * decision(i);
                }
                bool hasSlack = false;
                for (int s = sys.numDecision; s < row.coeffs.size(); ++s) {
                    if (row.coeffs(s) == 0.0) continue;
                    const int k = slackIndex(s);
                    if (k < 0) continue;  // pinned to zero
                    a(k) = row.coeffs(s);
                    hasSlack = true;
                }
                if (row.sense == Sense::Gt) b -= epsStrict;
                if (!hasSlack) {
                    const bool holds = row.sense == Sense::Eq ? std::abs(b) <= tol : b >= -tol;
                    if (!holds) {
                        rowsOk = false;
                        break;
                    }
                    continue;
                }
                if (row.sense == Sense::Eq) {
                    aeq.push_back(a);
                    beq.push_back(b);
                } else {
                    ain.push_back(a);
                    bin.push_back(b);
                }
            }
            if (rowsOk) {
                if (ns == 0 || (ain.empty() && aeq.empty())) return true;
                for (int k = 0; k < ns; ++k) {
                    const int s = freeSlacks[static_cast<std::size_t>(k)];
                    if (sys.lower(s) != -kInf) {
                        RowVectorXd a = RowVectorXd::Zero(ns);
                        a(k) = 1.0;
                        ain.push_back(a);
                        bin.push_back(-sys.lower(s));
                    }
                    if (sys.upper(s) != kInf) {
                        RowVectorXd a = RowVectorXd::Zero(ns);
                        a(k) = -1.0;
                        ain.push_back(a);
                        bin.push_back(sys.upper(s));
                    }
                }
                QpProblem qp;
                qp.H = MatrixXd::Identity(ns, ns);
                qp.F = VectorXd::Zero(ns);
                qp.Ain.resize(static_cast<Eigen::Index>(ain.size()), ns);
                qp.bin.resize(static_cast<Eigen::Index>(ain.size()));
                for (std::size_t i = 0; i < ain.size(); ++i) {
                    qp.Ain.row(static_cast<Eigen::Index>(i)) = ain[i];
                    qp.bin(static_cast<Eigen::Index>(i)) = bin[i];
                }
                qp.Aeq.resize(static_cast<Eigen::Index>(aeq.size()), ns);
                qp.beq.resize(static_cast<Eigen::Index>(aeq.size()));
                for (std::size_t i = 0; i < aeq.size(); ++i) {
                    qp.Aeq.row(static_cast<Eigen::Index>(i)) = aeq[i];
                    qp.beq(static_cast<Eigen::Index>(i)) = beq[i];
                }
                if (solveQp(qp).status == QpStatus::Optimal) return true;
            }
        }
        // next SOS-1 assignment
        int g = G - 1;
        for (; g >= 0; --g) {
            const int radix = static_cast<int>(groups[static_cast<std::size_t>(g)].members.size());
            if (++choice[static_cast<std::size_t>(g)] < radix) break;
            choice[static_cast<std::size_t>(g)] = 0;
        }
        if (g < 0) break;
        if (G == 0) break;
    }
    return false;
}

json MiqpProblem::toJson() const {
    json j;
    json obj;
    obj["H"] = json::array();
    for (int i = 0; i < objective.H.rows(); ++i) {
        std::vector<double> row;
        for (int k = 0; k < objective.H.cols(); ++k) row.push_back(objective.H(i, k));
        obj["H"].push_back(row);
    }
    obj["F"] = std::vector<double>(objective.F.data(), objective.F.data() + objective.F.size());
    j["objective"] = obj;
    j["system"] = system.toJson();
    j["eps_strict"] = epsStrict;
    return j;
}

MiqpProblem MiqpProblem::fromJson(const json& j) {
    MiqpProblem p;
    const auto& obj = j.at("objective");
    const auto hRows = obj.at("H").get<std::vector<std::vector<double>>>();
    const int n = static_cast<int>(hRows.size());
    p.objective.H.resize(n, n);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) p.objective.H(i, k) = hRows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    }
    const auto f = obj.at("F").get<std::vector<double>>();
    p.objective.F = Eigen::Map<const VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
    p.system = ConstraintSystem::fromJson(j.at("system"));
    p.epsStrict = j.value("eps_strict", kEpsStrict);
    p.validate();
    return p;
}

json MiqpSolution::toJson() const {
    json j;
    j["status"] = status == MiqpStatus::Optimal ? "optimal" : "infeasible";
    j["u"] = std::vector<double>(u.data(), u.data() + u.size());
    j["binaries"] = binaries;
    j["objective"] = objective;
    j["active_set"] = activeSet;
    j["nodes_explored"] = nodesExplored;
    j["free_member"] = freeMember;
    return j;
}

}  // namespace dtcbf
