#ifndef DTCBF_INVARIANCE_HPP
#define DTCBF_INVARIANCE_HPP

#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "dtcbf/barrier.hpp"

namespace dtcbf {

struct InputSearchResult {
    std::optional<VectorXd> u;
    // True when the emptiness of the safe input set over U is certified
    // (e.g. an infeasible QP over the affine halfspace), not just unobserved.
    bool certifiedEmpty = false;
};

using StateSampler = std::function<VectorXd(std::mt19937_64&)>;
using InputSearch = std::function<InputSearchResult(
    const PartiallyAffineSystem&, const BarrierSpec&, const VectorXd&)>;

// min ||u||^2 over the affine safe halfspace intersected with the input box.
// Infeasibility certifies that K_S(x) is empty.
InputSearch affineQpSearch();

// Uniform grid over a finite input box; failure is not a certificate.
InputSearch gridSearch(int pointsPerDim = 101);

// Affine specs get the QP search, everything else the grid.
InputSearch defaultSearch(int gridPointsPerDim = 101);

struct InvarianceReport {
    struct SampleResult {
        VectorXd x0;
        bool invariant = false;
        int violationStep = -1;
        VectorXd violationState;
        // Safe input set certified empty at a reached safe state: the DT-CBF
        // property itself is falsified there.
        bool falsified = false;
    };
    std::vector<SampleResult> samples;
    int numInvariant = 0;
    bool anyFalsification = false;
};

// Rolls each sampled safe state forward, picking inputs with `search`;
// infeasibility and violations are report outcomes, never exceptions.
InvarianceReport checkInvariance(const PartiallyAffineSystem& sys, const BarrierSpec& spec,
                                 const StateSampler& sampler, const InputSearch& search,
                                 int numSamples, int steps, std::uint64_t seed);

}  // namespace dtcbf

#endif  // DTCBF_INVARIANCE_HPP
