#ifndef COAGFRAG_REFERENCE_HPP
#define COAGFRAG_REFERENCE_HPP

#include "coagfrag/sectional.hpp"
#include "coagfrag/stochastic.hpp"

// Plain serial implementations kept as cross-checks for the parallel /
// incremental production paths, and as the baseline for the benchmark tool.
namespace coagfrag::reference {

/// Naive single-loop generator evaluation; same contract as the chunked
/// apply_generator, independent code path.
GeneratorRates apply_generator(const Grid& grid, const std::vector<double>& w,
                               const CoagKernel& K, const FragKernel& F,
                               const DislocationMeasure& beta);

/// Same jump-chain protocol as simulate() but with all rates recomputed from
/// scratch at every event (no incremental row cache).
Trajectory simulate(const ParticleState& m0, const CoagKernel& K, const FragKernel& F,
                    const DislocationMeasure& beta, const SimConfig& cfg);

}  // namespace coagfrag::reference

#endif
