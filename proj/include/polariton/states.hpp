// states.hpp: atomic-insulator and phonon-superfluid states

#pragma once

#include "polariton/hilbert.hpp"
#include "polariton/model.hpp"

namespace polariton::states {

using hilbert::StateVector;

// |up>^N (x) |0>^N. In a sector basis the sector must equal N.
StateVector atomic_insulator(const hilbert::BasisPtr& basis);

// |down>^N (x) (b_1^dag)^N / sqrt(N!) |0>^N with b_1 the lowest network mode.
// Requires phonon_cutoff >= N, and sector == N if restricted.
StateVector phonon_superfluid(const hilbert::BasisPtr& basis, const model::PhononNetwork& network);

struct PhaseFidelities {
    double atomic_insulator{0.0};   // |<extreme|atI>|^2
    double phonon_superfluid{0.0};  // |<opposite extreme|phSF>|^2
    // Largest |<psi_n|phSF>|^2 over all eigenstates and where it occurs.
    double phonon_superfluid_best{0.0};
    int phonon_superfluid_best_index{0};
};

// For delta >= 0, atI is compared with the highest eigenstate and phSF with
// the ground state; the roles swap for delta < 0.
PhaseFidelities phase_fidelities(const model::ModelParams& params, const hilbert::BasisPtr& basis,
                                 const model::PhononNetwork& network);

}  // namespace polariton::states
