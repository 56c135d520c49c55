// dynamics.hpp: Lindblad generator, propagation, pathway kicks, phase cycling
//
// Superoperators act on column-major vec(rho): vec(A X B) = (B^T (x) A) vec(X).

#pragma once

#include <string>
#include <vector>

#include "polariton/hilbert.hpp"
#include "polariton/model.hpp"

namespace polariton::dynamics {

using hilbert::BasisPtr;
using hilbert::DensityMatrix;

struct JumpTerm {
    Matrix op;
    double rate{0.0};  // prefactor of D[op], rad/ms
    std::string label;
};

// Z = sum_k sigma_k^z with prefactor 2*pi*gamma/2, so a coherence between
// states whose spin-excitation numbers differ by n decays as exp(-n^2 * 2*pi*gamma * t).
JumpTerm collective_dephasing(const BasisPtr& basis, double gamma_khz);

enum class Backend { dense_exponential, adaptive_ode };

// Hilbert dimension up to which the dense superoperator exponential is used.
inline constexpr Eigen::Index dense_backend_max_dim = 32;

class Liouvillian {
public:
    Liouvillian(Matrix hamiltonian, std::vector<JumpTerm> jumps);

    Eigen::Index dim() const noexcept { return h_.rows(); }
    Eigen::Index superoperator_dim() const noexcept { return h_.rows() * h_.rows(); }
    Backend backend() const noexcept { return backend_; }

    const Matrix& hamiltonian() const noexcept { return h_; }
    const std::vector<JumpTerm>& jumps() const noexcept { return jumps_; }

    // -i[H, x] + sum_j rate_j (A x A^dag - {A^dag A, x}/2)
    Matrix apply(const Matrix& x) const;

    // Dense superoperator; throws std::logic_error on the ODE backend.
    const Matrix& superoperator() const;

    // exp(L t) as a dense superoperator (dense backend only).
    Matrix semigroup(double t) const;

private:
    Matrix h_;
    std::vector<JumpTerm> jumps_;
    std::vector<Matrix> jump_norms_;  // A^dag A
    Backend backend_;
    Matrix super_;
};

Liouvillian build_liouvillian(const hilbert::OperatorMatrix& hamiltonian, std::vector<JumpTerm> jumps);

// x(t) = exp(L t) x for any operator-shaped x (pathway terms are not density matrices).
Matrix propagate(const Liouvillian& l, const Matrix& x, double t);

// As above for a physical state; throws NumericalError when the trace,
// Hermiticity or positivity drift exceeds tol.
DensityMatrix propagate(const Liouvillian& l, const DensityMatrix& rho, double t, double tol = 1e-9);

// Repeated application of G(dt) for uniform time grids.
class TimeStepper {
public:
    TimeStepper(const Liouvillian& l, double dt);

    void advance(Matrix& x) const;
    double dt() const noexcept { return dt_; }

private:
    const Liouvillian* l_;
    double dt_;
    Matrix step_;  // dense backend only
};

enum class Side { left, right };

struct PathwayKick {
    Side side{Side::left};
    int count{1};
};

// X = J_+ b_1 with J_+ = sum_k c_k1 sigma_k^+ and b_1 = sum_k c_k1 a_k.
struct KickOperators {
    Matrix raise;  // X
    Matrix lower;  // X^dag = J_- b_1^dag
};

KickOperators build_kick_operators(const BasisPtr& basis, const model::PhononNetwork& network);

// left: X^count rho;  right: rho (X^dag)^count.
Matrix pathway_kick(const Matrix& rho, const PathwayKick& kick, const KickOperators& ops);

// exp(-i eps K(phi)) with K(phi) = i (e^{i phi} X - e^{-i phi} X^dag) / 2
Matrix pulse_unitary(const KickOperators& ops, double pulse_area, double phase);

enum class CycleScheme {
    pulse_phase,    // one phase per pulse, project on e^{iN(phi1 - phi2)}
    side_resolved,  // independent ket/bra phases per pulse
};

struct PhaseCycleOptions {
    double pulse_area{1e-2};
    int phase_steps{8};
    int n_kicks{2};
    double t2{0.0};
    CycleScheme scheme{CycleScheme::side_resolved};
};

// Applies two finite pulses around a t2 evolution, cycles the pulse phases on
// a uniform grid and returns the projected component rescaled by
// (2/eps)^{2N} (N!)^2. With side_resolved this converges to
// (right kick)^N G(t2) (left kick)^N rho0 as eps -> 0. pulse_phase also keeps
// every other pathway carrying N(phi1 - phi2).
Matrix phase_cycle_extract(const Liouvillian& l, const KickOperators& ops, const Matrix& rho0,
                           const PhaseCycleOptions& opts);

}  // namespace polariton::dynamics
