// model.hpp: ion-chain geometry, Coulomb phonon network and the JCH Hamiltonians
//
// Unit convention: every user-facing frequency is a linear frequency in kHz.
// Hamiltonian coefficients are angular (2*pi * kHz = rad/ms), times are in ms,
// and every spectral axis is reported in rad/ms ("angular kHz").

#pragma once

#include <Eigen/Dense>

#include <numbers>
#include <string>
#include <vector>

#include "polariton/hilbert.hpp"

namespace polariton {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// linear kHz -> rad/ms
constexpr double angular(double khz) noexcept { return two_pi * khz; }

}  // namespace polariton

namespace polariton::model {

struct ModelParams {
    double nu_x_khz{1000.0};         // radial trap frequency
    double hopping_scale_khz{5.0};   // nu_x * beta
    double delta_khz{50.0};          // detuning from the red sideband
    double g_khz{5.0};               // spin-phonon coupling
    double gamma_khz{0.5};           // collective dephasing rate
    // Kept for documentation; they do not enter the rotating-frame model.
    double omega_opt_khz{0.0};
    std::vector<double> eta;
    double rabi_khz{0.0};
};

// Throws ParameterError for nu_x <= 0, gamma < 0 or non-finite entries.
void validate(const ModelParams& p);

// Advisory: |delta|, g and hopping_scale should be small against nu_x.
std::vector<std::string> validity_warnings(const ModelParams& p);

struct ChainGeometry {
    int n_ions{0};
    std::vector<double> positions;  // units of l0, ascending
};

struct PhononNetwork {
    Eigen::VectorXd local_freqs;   // omega_k, rad/ms
    Eigen::MatrixXd hoppings;      // t_kl, rad/ms, zero diagonal
    Eigen::VectorXd mode_freqs;    // nu_n relative to nu_x, ascending
    Eigen::MatrixXd mode_vectors;  // column n holds c_kn; first nonzero entry > 0

    int n_ions() const { return static_cast<int>(local_freqs.size()); }
    // c_k1 of the lowest (breathing for N=2) mode
    Eigen::VectorXd lowest_mode() const { return mode_vectors.col(0); }
};

// Balance of trap restoring force and Coulomb repulsion, u_m = sum_n sgn(u_m-u_n)/(u_m-u_n)^2,
// solved by damped Newton. Throws NumericalError if 200 iterations do not reach 1e-12.
ChainGeometry equilibrium_positions(int n_ions);

// t_kl = 2*pi*hopping_scale / (2 |u_k - u_l|^3), omega_k = -sum_{j != k} t_kj.
PhononNetwork phonon_network(const ChainGeometry& geometry, const ModelParams& params);

// Rotating-frame polariton Hamiltonian
//   H = sum_k w_k a_k^dag a_k + sum_{k<l} t_kl (a_k^dag a_l + h.c.)
//     + D sum_k s_k^+ s_k^- + G sum_k (s_k^+ a_k + s_k^- a_k^dag).
hilbert::OperatorMatrix build_polariton_hamiltonian(const PhononNetwork& network, const ModelParams& params,
                                                    const hilbert::BasisPtr& basis);

// Lab-frame motional Hamiltonian with phonons at nu_x + omega_k and the
// optical splitting omega_opt. Documentation and level diagrams only.
hilbert::OperatorMatrix build_motional_hamiltonian(const PhononNetwork& network, const ModelParams& params,
                                                   const hilbert::BasisPtr& basis);

struct SweepRow {
    double delta_over_g{0.0};
    int eig_index{0};
    double energy{0.0};            // rad/ms
    double spin_expectation{0.0};  // <sum s^+ s^->
    int spin_label{0};             // rounded expectation
    bool low_confidence{false};    // fractional part in (0.25, 0.75)
};

// Eigenvalues of the polariton Hamiltonian at delta = ratio * g for each
// ratio, labelled by spin-excitation number. Requires a sector basis and g != 0.
std::vector<SweepRow> eigensweep(const ModelParams& params, const hilbert::BasisPtr& basis,
                                 const std::vector<double>& delta_over_g);

}  // namespace polariton::model
