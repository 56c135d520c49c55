// hilbert.hpp: N spin-1/2 systems tensored with N truncated oscillators
//
// Basis states are enumerated lexicographically in (s_1..s_N, n_1..n_N):
// the spin configuration is the most significant key and the phonon
// occupation of the last site the least significant. A sector-restricted
// basis keeps only states with sum_k (s_k + n_k) == sector, in the same
// relative order as the full space.
//
// Site indices in the public API are 1-based.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "polariton/errors.hpp"

namespace polariton {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

}  // namespace polariton

namespace polariton::hilbert {

struct BasisSpec {
    int n_ions{1};
    int phonon_cutoff{0};       // max occupation per local mode
    std::optional<int> sector;  // total excitation number, if restricted

    bool operator==(const BasisSpec&) const = default;
};

// spins[k] in {0 (down), 1 (up)}; phonons[k] in [0, cutoff]
struct BasisState {
    std::vector<int> spins;
    std::vector<int> phonons;

    int spin_excitations() const;
    int excitations() const;
    std::string label() const;  // e.g. "(ud;0,1)"

    bool operator==(const BasisState&) const = default;
};

class Basis {
public:
    explicit Basis(BasisSpec spec);

    const BasisSpec& spec() const noexcept { return spec_; }
    int n_ions() const noexcept { return spec_.n_ions; }
    std::size_t dim() const noexcept { return states_.size(); }
    std::size_t full_dim() const noexcept { return full_dim_; }

    const BasisState& state(std::size_t i) const { return states_.at(i); }
    const std::vector<BasisState>& states() const noexcept { return states_; }

    std::optional<std::size_t> index_of(const BasisState& s) const;

    // Position of s in the unrestricted enumeration; s must respect the cutoff.
    std::uint64_t full_index(const BasisState& s) const;

    bool same_space(const Basis& other) const { return spec_ == other.spec_; }

private:
    BasisSpec spec_;
    std::uint64_t full_dim_{0};
    std::vector<BasisState> states_;
    std::unordered_map<std::uint64_t, std::size_t> lookup_;
};

using BasisPtr = std::shared_ptr<const Basis>;

// Throws BasisError on N < 1, cutoff < 0, negative or unreachable sector.
BasisPtr build_basis(const BasisSpec& spec);

enum class LocalOp { sigma_plus, sigma_minus, sigma_z, annihilate, create };

// Change in total excitation number caused by the operator.
int excitation_shift(LocalOp kind);

// One factor of an operator product; site is 1-based.
struct Factor {
    LocalOp kind;
    int site;
};

// Complex linear map between two bases (square when both are the same space).
class OperatorMatrix {
public:
    OperatorMatrix(BasisPtr basis, Matrix m);
    OperatorMatrix(BasisPtr rows, BasisPtr cols, Matrix m);

    const Matrix& matrix() const noexcept { return m_; }
    const BasisPtr& row_basis() const noexcept { return rows_; }
    const BasisPtr& col_basis() const noexcept { return cols_; }
    Eigen::Index dim() const noexcept { return m_.rows(); }
    bool is_square() const { return rows_->same_space(*cols_); }

    OperatorMatrix adjoint() const { return {cols_, rows_, m_.adjoint()}; }

    OperatorMatrix operator*(const OperatorMatrix& rhs) const;
    OperatorMatrix operator+(const OperatorMatrix& rhs) const;
    OperatorMatrix operator-(const OperatorMatrix& rhs) const;
    OperatorMatrix operator*(Complex s) const { return {rows_, cols_, s * m_}; }

private:
    BasisPtr rows_;
    BasisPtr cols_;
    Matrix m_;
};

inline OperatorMatrix operator*(Complex s, const OperatorMatrix& op) { return op * s; }

// Product of local factors (rightmost acts first), projected onto the basis:
// P O P. Intermediate states may leave the sector but never the cutoff.
OperatorMatrix product(const BasisPtr& basis, std::initializer_list<Factor> factors, Complex coeff = 1.0);
OperatorMatrix product(const BasisPtr& basis, const std::vector<Factor>& factors, Complex coeff = 1.0);

// Single-site operator with identity elsewhere. For a sector basis and an
// operator that changes the excitation number, the result maps the sector
// into the neighbouring sector basis (rectangular).
OperatorMatrix local_operator(LocalOp kind, int site, const BasisPtr& basis);

OperatorMatrix identity(const BasisPtr& basis);

// sum_k (a_k^dag a_k + sigma_k^+ sigma_k^-)
OperatorMatrix number_operator(const BasisPtr& basis);

// sum_k sigma_k^+ sigma_k^-
OperatorMatrix spin_excitation_operator(const BasisPtr& basis);

// sigma_j^+ sigma_j^- (1-based j)
OperatorMatrix spin_population(int site, const BasisPtr& basis);

struct StateVector {
    BasisPtr basis;
    Vector amplitudes;

    double norm() const { return amplitudes.norm(); }
};

struct DensityHealth {
    double trace_drift{0.0};
    double hermiticity{0.0};
    double min_eigenvalue{0.0};

    bool within(double tol) const {
        return trace_drift < tol && hermiticity < tol && min_eigenvalue > -tol;
    }
};

class DensityMatrix {
public:
    DensityMatrix(BasisPtr basis, Matrix m);
    static DensityMatrix pure(const StateVector& psi);

    const Matrix& matrix() const noexcept { return m_; }
    const BasisPtr& basis() const noexcept { return basis_; }
    Eigen::Index dim() const noexcept { return m_.rows(); }

    Complex trace() const { return m_.trace(); }
    double hermiticity_error() const;
    double min_eigenvalue() const;  // of the Hermitian part

    DensityHealth health(Complex nominal_trace) const;

private:
    BasisPtr basis_;
    Matrix m_;
};

// tr(op rho)
Complex expectation(const OperatorMatrix& op, const DensityMatrix& rho);

// max |A_ij|
double max_abs(const Matrix& m);

Matrix commutator(const Matrix& a, const Matrix& b);

}  // namespace polariton::hilbert
