#include "polariton/hilbert.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace polariton::hilbert {

namespace {

std::uint64_t checked_pow(std::uint64_t base, int exp) {
    std::uint64_t r = 1;
    for (int i = 0; i < exp; ++i) {
        if (r > std::numeric_limits<std::uint64_t>::max() / base) {
            throw BasisError("basis: full space dimension overflows 64 bits");
        }
        r *= base;
    }
    return r;
}

// Lexicographic phonon tuples with fixed total, each entry <= cutoff.
void enumerate_phonons(int site, int remaining, int cutoff, std::vector<int>& cur,
                       std::vector<std::vector<int>>& out) {
    const int n = static_cast<int>(cur.size());
    if (site == n - 1) {
        if (remaining <= cutoff) {
            cur[site] = remaining;
            out.push_back(cur);
        }
        return;
    }
    for (int k = 0; k <= std::min(cutoff, remaining); ++k) {
        cur[site] = k;
        enumerate_phonons(site + 1, remaining - k, cutoff, cur, out);
    }
}

// Applies one local factor in place; returns the amplitude (0 if annihilated).
double apply_factor(const Factor& f, BasisState& s, int cutoff) {
    const auto k = static_cast<std::size_t>(f.site - 1);
    switch (f.kind) {
        case LocalOp::sigma_plus:
            if (s.spins[k] == 1) return 0.0;
            s.spins[k] = 1;
            return 1.0;
        case LocalOp::sigma_minus:
            if (s.spins[k] == 0) return 0.0;
            s.spins[k] = 0;
            return 1.0;
        case LocalOp::sigma_z:
            return s.spins[k] == 1 ? 1.0 : -1.0;
        case LocalOp::annihilate: {
            const int n = s.phonons[k];
            if (n == 0) return 0.0;
            s.phonons[k] = n - 1;
            return std::sqrt(static_cast<double>(n));
        }
        case LocalOp::create: {
            const int n = s.phonons[k];
            if (n >= cutoff) return 0.0;
            s.phonons[k] = n + 1;
            return std::sqrt(static_cast<double>(n + 1));
        }
    }
    return 0.0;
}

void check_site(int site, int n_ions) {
    if (site < 1 || site > n_ions) {
        throw BasisError("invalid site index " + std::to_string(site) + " (valid: 1.." +
                         std::to_string(n_ions) + ")");
    }
}

// Builds <row| c * f_1 ... f_m |col> by acting on basis states.
Matrix build_product(const Basis& rows, const Basis& cols, const std::vector<Factor>& factors,
                     Complex coeff) {
    const int cutoff = cols.spec().phonon_cutoff;
    for (const auto& f : factors) check_site(f.site, cols.n_ions());
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(rows.dim()), static_cast<Eigen::Index>(cols.dim()));
    for (std::size_t c = 0; c < cols.dim(); ++c) {
        BasisState s = cols.state(c);
        double amp = 1.0;
        for (auto it = factors.rbegin(); it != factors.rend() && amp != 0.0; ++it) {
            amp *= apply_factor(*it, s, cutoff);
        }
        if (amp == 0.0) continue;
        if (auto r = rows.index_of(s)) {
            m(static_cast<Eigen::Index>(*r), static_cast<Eigen::Index>(c)) += coeff * amp;
        }
    }
    return m;
}

}  // namespace

// ------------------------------- BasisState ---------------------------------

int BasisState::spin_excitations() const {
    int n = 0;
    for (int s : spins) n += s;
    return n;
}

int BasisState::excitations() const {
    int n = spin_excitations();
    for (int p : phonons) n += p;
    return n;
}

std::string BasisState::label() const {
    std::ostringstream os;
    os << '(';
    for (int s : spins) os << (s ? 'u' : 'd');
    os << ';';
    for (std::size_t k = 0; k < phonons.size(); ++k) {
        if (k) os << ',';
        os << phonons[k];
    }
    os << ')';
    return os.str();
}

// ---------------------------------- Basis -----------------------------------

Basis::Basis(BasisSpec spec) : spec_(spec) {
    const int n = spec_.n_ions;
    const int c = spec_.phonon_cutoff;
    if (n < 1) throw BasisError("basis: n_ions must be >= 1");
    if (c < 0) throw BasisError("basis: phonon_cutoff must be >= 0");
    if (n > 16) throw BasisError("basis: n_ions > 16 is not supported by dense storage");

    full_dim_ = checked_pow(2, n) * checked_pow(static_cast<std::uint64_t>(c) + 1, n);

    const int max_sector = n + n * c;
    if (spec_.sector) {
        const int sec = *spec_.sector;
        if (sec < 0) throw BasisError("basis: sector must be >= 0");
        if (sec > max_sector) {
            throw BasisError("basis: empty sector " + std::to_string(sec) + " (max reachable with " +
                             std::to_string(n) + " ions and cutoff " + std::to_string(c) + " is " +
                             std::to_string(max_sector) + ")");
        }
    } else if (full_dim_ > (std::uint64_t{1} << 24)) {
        throw BasisError("basis: full space too large for dense storage; restrict to a sector");
    }

    const std::uint64_t n_spin = checked_pow(2, n);
    std::vector<int> spins(static_cast<std::size_t>(n));
    std::vector<std::vector<int>> tuples;
    std::vector<int> cur(static_cast<std::size_t>(n));
    for (std::uint64_t sc = 0; sc < n_spin; ++sc) {
        int up = 0;
        for (int k = 0; k < n; ++k) {
            spins[static_cast<std::size_t>(k)] = static_cast<int>((sc >> (n - 1 - k)) & 1U);
            up += spins[static_cast<std::size_t>(k)];
        }
        tuples.clear();
        if (spec_.sector) {
            const int rem = *spec_.sector - up;
            if (rem < 0) continue;
            enumerate_phonons(0, rem, c, cur, tuples);
        } else {
            for (int tot = 0; tot <= n * c; ++tot) enumerate_phonons(0, tot, c, cur, tuples);
            std::sort(tuples.begin(), tuples.end());
        }
        for (auto& t : tuples) {
            BasisState s{spins, std::move(t)};
            lookup_.emplace(full_index(s), states_.size());
            states_.push_back(std::move(s));
        }
    }
}

std::uint64_t Basis::full_index(const BasisState& s) const {
    const auto base = static_cast<std::uint64_t>(spec_.phonon_cutoff) + 1;
    std::uint64_t spin = 0;
    std::uint64_t ph = 0;
    for (std::size_t k = 0; k < s.spins.size(); ++k) {
        spin = spin * 2 + static_cast<std::uint64_t>(s.spins[k]);
        ph = ph * base + static_cast<std::uint64_t>(s.phonons[k]);
    }
    return spin * checked_pow(base, spec_.n_ions) + ph;
}

std::optional<std::size_t> Basis::index_of(const BasisState& s) const {
    if (s.spins.size() != static_cast<std::size_t>(spec_.n_ions) || s.phonons.size() != s.spins.size()) {
        return std::nullopt;
    }
    for (int p : s.phonons) {
        if (p < 0 || p > spec_.phonon_cutoff) return std::nullopt;
    }
    auto it = lookup_.find(full_index(s));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
}

BasisPtr build_basis(const BasisSpec& spec) { return std::make_shared<const Basis>(spec); }

int excitation_shift(LocalOp kind) {
    switch (kind) {
        case LocalOp::sigma_plus:
        case LocalOp::create:
            return 1;
        case LocalOp::sigma_minus:
        case LocalOp::annihilate:
            return -1;
        case LocalOp::sigma_z:
            return 0;
    }
    return 0;
}

// ----------------------------- OperatorMatrix -------------------------------

OperatorMatrix::OperatorMatrix(BasisPtr basis, Matrix m) : OperatorMatrix(basis, basis, std::move(m)) {}

OperatorMatrix::OperatorMatrix(BasisPtr rows, BasisPtr cols, Matrix m)
    : rows_(std::move(rows)), cols_(std::move(cols)), m_(std::move(m)) {
    if (!rows_ || !cols_) throw DimensionError("OperatorMatrix: null basis");
    if (m_.rows() != static_cast<Eigen::Index>(rows_->dim()) ||
        m_.cols() != static_cast<Eigen::Index>(cols_->dim())) {
        throw DimensionError("OperatorMatrix: matrix shape does not match bases");
    }
}

OperatorMatrix OperatorMatrix::operator*(const OperatorMatrix& rhs) const {
    if (!cols_->same_space(*rhs.rows_)) throw DimensionError("operator product: incompatible bases");
    return {rows_, rhs.cols_, m_ * rhs.m_};
}

OperatorMatrix OperatorMatrix::operator+(const OperatorMatrix& rhs) const {
    if (!rows_->same_space(*rhs.rows_) || !cols_->same_space(*rhs.cols_)) {
        throw DimensionError("operator sum: incompatible bases");
    }
    return {rows_, cols_, m_ + rhs.m_};
}

OperatorMatrix OperatorMatrix::operator-(const OperatorMatrix& rhs) const { return *this + rhs * Complex(-1.0); }

// ------------------------------- builders -----------------------------------

OperatorMatrix product(const BasisPtr& basis, std::initializer_list<Factor> factors, Complex coeff) {
    return product(basis, std::vector<Factor>(factors), coeff);
}

OperatorMatrix product(const BasisPtr& basis, const std::vector<Factor>& factors, Complex coeff) {
    return {basis, build_product(*basis, *basis, factors, coeff)};
}

OperatorMatrix local_operator(LocalOp kind, int site, const BasisPtr& basis) {
    check_site(site, basis->n_ions());
    const int shift = excitation_shift(kind);
    if (!basis->spec().sector || shift == 0) return product(basis, {Factor{kind, site}});

    BasisSpec target = basis->spec();
    const int sec = *target.sector + shift;
    const int max_sector = target.n_ions * (1 + target.phonon_cutoff);
    if (sec < 0 || sec > max_sector) {
        throw BasisError("local_operator: target sector " + std::to_string(sec) + " is empty");
    }
    target.sector = sec;
    auto rows = build_basis(target);
    return {rows, basis, build_product(*rows, *basis, {Factor{kind, site}}, 1.0)};
}

OperatorMatrix identity(const BasisPtr& basis) {
    const auto d = static_cast<Eigen::Index>(basis->dim());
    return {basis, Matrix::Identity(d, d)};
}

OperatorMatrix number_operator(const BasisPtr& basis) {
    const auto d = static_cast<Eigen::Index>(basis->dim());
    Matrix m = Matrix::Zero(d, d);
    for (std::size_t i = 0; i < basis->dim(); ++i) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = basis->state(i).excitations();
    }
    return {basis, m};
}

OperatorMatrix spin_excitation_operator(const BasisPtr& basis) {
    const auto d = static_cast<Eigen::Index>(basis->dim());
    Matrix m = Matrix::Zero(d, d);
    for (std::size_t i = 0; i < basis->dim(); ++i) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = basis->state(i).spin_excitations();
    }
    return {basis, m};
}

OperatorMatrix spin_population(int site, const BasisPtr& basis) {
    return product(basis, {Factor{LocalOp::sigma_plus, site}, Factor{LocalOp::sigma_minus, site}});
}

// ------------------------------ DensityMatrix -------------------------------

DensityMatrix::DensityMatrix(BasisPtr basis, Matrix m) : basis_(std::move(basis)), m_(std::move(m)) {
    if (!basis_) throw DimensionError("DensityMatrix: null basis");
    const auto d = static_cast<Eigen::Index>(basis_->dim());
    if (m_.rows() != d || m_.cols() != d) throw DimensionError("DensityMatrix: shape does not match basis");
}

DensityMatrix DensityMatrix::pure(const StateVector& psi) {
    return {psi.basis, psi.amplitudes * psi.amplitudes.adjoint()};
}

double DensityMatrix::hermiticity_error() const { return max_abs(m_ - m_.adjoint()); }

double DensityMatrix::min_eigenvalue() const {
    const Matrix herm = 0.5 * (m_ + m_.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

DensityHealth DensityMatrix::health(Complex nominal_trace) const {
    return {std::abs(trace() - nominal_trace), hermiticity_error(), min_eigenvalue()};
}

// -------------------------------- helpers -----------------------------------

Complex expectation(const OperatorMatrix& op, const DensityMatrix& rho) {
    if (!op.is_square() || !op.col_basis()->same_space(*rho.basis())) {
        throw DimensionError("expectation: operator and state live on different spaces");
    }
    return op.matrix().cwiseProduct(rho.matrix().transpose()).sum();
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

}  // namespace polariton::hilbert
