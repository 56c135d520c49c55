#include "polariton/states.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace polariton::states {

namespace {

void require_filling_one(const hilbert::BasisPtr& basis, const char* who) {
    const auto& spec = basis->spec();
    if (spec.sector && *spec.sector != spec.n_ions) {
        throw BasisError(std::string(who) + ": sector must equal the number of ions (" +
                         std::to_string(spec.n_ions) + "), got " + std::to_string(*spec.sector));
    }
}

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

}  // namespace

StateVector atomic_insulator(const hilbert::BasisPtr& basis) {
    require_filling_one(basis, "atomic_insulator");
    const auto n = static_cast<std::size_t>(basis->n_ions());
    const hilbert::BasisState s{std::vector<int>(n, 1), std::vector<int>(n, 0)};
    const auto idx = basis->index_of(s);
    if (!idx) throw BasisError("atomic_insulator: state not representable in this basis");
    Vector amp = Vector::Zero(static_cast<Eigen::Index>(basis->dim()));
    amp(static_cast<Eigen::Index>(*idx)) = 1.0;
    return {basis, amp};
}

StateVector phonon_superfluid(const hilbert::BasisPtr& basis, const model::PhononNetwork& network) {
    require_filling_one(basis, "phonon_superfluid");
    const int n = basis->n_ions();
    if (network.n_ions() != n) throw DimensionError("phonon_superfluid: network and basis disagree on N");
    if (basis->spec().phonon_cutoff < n) {
        throw BasisError("phonon_superfluid: phonon_cutoff " + std::to_string(basis->spec().phonon_cutoff) +
                         " cannot hold " + std::to_string(n) + " phonons; use a cutoff >= " + std::to_string(n));
    }
    const Eigen::VectorXd c = network.lowest_mode();

    // (sum_k c_k a_k^dag)^N / sqrt(N!) |0> has amplitude
    // sqrt(N! / prod n_k!) prod c_k^{n_k} on |n_1..n_N> with sum n_k = N.
    Vector amp = Vector::Zero(static_cast<Eigen::Index>(basis->dim()));
    for (std::size_t i = 0; i < basis->dim(); ++i) {
        const auto& s = basis->state(i);
        if (s.spin_excitations() != 0) continue;
        int total = 0;
        double prod_fact = 1.0;
        double coeff = 1.0;
        for (int k = 0; k < n; ++k) {
            const int nk = s.phonons[static_cast<std::size_t>(k)];
            total += nk;
            prod_fact *= factorial(nk);
            coeff *= std::pow(c(k), nk);
        }
        if (total != n) continue;
        amp(static_cast<Eigen::Index>(i)) = std::sqrt(factorial(n) / prod_fact) * coeff;
    }
    return {basis, amp};
}

PhaseFidelities phase_fidelities(const model::ModelParams& params, const hilbert::BasisPtr& basis,
                                 const model::PhononNetwork& network) {
    if (!basis->spec().sector) throw BasisError("phase_fidelities: a sector basis is required");
    const Matrix h = model::build_polariton_hamiltonian(network, params, basis).matrix();
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    const Matrix& v = es.eigenvectors();
    const Eigen::Index last = v.cols() - 1;

    const Vector ati = atomic_insulator(basis).amplitudes;
    const Vector phsf = phonon_superfluid(basis, network).amplitudes;
    auto overlap = [&](Eigen::Index col, const Vector& psi) { return std::norm(v.col(col).dot(psi)); };

    PhaseFidelities f;
    const bool positive = params.delta_khz >= 0.0;
    f.atomic_insulator = overlap(positive ? last : 0, ati);
    f.phonon_superfluid = overlap(positive ? 0 : last, phsf);
    for (Eigen::Index i = 0; i <= last; ++i) {
        const double o = overlap(i, phsf);
        if (o > f.phonon_superfluid_best) {
            f.phonon_superfluid_best = o;
            f.phonon_superfluid_best_index = static_cast<int>(i);
        }
    }
    return f;
}

}  // namespace polariton::states
