#include "polariton/model.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace polariton::model {

using hilbert::Factor;
using hilbert::LocalOp;
using hilbert::OperatorMatrix;

void validate(const ModelParams& p) {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(p.nu_x_khz) || !finite(p.hopping_scale_khz) || !finite(p.delta_khz) || !finite(p.g_khz) ||
        !finite(p.gamma_khz) || !finite(p.omega_opt_khz) || !finite(p.rabi_khz)) {
        throw ParameterError("model parameters must be finite");
    }
    if (p.nu_x_khz <= 0.0) throw ParameterError("nu_x_khz must be > 0");
    if (p.gamma_khz < 0.0) throw ParameterError("gamma_khz must be >= 0");
}

std::vector<std::string> validity_warnings(const ModelParams& p) {
    std::vector<std::string> out;
    auto check = [&](const char* name, double v) {
        if (std::abs(v) > 0.1 * p.nu_x_khz) {
            std::ostringstream os;
            os << name << " = " << v << " kHz is not small against nu_x = " << p.nu_x_khz
               << " kHz; the rotating-wave model may not apply";
            out.push_back(os.str());
        }
    };
    check("delta_khz", p.delta_khz);
    check("g_khz", p.g_khz);
    check("hopping_scale_khz", p.hopping_scale_khz);
    return out;
}

// ----------------------------- geometry -------------------------------------

namespace {

Eigen::VectorXd chain_residual(const Eigen::VectorXd& u) {
    const Eigen::Index n = u.size();
    Eigen::VectorXd f = u;
    for (Eigen::Index m = 0; m < n; ++m) {
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k == m) continue;
            const double d = u(m) - u(k);
            f(m) -= (d > 0 ? 1.0 : -1.0) / (d * d);
        }
    }
    return f;
}

Eigen::MatrixXd chain_jacobian(const Eigen::VectorXd& u) {
    const Eigen::Index n = u.size();
    Eigen::MatrixXd j = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index m = 0; m < n; ++m) {
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k == m) continue;
            const double c = 2.0 / std::pow(std::abs(u(m) - u(k)), 3);
            j(m, m) += c;
            j(m, k) -= c;
        }
    }
    return j;
}

bool ordered(const Eigen::VectorXd& u) {
    for (Eigen::Index i = 1; i < u.size(); ++i) {
        if (!(u(i) > u(i - 1))) return false;
    }
    return true;
}

}  // namespace

ChainGeometry equilibrium_positions(int n_ions) {
    if (n_ions < 1) throw ParameterError("equilibrium_positions: n_ions must be >= 1");
    if (n_ions == 1) return {1, {0.0}};

    const Eigen::Index n = n_ions;
    Eigen::VectorXd u(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        u(i) = 0.6 * (-0.5 * n_ions + static_cast<double>(i) * n_ions / static_cast<double>(n - 1));
    }

    constexpr int max_iter = 200;
    constexpr double tol = 1e-12;
    double res = chain_residual(u).cwiseAbs().maxCoeff();
    for (int it = 0; it < max_iter && res >= tol; ++it) {
        const Eigen::VectorXd step = chain_jacobian(u).partialPivLu().solve(-chain_residual(u));
        double lambda = 1.0;
        for (int halvings = 0; halvings < 40; ++halvings, lambda *= 0.5) {
            const Eigen::VectorXd trial = u + lambda * step;
            if (!ordered(trial)) continue;
            const double r = chain_residual(trial).cwiseAbs().maxCoeff();
            if (r < res || halvings == 39) {
                u = trial;
                res = r;
                break;
            }
        }
        // Enforce reflection symmetry once the iterate has settled.
        if (res < 1e-6) u = 0.5 * (u - u.reverse());
        res = chain_residual(u).cwiseAbs().maxCoeff();
    }
    if (res >= tol) throw NumericalError("equilibrium_positions: Newton iteration did not converge", res);

    return {n_ions, std::vector<double>(u.data(), u.data() + n)};
}

// --------------------------- phonon network ---------------------------------

PhononNetwork phonon_network(const ChainGeometry& geometry, const ModelParams& params) {
    const auto n = static_cast<Eigen::Index>(geometry.positions.size());
    if (n < 1 || n != geometry.n_ions) throw ParameterError("phonon_network: malformed geometry");

    PhononNetwork net;
    net.hoppings = Eigen::MatrixXd::Zero(n, n);
    const double scale = angular(params.hopping_scale_khz);
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index l = k + 1; l < n; ++l) {
            const double d = std::abs(geometry.positions[static_cast<std::size_t>(k)] -
                                      geometry.positions[static_cast<std::size_t>(l)]);
            if (d < 1e-12) throw ParameterError("phonon_network: coincident ion positions");
            net.hoppings(k, l) = net.hoppings(l, k) = scale / (2.0 * d * d * d);
        }
    }
    net.local_freqs = -net.hoppings.rowwise().sum();

    Eigen::MatrixXd dyn = net.hoppings;
    dyn.diagonal() = net.local_freqs;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dyn);
    net.mode_freqs = es.eigenvalues();
    net.mode_vectors = es.eigenvectors();
    for (Eigen::Index c = 0; c < n; ++c) {
        for (Eigen::Index r = 0; r < n; ++r) {
            const double v = net.mode_vectors(r, c);
            if (std::abs(v) > 1e-9) {
                if (v < 0) net.mode_vectors.col(c) *= -1.0;
                break;
            }
        }
    }
    return net;
}

// ----------------------------- Hamiltonians ---------------------------------

namespace {

void check_match(const PhononNetwork& net, const hilbert::BasisPtr& basis) {
    if (net.n_ions() != basis->n_ions()) {
        throw DimensionError("Hamiltonian: network has " + std::to_string(net.n_ions()) + " ions, basis has " +
                             std::to_string(basis->n_ions()));
    }
}

OperatorMatrix phonon_part(const PhononNetwork& net, const hilbert::BasisPtr& basis, double onsite_offset) {
    const int n = net.n_ions();
    OperatorMatrix h(basis, Matrix::Zero(static_cast<Eigen::Index>(basis->dim()),
                                         static_cast<Eigen::Index>(basis->dim())));
    for (int k = 1; k <= n; ++k) {
        h = h + hilbert::product(basis, {Factor{LocalOp::create, k}, Factor{LocalOp::annihilate, k}},
                                 onsite_offset + net.local_freqs(k - 1));
        for (int l = k + 1; l <= n; ++l) {
            const double t = net.hoppings(k - 1, l - 1);
            h = h + hilbert::product(basis, {Factor{LocalOp::create, k}, Factor{LocalOp::annihilate, l}}, t) +
                hilbert::product(basis, {Factor{LocalOp::create, l}, Factor{LocalOp::annihilate, k}}, t);
        }
    }
    return h;
}

}  // namespace

OperatorMatrix build_polariton_hamiltonian(const PhononNetwork& network, const ModelParams& params,
                                           const hilbert::BasisPtr& basis) {
    check_match(network, basis);
    const double delta = angular(params.delta_khz);
    const double g = angular(params.g_khz);
    OperatorMatrix h = phonon_part(network, basis, 0.0) + hilbert::spin_excitation_operator(basis) * delta;
    for (int k = 1; k <= network.n_ions(); ++k) {
        h = h + hilbert::product(basis, {Factor{LocalOp::sigma_plus, k}, Factor{LocalOp::annihilate, k}}, g) +
            hilbert::product(basis, {Factor{LocalOp::sigma_minus, k}, Factor{LocalOp::create, k}}, g);
    }
    return h;
}

OperatorMatrix build_motional_hamiltonian(const PhononNetwork& network, const ModelParams& params,
                                          const hilbert::BasisPtr& basis) {
    check_match(network, basis);
    return phonon_part(network, basis, angular(params.nu_x_khz)) +
           hilbert::spin_excitation_operator(basis) * angular(params.omega_opt_khz);
}

// ------------------------------- sweep --------------------------------------

std::vector<SweepRow> eigensweep(const ModelParams& params, const hilbert::BasisPtr& basis,
                                 const std::vector<double>& delta_over_g) {
    if (!basis->spec().sector) throw BasisError("eigensweep: a sector-restricted basis is required");
    if (params.g_khz == 0.0) throw ParameterError("eigensweep: g must be nonzero to sweep delta/g");
    validate(params);

    const auto net = phonon_network(equilibrium_positions(basis->n_ions()), params);
    const Matrix spin = hilbert::spin_excitation_operator(basis).matrix();

    std::vector<SweepRow> rows;
    rows.reserve(delta_over_g.size() * basis->dim());
    for (double ratio : delta_over_g) {
        ModelParams p = params;
        p.delta_khz = ratio * params.g_khz;
        const Matrix h = build_polariton_hamiltonian(net, p, basis).matrix();
        Eigen::SelfAdjointEigenSolver<Matrix> es(h);

        std::vector<SweepRow> block;
        for (Eigen::Index i = 0; i < h.rows(); ++i) {
            const auto v = es.eigenvectors().col(i);
            const double s = (v.adjoint() * spin * v)(0, 0).real();
            const double frac = s - std::floor(s);
            block.push_back({ratio, 0, es.eigenvalues()(i), s, static_cast<int>(std::lround(s)),
                             frac > 0.25 && frac < 0.75});
        }
        // Degenerate levels are ordered by label so tables are reproducible.
        const double tol = 1e-9 * std::max(1.0, h.cwiseAbs().maxCoeff());
        std::size_t start = 0;
        for (std::size_t i = 1; i <= block.size(); ++i) {
            if (i == block.size() || block[i].energy - block[i - 1].energy > tol) {
                std::stable_sort(block.begin() + static_cast<std::ptrdiff_t>(start),
                                 block.begin() + static_cast<std::ptrdiff_t>(i),
                                 [](const SweepRow& a, const SweepRow& b) { return a.spin_label < b.spin_label; });
                start = i;
            }
        }
        for (std::size_t i = 0; i < block.size(); ++i) {
            block[i].eig_index = static_cast<int>(i);
            rows.push_back(block[i]);
        }
    }
    return rows;
}

}  // namespace polariton::model
