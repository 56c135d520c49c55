#include "polariton/dynamics.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <boost/numeric/odeint.hpp>

#include <cmath>
#include <stdexcept>

namespace polariton::dynamics {

namespace odeint = boost::numeric::odeint;

JumpTerm collective_dephasing(const BasisPtr& basis, double gamma_khz) {
    if (!(gamma_khz >= 0.0)) throw ParameterError("collective_dephasing: rate must be >= 0");
    Matrix z = Matrix::Zero(static_cast<Eigen::Index>(basis->dim()), static_cast<Eigen::Index>(basis->dim()));
    for (int k = 1; k <= basis->n_ions(); ++k) {
        z += hilbert::local_operator(hilbert::LocalOp::sigma_z, k, basis).matrix();
    }
    return {z, 0.5 * angular(gamma_khz), "collective_dephasing"};
}

// ------------------------------- Liouvillian --------------------------------

Liouvillian::Liouvillian(Matrix hamiltonian, std::vector<JumpTerm> jumps)
    : h_(std::move(hamiltonian)), jumps_(std::move(jumps)) {
    if (h_.rows() != h_.cols() || h_.rows() == 0) throw DimensionError("Liouvillian: Hamiltonian must be square");
    for (const auto& j : jumps_) {
        if (j.op.rows() != h_.rows() || j.op.cols() != h_.cols()) {
            throw DimensionError("Liouvillian: jump operator '" + j.label + "' has the wrong shape");
        }
        if (!(j.rate >= 0.0)) throw ParameterError("Liouvillian: negative jump rate");
        jump_norms_.push_back(j.op.adjoint() * j.op);
    }
    backend_ = h_.rows() <= dense_backend_max_dim ? Backend::dense_exponential : Backend::adaptive_ode;
    if (backend_ != Backend::dense_exponential) return;

    const Eigen::Index d = h_.rows();
    const Matrix id = Matrix::Identity(d, d);
    super_ = Complex(0.0, -1.0) * (Matrix(Eigen::kroneckerProduct(id, h_)) -
                                   Matrix(Eigen::kroneckerProduct(h_.transpose(), id)));
    for (std::size_t j = 0; j < jumps_.size(); ++j) {
        const Matrix& a = jumps_[j].op;
        const Matrix& ada = jump_norms_[j];
        super_ += jumps_[j].rate * (Matrix(Eigen::kroneckerProduct(a.conjugate(), a)) -
                                    0.5 * Matrix(Eigen::kroneckerProduct(id, ada)) -
                                    0.5 * Matrix(Eigen::kroneckerProduct(ada.transpose(), id)));
    }
}

Matrix Liouvillian::apply(const Matrix& x) const {
    Matrix out = Complex(0.0, -1.0) * (h_ * x - x * h_);
    for (std::size_t j = 0; j < jumps_.size(); ++j) {
        const Matrix& a = jumps_[j].op;
        const Matrix& ada = jump_norms_[j];
        out += jumps_[j].rate * (a * x * a.adjoint() - 0.5 * (ada * x + x * ada));
    }
    return out;
}

const Matrix& Liouvillian::superoperator() const {
    if (backend_ != Backend::dense_exponential) {
        throw std::logic_error("Liouvillian: no dense superoperator above dimension " +
                               std::to_string(dense_backend_max_dim));
    }
    return super_;
}

Matrix Liouvillian::semigroup(double t) const { return (superoperator() * Complex(t)).exp(); }

Liouvillian build_liouvillian(const hilbert::OperatorMatrix& hamiltonian, std::vector<JumpTerm> jumps) {
    if (!hamiltonian.is_square()) throw DimensionError("build_liouvillian: Hamiltonian must be square");
    return {hamiltonian.matrix(), std::move(jumps)};
}

// ------------------------------- propagation --------------------------------

namespace {

Matrix apply_dense(const Matrix& g, const Matrix& x) {
    const Eigen::Index d = x.rows();
    const Vector v = g * Eigen::Map<const Vector>(x.data(), d * d);
    return Eigen::Map<const Matrix>(v.data(), d, d);
}

// Integrates over [0, t] on the real-interleaved copy of x.
Matrix integrate_ode(const Liouvillian& l, const Matrix& x, double t) {
    using State = std::vector<double>;
    const Eigen::Index d = x.rows();
    const auto n = static_cast<std::size_t>(2 * d * d);
    State state(n);
    Eigen::Map<Matrix>(reinterpret_cast<Complex*>(state.data()), d, d) = x;

    auto rhs = [&l, d](const State& s, State& ds, double) {
        const Eigen::Map<const Matrix> m(reinterpret_cast<const Complex*>(s.data()), d, d);
        Eigen::Map<Matrix>(reinterpret_cast<Complex*>(ds.data()), d, d) = l.apply(m);
    };
    const double scale = std::max(1.0, l.hamiltonian().cwiseAbs().maxCoeff());
    odeint::integrate_adaptive(odeint::make_controlled<odeint::runge_kutta_dopri5<State>>(1e-12, 1e-10), rhs,
                               state, 0.0, t, std::min(t, 0.01 / scale));
    return Eigen::Map<const Matrix>(reinterpret_cast<const Complex*>(state.data()), d, d);
}

}  // namespace

Matrix propagate(const Liouvillian& l, const Matrix& x, double t) {
    if (x.rows() != l.dim() || x.cols() != l.dim()) throw DimensionError("propagate: operand has the wrong shape");
    if (!(t >= 0.0)) throw ParameterError("propagate: t must be >= 0");
    if (t == 0.0) return x;
    if (l.backend() == Backend::dense_exponential) return apply_dense(l.semigroup(t), x);
    return integrate_ode(l, x, t);
}

DensityMatrix propagate(const Liouvillian& l, const DensityMatrix& rho, double t, double tol) {
    DensityMatrix out(rho.basis(), propagate(l, rho.matrix(), t));
    const auto h = out.health(rho.trace());
    if (!h.within(tol)) {
        const double worst = std::max({h.trace_drift, h.hermiticity, -h.min_eigenvalue});
        throw NumericalError("propagate: density matrix left the physical set", worst);
    }
    return out;
}

TimeStepper::TimeStepper(const Liouvillian& l, double dt) : l_(&l), dt_(dt) {
    if (!(dt > 0.0)) throw ParameterError("TimeStepper: dt must be > 0");
    if (l.backend() == Backend::dense_exponential) step_ = l.semigroup(dt);
}

void TimeStepper::advance(Matrix& x) const {
    x = l_->backend() == Backend::dense_exponential ? apply_dense(step_, x) : integrate_ode(*l_, x, dt_);
}

// ------------------------------- pathways -----------------------------------

KickOperators build_kick_operators(const BasisPtr& basis, const model::PhononNetwork& network) {
    using hilbert::Factor;
    using hilbert::LocalOp;
    const int n = basis->n_ions();
    if (network.n_ions() != n) throw DimensionError("build_kick_operators: network and basis disagree on N");
    const Eigen::VectorXd c = network.lowest_mode();
    const auto d = static_cast<Eigen::Index>(basis->dim());
    Matrix x = Matrix::Zero(d, d);
    for (int k = 1; k <= n; ++k) {
        for (int l = 1; l <= n; ++l) {
            x += hilbert::product(basis, {Factor{LocalOp::sigma_plus, k}, Factor{LocalOp::annihilate, l}},
                                  c(k - 1) * c(l - 1))
                     .matrix();
        }
    }
    return {x, x.adjoint()};
}

Matrix pathway_kick(const Matrix& rho, const PathwayKick& kick, const KickOperators& ops) {
    if (kick.count < 0) throw ParameterError("pathway_kick: count must be >= 0");
    Matrix out = rho;
    for (int i = 0; i < kick.count; ++i) {
        out = kick.side == Side::left ? Matrix(ops.raise * out) : Matrix(out * ops.lower);
    }
    return out;
}

Matrix pulse_unitary(const KickOperators& ops, double pulse_area, double phase) {
    const Complex e = std::polar(1.0, phase);
    const Matrix gen = (0.5 * pulse_area) * (e * ops.raise - std::conj(e) * ops.lower);
    return gen.exp();
}

Matrix phase_cycle_extract(const Liouvillian& l, const KickOperators& ops, const Matrix& rho0,
                           const PhaseCycleOptions& opts) {
    const int n = opts.n_kicks;
    const int m = opts.phase_steps;
    if (n < 1) throw ParameterError("phase_cycle_extract: n_kicks must be >= 1");
    if (m < 2 * n + 2) {
        throw ParameterError("phase_cycle_extract: " + std::to_string(m) +
                             " phase steps alias phase orders; need at least " + std::to_string(2 * n + 2));
    }
    if (!(opts.pulse_area > 0.0)) throw ParameterError("phase_cycle_extract: pulse area must be > 0");

    std::vector<double> phases(static_cast<std::size_t>(m));
    std::vector<Matrix> unitaries;
    for (int i = 0; i < m; ++i) {
        phases[static_cast<std::size_t>(i)] = two_pi * i / m;
        unitaries.push_back(pulse_unitary(ops, opts.pulse_area, phases[static_cast<std::size_t>(i)]));
    }

    double nfact = 1.0;
    for (int i = 2; i <= n; ++i) nfact *= i;
    const double rescale = std::pow(2.0 / opts.pulse_area, 2 * n) * nfact * nfact;

    const Eigen::Index d = rho0.rows();
    if (opts.scheme == CycleScheme::side_resolved) {
        // Phase projections on each side of each pulse factorize.
        Matrix ket1 = Matrix::Zero(d, d), bra1 = Matrix::Zero(d, d);
        Matrix ket2 = Matrix::Zero(d, d), bra2 = Matrix::Zero(d, d);
        for (int i = 0; i < m; ++i) {
            const auto& u = unitaries[static_cast<std::size_t>(i)];
            const double phi = phases[static_cast<std::size_t>(i)];
            ket1 += std::polar(1.0, -n * phi) * u;
            bra1 += u.adjoint();
            ket2 += u;
            bra2 += std::polar(1.0, n * phi) * u.adjoint();
        }
        const double inv = 1.0 / m;
        const Matrix first = (ket1 * inv) * rho0 * (bra1 * inv);
        const Matrix evolved = propagate(l, first, opts.t2);
        return rescale * ((ket2 * inv) * evolved * (bra2 * inv));
    }

    Matrix acc = Matrix::Zero(d, d);
    for (int i = 0; i < m; ++i) {
        const auto& u1 = unitaries[static_cast<std::size_t>(i)];
        const Matrix evolved = propagate(l, Matrix(u1 * rho0 * u1.adjoint()), opts.t2);
        for (int j = 0; j < m; ++j) {
            const auto& u2 = unitaries[static_cast<std::size_t>(j)];
            const double phase = n * (phases[static_cast<std::size_t>(i)] - phases[static_cast<std::size_t>(j)]);
            acc += std::polar(1.0, -phase) * (u2 * evolved * u2.adjoint());
        }
    }
    return rescale / (static_cast<double>(m) * m) * acc;
}

}  // namespace polariton::dynamics
