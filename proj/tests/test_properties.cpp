// Randomized invariant checks. Each generator draws from a fixed seed so
// failures reproduce; the case index is printed on failure.

#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "polariton/protocol.hpp"
#include "polariton/spectra.hpp"

using namespace polariton;
using hilbert::build_basis;
using hilbert::LocalOp;

namespace {

struct Gen {
    std::mt19937_64 rng;
    explicit Gen(std::uint64_t seed) : rng(seed) {}

    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
    double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

    hilbert::BasisSpec spec(int max_ions = 3) {
        const int n = integer(1, max_ions);
        const int c = integer(1, n == 3 ? 2 : 3);
        return {n, c, std::nullopt};
    }

    model::ModelParams params() {
        model::ModelParams p;
        p.hopping_scale_khz = real(0.5, 10.0);
        p.delta_khz = real(-80.0, 80.0);
        p.g_khz = real(-10.0, 10.0);
        p.gamma_khz = real(0.0, 2.0);
        return p;
    }

    Matrix density(Eigen::Index d) {
        std::normal_distribution<double> n;
        Matrix a(d, d);
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j) a(i, j) = Complex(n(rng), n(rng));
        Matrix rho = a * a.adjoint();
        return rho / rho.trace();
    }

    Matrix any(Eigen::Index d) {
        std::normal_distribution<double> n;
        Matrix a(d, d);
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j) a(i, j) = Complex(n(rng), n(rng));
        return a;
    }
};

Matrix projector(const hilbert::BasisPtr& b, int sector) {
    Matrix p = Matrix::Zero(static_cast<Eigen::Index>(b->dim()), static_cast<Eigen::Index>(b->dim()));
    for (std::size_t i = 0; i < b->dim(); ++i)
        if (b->state(i).excitations() == sector) p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    return p;
}

}  // namespace

TEST_CASE("ladder algebra on random spaces") {
    Gen gen(101);
    for (int trial = 0; trial < 12; ++trial) {
        CAPTURE(trial);
        const auto spec = gen.spec();
        const auto b = build_basis(spec);
        const auto n = spec.n_ions;
        const Matrix id = Matrix::Identity(static_cast<Eigen::Index>(b->dim()), static_cast<Eigen::Index>(b->dim()));
        for (int k = 1; k <= n; ++k) {
            const Matrix a = hilbert::local_operator(LocalOp::annihilate, k, b).matrix();
            const Matrix sp = hilbert::local_operator(LocalOp::sigma_plus, k, b).matrix();
            const Matrix sm = hilbert::local_operator(LocalOp::sigma_minus, k, b).matrix();
            const Matrix comm = a * a.adjoint() - a.adjoint() * a;
            for (std::size_t i = 0; i < b->dim(); ++i) {
                const auto ii = static_cast<Eigen::Index>(i);
                if (b->state(i).phonons[static_cast<std::size_t>(k - 1)] < spec.phonon_cutoff) {
                    CHECK(std::abs(comm(ii, ii) - 1.0) < 1e-14);
                    CHECK(comm.row(ii).norm() == doctest::Approx(1.0));
                }
            }
            CHECK((sp * sm + sm * sp - id).norm() == 0.0);
            for (int l = 1; l <= n; ++l) {
                if (l == k) continue;
                const Matrix al = hilbert::local_operator(LocalOp::annihilate, l, b).matrix();
                const Matrix spl = hilbert::local_operator(LocalOp::sigma_plus, l, b).matrix();
                CHECK(hilbert::max_abs(hilbert::commutator(a, spl)) < 1e-14);
                CHECK(hilbert::max_abs(hilbert::commutator(a, al.adjoint())) < 1e-14);
                CHECK(hilbert::max_abs(hilbert::commutator(sp, spl)) < 1e-14);
            }
            CHECK(hilbert::max_abs(hilbert::commutator(a, sp)) < 1e-14);
        }
    }
}

TEST_CASE("sector projection commutes with number-conserving operators") {
    Gen gen(202);
    for (int trial = 0; trial < 10; ++trial) {
        CAPTURE(trial);
        const int n = gen.integer(1, 3);
        const auto b = build_basis({n, n, std::nullopt});
        const auto p = gen.params();
        const auto net = model::phonon_network(model::equilibrium_positions(n), p);
        const Matrix h = model::build_polariton_hamiltonian(net, p, b).matrix();
        const auto kicks = dynamics::build_kick_operators(b, net);
        for (int sector = 0; sector <= 2 * n; ++sector) {
            const Matrix pr = projector(b, sector);
            for (const Matrix* o : {&h, &kicks.raise, &kicks.lower})
                CHECK(hilbert::max_abs(pr * *o * pr - *o * pr) < 1e-12);
        }
        CHECK(hilbert::max_abs(hilbert::commutator(h, hilbert::number_operator(b).matrix())) < 1e-12);
        CHECK(hilbert::max_abs(h - h.adjoint()) < 1e-12);
    }
}

TEST_CASE("sector Hamiltonian is the projected full Hamiltonian") {
    Gen gen(303);
    for (int trial = 0; trial < 8; ++trial) {
        CAPTURE(trial);
        const int n = gen.integer(1, 3);
        const int c = gen.integer(n, n + 1);
        const int sector = gen.integer(0, n + 1);
        const auto p = gen.params();
        const auto net = model::phonon_network(model::equilibrium_positions(n), p);
        const auto full = build_basis({n, c, std::nullopt});
        const auto sec = build_basis({n, c, sector});
        const Matrix hf = model::build_polariton_hamiltonian(net, p, full).matrix();
        const Matrix hs = model::build_polariton_hamiltonian(net, p, sec).matrix();
        for (std::size_t i = 0; i < sec->dim(); ++i)
            for (std::size_t j = 0; j < sec->dim(); ++j) {
                const auto fi = static_cast<Eigen::Index>(*full->index_of(sec->state(i)));
                const auto fj = static_cast<Eigen::Index>(*full->index_of(sec->state(j)));
                CHECK(std::abs(hs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - hf(fi, fj)) < 1e-12);
            }
    }
}

TEST_CASE("normal modes are orthonormal for any chain length") {
    Gen gen(404);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = gen.integer(2, 16);
        CAPTURE(n);
        auto p = gen.params();
        const auto net = model::phonon_network(model::equilibrium_positions(n), p);
        const Eigen::MatrixXd g = net.mode_vectors.transpose() * net.mode_vectors;
        CHECK((g - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12);
        for (int m = 0; m < n; ++m) {
            Eigen::Index first = 0;
            while (std::abs(net.mode_vectors(first, m)) < 1e-12) ++first;
            CHECK(net.mode_vectors(first, m) > 0.0);
        }
        Eigen::MatrixXd k = net.hoppings;
        k.diagonal() = net.local_freqs;
        const Eigen::MatrixXd back = net.mode_vectors * net.mode_freqs.asDiagonal() * net.mode_vectors.transpose();
        CHECK((back - k).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("reversing the detuning reverses the spin submanifolds") {
    Gen gen(505);
    const auto b = build_basis({2, 2, 2});
    for (int trial = 0; trial < 6; ++trial) {
        CAPTURE(trial);
        model::ModelParams p;
        p.g_khz = 1e-4;
        const double ratio = gen.real(2e5, 6e5);
        auto centroids = [&](double r) {
            const auto rows = model::eigensweep(p, b, {r});
            std::array<double, 3> sum{}, cnt{};
            for (const auto& row : rows) {
                sum[static_cast<std::size_t>(row.spin_label)] += row.energy;
                cnt[static_cast<std::size_t>(row.spin_label)] += 1;
            }
            return std::array<double, 3>{sum[0] / cnt[0], sum[1] / cnt[1], sum[2] / cnt[2]};
        };
        const auto up = centroids(ratio);
        const auto down = centroids(-ratio);
        CHECK(up[0] < up[1]);
        CHECK(up[1] < up[2]);
        CHECK(down[0] > down[1]);
        CHECK(down[1] > down[2]);
        // spin energy flips sign, phonon energy does not
        const double d = oracle::tau * ratio * p.g_khz;
        for (int s = 0; s < 3; ++s) CHECK(std::abs(up[s] - down[s] - 2 * s * d) < 1e-9 * std::abs(up[2]));
    }
}

TEST_CASE("propagation is a trace- and Hermiticity-preserving semigroup") {
    Gen gen(606);
    for (int trial = 0; trial < 8; ++trial) {
        CAPTURE(trial);
        const auto p = gen.params();
        const auto ctx = protocol::build_context(p, {2, 2, 2});
        const auto& l = *ctx.liouvillian;
        const Matrix rho = gen.density(8);
        const double t1 = gen.real(0.0, 0.2), t2 = gen.real(0.0, 0.2);
        const Matrix whole = dynamics::propagate(l, rho, t1 + t2);
        const Matrix split = dynamics::propagate(l, dynamics::propagate(l, rho, t1), t2);
        CHECK((whole - split).norm() < 1e-10);
        CHECK(std::abs(whole.trace() - 1.0) < 1e-9);
        CHECK(hilbert::max_abs(whole - whole.adjoint()) < 1e-9);
        CHECK(hilbert::DensityMatrix(ctx.basis, whole).min_eigenvalue() > -1e-9);
        // linear in the operand
        const Matrix x = gen.any(8), y = gen.any(8);
        const Complex c(gen.real(-2, 2), gen.real(-2, 2));
        const Matrix lin = dynamics::propagate(l, Matrix(x + c * y), t1);
        CHECK((lin - dynamics::propagate(l, x, t1) - c * dynamics::propagate(l, y, t1)).norm() < 1e-10 * lin.norm());
    }
}

TEST_CASE("the full-space backend agrees with the sector backend") {
    Gen gen(707);
    for (int trial = 0; trial < 3; ++trial) {
        CAPTURE(trial);
        const auto p = gen.params();
        const auto sec = protocol::build_context(p, {2, 2, 2});
        const auto full = protocol::build_context(p, {2, 3, std::nullopt});
        REQUIRE(full.liouvillian->backend() == dynamics::Backend::adaptive_ode);
        const double t1 = gen.real(0, 0.02), t2 = gen.real(0, 0.02), t3 = gen.real(0, 0.02);
        const Complex a = protocol::signal_point(sec, {t1, t2, t3, 1});
        const Complex b = protocol::signal_point(full, {t1, t2, t3, 1});
        CHECK(std::abs(a - b) < 1e-7 * std::abs(a));
    }
}

TEST_CASE("signal linearity and conjugation pairing") {
    Gen gen(808);
    for (int trial = 0; trial < 10; ++trial) {
        CAPTURE(trial);
        const auto ctx = protocol::build_context(gen.params(), {2, 2, 2});
        protocol::SignalPoint pt{gen.real(0, 0.1), gen.real(0, 0.1), gen.real(0, 0.1), gen.integer(1, 2)};
        const Matrix rho = gen.density(8);
        const double lambda = gen.real(-3.0, 3.0);
        const Complex s = protocol::signal_point(ctx, rho, pt);
        CHECK(std::abs(protocol::signal_point(ctx, Matrix(lambda * rho), pt) - lambda * s) < 1e-11 * (1 + std::abs(s)));
        pt.order = protocol::KickOrder::right_first;
        CHECK(std::abs(protocol::signal_point(ctx, rho, pt) - std::conj(s)) < 1e-11 * (1 + std::abs(s)));
    }
}

TEST_CASE("right kicks are adjoint left kicks for random operands") {
    Gen gen(909);
    for (int trial = 0; trial < 10; ++trial) {
        const auto ctx = protocol::build_context(gen.params(), {2, 3, 2});
        const Matrix x = gen.any(static_cast<Eigen::Index>(ctx.basis->dim()));
        const int count = gen.integer(1, 3);
        const Matrix r = dynamics::pathway_kick(x, {dynamics::Side::right, count}, ctx.kicks);
        const Matrix l = dynamics::pathway_kick(Matrix(x.adjoint()), {dynamics::Side::left, count}, ctx.kicks);
        CHECK((r - l.adjoint()).norm() < 1e-12 * (1 + r.norm()));
    }
}

TEST_CASE("Parseval for random shapes and paddings") {
    Gen gen(1001);
    for (int trial = 0; trial < 10; ++trial) {
        const int na = gen.integer(2, 40), nb = gen.integer(2, 40);
        const double da = gen.real(1e-3, 1e-2), db = gen.real(1e-3, 1e-2);
        spectra::FourierOptions o;
        o.padding = gen.integer(1, 4);
        const Matrix s = gen.any(std::max(na, nb)).topLeftCorner(na, nb);
        const auto sp = spectra::fourier_2d(s, da, db, o);
        CHECK(spectra::parseval(s, da, db, sp).relative_error < 1e-6);
    }
}
