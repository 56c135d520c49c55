#include <doctest.h>

#include "oracles.hpp"
#include "polariton/hilbert.hpp"
#include "polariton/model.hpp"
#include "polariton/states.hpp"

using namespace polariton;
using namespace polariton::hilbert;

TEST_CASE("single ion with one phonon level gives four ordered states") {
    const auto b = build_basis({1, 1, std::nullopt});
    REQUIRE(b->dim() == 4);
    CHECK(b->state(0) == BasisState{{0}, {0}});
    CHECK(b->state(1) == BasisState{{0}, {1}});
    CHECK(b->state(2) == BasisState{{1}, {0}});
    CHECK(b->state(3) == BasisState{{1}, {1}});
}

TEST_CASE("two ions at filling one span eight states") {
    CHECK(build_basis({2, 2, 2})->dim() == 8);
    CHECK(build_basis({2, 3, 2})->dim() == 8);
    CHECK(build_basis({2, 5, 2})->dim() == 8);
}

TEST_CASE("dimensions agree with brute-force enumeration") {
    for (int n = 1; n <= 3; ++n) {
        for (int c = 0; c <= 3; ++c) {
            const auto full = build_basis({n, c, std::nullopt});
            const oracle::Space os(n, c);
            CHECK(static_cast<int>(full->dim()) == os.full_dim());
            CHECK(full->full_dim() == static_cast<std::size_t>(os.full_dim()));
            for (int s = 0; s <= n * c + n; ++s) {
                const oracle::Space sec(n, c, s);
                if (sec.dim() == 0) continue;
                const auto b = build_basis({n, c, s});
                REQUIRE(static_cast<int>(b->dim()) == sec.dim());
                for (int i = 0; i < sec.dim(); ++i) {
                    CHECK(b->full_index(b->state(static_cast<std::size_t>(i))) ==
                          static_cast<std::uint64_t>(sec.keep[static_cast<std::size_t>(i)]));
                }
            }
        }
    }
}

TEST_CASE("bad basis specifications are rejected") {
    CHECK_THROWS_AS(build_basis({0, 2, std::nullopt}), BasisError);
    CHECK_THROWS_AS(build_basis({2, -1, std::nullopt}), BasisError);
    CHECK_THROWS_AS(build_basis({2, 2, -1}), BasisError);
    CHECK_THROWS_AS(build_basis({2, 2, 7}), BasisError);
    CHECK_NOTHROW(build_basis({2, 2, 6}));
    CHECK_THROWS_AS(build_basis({2, 0, 3}), BasisError);
}

TEST_CASE("local operators match Kronecker products") {
    const auto b = build_basis({2, 2, std::nullopt});
    const oracle::Space os(2, 2);
    for (int k = 1; k <= 2; ++k) {
        CHECK((local_operator(LocalOp::sigma_plus, k, b).matrix() - os.sp(k)).norm() == 0.0);
        CHECK((local_operator(LocalOp::sigma_minus, k, b).matrix() - os.sp(k).adjoint()).norm() == 0.0);
        CHECK((local_operator(LocalOp::sigma_z, k, b).matrix() - os.sz(k)).norm() == 0.0);
        CHECK((local_operator(LocalOp::annihilate, k, b).matrix() - os.a(k)).norm() < 1e-15);
        CHECK((local_operator(LocalOp::create, k, b).matrix() - os.a(k).adjoint()).norm() < 1e-15);
    }
    CHECK_THROWS_AS(local_operator(LocalOp::sigma_z, 0, b), BasisError);
    CHECK_THROWS_AS(local_operator(LocalOp::sigma_z, 3, b), BasisError);
}

TEST_CASE("Pauli and ladder eigen-actions") {
    const auto b = build_basis({1, 3, std::nullopt});
    const Matrix sz = local_operator(LocalOp::sigma_z, 1, b).matrix();
    const auto down = *b->index_of({{0}, {0}});
    const auto up = *b->index_of({{1}, {0}});
    CHECK(sz(down, down).real() == -1.0);
    CHECK(sz(up, up).real() == 1.0);
    const Matrix a = local_operator(LocalOp::annihilate, 1, b).matrix();
    for (int n = 1; n <= 3; ++n) {
        const auto from = *b->index_of({{0}, {n}});
        const auto to = *b->index_of({{0}, {n - 1}});
        CHECK(a(to, from).real() == doctest::Approx(std::sqrt(n)).epsilon(1e-15));
        CHECK(a.col(from).norm() == doctest::Approx(std::sqrt(n)).epsilon(1e-15));
    }
}

TEST_CASE("sector-changing operators map between neighbouring sectors") {
    const auto b = build_basis({2, 3, 2});
    const auto ap = local_operator(LocalOp::create, 1, b);
    CHECK(ap.row_basis()->spec().sector == 3);
    CHECK(ap.col_basis()->spec().sector == 2);
    const oracle::Space s2(2, 3, 2), s3(2, 3, 3);
    const oracle::M full = s2.a(1).adjoint();
    for (int r = 0; r < s3.dim(); ++r)
        for (int c = 0; c < s2.dim(); ++c)
            CHECK(std::abs(ap.matrix()(r, c) - full(s3.keep[r], s2.keep[c])) < 1e-15);
}

TEST_CASE("spin-phonon exchange is block diagonal in excitation number") {
    const auto b = build_basis({2, 3, std::nullopt});
    const Matrix m = product(b, {{LocalOp::sigma_plus, 1}, {LocalOp::annihilate, 1}}).matrix();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            if (std::abs(m(r, c)) > 0.0) CHECK(b->state(r).excitations() == b->state(c).excitations());
    const auto sec = build_basis({2, 3, 2});
    const Matrix ms = product(sec, {{LocalOp::sigma_plus, 1}, {LocalOp::annihilate, 1}}).matrix();
    CHECK(ms.rows() == 8);
    CHECK(ms.norm() > 0.0);
}

TEST_CASE("number operator counts excitations") {
    const auto b = build_basis({2, 2, std::nullopt});
    const Matrix n = number_operator(b).matrix();
    CHECK((n - Matrix(n.diagonal().asDiagonal())).norm() == 0.0);
    CHECK(n(*b->index_of({{1, 1}, {0, 0}}), *b->index_of({{1, 1}, {0, 0}})).real() == 2.0);
    CHECK(n(*b->index_of({{0, 0}, {1, 1}}), *b->index_of({{0, 0}, {1, 1}})).real() == 2.0);
    const oracle::Space os(2, 2);
    CHECK((n - oracle::number_op(os)).norm() < 1e-14);
}

TEST_CASE("number operator commutes with the polariton Hamiltonian") {
    const model::ModelParams p;
    const auto net = model::phonon_network(model::equilibrium_positions(2), p);
    for (auto sector : {std::optional<int>{}, std::optional<int>{2}}) {
        const auto b = build_basis({2, 3, sector});
        const auto h = model::build_polariton_hamiltonian(net, p, b);
        CHECK(max_abs(commutator(h.matrix(), number_operator(b).matrix())) < 1e-12);
    }
}

TEST_CASE("expectation values") {
    const model::ModelParams p;
    const auto net = model::phonon_network(model::equilibrium_positions(2), p);
    const auto b = build_basis({2, 2, 2});
    const auto ati = DensityMatrix::pure(states::atomic_insulator(b));
    const auto phsf = DensityMatrix::pure(states::phonon_superfluid(b, net));
    CHECK(std::abs(expectation(identity(b), ati) - 1.0) < 1e-15);
    CHECK(std::abs(expectation(identity(b), phsf) - 1.0) < 1e-14);
    for (int j = 1; j <= 2; ++j) {
        CHECK(std::abs(expectation(spin_population(j, b), ati) - 1.0) < 1e-15);
        CHECK(std::abs(expectation(spin_population(j, b), phsf)) < 1e-15);
    }
    const auto other = build_basis({2, 3, 2});
    CHECK_THROWS_AS(expectation(identity(other), ati), DimensionError);
}

TEST_CASE("density matrix health") {
    const auto b = build_basis({1, 1, std::nullopt});
    Matrix m = Matrix::Zero(4, 4);
    m(0, 0) = 0.5;
    m(3, 3) = 0.5;
    m(0, 3) = Complex(0, 0.1);
    m(3, 0) = Complex(0, -0.1);
    const DensityMatrix rho(b, m);
    CHECK(rho.hermiticity_error() == 0.0);
    CHECK(rho.health(1.0).within(1e-10));
    m(0, 0) = -0.1;
    CHECK(DensityMatrix(b, m).min_eigenvalue() < -0.1);
}
