#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "polariton/protocol.hpp"

using namespace polariton;
using namespace polariton::protocol;

namespace {

ModelContext ctx_with(double delta = 50.0, double g = 5.0, double gamma = 0.5) {
    model::ModelParams p;
    p.delta_khz = delta;
    p.g_khz = g;
    p.gamma_khz = gamma;
    return build_context(p, {2, 2, 2});
}

SequenceConfig grid_t2_t3(int n2, int n3, double step = 0.004) {
    SequenceConfig s;
    s.t2 = TimeAxis::uniform(0.0, step, n2);
    s.t3 = TimeAxis::uniform(0.0, step, n3);
    return s;
}

// Direct evaluation with the oracle operators and the eigendecomposition propagator (closed system).
Complex oracle_signal(double t1, double t2, double t3, int j, double delta, double g) {
    const oracle::Space os(2, 2, 2);
    const oracle::M h = oracle::hamiltonian(os, 5.0, delta, g);
    const double r = 1.0 / std::sqrt(2.0);
    const oracle::M x = oracle::kick_raise(os, {r, -r});
    oracle::V psi = oracle::V::Zero(8);
    psi(os.index_of({0, 0}, {2, 0})) = 0.5;
    psi(os.index_of({0, 0}, {1, 1})) = -r;
    psi(os.index_of({0, 0}, {0, 2})) = 0.5;
    oracle::M rho = psi * psi.adjoint();
    auto g_of = [&](double t) { return oracle::unitary(h, t); };
    rho = g_of(t1) * rho * g_of(t1).adjoint();
    rho = x * x * rho;
    rho = g_of(t2) * rho * g_of(t2).adjoint();
    rho = rho * x.adjoint() * x.adjoint();
    rho = g_of(t3) * rho * g_of(t3).adjoint();
    return (oracle::spin_pop(os, j) * rho).trace();
}

}  // namespace

TEST_CASE("signal at zero delays is two for either ion") {
    const auto ctx = ctx_with();
    for (int j : {1, 2}) {
        const Complex s = signal_point(ctx, {0.0, 0.0, 0.0, j});
        CHECK(std::abs(s - Complex(2.0, 0.0)) < 1e-10);
    }
    CHECK_THROWS_AS(signal_point(ctx, {0.0, 0.0, 0.0, 3}), ParameterError);
    CHECK_THROWS_AS(signal_point(ctx, {-0.1, 0.0, 0.0, 1}), ParameterError);
}

TEST_CASE("closed-system signal matches the oracle composition") {
    const auto ctx = ctx_with(50.0, 5.0, 0.0);
    for (auto [t1, t2, t3] : {std::tuple{0.0, 0.013, 0.021}, std::tuple{0.007, 0.0, 0.05}, std::tuple{0.1, 0.2, 0.3}}) {
        for (int j : {1, 2}) {
            const Complex got = signal_point(ctx, {t1, t2, t3, j});
            const Complex want = oracle_signal(t1, t2, t3, j, 50.0, 5.0);
            CHECK(std::abs(got - want) < 1e-10);
        }
    }
}

TEST_CASE("dissipative signal matches fine-step integration") {
    const auto ctx = ctx_with();
    const oracle::Space os(2, 2, 2);
    const oracle::M h = oracle::hamiltonian(os, 5.0, 50.0, 5.0);
    const oracle::M z = oracle::collective_z(os);
    const double c = oracle::tau * 0.5 / 2.0;
    const double r = 1.0 / std::sqrt(2.0);
    const oracle::M x = oracle::kick_raise(os, {r, -r});
    oracle::M y = oracle::lindblad_rk4(h, z, c, ctx.rho0, 0.01, 2000);
    y = x * x * y;
    y = oracle::lindblad_rk4(h, z, c, y, 0.03, 6000);
    y = y * x.adjoint() * x.adjoint();
    y = oracle::lindblad_rk4(h, z, c, y, 0.02, 4000);
    const Complex want = (oracle::spin_pop(os, 1) * y).trace();
    CHECK(std::abs(signal_point(ctx, {0.01, 0.03, 0.02, 1}) - want) < 1e-9);
}

TEST_CASE("two-ion signal does not depend on the readout ion") {
    const auto ctx = ctx_with();
    for (double t : {0.0, 0.011, 0.29}) {
        const Complex a = signal_point(ctx, {0.0, t, 2 * t, 1});
        const Complex b = signal_point(ctx, {0.0, t, 2 * t, 2});
        CHECK(std::abs(a - b) <= 1e-10 * std::abs(a));
    }
}

TEST_CASE("strong dephasing kills the t2 coherence") {
    const auto ctx = ctx_with(50.0, 5.0, 500.0);
    // pure e^{-4 gamma t} is ~1e-270 here; what survives is the slow g^2/gamma leak
    CHECK(std::abs(signal_point(ctx, {0.0, 0.05, 0.0, 1})) < 1e-6);
    const auto off = ctx_with(50.0, 0.0, 500.0);
    CHECK(std::abs(signal_point(off, {0.0, 0.05, 0.0, 1})) < 1e-12);
}

TEST_CASE("one-point grid reproduces signal_point") {
    const auto ctx = ctx_with();
    SequenceConfig s;
    s.t1 = TimeAxis::fixed(0.003);
    s.t2 = TimeAxis::uniform(0.017, 0.004, 1);
    s.t3 = TimeAxis::uniform(0.023, 0.004, 1);
    const auto g = scan_signal(ctx, s);
    REQUIRE(g.values.rows() == 1);
    REQUIRE(g.values.cols() == 1);
    CHECK(std::abs(g.values(0, 0) - signal_point(ctx, {0.003, 0.017, 0.023, 1})) < 1e-12);
}

TEST_CASE("scans agree with pointwise evaluation on every axis pair") {
    const auto ctx = ctx_with();
    SequenceConfig s;
    s.t1 = TimeAxis::uniform(0.001, 0.003, 4);
    s.t2 = TimeAxis::fixed(0.006);
    s.t3 = TimeAxis::uniform(0.002, 0.005, 3);
    auto check_grid = [&](const SequenceConfig& seq) {
        const auto g = scan_signal(ctx, seq);
        CHECK(g.complete());
        CHECK(g.health.within(1e-9));
        for (int i = 0; i < g.a.count; ++i) {
            for (int j = 0; j < g.b.count; ++j) {
                double t[4] = {0, seq.t1.value(), seq.t2.value(), seq.t3.value()};
                t[g.axis_a] = g.a.at(i);
                t[g.axis_b] = g.b.at(j);
                const Complex want = signal_point(ctx, {t[1], t[2], t[3], seq.readout_ion});
                CHECK(std::abs(g.values(i, j) - want) < 1e-11);
            }
        }
    };
    check_grid(s);
    CHECK(scan_signal(ctx, s).pair == AxisPair::t1_t3);
    s.t2 = TimeAxis::uniform(0.0, 0.004, 3);
    s.t3 = TimeAxis::fixed(0.01);
    check_grid(s);
    s.t1 = TimeAxis::fixed(0.002);
    s.t3 = TimeAxis::uniform(0.0, 0.002, 5);
    s.readout_ion = 2;
    check_grid(s);
}

TEST_CASE("sequence validation") {
    SequenceConfig s;
    CHECK_NOTHROW(s.validate());
    s.t1 = TimeAxis::uniform(0.0, 0.004, 4);
    CHECK_THROWS_AS(s.validate(), ParameterError);
    s = {};
    s.t2 = TimeAxis::fixed(0.0);
    CHECK_THROWS_AS(s.validate(), ParameterError);
    s = {};
    s.t3.step = 0.0;
    CHECK_THROWS_AS(s.validate(), ParameterError);
    s = {};
    s.t3.count = 0;
    CHECK_THROWS_AS(s.validate(), ParameterError);
    s = {};
    s.t1 = TimeAxis::fixed(-1.0);
    CHECK_THROWS_AS(s.validate(), ParameterError);
}

TEST_CASE("decoupled t2 decay follows the two-excitation dephasing law") {
    const auto ctx = ctx_with(50.0, 0.0, 0.5);
    auto s = grid_t2_t3(60, 1, 0.01);
    const auto g = scan_signal(ctx, s);
    const double rate = 4 * oracle::tau * 0.5;
    const double s0 = std::abs(g.values(0, 0));
    for (int i = 0; i < 60; ++i) CHECK(std::abs(g.values(i, 0)) / s0 == doctest::Approx(std::exp(-rate * g.a.at(i))).epsilon(1e-9));
}

TEST_CASE("populations after the second pulse are constant in t3") {
    const auto ctx = ctx_with(50.0, 0.0, 0.5);
    const auto g = scan_signal(ctx, grid_t2_t3(1, 80, 0.01));
    for (int j = 0; j < 80; ++j) CHECK(std::abs(std::abs(g.values(0, j)) - std::abs(g.values(0, 0))) < 1e-6);
}

TEST_CASE("signal is linear in the initial state") {
    const auto ctx = ctx_with();
    for (double lambda : {0.5, -2.0, 3.7}) {
        const SignalPoint p{0.004, 0.012, 0.02, 1};
        const Complex a = signal_point(ctx, ctx.rho0, p);
        const Complex b = signal_point(ctx, Matrix(lambda * ctx.rho0), p);
        CHECK(std::abs(b - lambda * a) < 1e-12 * std::abs(lambda * a) + 1e-15);
    }
}

TEST_CASE("swapping the kick order conjugates the signal") {
    const auto ctx = ctx_with();
    for (auto [t1, t2, t3] : {std::tuple{0.0, 0.01, 0.02}, std::tuple{0.02, 0.03, 0.005}}) {
        SignalPoint p{t1, t2, t3, 1};
        const Complex s = signal_point(ctx, p);
        p.order = KickOrder::right_first;
        CHECK(std::abs(signal_point(ctx, p) - std::conj(s)) < 1e-11);
    }
}

TEST_CASE("splitting t1 composes the propagators") {
    const auto ctx = ctx_with();
    const double ta = 0.013, tb = 0.029;
    const Matrix rho_a = dynamics::propagate(*ctx.liouvillian, ctx.rho0, ta);
    const Complex split = signal_point(ctx, rho_a, {tb, 0.01, 0.02, 1});
    const Complex whole = signal_point(ctx, {ta + tb, 0.01, 0.02, 1});
    CHECK(std::abs(split - whole) < 1e-9);
}

TEST_CASE("scans do not depend on the thread count") {
    const auto ctx = ctx_with();
    const auto s = grid_t2_t3(24, 32);
    ScanOptions one;
    ScanOptions many;
    many.threads = 4;
    const auto a = scan_signal(ctx, s, one);
    const auto b = scan_signal(ctx, s, many);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
    many.threads = 0;
    CHECK((scan_signal(ctx, s, many).values - a.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("checkpointed scans resume completed rows") {
    const auto ctx = ctx_with();
    const auto s = grid_t2_t3(12, 16);
    const auto dir = std::filesystem::temp_directory_path() / "polariton_ckpt_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const auto path = dir / "scan.checkpoint";

    ScanOptions o;
    o.checkpoint = path;
    const auto full = scan_signal(ctx, s, o);
    CHECK(full.rows_resumed == 0);

    // keep the header and five rows, then a torn sixth row
    std::ifstream in(path);
    std::string line, kept;
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.rfind("row", 0) == 0 && rows++ >= 5) {
            kept += line.substr(0, line.size() / 2);
            break;
        }
        kept += line + "\n";
    }
    in.close();
    std::ofstream(path, std::ios::trunc) << kept;

    const auto resumed = scan_signal(ctx, s, o);
    CHECK(resumed.rows_resumed == 5);
    CHECK((resumed.values - full.values).cwiseAbs().maxCoeff() == 0.0);
    // the file is whole again
    const auto again = scan_signal(ctx, s, o);
    CHECK(again.rows_resumed == 12);
    CHECK((again.values - full.values).cwiseAbs().maxCoeff() == 0.0);

    auto other = s;
    other.readout_ion = 2;
    CHECK_THROWS_AS(scan_signal(ctx, other, o), ParameterError);
    CHECK(scan_fingerprint(ctx, s) != scan_fingerprint(ctx, other));
    std::filesystem::remove_all(dir);
}
