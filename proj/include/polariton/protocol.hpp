// protocol.hpp: three-pulse nonlinear signal and delay-grid scans
//
//   S(t1, t2, t3; j) = tr{ s_j^+ s_j^- G(t3) (V_R)^N G(t2) (V_L)^N G(t1) rho0 }
//
// with rho0 = |phSF><phSF|, V_L rho = J_+ b_1 rho and V_R rho = rho J_- b_1^dag.

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "polariton/dynamics.hpp"
#include "polariton/hilbert.hpp"
#include "polariton/model.hpp"

namespace polariton::protocol {

// Everything the signal needs, built once and shared read-only.
struct ModelContext {
    model::ModelParams params;
    hilbert::BasisPtr basis;
    model::PhononNetwork network;
    Matrix hamiltonian;
    std::shared_ptr<const dynamics::Liouvillian> liouvillian;
    dynamics::KickOperators kicks;
    Matrix rho0;
    std::vector<Matrix> readout;  // readout[j-1] = s_j^+ s_j^-
    int n_kicks{0};

    int n_ions() const { return basis->n_ions(); }
    const Matrix& readout_operator(int ion) const;
};

// n_kicks defaults to the number of ions.
ModelContext build_context(const model::ModelParams& params, const hilbert::BasisSpec& spec,
                           std::optional<int> n_kicks = std::nullopt);

struct TimeAxis {
    double start{0.0};
    double step{0.0};
    int count{1};
    bool grid{false};

    static TimeAxis fixed(double t) { return {t, 0.0, 1, false}; }
    static TimeAxis uniform(double start, double step, int count) { return {start, step, count, true}; }

    double at(int i) const { return start + step * i; }
    double value() const { return start; }
};

enum class AxisPair { t1_t3, t2_t3, t1_t2 };

const char* axis_name(int axis);  // 1 -> "t1", ...

struct SequenceConfig {
    TimeAxis t1{TimeAxis::fixed(0.0)};
    TimeAxis t2{TimeAxis::uniform(0.0, 0.004, 256)};
    TimeAxis t3{TimeAxis::uniform(0.0, 0.004, 256)};
    int readout_ion{1};

    // Throws ParameterError unless exactly two axes are grids with step > 0,
    // count >= 1 and all delays >= 0.
    void validate() const;
    AxisPair pair() const;
};

enum class KickOrder {
    left_first,   // the signal above
    right_first,  // V_R before V_L; yields the complex conjugate
};

struct SignalPoint {
    double t1{0.0};
    double t2{0.0};
    double t3{0.0};
    int readout_ion{1};
    KickOrder order{KickOrder::left_first};
};

// Direct composition of propagate and pathway_kick. The first interval is a
// physical propagation and throws NumericalError if it leaves the physical set.
Complex signal_point(const ModelContext& ctx, const SignalPoint& p);
Complex signal_point(const ModelContext& ctx, const Matrix& rho0, const SignalPoint& p);

struct HealthStats {
    double max_trace_drift{0.0};       // physical states and pathway terms
    double max_hermiticity_error{0.0};  // physical states only
    double min_eigenvalue{0.0};         // most negative eigenvalue seen, physical states
    long checks{0};

    void record(const hilbert::DensityHealth& h);
    void record_trace(double drift);
    void merge(const HealthStats& other);
    bool within(double tol) const {
        return max_trace_drift < tol && max_hermiticity_error < tol && min_eigenvalue > -tol;
    }
};

struct PointFailure {
    int row{0};
    int col{-1};  // -1: whole row
    std::string message;
    double achieved{0.0};
};

struct SignalGrid {
    AxisPair pair{AxisPair::t2_t3};
    int axis_a{2};
    int axis_b{3};
    int fixed_axis{1};
    TimeAxis a;
    TimeAxis b;
    double fixed_delay{0.0};
    int readout_ion{1};
    Matrix values;  // values(i, j) = S at (a.at(i), b.at(j))
    std::vector<PointFailure> failures;
    HealthStats health;
    int rows_resumed{0};

    bool complete() const { return failures.empty(); }
};

struct ScanOptions {
    int threads{1};  // 0: hardware concurrency
    // Completed rows are appended here and skipped when the scan is rerun.
    std::optional<std::filesystem::path> checkpoint;
    double health_tol{1e-9};
};

// Evaluates S on the Cartesian product of the two grid axes. Each row
// steps along axis b with a cached G(step); rows run in parallel and are
// assembled by index, so the result does not depend on the thread count.
SignalGrid scan_signal(const ModelContext& ctx, const SequenceConfig& seq, const ScanOptions& opts = {});

// Identifies a scan for checkpoint compatibility (parameters, basis, grids, ion).
std::string scan_fingerprint(const ModelContext& ctx, const SequenceConfig& seq);

}  // namespace polariton::protocol
