#include "polariton/protocol.hpp"

#include "polariton/states.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace polariton::protocol {

using dynamics::PathwayKick;
using dynamics::Side;

const Matrix& ModelContext::readout_operator(int ion) const {
    if (ion < 1 || ion > static_cast<int>(readout.size())) {
        throw ParameterError("readout ion " + std::to_string(ion) + " out of range [1, " +
                             std::to_string(readout.size()) + "]");
    }
    return readout[static_cast<std::size_t>(ion - 1)];
}

ModelContext build_context(const model::ModelParams& params, const hilbert::BasisSpec& spec,
                           std::optional<int> n_kicks) {
    model::validate(params);
    ModelContext ctx;
    ctx.params = params;
    ctx.basis = hilbert::build_basis(spec);
    ctx.network = model::phonon_network(model::equilibrium_positions(spec.n_ions), params);
    ctx.hamiltonian = model::build_polariton_hamiltonian(ctx.network, params, ctx.basis).matrix();

    std::vector<dynamics::JumpTerm> jumps;
    if (params.gamma_khz > 0.0) jumps.push_back(dynamics::collective_dephasing(ctx.basis, params.gamma_khz));
    ctx.liouvillian = std::make_shared<const dynamics::Liouvillian>(ctx.hamiltonian, std::move(jumps));

    ctx.kicks = dynamics::build_kick_operators(ctx.basis, ctx.network);
    const Vector psi = states::phonon_superfluid(ctx.basis, ctx.network).amplitudes;
    ctx.rho0 = psi * psi.adjoint();
    for (int j = 1; j <= spec.n_ions; ++j) ctx.readout.push_back(hilbert::spin_population(j, ctx.basis).matrix());
    ctx.n_kicks = n_kicks.value_or(spec.n_ions);
    if (ctx.n_kicks < 1) throw ParameterError("n_kicks must be >= 1");
    return ctx;
}

const char* axis_name(int axis) {
    switch (axis) {
        case 1: return "t1";
        case 2: return "t2";
        case 3: return "t3";
        default: return "?";
    }
}

void SequenceConfig::validate() const {
    int grids = 0;
    for (const TimeAxis* ax : {&t1, &t2, &t3}) {
        if (!std::isfinite(ax->start) || ax->start < 0.0) throw ParameterError("delays must be finite and >= 0");
        if (ax->grid) {
            ++grids;
            if (!(ax->step > 0.0) || !std::isfinite(ax->step)) throw ParameterError("grid step must be > 0");
            if (ax->count < 1) throw ParameterError("grid count must be >= 1");
        }
    }
    if (grids != 2) {
        throw ParameterError("exactly two of t1, t2, t3 must be grids (got " + std::to_string(grids) + ")");
    }
    if (readout_ion < 1) throw ParameterError("readout_ion must be >= 1");
}

AxisPair SequenceConfig::pair() const {
    validate();
    if (!t2.grid) return AxisPair::t1_t3;
    if (!t1.grid) return AxisPair::t2_t3;
    return AxisPair::t1_t2;
}

// ------------------------------- single point --------------------------------

namespace {

Complex readout_trace(const Matrix& p, const Matrix& y) { return (p * y).trace(); }

Complex kicked_signal(const ModelContext& ctx, const Matrix& rho1, const SignalPoint& p) {
    const auto& l = *ctx.liouvillian;
    const PathwayKick left{Side::left, ctx.n_kicks};
    const PathwayKick right{Side::right, ctx.n_kicks};
    const auto& first = p.order == KickOrder::left_first ? left : right;
    const auto& second = p.order == KickOrder::left_first ? right : left;
    Matrix y = dynamics::pathway_kick(rho1, first, ctx.kicks);
    y = dynamics::propagate(l, y, p.t2);
    y = dynamics::pathway_kick(y, second, ctx.kicks);
    y = dynamics::propagate(l, y, p.t3);
    return readout_trace(ctx.readout_operator(p.readout_ion), y);
}

void check_times(const SignalPoint& p) {
    if (!(p.t1 >= 0.0 && p.t2 >= 0.0 && p.t3 >= 0.0)) throw ParameterError("signal_point: delays must be >= 0");
}

}  // namespace

Complex signal_point(const ModelContext& ctx, const SignalPoint& p) {
    check_times(p);
    const hilbert::DensityMatrix rho1 =
        dynamics::propagate(*ctx.liouvillian, hilbert::DensityMatrix(ctx.basis, ctx.rho0), p.t1);
    return kicked_signal(ctx, rho1.matrix(), p);
}

Complex signal_point(const ModelContext& ctx, const Matrix& rho0, const SignalPoint& p) {
    check_times(p);
    return kicked_signal(ctx, dynamics::propagate(*ctx.liouvillian, rho0, p.t1), p);
}

// ------------------------------- health --------------------------------------

void HealthStats::record(const hilbert::DensityHealth& h) {
    max_trace_drift = std::max(max_trace_drift, h.trace_drift);
    max_hermiticity_error = std::max(max_hermiticity_error, h.hermiticity);
    min_eigenvalue = std::min(min_eigenvalue, h.min_eigenvalue);
    ++checks;
}

void HealthStats::record_trace(double drift) {
    max_trace_drift = std::max(max_trace_drift, drift);
    ++checks;
}

void HealthStats::merge(const HealthStats& o) {
    max_trace_drift = std::max(max_trace_drift, o.max_trace_drift);
    max_hermiticity_error = std::max(max_hermiticity_error, o.max_hermiticity_error);
    min_eigenvalue = std::min(min_eigenvalue, o.min_eigenvalue);
    checks += o.checks;
}

// ------------------------------- scan ----------------------------------------

namespace {

std::string hexf(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

std::string describe(const TimeAxis& ax) {
    return hexf(ax.start) + ":" + hexf(ax.step) + ":" + std::to_string(ax.count) + (ax.grid ? "g" : "f");
}

struct Checkpoint {
    std::filesystem::path path;
    std::mutex mutex;
    std::ofstream out;
};

// Rows already in the file; the trailing segment without newline is a torn write and is ignored.
std::vector<std::pair<int, std::vector<Complex>>> load_checkpoint(const std::filesystem::path& path,
                                                                  const std::string& fingerprint, int n_rows,
                                                                  int n_cols) {
    std::vector<std::pair<int, std::vector<Complex>>> rows;
    std::ifstream in(path, std::ios::binary);
    if (!in) return rows;
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    if (text.find('\n') == std::string::npos) return rows;

    std::size_t pos = 0;
    bool header = false;
    while (true) {
        const std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) break;
        const std::string line = text.substr(pos, nl - pos);
        pos = nl + 1;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "fingerprint") {
            std::string fp;
            ls >> fp;
            if (fp != fingerprint) {
                throw ParameterError("checkpoint " + path.string() +
                                     " belongs to a different scan; delete it or choose another path");
            }
            header = true;
            continue;
        }
        if (tag != "row" || !header) continue;
        int idx = -1;
        ls >> idx;
        if (idx < 0 || idx >= n_rows) continue;
        std::vector<Complex> vals;
        std::string re, im;
        while (ls >> re >> im) vals.emplace_back(std::strtod(re.c_str(), nullptr), std::strtod(im.c_str(), nullptr));
        if (static_cast<int>(vals.size()) != n_cols) continue;
        rows.emplace_back(idx, std::move(vals));
    }
    if (!header) throw ParameterError("checkpoint " + path.string() + " has no fingerprint line");
    return rows;
}

// Cuts a partially written last line so that appended rows start on a fresh line.
void drop_torn_tail(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    const std::size_t nl = text.rfind('\n');
    const std::size_t keep = nl == std::string::npos ? 0 : nl + 1;
    if (keep != text.size()) std::filesystem::resize_file(path, keep);
}

}  // namespace

std::string scan_fingerprint(const ModelContext& ctx, const SequenceConfig& seq) {
    const auto& p = ctx.params;
    const auto& s = ctx.basis->spec();
    std::string fp = "v1";
    for (double v : {p.nu_x_khz, p.hopping_scale_khz, p.delta_khz, p.g_khz, p.gamma_khz}) fp += "," + hexf(v);
    fp += ",N" + std::to_string(s.n_ions) + ",c" + std::to_string(s.phonon_cutoff) + ",s" +
          (s.sector ? std::to_string(*s.sector) : std::string("full")) + ",k" + std::to_string(ctx.n_kicks);
    fp += ",t1=" + describe(seq.t1) + ",t2=" + describe(seq.t2) + ",t3=" + describe(seq.t3);
    fp += ",j" + std::to_string(seq.readout_ion);
    return fp;
}

SignalGrid scan_signal(const ModelContext& ctx, const SequenceConfig& seq, const ScanOptions& opts) {
    const AxisPair pair = seq.pair();
    const Matrix& readout = ctx.readout_operator(seq.readout_ion);
    const auto& l = *ctx.liouvillian;
    const PathwayKick left{Side::left, ctx.n_kicks};
    const PathwayKick right{Side::right, ctx.n_kicks};
    const Complex tr0 = ctx.rho0.trace();

    SignalGrid grid;
    grid.pair = pair;
    grid.readout_ion = seq.readout_ion;
    switch (pair) {
        case AxisPair::t1_t3: grid.axis_a = 1, grid.axis_b = 3, grid.fixed_axis = 2; break;
        case AxisPair::t2_t3: grid.axis_a = 2, grid.axis_b = 3, grid.fixed_axis = 1; break;
        case AxisPair::t1_t2: grid.axis_a = 1, grid.axis_b = 2, grid.fixed_axis = 3; break;
    }
    const TimeAxis* axes[] = {nullptr, &seq.t1, &seq.t2, &seq.t3};
    grid.a = *axes[grid.axis_a];
    grid.b = *axes[grid.axis_b];
    grid.fixed_delay = axes[grid.fixed_axis]->value();
    const int na = grid.a.count;
    const int nb = grid.b.count;
    grid.values = Matrix::Constant(na, nb, Complex(std::numeric_limits<double>::quiet_NaN(), 0.0));

    // Entry object of axis a, the map between the axes, and the readout after axis b.
    const bool physical_a = grid.axis_a == 1;
    Matrix u0 = ctx.rho0;
    std::function<Matrix(const Matrix&)> between;
    std::function<Complex(const Matrix&)> finish = [&](const Matrix& y) { return readout_trace(readout, y); };
    Matrix g3;
    if (pair == AxisPair::t2_t3) {
        const auto rho1 = dynamics::propagate(l, hilbert::DensityMatrix(ctx.basis, ctx.rho0), seq.t1.value(),
                                              opts.health_tol);
        grid.health.record(rho1.health(tr0));
        u0 = dynamics::pathway_kick(rho1.matrix(), left, ctx.kicks);
        between = [&](const Matrix& x) { return dynamics::pathway_kick(x, right, ctx.kicks); };
    } else if (pair == AxisPair::t1_t3) {
        const double t2 = seq.t2.value();
        between = [&, t2](const Matrix& x) {
            return dynamics::pathway_kick(dynamics::propagate(l, dynamics::pathway_kick(x, left, ctx.kicks), t2),
                                          right, ctx.kicks);
        };
    } else {
        const double t3 = seq.t3.value();
        between = [&](const Matrix& x) { return dynamics::pathway_kick(x, left, ctx.kicks); };
        finish = [&, t3](const Matrix& y) {
            return readout_trace(readout, dynamics::propagate(l, dynamics::pathway_kick(y, right, ctx.kicks), t3));
        };
    }

    // Axis a is walked once, sequentially.
    std::vector<Matrix> entries(static_cast<std::size_t>(na));
    {
        Matrix u = dynamics::propagate(l, u0, grid.a.start);
        std::optional<dynamics::TimeStepper> step_a;
        if (na > 1) step_a.emplace(l, grid.a.step);
        for (int i = 0; i < na; ++i) {
            if (i > 0) {
                const Complex before = u.trace();
                step_a->advance(u);
                grid.health.record_trace(std::abs(u.trace() - before));
            }
            if (physical_a) {
                const auto h = hilbert::DensityMatrix(ctx.basis, u).health(tr0);
                grid.health.record(h);
                if (!h.within(opts.health_tol)) {
                    grid.failures.push_back({i, -1, "physical state left tolerance on axis " +
                                                        std::string(axis_name(grid.axis_a)),
                                             std::max({h.trace_drift, h.hermiticity, -h.min_eigenvalue})});
                }
            }
            entries[static_cast<std::size_t>(i)] = u;
        }
    }

    std::optional<dynamics::TimeStepper> step_b;
    if (nb > 1) step_b.emplace(l, grid.b.step);

    // Physical probe through the axis-b stepper.
    if (step_b) {
        Matrix probe = dynamics::propagate(l, ctx.rho0, grid.b.start);
        for (int j = 1; j < nb; ++j) {
            step_b->advance(probe);
            grid.health.record(hilbert::DensityMatrix(ctx.basis, probe).health(tr0));
        }
    }

    // Resume.
    std::vector<char> done(static_cast<std::size_t>(na), 0);
    std::unique_ptr<Checkpoint> cp;
    const std::string fingerprint = scan_fingerprint(ctx, seq);
    if (opts.checkpoint) {
        for (auto& [idx, vals] : load_checkpoint(*opts.checkpoint, fingerprint, na, nb)) {
            if (done[static_cast<std::size_t>(idx)]) continue;
            for (int j = 0; j < nb; ++j) grid.values(idx, j) = vals[static_cast<std::size_t>(j)];
            done[static_cast<std::size_t>(idx)] = 1;
            ++grid.rows_resumed;
        }
        cp = std::make_unique<Checkpoint>();
        cp->path = *opts.checkpoint;
        if (std::filesystem::exists(cp->path)) drop_torn_tail(cp->path);
        const bool fresh = !std::filesystem::exists(cp->path) || std::filesystem::file_size(cp->path) == 0;
        cp->out.open(cp->path, std::ios::binary | std::ios::app);
        if (!cp->out) throw ParameterError("cannot open checkpoint " + cp->path.string());
        if (fresh) cp->out << "# polariton scan checkpoint\nfingerprint " << fingerprint << "\n" << std::flush;
    }

    std::vector<HealthStats> row_health(static_cast<std::size_t>(na));
    std::vector<std::optional<PointFailure>> row_failure(static_cast<std::size_t>(na));

    auto run_row = [&](int i) {
        auto& health = row_health[static_cast<std::size_t>(i)];
        try {
            Matrix y = dynamics::propagate(l, between(entries[static_cast<std::size_t>(i)]), grid.b.start);
            for (int j = 0; j < nb; ++j) {
                if (j > 0) {
                    const Complex before = y.trace();
                    step_b->advance(y);
                    const double drift = std::abs(y.trace() - before);
                    health.record_trace(drift);
                    if (drift >= opts.health_tol && !row_failure[static_cast<std::size_t>(i)]) {
                        row_failure[static_cast<std::size_t>(i)] = PointFailure{i, j, "trace drift along axis", drift};
                    }
                }
                grid.values(i, j) = finish(y);
            }
        } catch (const std::exception& e) {
            row_failure[static_cast<std::size_t>(i)] = PointFailure{i, -1, e.what(), 0.0};
            for (int j = 0; j < nb; ++j) grid.values(i, j) = Complex(std::numeric_limits<double>::quiet_NaN(), 0.0);
            return;
        }
        if (cp && !row_failure[static_cast<std::size_t>(i)]) {
            std::string line = "row " + std::to_string(i);
            for (int j = 0; j < nb; ++j) line += " " + hexf(grid.values(i, j).real()) + " " + hexf(grid.values(i, j).imag());
            line += "\n";
            std::lock_guard<std::mutex> lock(cp->mutex);
            cp->out << line << std::flush;
        }
    };

    int threads = opts.threads <= 0 ? static_cast<int>(std::thread::hardware_concurrency()) : opts.threads;
    threads = std::clamp(threads, 1, std::max(1, na));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < na; i = next++) {
            if (!done[static_cast<std::size_t>(i)]) run_row(i);
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (int i = 0; i < na; ++i) {
        grid.health.merge(row_health[static_cast<std::size_t>(i)]);
        if (row_failure[static_cast<std::size_t>(i)]) grid.failures.push_back(*row_failure[static_cast<std::size_t>(i)]);
    }
    std::stable_sort(grid.failures.begin(), grid.failures.end(),
                     [](const PointFailure& x, const PointFailure& y) { return x.row < y.row; });
    return grid;
}

}  // namespace polariton::protocol
