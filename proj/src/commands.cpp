#include "polariton/commands.hpp"

#include "polariton/io.hpp"
#include "polariton/states.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>
#include <optional>
#include <ostream>
#include <random>

namespace polariton::commands {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json conventions() {
    return {{"config_frequencies", "linear kHz"},
            {"hamiltonian_units", "rad/ms (2*pi * kHz)"},
            {"spectral_axes", "rad/ms"},
            {"times", "ms"},
            {"fourier_kernel", "exp(+i (W_a t_a + W_b t_b)), trapezoid end weights"},
            {"basis_order", "lexicographic in (s_1..s_N, n_1..n_N), n_N fastest"}};
}

class Writer {
public:
    Writer(const config::RunConfig& cfg, std::string command) : cfg_(cfg), command_(std::move(command)) {}

    void write(CommandOutput& out, const std::string& name, const std::string& contents, json extra = json::object()) {
        const fs::path path = cfg_.output_dir / name;
        io::write_file(path, contents);
        json meta = {{"file", name},
                     {"command", command_},
                     {"software", {{"name", "polariton"}, {"version", POLARITON_VERSION}}},
                     {"generated_utc", utc_now()},
                     {"conventions", conventions()},
                     {"config", cfg_.resolved},
                     {"rerun", "save the \"config\" object to a file and run: polariton " + command_ +
                                   " --config FILE"}};
        for (auto& [k, v] : extra.items()) meta[k] = v;
        io::write_file(fs::path(path.string() + ".meta.json"), io::dump_json(meta));
        out.files.push_back(path);
    }

private:
    const config::RunConfig& cfg_;
    std::string command_;
};

json health_json(const protocol::HealthStats& h) {
    return {{"max_trace_drift", h.max_trace_drift},
            {"max_hermiticity_error", h.max_hermiticity_error},
            {"min_eigenvalue", h.min_eigenvalue},
            {"checks", h.checks}};
}

json failures_json(const std::vector<protocol::PointFailure>& f) {
    json arr = json::array();
    for (const auto& x : f) arr.push_back({{"row", x.row}, {"col", x.col}, {"message", x.message}, {"achieved", x.achieved}});
    return arr;
}

json axis_json(const protocol::TimeAxis& ax, int which) {
    return {{"name", protocol::axis_name(which)}, {"start_ms", ax.start}, {"step_ms", ax.step}, {"count", ax.count}};
}

protocol::SignalGrid run_scan(const config::RunConfig& cfg, const protocol::ModelContext& ctx, std::ostream& log) {
    protocol::ScanOptions opts;
    opts.threads = cfg.threads;
    if (cfg.checkpoint) opts.checkpoint = cfg.output_dir / "signal.checkpoint";
    if (opts.checkpoint) fs::create_directories(cfg.output_dir);
    const auto t0 = std::chrono::steady_clock::now();
    auto grid = protocol::scan_signal(ctx, cfg.sequence, opts);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log << "scan " << grid.a.count << "x" << grid.b.count << " in " << secs << " s";
    if (grid.rows_resumed) log << " (" << grid.rows_resumed << " rows resumed)";
    log << "\n";
    if (opts.checkpoint && grid.complete()) fs::remove(*opts.checkpoint);
    return grid;
}

void write_signal(Writer& w, CommandOutput& out, const protocol::SignalGrid& grid) {
    w.write(out, "signal.csv", io::signal_csv(grid),
            {{"columns", {"t_a_ms", "t_b_ms", "re", "im"}},
             {"axis_a", axis_json(grid.a, grid.axis_a)},
             {"axis_b", axis_json(grid.b, grid.axis_b)},
             {"fixed", {{"name", protocol::axis_name(grid.fixed_axis)}, {"value_ms", grid.fixed_delay}}},
             {"readout_ion", grid.readout_ion},
             {"health", health_json(grid.health)},
             {"failures", failures_json(grid.failures)}});
}

double fit_decay_rate(const dynamics::Liouvillian& l, const Matrix& x0, double t_max, int samples) {
    // Least-squares slope of log ||x(t)||_F.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int k = 0; k < samples; ++k) {
        const double t = t_max * k / (samples - 1);
        const double y = std::log(dynamics::propagate(l, x0, t).norm());
        sx += t, sy += y, sxx += t * t, sxy += t * y;
    }
    const double n = samples;
    return -(n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

json peak_report(const spectra::Spectrum2D& s, const std::vector<spectra::Peak>& peaks,
                 const std::vector<spectra::ResonancePrediction>& sticks, double tolerance_bins) {
    json arr = json::array();
    if (peaks.empty()) return arr;
    const double top = peaks.front().magnitude;
    std::vector<spectra::LineshapeRow> rows;
    if (!sticks.empty()) rows = spectra::lineshape_report(s, peaks, sticks, tolerance_bins);
    for (std::size_t i = 0; i < peaks.size(); ++i) {
        const auto& p = peaks[i];
        json e = {{"omega_a", p.omega_a},
                  {"omega_b", p.omega_b},
                  {"magnitude", p.magnitude},
                  {"relative", p.magnitude / top},
                  {"fwhm_a", p.fwhm_a},
                  {"fwhm_b", p.fwhm_b},
                  {"anisotropy", p.fwhm_b > 0 ? p.fwhm_a / p.fwhm_b : 0.0},
                  {"sinc_ratio_a", p.fwhm_a / s.sinc_fwhm_a},
                  {"sinc_ratio_b", p.fwhm_b / s.sinc_fwhm_b}};
        if (!rows.empty()) {
            const auto& r = rows[i];
            e["label"] = r.label;
            e["distance_bins"] = r.distance_bins;
            if (r.prediction) {
                const auto& st = sticks[static_cast<std::size_t>(*r.prediction)];
                e["stick"] = {{"omega_a", st.omega_a},
                              {"omega_b", st.omega_b},
                              {"amplitude_abs", std::abs(st.amplitude)},
                              {"eigen_indices", {st.ket_a, st.bra_a, st.ket_b, st.bra_b}},
                              {"coherence_orders", {st.order_a, st.order_b}}};
            }
        }
        arr.push_back(e);
    }
    return arr;
}

CommandOutput cmd_eigens(const config::RunConfig& cfg, std::ostream& log) {
    CommandOutput out;
    const auto basis = hilbert::build_basis(cfg.basis);
    const auto ratios = cfg.eigens.values();
    const auto rows = model::eigensweep(cfg.model, basis, ratios);
    Writer w(cfg, "eigens");
    const json extra = {{"energy_units", "rad/ms"}, {"points", ratios.size()}, {"levels", basis->dim()}};
    w.write(out, "eigensweep.csv", io::eigensweep_csv(rows), extra);
    w.write(out, "eigensweep_lines.csv", io::eigensweep_lines_csv(rows), extra);
    for (const auto& msg : model::validity_warnings(cfg.model)) log << "warning: " << msg << "\n";
    log << "eigens: " << ratios.size() << " points x " << basis->dim() << " levels\n";
    out.report = {{"points", ratios.size()}, {"levels", basis->dim()}, {"rows", rows.size()}};
    return out;
}

CommandOutput cmd_signal(const config::RunConfig& cfg, std::ostream& log) {
    CommandOutput out;
    const auto ctx = protocol::build_context(cfg.model, cfg.basis, cfg.n_kicks);
    const auto grid = run_scan(cfg, ctx, log);
    Writer w(cfg, "signal");
    write_signal(w, out, grid);
    out.report = {{"health", health_json(grid.health)}, {"failures", failures_json(grid.failures)}};
    if (!grid.complete()) {
        log << "signal: " << grid.failures.size() << " rows failed; output is partial\n";
        out.exit_code = exit_partial;
    }
    return out;
}

CommandOutput cmd_spectrum(const config::RunConfig& cfg, spectra::Transform which, std::ostream& log) {
    CommandOutput out;
    const auto needed = which == spectra::Transform::s13 ? protocol::AxisPair::t1_t3 : protocol::AxisPair::t2_t3;
    if (cfg.sequence.pair() != needed) {
        throw ConfigError(std::string("spectrum ") + spectra::transform_name(which) + " needs grids on " +
                          (which == spectra::Transform::s13 ? "t1 and t3 with t2 fixed" : "t2 and t3 with t1 fixed"));
    }
    const auto ctx = protocol::build_context(cfg.model, cfg.basis, cfg.n_kicks);
    const auto grid = run_scan(cfg, ctx, log);
    const std::string tag = spectra::transform_name(which);
    const std::string cmd = "spectrum " + tag;
    Writer w(cfg, cmd);
    write_signal(w, out, grid);
    if (!grid.complete()) {
        log << "spectrum: " << grid.failures.size() << " scan rows failed; spectrum not computed\n";
        out.exit_code = exit_partial;
        out.report = {{"failures", failures_json(grid.failures)}};
        return out;
    }

    const auto spectrum = spectra::fourier_2d(grid, which, cfg.spectrum.fourier);
    const auto peaks = spectra::find_peaks(spectrum, cfg.spectrum.threshold, cfg.spectrum.merge_radius_bins);
    const auto sticks = spectra::stick_spectrum(ctx, which, grid.fixed_delay, grid.readout_ion);

    json report = {{"transform", tag},
                   {"fixed", {{"name", protocol::axis_name(grid.fixed_axis)}, {"value_ms", grid.fixed_delay}}},
                   {"readout_ion", grid.readout_ion},
                   {"threshold", cfg.spectrum.threshold},
                   {"merge_radius_bins", cfg.spectrum.merge_radius_bins},
                   {"bin_a", spectrum.bin_a},
                   {"bin_b", spectrum.bin_b},
                   {"sinc_fwhm_a", spectrum.sinc_fwhm_a},
                   {"sinc_fwhm_b", spectrum.sinc_fwhm_b},
                   {"peaks", peak_report(spectrum, peaks, sticks, 3.0)},
                   {"health", health_json(grid.health)}};
    if (cfg.spectrum.detect_window_rate) {
        spectra::FourierOptions wopts = cfg.spectrum.fourier;
        wopts.window_rate = cfg.spectrum.detect_window_rate;
        const auto windowed = spectra::fourier_2d(grid, which, wopts);
        const auto wpeaks =
            spectra::find_peaks(windowed, cfg.spectrum.detect_threshold, cfg.spectrum.merge_radius_bins);
        report["windowed"] = {{"window_rate", *cfg.spectrum.detect_window_rate},
                              {"threshold", cfg.spectrum.detect_threshold},
                              {"sinc_fwhm_a", windowed.sinc_fwhm_a},
                              {"sinc_fwhm_b", windowed.sinc_fwhm_b},
                              {"peaks", peak_report(windowed, wpeaks, sticks, 3.0)}};
    }
    json st = json::array();
    for (std::size_t i = 0; i < sticks.size() && i < 64; ++i) {
        const auto& p = sticks[i];
        st.push_back({{"omega_a", p.omega_a},
                      {"omega_b", p.omega_b},
                      {"amplitude", {p.amplitude.real(), p.amplitude.imag()}},
                      {"label", p.label}});
    }
    report["sticks"] = st;

    const json axes = {{"axis_a", {{"name", which == spectra::Transform::s13 ? "Omega_1" : "Omega_2"},
                                   {"min", spectrum.axis_a.front()},
                                   {"max", spectrum.axis_a.back()},
                                   {"count", spectrum.axis_a.size()}}},
                       {"axis_b", {{"name", "Omega_3"},
                                   {"min", spectrum.axis_b.front()},
                                   {"max", spectrum.axis_b.back()},
                                   {"count", spectrum.axis_b.size()}}},
                       {"padding", spectrum.options.padding},
                       {"window_rate", spectrum.options.window_rate ? json(*spectrum.options.window_rate) : json()}};
    w.write(out, "spectrum_" + tag + ".csv", io::spectrum_csv(spectrum), {{"columns", {"omega_a", "omega_b", "re", "im", "abs"}}, {"axes", axes}});
    w.write(out, "peaks_" + tag + ".json", io::dump_json(report));
    if (cfg.spectrum.heatmap) {
        w.write(out, "heatmap_" + tag + ".pgm", io::heatmap_pgm(spectrum),
                {{"image", "8-bit |F|/max|F|; x along axis_a ascending, y along axis_b with the largest value on top"},
                 {"axes", axes}});
    }
    log << "spectrum " << tag << ": " << peaks.size() << " peaks above " << cfg.spectrum.threshold << "\n";
    out.report = report;
    return out;
}

// ------------------------------- validate -------------------------------------

CommandOutput cmd_validate(const config::RunConfig& cfg, std::ostream& log) {
    CommandOutput out;
    json checks = json::array();
    bool all = true;
    auto add = [&](const std::string& name, bool passed, double measured, double tol, json detail = json::object()) {
        checks.push_back({{"name", name}, {"passed", passed}, {"measured", measured}, {"tolerance", tol}, {"detail", detail}});
        all = all && passed;
        log << (passed ? "PASS " : "FAIL ") << name << "  measured " << measured << "  tolerance " << tol << "\n";
    };

    const auto ctx = protocol::build_context(cfg.model, cfg.basis, cfg.n_kicks);
    const auto& l = *ctx.liouvillian;
    const int n = ctx.n_kicks;

    // Operator algebra.
    const Matrix nop = hilbert::number_operator(ctx.basis).matrix();
    add("hamiltonian_conserves_excitations", hilbert::max_abs(hilbert::commutator(ctx.hamiltonian, nop)) < 1e-12,
        hilbert::max_abs(hilbert::commutator(ctx.hamiltonian, nop)), 1e-12);
    add("hamiltonian_hermitian", hilbert::max_abs(ctx.hamiltonian - ctx.hamiltonian.adjoint()) < 1e-12,
        hilbert::max_abs(ctx.hamiltonian - ctx.hamiltonian.adjoint()), 1e-12);
    {
        std::mt19937_64 rng(20240601);
        std::normal_distribution<double> nd;
        Matrix r(ctx.rho0.rows(), ctx.rho0.cols());
        for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = Complex(nd(rng), nd(rng));
        const Matrix right = dynamics::pathway_kick(r, {dynamics::Side::right, n}, ctx.kicks);
        const Matrix left = dynamics::pathway_kick(Matrix(r.adjoint()), {dynamics::Side::left, n}, ctx.kicks);
        const double err = hilbert::max_abs(right - left.adjoint());
        add("kick_adjoint_consistency", err < 1e-12, err, 1e-12);
    }

    // Conservation over 10 ms.
    {
        const Matrix rho = dynamics::propagate(l, ctx.rho0, 10.0);
        const auto h = hilbert::DensityMatrix(ctx.basis, rho).health(ctx.rho0.trace());
        const double worst = std::max({h.trace_drift, h.hermiticity, -h.min_eigenvalue});
        add("propagation_health_10ms", h.within(1e-9), worst, 1e-9,
            {{"trace_drift", h.trace_drift}, {"hermiticity", h.hermiticity}, {"min_eigenvalue", h.min_eigenvalue}});
    }

    // Dephasing scaling at g = 0.
    if (cfg.model.gamma_khz > 0.0 && (!ctx.basis->spec().sector || *ctx.basis->spec().sector == ctx.n_ions())) {
        auto p0 = cfg.model;
        p0.g_khz = 0.0;
        const auto c0 = protocol::build_context(p0, cfg.basis, cfg.n_kicks);
        const double gamma = angular(cfg.model.gamma_khz);
        const Vector ati = states::atomic_insulator(c0.basis).amplitudes;
        const Vector phsf = states::phonon_superfluid(c0.basis, c0.network).amplitudes;
        const int nn = c0.n_ions();
        const double r_n = fit_decay_rate(*c0.liouvillian, ati * phsf.adjoint(), 3.0 / (nn * nn * gamma), 31);
        const double expect_n = nn * nn * gamma;
        add("dephasing_rate_order_N", std::abs(r_n / expect_n - 1.0) < 0.01, r_n / expect_n - 1.0, 0.01,
            {{"fitted", r_n}, {"expected", expect_n}});
        std::optional<std::size_t> one;
        for (std::size_t i = 0; i < c0.basis->dim(); ++i) {
            if (c0.basis->state(i).spin_excitations() == nn - 1) {
                one = i;
                break;
            }
        }
        if (one) {
            Vector e1 = Vector::Zero(static_cast<Eigen::Index>(c0.basis->dim()));
            e1(static_cast<Eigen::Index>(*one)) = 1.0;
            const double r1 = fit_decay_rate(*c0.liouvillian, ati * e1.adjoint(), 3.0 / gamma, 31);
            add("dephasing_rate_order_1", std::abs(r1 / gamma - 1.0) < 0.01, r1 / gamma - 1.0, 0.01,
                {{"fitted", r1}, {"expected", gamma}});
        }
    }

    // Phase cycling against the pathway composition.
    {
        const Matrix target = dynamics::pathway_kick(dynamics::pathway_kick(ctx.rho0, {dynamics::Side::left, n}, ctx.kicks),
                                                     {dynamics::Side::right, n}, ctx.kicks);
        std::vector<double> dev;
        for (double eps : {1e-2, 5e-3, 2.5e-3}) {
            dynamics::PhaseCycleOptions o;
            o.pulse_area = eps;
            o.phase_steps = std::max(8, 2 * n + 2);
            o.n_kicks = n;
            const Matrix e = dynamics::phase_cycle_extract(l, ctx.kicks, ctx.rho0, o);
            dev.push_back((e - target).norm() / target.norm());
        }
        add("phase_cycle_matches_pathway", dev[0] < 1e-3, dev[0], 1e-3);
        const double r1 = dev[0] / dev[1], r2 = dev[1] / dev[2];
        add("phase_cycle_error_quadratic", r1 > 3.0 && r1 < 5.0 && r2 > 3.0 && r2 < 5.0, std::min(r1, r2), 3.0,
            {{"ratios", {r1, r2}}, {"deviations", dev}});
    }

    // Spectral checks on the configured scan.
    const auto pair = cfg.sequence.pair();
    if (pair != protocol::AxisPair::t1_t2) {
        const auto which = pair == protocol::AxisPair::t1_t3 ? spectra::Transform::s13 : spectra::Transform::s23;
        protocol::ScanOptions so;
        so.threads = cfg.threads;
        const auto grid = protocol::scan_signal(ctx, cfg.sequence, so);
        add("scan_health", grid.health.within(1e-9) && grid.complete(),
            std::max({grid.health.max_trace_drift, grid.health.max_hermiticity_error, -grid.health.min_eigenvalue}), 1e-9);
        if (grid.complete()) {
            spectra::FourierOptions fo = cfg.spectrum.fourier;
            fo.window_rate.reset();
            const auto sp = spectra::fourier_2d(grid, which, fo);
            const auto pc = spectra::parseval(grid.values, grid.a.step, grid.b.step, sp);
            add("parseval", pc.relative_error < 1e-6, pc.relative_error, 1e-6);
        }

        auto p0 = cfg.model;
        p0.gamma_khz = 0.0;
        const auto c0 = protocol::build_context(p0, cfg.basis, cfg.n_kicks);
        const auto g0 = protocol::scan_signal(c0, cfg.sequence, so);
        spectra::FourierOptions fo = cfg.spectrum.fourier;
        fo.window_rate.reset();
        const auto sp0 = spectra::fourier_2d(g0, which, fo);
        const auto peaks = spectra::find_peaks(sp0, 0.1, cfg.spectrum.merge_radius_bins);
        const auto sticks = spectra::stick_spectrum(c0, which, g0.fixed_delay, g0.readout_ion);
        double worst = 0.0;
        for (const auto& pk : peaks) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& st : sticks) {
                best = std::min(best, std::max(std::abs(pk.omega_a - st.omega_a) / sp0.bin_a,
                                               std::abs(pk.omega_b - st.omega_b) / sp0.bin_b));
            }
            worst = std::max(worst, best);
        }
        add("fft_peaks_on_sticks_gamma0", !peaks.empty() && worst <= 2.0, worst, 2.0, {{"peaks", peaks.size()}});
    }

    out.report = {{"passed", all}, {"checks", checks}};
    Writer w(cfg, "validate");
    w.write(out, "validate.json", io::dump_json(out.report));
    if (!all) out.exit_code = exit_numerical;
    return out;
}

}  // namespace polariton::commands
