#include "polariton/spectra.hpp"

#include <fftw3.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>

namespace polariton::spectra {

const char* transform_name(Transform t) { return t == Transform::s13 ? "s13" : "s23"; }

namespace {

// FFTW planning is not thread-safe.
std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

double weight(int i, int n) { return (i == 0 && n > 1) ? 0.5 : 1.0; }

Matrix weighted(const Matrix& s, double dt_a, double dt_b, const FourierOptions& opts) {
    Matrix w(s.rows(), s.cols());
    const double r = opts.window_rate.value_or(0.0);
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        for (Eigen::Index j = 0; j < s.cols(); ++j) {
            const double win = r > 0.0 ? std::exp(-r * (i * dt_a + j * dt_b)) : 1.0;
            w(i, j) = weight(static_cast<int>(i), static_cast<int>(s.rows())) *
                      weight(static_cast<int>(j), static_cast<int>(s.cols())) * win * s(i, j);
        }
    }
    return w;
}

std::vector<double> centered_axis(int n, double dt) {
    std::vector<double> ax(static_cast<std::size_t>(n));
    const int h = n / 2;
    for (int s = 0; s < n; ++s) ax[static_cast<std::size_t>(s)] = two_pi * (s - h) / (n * dt);
    return ax;
}

// Two-dimensional e^{+i} DFT of x zero-padded to (pa, pb), fftshifted.
Matrix dft_shifted(const Matrix& x, int pa, int pb) {
    const auto total = static_cast<std::size_t>(pa) * static_cast<std::size_t>(pb);
    fftw_complex* in = fftw_alloc_complex(total);
    fftw_complex* out = fftw_alloc_complex(total);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        plan = fftw_plan_dft_2d(pa, pb, in, out, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    std::fill_n(reinterpret_cast<double*>(in), 2 * total, 0.0);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const std::size_t k = static_cast<std::size_t>(i) * static_cast<std::size_t>(pb) + static_cast<std::size_t>(j);
            in[k][0] = x(i, j).real();
            in[k][1] = x(i, j).imag();
        }
    }
    fftw_execute(plan);
    Matrix y(pa, pb);
    const int ha = pa / 2;
    const int hb = pb / 2;
    for (int s = 0; s < pa; ++s) {
        const int k = ((s - ha) % pa + pa) % pa;
        for (int t = 0; t < pb; ++t) {
            const int l = ((t - hb) % pb + pb) % pb;
            const std::size_t idx = static_cast<std::size_t>(k) * static_cast<std::size_t>(pb) + static_cast<std::size_t>(l);
            y(s, t) = Complex(out[idx][0], out[idx][1]);
        }
    }
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    return y;
}

double fwhm_1d(const std::vector<double>& mag, const std::vector<double>& axis, int idx) {
    const double half = 0.5 * mag[static_cast<std::size_t>(idx)];
    if (!(half > 0.0)) return 0.0;
    auto at = [&](int k) { return mag[static_cast<std::size_t>(k)]; };
    auto ax = [&](int k) { return axis[static_cast<std::size_t>(k)]; };
    const int n = static_cast<int>(mag.size());

    int k = idx;
    while (k > 0 && at(k - 1) >= half) --k;
    const double left = k == 0 ? ax(0) : ax(k - 1) + (half - at(k - 1)) / (at(k) - at(k - 1)) * (ax(k) - ax(k - 1));
    k = idx;
    while (k < n - 1 && at(k + 1) >= half) ++k;
    const double right =
        k == n - 1 ? ax(n - 1) : ax(k) + (at(k) - half) / (at(k) - at(k + 1)) * (ax(k + 1) - ax(k));
    return right - left;
}

// Width of the transformed unit signal on one axis (same weights and window).
double sinc_floor(int n, double dt, const FourierOptions& opts) {
    Matrix ones = Matrix::Ones(n, 1);
    const Matrix w = weighted(ones, dt, 0.0, opts);
    const Matrix f = dft_shifted(w, opts.padding * n, 1);
    std::vector<double> mag(static_cast<std::size_t>(f.rows()));
    for (Eigen::Index i = 0; i < f.rows(); ++i) mag[static_cast<std::size_t>(i)] = std::abs(f(i, 0));
    return fwhm_1d(mag, centered_axis(opts.padding * n, dt), opts.padding * n / 2);
}

}  // namespace

Spectrum2D fourier_2d(const Matrix& samples, double dt_a, double dt_b, const FourierOptions& opts) {
    const auto na = static_cast<int>(samples.rows());
    const auto nb = static_cast<int>(samples.cols());
    if (na < 2 || nb < 2) throw ParameterError("fourier_2d: both axes need at least two samples");
    if (!(dt_a > 0.0) || !(dt_b > 0.0)) throw ParameterError("fourier_2d: grid steps must be > 0");
    if (opts.padding < 1) throw ParameterError("fourier_2d: padding must be >= 1");
    if (opts.window_rate && !(*opts.window_rate >= 0.0)) throw ParameterError("fourier_2d: window rate must be >= 0");
    if (!samples.allFinite()) throw ParameterError("fourier_2d: signal contains non-finite samples");

    Spectrum2D s;
    s.options = opts;
    s.samples_a = na;
    s.samples_b = nb;
    s.axis_a = centered_axis(opts.padding * na, dt_a);
    s.axis_b = centered_axis(opts.padding * nb, dt_b);
    s.values = dt_a * dt_b * dft_shifted(weighted(samples, dt_a, dt_b, opts), opts.padding * na, opts.padding * nb);
    s.bin_a = two_pi / (na * dt_a);
    s.bin_b = two_pi / (nb * dt_b);
    s.sinc_fwhm_a = sinc_floor(na, dt_a, opts);
    s.sinc_fwhm_b = sinc_floor(nb, dt_b, opts);
    return s;
}

Spectrum2D fourier_2d(const protocol::SignalGrid& grid, Transform which, const FourierOptions& opts) {
    const auto expected = which == Transform::s13 ? protocol::AxisPair::t1_t3 : protocol::AxisPair::t2_t3;
    if (grid.pair != expected) {
        throw ParameterError(std::string("fourier_2d: ") + transform_name(which) + " needs a scan over " +
                             (which == Transform::s13 ? "t1 and t3" : "t2 and t3"));
    }
    Spectrum2D s = fourier_2d(grid.values, grid.a.step, grid.b.step, opts);
    s.which = which;
    s.fixed_axis = grid.fixed_axis;
    s.fixed_delay = grid.fixed_delay;
    // Shift the time origin back to zero when a grid does not start there.
    if (grid.a.start != 0.0 || grid.b.start != 0.0) {
        for (Eigen::Index i = 0; i < s.values.rows(); ++i) {
            for (Eigen::Index j = 0; j < s.values.cols(); ++j) {
                s.values(i, j) *= std::polar(1.0, s.axis_a[static_cast<std::size_t>(i)] * grid.a.start +
                                                      s.axis_b[static_cast<std::size_t>(j)] * grid.b.start);
            }
        }
    }
    return s;
}

ParsevalCheck parseval(const Matrix& samples, double dt_a, double dt_b, const Spectrum2D& spectrum) {
    ParsevalCheck c;
    const Matrix w = weighted(samples, dt_a, dt_b, spectrum.options);
    const double m = static_cast<double>(spectrum.values.rows()) * static_cast<double>(spectrum.values.cols());
    c.time_power = m * std::pow(dt_a * dt_b, 2) * w.squaredNorm();
    c.spectral_power = spectrum.values.squaredNorm();
    c.relative_error = c.time_power > 0.0 ? std::abs(c.spectral_power - c.time_power) / c.time_power
                                          : std::abs(c.spectral_power);
    return c;
}

// ------------------------------- peaks ---------------------------------------

double fwhm_through(const Spectrum2D& s, int i, int j, int axis) {
    std::vector<double> mag;
    if (axis == 0) {
        mag.resize(static_cast<std::size_t>(s.values.rows()));
        for (Eigen::Index k = 0; k < s.values.rows(); ++k) mag[static_cast<std::size_t>(k)] = std::abs(s.values(k, j));
        return fwhm_1d(mag, s.axis_a, i);
    }
    mag.resize(static_cast<std::size_t>(s.values.cols()));
    for (Eigen::Index k = 0; k < s.values.cols(); ++k) mag[static_cast<std::size_t>(k)] = std::abs(s.values(i, k));
    return fwhm_1d(mag, s.axis_b, j);
}

std::vector<Peak> find_peaks(const Spectrum2D& s, double threshold_rel, double merge_radius_bins) {
    if (!(threshold_rel > 0.0) || threshold_rel > 1.0) throw ParameterError("find_peaks: threshold must be in (0, 1]");
    if (!(merge_radius_bins >= 0.0)) throw ParameterError("find_peaks: merge radius must be >= 0");
    const Eigen::MatrixXd mag = s.values.cwiseAbs();
    std::vector<Peak> out;
    const double gmax = mag.size() ? mag.maxCoeff() : 0.0;
    if (!(gmax > 0.0)) return out;
    const double floor = threshold_rel * gmax;

    struct Cand {
        double m;
        int i;
        int j;
    };
    std::vector<Cand> cands;
    for (Eigen::Index i = 1; i + 1 < mag.rows(); ++i) {
        for (Eigen::Index j = 1; j + 1 < mag.cols(); ++j) {
            const double v = mag(i, j);
            if (!(v > floor)) continue;
            bool is_max = true;
            for (int di = -1; di <= 1 && is_max; ++di) {
                for (int dj = -1; dj <= 1; ++dj) {
                    if ((di || dj) && mag(i + di, j + dj) > v) {
                        is_max = false;
                        break;
                    }
                }
            }
            if (is_max) cands.push_back({v, static_cast<int>(i), static_cast<int>(j)});
        }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) { return x.m > y.m; });

    const double ra = merge_radius_bins * s.bin_a;
    const double rb = merge_radius_bins * s.bin_b;
    for (const auto& c : cands) {
        const double wa = s.axis_a[static_cast<std::size_t>(c.i)];
        const double wb = s.axis_b[static_cast<std::size_t>(c.j)];
        const bool merged = std::any_of(out.begin(), out.end(), [&](const Peak& p) {
            return std::abs(p.omega_a - wa) <= ra + 1e-12 && std::abs(p.omega_b - wb) <= rb + 1e-12;
        });
        if (merged) continue;
        Peak p;
        p.omega_a = wa;
        p.omega_b = wb;
        p.magnitude = c.m;
        p.index_a = c.i;
        p.index_b = c.j;
        p.fwhm_a = fwhm_through(s, c.i, c.j, 0);
        p.fwhm_b = fwhm_through(s, c.i, c.j, 1);
        out.push_back(p);
    }
    return out;
}

// ------------------------------- sticks --------------------------------------

namespace {

std::string stick_label(Transform which, int oa, int ob) {
    std::string letter;
    if (which == Transform::s23) {
        if (oa == 2 && ob == 0) letter = "A";
        else if (oa == 1 && ob == 1) letter = "B";
        else if (oa == 2 && ob == 1) letter = "C";
        else if (oa == 1 && ob == 0) letter = "D";
    } else if (oa == 0 && ob == 0) {
        letter = "main";
    }
    return letter + "(" + std::to_string(oa) + "," + std::to_string(ob) + ")";
}

}  // namespace

std::vector<ResonancePrediction> stick_spectrum(const protocol::ModelContext& ctx, Transform which,
                                                double fixed_delay, int readout_ion) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(ctx.hamiltonian);
    if (es.info() != Eigen::Success) throw NumericalError("stick_spectrum: diagonalization failed", 0.0);
    const Eigen::VectorXd e = es.eigenvalues();
    const Matrix& v = es.eigenvectors();
    const Eigen::Index d = e.size();

    Matrix xn = Matrix::Identity(d, d);
    for (int k = 0; k < ctx.n_kicks; ++k) xn = ctx.kicks.raise * xn;
    const Matrix r0 = v.adjoint() * ctx.rho0 * v;
    const Matrix k = v.adjoint() * xn * v;
    const Matrix p = v.adjoint() * ctx.readout_operator(readout_ion) * v;
    const Matrix spin = v.adjoint() * hilbert::spin_excitation_operator(ctx.basis).matrix() * v;
    std::vector<int> s(static_cast<std::size_t>(d));
    for (Eigen::Index n = 0; n < d; ++n) s[static_cast<std::size_t>(n)] = static_cast<int>(std::lround(spin(n, n).real()));

    struct Acc {
        ResonancePrediction pred;
        double best{0.0};
    };
    std::map<std::pair<long long, long long>, Acc> acc;
    for (Eigen::Index a = 0; a < d; ++a) {
        for (Eigen::Index b = 0; b < d; ++b) {
            if (r0(a, b) == Complex(0.0)) continue;
            for (Eigen::Index c = 0; c < d; ++c) {
                const Complex t1 = r0(a, b) * k(c, a);
                if (t1 == Complex(0.0)) continue;
                for (Eigen::Index dd = 0; dd < d; ++dd) {
                    Complex amp = t1 * std::conj(k(dd, b)) * p(dd, c);
                    if (amp == Complex(0.0)) continue;
                    const double w_ab = e(a) - e(b);
                    const double w_cb = e(c) - e(b);
                    const double w_cd = e(c) - e(dd);
                    double wa;
                    int ka, ba;
                    if (which == Transform::s13) {
                        amp *= std::polar(1.0, -w_cb * fixed_delay);
                        wa = w_ab, ka = static_cast<int>(a), ba = static_cast<int>(b);
                    } else {
                        amp *= std::polar(1.0, -w_ab * fixed_delay);
                        wa = w_cb, ka = static_cast<int>(c), ba = static_cast<int>(b);
                    }
                    const auto key = std::make_pair(std::llround(wa * 1e6), std::llround(w_cd * 1e6));
                    auto& slot = acc[key];
                    slot.pred.amplitude += amp;
                    if (std::abs(amp) > slot.best) {
                        slot.best = std::abs(amp);
                        slot.pred.omega_a = wa;
                        slot.pred.omega_b = w_cd;
                        slot.pred.ket_a = ka;
                        slot.pred.bra_a = ba;
                        slot.pred.ket_b = static_cast<int>(c);
                        slot.pred.bra_b = static_cast<int>(dd);
                        slot.pred.order_a = std::abs(s[static_cast<std::size_t>(ka)] - s[static_cast<std::size_t>(ba)]);
                        slot.pred.order_b = std::abs(s[static_cast<std::size_t>(c)] - s[static_cast<std::size_t>(dd)]);
                    }
                }
            }
        }
    }

    double top = 0.0;
    for (const auto& [key, slot] : acc) top = std::max(top, std::abs(slot.pred.amplitude));
    std::vector<ResonancePrediction> out;
    for (auto& [key, slot] : acc) {
        if (std::abs(slot.pred.amplitude) <= 1e-8 * top) continue;
        slot.pred.label = stick_label(which, slot.pred.order_a, slot.pred.order_b);
        out.push_back(slot.pred);
    }
    std::stable_sort(out.begin(), out.end(), [](const ResonancePrediction& x, const ResonancePrediction& y) {
        return std::abs(x.amplitude) > std::abs(y.amplitude);
    });
    return out;
}

std::vector<LineshapeRow> lineshape_report(const Spectrum2D& s, const std::vector<Peak>& peaks,
                                           const std::vector<ResonancePrediction>& predictions,
                                           double tolerance_bins) {
    if (peaks.empty() || predictions.empty()) throw ParameterError("lineshape_report: empty peak or prediction list");
    std::vector<LineshapeRow> rows;
    for (std::size_t i = 0; i < peaks.size(); ++i) {
        const auto& pk = peaks[i];
        LineshapeRow row;
        row.peak = static_cast<int>(i);
        row.anisotropy = pk.fwhm_b > 0.0 ? pk.fwhm_a / pk.fwhm_b : 0.0;
        row.sinc_ratio_a = s.sinc_fwhm_a > 0.0 ? pk.fwhm_a / s.sinc_fwhm_a : 0.0;
        row.sinc_ratio_b = s.sinc_fwhm_b > 0.0 ? pk.fwhm_b / s.sinc_fwhm_b : 0.0;
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_idx = 0;
        for (std::size_t k = 0; k < predictions.size(); ++k) {
            const double dist = std::max(std::abs(pk.omega_a - predictions[k].omega_a) / s.bin_a,
                                         std::abs(pk.omega_b - predictions[k].omega_b) / s.bin_b);
            if (dist < best) best = dist, best_idx = k;
        }
        row.distance_bins = best;
        if (best <= tolerance_bins) {
            row.prediction = static_cast<int>(best_idx);
            row.label = predictions[best_idx].label;
        } else {
            row.label = "unmatched";
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace polariton::spectra
